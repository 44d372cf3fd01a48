#include "antipure/checkpoint.hpp"

#include "antipure/io_errors.hpp"
#include "binio.hpp"

namespace antipure {

namespace {

constexpr std::string_view kMagic = "APDNCKPT";
constexpr std::uint64_t kVersion = 1;

}  // namespace

NoiseSchedule make_schedule(const ScheduleParams& p) { return make_schedule(p.steps, p.beta_start, p.beta_end); }

std::string encode_checkpoint(const DenoiserModel& model, const ScheduleParams& schedule) {
  std::string out(kMagic);
  binio::put_u64(out, kVersion);
  const DenoiserSpec& s = model.spec();
  binio::put_u64(out, s.in_channels);
  binio::put_u64(out, s.base_channels);
  binio::put_u64(out, s.num_blocks);
  binio::put_u64(out, s.embed_dim);
  binio::put_u64(out, static_cast<std::uint64_t>(schedule.steps));
  binio::put_f64(out, schedule.beta_start);
  binio::put_f64(out, schedule.beta_end);
  binio::put_u64(out, model.meta().steps);
  binio::put_f64(out, model.meta().final_loss);
  binio::put_u64(out, model.params().size());
  for (const NamedTensor& p : model.params()) {
    binio::put_u64(out, p.name.size());
    out += p.name;
    binio::put_u64(out, p.value.rank());
    for (std::size_t d : p.value.shape()) binio::put_u64(out, d);
    for (double v : p.value.data()) binio::put_f64(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source) {
  binio::Reader r(bytes, source);
  r.expect_magic(kMagic);
  const std::size_t version_at = r.offset();
  if (r.u64() != kVersion) r.fail(version_at, "unsupported checkpoint version");
  const std::size_t spec_at = r.offset();
  DenoiserSpec spec;
  spec.in_channels = r.u64();
  spec.base_channels = r.u64();
  spec.num_blocks = r.u64();
  spec.embed_dim = r.u64();
  if (spec.in_channels > 64 || spec.base_channels > 1024 || spec.num_blocks > 8 || spec.embed_dim > 4096) {
    r.fail(spec_at, "implausible denoiser spec");
  }
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(spec_at, e.what());
  }
  ScheduleParams sched;
  const std::size_t sched_at = r.offset();
  const std::uint64_t T = r.u64();
  if (T < 2 || T > 100000) r.fail(sched_at, "implausible schedule length");
  sched.steps = static_cast<int>(T);
  sched.beta_start = r.f64();
  sched.beta_end = r.f64();
  TrainingMeta meta;
  meta.steps = r.u64();
  meta.final_loss = r.f64();

  const std::vector<NamedTensor> layout = denoiser_layout(spec);
  const std::size_t count_at = r.offset();
  if (r.u64() != layout.size()) r.fail(count_at, "parameter count does not match the denoiser spec");
  std::vector<NamedTensor> params;
  for (const NamedTensor& expected : layout) {
    const std::size_t at = r.offset();
    const std::uint64_t name_len = r.u64();
    if (name_len > 256) r.fail(at, "implausible parameter name length");
    std::string name(r.take(name_len));
    if (name != expected.name) r.fail(at, "expected parameter '" + expected.name + "', found '" + name + "'");
    const std::size_t shape_at = r.offset();
    const std::uint64_t rank = r.u64();
    if (rank != expected.value.rank()) r.fail(shape_at, "wrong rank for " + name);
    Shape shape;
    for (std::uint64_t i = 0; i < rank; ++i) shape.push_back(r.u64());
    if (shape != expected.value.shape()) r.fail(shape_at, "wrong shape for " + name + ": " + shape_str(shape));
    std::vector<double> data(shape_numel(shape));
    for (double& v : data) v = r.f64();
    params.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
  }
  if (!r.at_end()) r.fail(r.offset(), "trailing bytes after checkpoint");
  Checkpoint ck{DenoiserModel::from_params(spec, std::move(params)), sched};
  ck.model.meta().steps = meta.steps;
  ck.model.meta().final_loss = meta.final_loss;
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const DenoiserModel& model, const ScheduleParams& schedule) {
  write_file(path, encode_checkpoint(model, schedule));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

}  // namespace antipure
