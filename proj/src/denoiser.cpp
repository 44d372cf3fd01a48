#include "antipure/denoiser.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "antipure/ops.hpp"
#include "antipure/rng.hpp"

namespace antipure {

namespace {

constexpr std::size_t kKernel = 3;
// Per-block parameter group: conv weight, conv bias, time-projection weight, bias.
constexpr std::size_t kBlockParams = 4;

std::size_t level_channels(const DenoiserSpec& spec, std::size_t level) {
  return spec.base_channels << level;
}

// Offsets into the layout-ordered parameter list.
struct Layout {
  std::size_t nb;
  std::size_t temb = 0;
  std::size_t in = 2;
  std::size_t down(std::size_t i) const { return 4 + kBlockParams * i; }
  std::size_t mid() const { return 4 + kBlockParams * nb; }
  // up(i) for level i; up blocks are stored from the deepest level outward.
  std::size_t up(std::size_t i) const { return mid() + kBlockParams * (1 + (nb - 1 - i)); }
  std::size_t out() const { return mid() + kBlockParams * (1 + nb); }
  std::size_t total() const { return out() + 2; }
};

}  // namespace

void DenoiserSpec::validate() const {
  if (in_channels == 0 || base_channels == 0) throw std::invalid_argument("denoiser channels must be positive");
  if (num_blocks < 1) throw std::invalid_argument("denoiser needs num_blocks >= 1");
  if (embed_dim < 2 || embed_dim % 2 != 0) throw std::invalid_argument("denoiser embed_dim must be even and >= 2");
}

void DenoiserSpec::check_image(const Shape& shape) const {
  const std::size_t div = std::size_t{1} << num_blocks;
  if (shape.size() != 3 || shape[0] != in_channels || shape[1] % div != 0 || shape[2] % div != 0 ||
      shape[1] == 0 || shape[2] == 0) {
    throw std::invalid_argument("denoiser input " + shape_str(shape) + " incompatible with " +
                                std::to_string(in_channels) + " channels and sides divisible by " +
                                std::to_string(div));
  }
}

std::vector<NamedTensor> denoiser_layout(const DenoiserSpec& spec) {
  spec.validate();
  const std::size_t E = spec.embed_dim;
  const std::size_t nb = spec.num_blocks;
  std::vector<NamedTensor> p;
  auto block = [&](const std::string& name, std::size_t cin, std::size_t cout) {
    p.push_back({name + ".w", Tensor(Shape{cout, cin, kKernel, kKernel})});
    p.push_back({name + ".b", Tensor(Shape{cout})});
    p.push_back({name + ".tw", Tensor(Shape{cout, E})});
    p.push_back({name + ".tb", Tensor(Shape{cout})});
  };
  p.push_back({"temb.w", Tensor(Shape{E, E})});
  p.push_back({"temb.b", Tensor(Shape{E})});
  p.push_back({"in.w", Tensor(Shape{spec.base_channels, spec.in_channels, kKernel, kKernel})});
  p.push_back({"in.b", Tensor(Shape{spec.base_channels})});
  for (std::size_t i = 0; i < nb; ++i) {
    const std::size_t cin = i == 0 ? spec.base_channels : level_channels(spec, i - 1);
    block("down" + std::to_string(i), cin, level_channels(spec, i));
  }
  const std::size_t deep = level_channels(spec, nb - 1);
  block("mid", deep, deep);
  for (std::size_t k = 0; k < nb; ++k) {
    const std::size_t i = nb - 1 - k;
    const std::size_t from_below = i == nb - 1 ? deep : level_channels(spec, i + 1);
    block("up" + std::to_string(i), from_below + level_channels(spec, i), level_channels(spec, i));
  }
  p.push_back({"out.w", Tensor(Shape{spec.in_channels, spec.base_channels, kKernel, kKernel})});
  p.push_back({"out.b", Tensor(Shape{spec.in_channels})});
  return p;
}

DenoiserModel DenoiserModel::zeros(const DenoiserSpec& spec) {
  DenoiserModel m;
  m.spec_ = spec;
  m.params_ = denoiser_layout(spec);
  return m;
}

DenoiserModel DenoiserModel::random(const DenoiserSpec& spec, std::uint64_t seed) {
  DenoiserModel m = zeros(spec);
  Rng rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (NamedTensor& p : m.params_) {
    if (p.value.rank() < 2) continue;  // biases start at zero
    std::size_t fan_in = 1;
    for (std::size_t i = 1; i < p.value.rank(); ++i) fan_in *= p.value.dim(i);
    const double std_dev = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : p.value.data()) v = std_dev * dist(rng);
  }
  return m;
}

DenoiserModel DenoiserModel::from_params(const DenoiserSpec& spec, std::vector<NamedTensor> params) {
  const std::vector<NamedTensor> layout = denoiser_layout(spec);
  if (params.size() != layout.size()) {
    throw std::invalid_argument("expected " + std::to_string(layout.size()) + " parameter tensors, got " +
                                std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (params[i].name != layout[i].name || params[i].value.shape() != layout[i].value.shape()) {
      throw std::invalid_argument("parameter " + std::to_string(i) + " is " + params[i].name +
                                  shape_str(params[i].value.shape()) + ", expected " + layout[i].name +
                                  shape_str(layout[i].value.shape()));
    }
  }
  DenoiserModel m;
  m.spec_ = spec;
  m.params_ = std::move(params);
  return m;
}

std::size_t DenoiserModel::num_parameters() const {
  std::size_t n = 0;
  for (const NamedTensor& p : params_) n += p.value.size();
  return n;
}

bool DenoiserModel::all_finite() const {
  for (const NamedTensor& p : params_)
    if (!p.value.all_finite()) return false;
  return true;
}

std::vector<Var> DenoiserModel::bind(Tape& tape, bool trainable) const {
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (const NamedTensor& p : params_) vars.push_back(trainable ? tape.leaf(p.value) : tape.constant(p.value));
  return vars;
}

Var DenoiserModel::forward(Var x_t, int t, std::span<const Var> params, std::vector<Var>* block_outputs) const {
  spec_.check_image(x_t.shape());
  if (t < 0) throw std::invalid_argument("timestep must be non-negative, got " + std::to_string(t));
  const Layout L{spec_.num_blocks};
  if (params.size() != L.total()) throw std::invalid_argument("wrong number of bound parameters");
  Tape& tape = *x_t.tape;

  const Var emb0 = tape.constant(timestep_embed(t, spec_.embed_dim));
  const Var emb = ops::silu(ops::linear(emb0, params[L.temb], params[L.temb + 1]));
  auto block = [&](Var h, std::size_t at) {
    const Var conv = ops::conv2d(h, params[at], params[at + 1]);
    const Var tbias = ops::linear(emb, params[at + 2], params[at + 3]);
    return ops::silu(ops::add_channel_bias(conv, tbias));
  };

  Var h = ops::conv2d(x_t, params[L.in], params[L.in + 1]);
  std::vector<Var> skips;
  for (std::size_t i = 0; i < L.nb; ++i) {
    h = block(h, L.down(i));
    skips.push_back(h);
    h = ops::avg_pool2(h);
    if (block_outputs) block_outputs->push_back(h);
  }
  h = block(h, L.mid());
  if (block_outputs) block_outputs->push_back(h);
  for (std::size_t k = 0; k < L.nb; ++k) {
    const std::size_t i = L.nb - 1 - k;
    h = ops::concat_channels(ops::upsample2(h), skips[i]);
    h = block(h, L.up(i));
    if (block_outputs) block_outputs->push_back(h);
  }
  return ops::conv2d(h, params[L.out()], params[L.out() + 1]);
}

Var DenoiserModel::predict(Var x_t, int t) const {
  const std::vector<Var> p = bind(*x_t.tape, false);
  return forward(x_t, t, p);
}

Image forward(const DenoiserModel& model, const Image& x_t, int t) { return model.predict(x_t, t); }

void sgd_fit(DenoiserModel& model, const ImageSet& dataset, const NoiseSchedule& sched, const TrainOptions& opts) {
  if (dataset.empty()) throw std::invalid_argument("training dataset is empty");
  if (opts.batch_size == 0) throw std::invalid_argument("batch size must be positive");
  for (const Image& img : dataset) model.spec().check_image(img.shape());
  Rng rng(opts.seed);
  const int last = static_cast<int>(dataset.size()) - 1;
  for (std::uint64_t step = 0; step < opts.steps; ++step) {
    std::vector<Tensor> grad_sum;
    double loss_sum = 0.0;
    for (std::size_t b = 0; b < opts.batch_size; ++b) {
      const Image& x0 = dataset[static_cast<std::size_t>(uniform_int(rng, 0, last))];
      const int t = uniform_int(rng, 1, sched.steps());
      const Image eps = randn(x0.shape(), rng);
      Tape tape;
      const std::vector<Var> params = model.bind(tape, true);
      const Var x_t = tape.constant(diffuse(x0, t, eps, sched));
      const Var pred = model.forward(x_t, t, params);
      const Var loss = ops::mean(ops::square(ops::sub(tape.constant(eps), pred)));
      loss_sum += loss.value().item();
      std::vector<Tensor> grads = tape.gradients(loss, params);
      if (grad_sum.empty()) {
        grad_sum = std::move(grads);
      } else {
        for (std::size_t i = 0; i < grads.size(); ++i) grad_sum[i] += grads[i];
      }
    }
    const double step_scale = opts.lr / static_cast<double>(opts.batch_size);
    auto& params = model.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      std::span<double> w = params[i].value.data();
      std::span<const double> g = grad_sum[i].data();
      for (std::size_t j = 0; j < w.size(); ++j) w[j] -= step_scale * g[j];
    }
    const double batch_loss = loss_sum / static_cast<double>(opts.batch_size);
    model.meta().loss_curve.push_back(batch_loss);
    model.meta().final_loss = batch_loss;
    ++model.meta().steps;
  }
  if (!model.all_finite()) throw std::runtime_error("training diverged: non-finite parameters");
}

DenoiserModel train(const DenoiserSpec& spec, const ImageSet& dataset, const NoiseSchedule& sched,
                    const TrainOptions& opts) {
  if (opts.steps < 1) throw std::invalid_argument("training needs at least one step");
  DenoiserModel model = DenoiserModel::random(spec, derive_seed(opts.seed, {0}));
  TrainOptions fit = opts;
  fit.seed = derive_seed(opts.seed, {1});
  sgd_fit(model, dataset, sched, fit);
  return model;
}

std::vector<double> block_probe(const DenoiserModel& model, const Image& x_a, const Image& x_b, int t) {
  require_same_shape(x_a, x_b, "block_probe");
  auto run = [&](const Image& x) {
    Tape tape;
    const std::vector<Var> params = model.bind(tape, false);
    std::vector<Var> blocks;
    model.forward(tape.constant(x), t, params, &blocks);
    std::vector<Tensor> values;
    for (const Var& v : blocks) values.push_back(v.value());
    return values;
  };
  const std::vector<Tensor> a = run(x_a);
  const std::vector<Tensor> b = run(x_b);
  std::vector<double> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(mean_squared_diff(a[i], b[i]));
  return out;
}

}  // namespace antipure
