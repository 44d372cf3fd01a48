#include "antipure/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>

#include "antipure/attack.hpp"
#include "antipure/checkpoint.hpp"
#include "antipure/config.hpp"
#include "antipure/dataset.hpp"
#include "antipure/image_io.hpp"
#include "antipure/metrics.hpp"
#include "antipure/purification.hpp"
#include "antipure/rng.hpp"
#include "antipure/workflow.hpp"

namespace fs = std::filesystem;

namespace antipure {

namespace {

struct Inputs {
  std::string config;
  std::vector<std::string> sets;
  std::string in, clean, model, out;
  std::optional<std::uint64_t> seed;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int to_int(const Config& c, const std::string& key) {
  const std::int64_t v = c.get_int(key);
  if (v < -1'000'000'000 || v > 1'000'000'000) throw ConfigError(key + " out of range");
  return static_cast<int>(v);
}

ScheduleParams schedule_params(const Config& c) {
  return {to_int(c, "schedule.steps"), c.get_double("schedule.beta_start"), c.get_double("schedule.beta_end")};
}

DenoiserSpec denoiser_spec(const Config& c) {
  DenoiserSpec s{c.get_u64("model.in_channels"), c.get_u64("model.base_channels"), c.get_u64("model.num_blocks"),
                 c.get_u64("model.embed_dim")};
  s.validate();
  return s;
}

Arm attack_arm(const Config& c) { return parse_arm(c.get("attack.method")); }

AttackConfig attack_config(const Config& c) {
  AttackConfig a;
  a.eta = c.get_double("attack.eta");
  a.alpha = c.get_double("attack.alpha");
  a.steps = to_int(c, "attack.steps");
  a.lambda1 = c.get_double("attack.lambda1");
  a.lambda2 = c.get_double("attack.lambda2");
  a.t_err = to_int(c, "attack.t_err");
  a.t_p = to_int(c, "attack.t_p");
  a.patch_size = c.get_u64("attack.patch_size");
  a.seed = c.get_u64("attack.seed");
  return arm_attack_config(attack_arm(c), a);
}

PurifyConfig purify_config(const Config& c) {
  PurifyConfig p;
  p.t_p = to_int(c, "purify.t_p");
  p.iterations = to_int(c, "purify.iterations");
  p.rounds = to_int(c, "purify.rounds");
  p.gamma = c.get_double("purify.gamma");
  p.grid_size = c.get_u64("purify.grid_size");
  p.grid_stride = c.get_u64("purify.grid_stride");
  p.seed = c.get_u64("purify.seed");
  return p;
}

TrainOptions train_options(const Config& c) {
  return {c.get_u64("train.steps"), c.get_double("train.lr"), c.get_u64("train.batch_size"), c.get_u64("train.seed")};
}

FinetuneParams finetune_params(const Config& c) {
  return {c.get_u64("finetune.steps"), c.get_double("finetune.lr"), c.get_u64("finetune.batch_size"),
          c.get_u64("finetune.seed")};
}

const std::string& require_path(const Config& c, const std::string& key, const char* flag) {
  const std::string& v = c.get(key);
  if (v.empty()) throw ConfigError(std::string("missing ") + flag + " (or " + key + " in the config)");
  return v;
}

fs::path prepare_out(const Config& c) {
  const fs::path out = require_path(c, "io.out", "--out");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create directory " + out.string() + ": " + ec.message());
  write_file(out / "config_snapshot.cfg", c.to_text());
  return out;
}

ImageSet read_nonempty_set(const std::string& dir) {
  ImageSet set = read_image_set(dir);
  if (set.empty()) throw IoError("no .apf images in " + dir);
  return set;
}

Checkpoint load_model(const Config& c) { return load_checkpoint(require_path(c, "io.model", "--model")); }

// ---- subcommands ---------------------------------------------------------

void cmd_gen_data(const Config& c, std::ostream& out) {
  const fs::path dir = prepare_out(c);
  const ImageSet set = procedural_dataset(c.get_u64("data.count"), c.get_u64("model.in_channels"),
                                          c.get_u64("data.size"), c.get_u64("data.seed"));
  write_image_set(dir, set);
  out << "wrote " << set.size() << " images to " << dir.string() << "\n";
}

void cmd_train(const Config& c, std::ostream& out) {
  const ImageSet data = c.get("io.in").empty()
                            ? procedural_dataset(c.get_u64("data.count"), c.get_u64("model.in_channels"),
                                                 c.get_u64("data.size"), c.get_u64("data.seed"))
                            : read_nonempty_set(c.get("io.in"));
  const fs::path dir = prepare_out(c);
  const ScheduleParams sp = schedule_params(c);
  const DenoiserModel model = train(denoiser_spec(c), data, make_schedule(sp), train_options(c));
  save_checkpoint(dir / "model.ckpt", model, sp);
  std::string csv = "step,loss\n";
  for (std::size_t i = 0; i < model.meta().loss_curve.size(); ++i) {
    csv += std::to_string(i + 1) + "," + num(model.meta().loss_curve[i]) + "\n";
  }
  write_file(dir / "loss.csv", csv);
  out << "trained " << model.meta().steps << " steps, final batch loss " << model.meta().final_loss << "\n";
}

void cmd_attack(const Config& c, std::ostream& out) {
  const ImageSet clean = read_nonempty_set(require_path(c, "io.in", "--in"));
  const Checkpoint ck = load_model(c);
  const NoiseSchedule sched = make_schedule(ck.schedule);
  const Arm arm = attack_arm(c);
  const AttackConfig base = attack_config(c);
  const fs::path dir = prepare_out(c);

  ImageSet adv(clean.size());
  std::vector<std::vector<StepRecord>> traces(clean.size());
  const auto n = static_cast<std::ptrdiff_t>(clean.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    if (arm == Arm::none) {
      adv[i] = clean[i];
      continue;
    }
    AttackConfig a = base;
    a.seed = derive_seed(base.seed, {i});
    AttackResult r = pgd_attack(clean[i], ck.model, sched, a);
    adv[i] = std::move(r.adversarial);
    traces[i] = std::move(r.trace);
  }
  write_image_set(dir, adv);
  std::string csv = "image,step,t,ddpm,fre,err_t,total,delta_linf\n";
  double worst = 0.0;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    for (std::size_t s = 0; s < traces[i].size(); ++s) {
      const StepRecord& r = traces[i][s];
      csv += std::to_string(i) + "," + std::to_string(s) + "," + std::to_string(r.t) + "," + num(r.ddpm) + "," +
             num(r.fre) + "," + num(r.err_t) + "," + num(r.total) + "," + num(r.delta_linf) + "\n";
    }
    worst = std::max(worst, linf_distance(adv[i], clean[i]));
  }
  write_file(dir / "trace.csv", csv);
  out << "attacked " << adv.size() << " images with " << arm_name(arm) << ", max |delta| = " << num(worst) << "\n";
}

void cmd_purify(const Config& c, std::ostream& out) {
  const ImageSet in = read_nonempty_set(require_path(c, "io.in", "--in"));
  const Checkpoint ck = load_model(c);
  const NoiseSchedule sched = make_schedule(ck.schedule);
  const PurifyConfig base = purify_config(c);
  const fs::path dir = prepare_out(c);
  ImageSet outset(in.size());
  const auto n = static_cast<std::ptrdiff_t>(in.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    PurifyConfig p = base;
    p.seed = derive_seed(base.seed, {i});
    outset[i] = gridpure(in[i], p, ck.model, sched).output;
  }
  write_image_set(dir, outset);
  out << "purified " << outset.size() << " images\n";
}

void cmd_finetune(const Config& c, std::ostream& out) {
  const ImageSet data = read_nonempty_set(require_path(c, "io.in", "--in"));
  const Checkpoint ck = load_model(c);
  const fs::path dir = prepare_out(c);
  const DenoiserModel tuned = finetune_on(data, ck.model, make_schedule(ck.schedule), finetune_params(c));
  save_checkpoint(dir / "model.ckpt", tuned, ck.schedule);
  out << "fine-tuned to " << tuned.meta().steps << " total steps\n";
}

void cmd_sample(const Config& c, std::ostream& out) {
  const Checkpoint ck = load_model(c);
  const fs::path dir = prepare_out(c);
  const std::size_t size = c.get_u64("data.size");
  const ImageSet set = sample_images(ck.model, make_schedule(ck.schedule), Shape{ck.model.spec().in_channels, size, size},
                                     c.get_u64("sample.count"), c.get_u64("sample.seed"));
  write_image_set(dir, set);
  out << "sampled " << set.size() << " images\n";
}

void cmd_probe_blocks(const Config& c, std::ostream& out) {
  const ImageSet clean = read_nonempty_set(require_path(c, "io.clean", "--clean"));
  const ImageSet adv = read_nonempty_set(require_path(c, "io.in", "--in"));
  if (clean.size() != adv.size()) throw std::invalid_argument("--clean and --in hold different image counts");
  const Checkpoint ck = load_model(c);
  const NoiseSchedule sched = make_schedule(ck.schedule);
  const std::size_t nb = ck.model.spec().num_blocks;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < nb; ++i) names.push_back("down" + std::to_string(i));
  names.push_back("mid");
  for (std::size_t i = nb; i-- > 0;) names.push_back("up" + std::to_string(i));
  const fs::path dir = prepare_out(c);
  std::string csv = "timestep,image,block,block_name,mse\n";
  for (int t : c.get_int_list("probe.timesteps")) {
    sched.check_timestep(t);
    for (std::size_t i = 0; i < clean.size(); ++i) {
      const std::vector<double> m = block_probe(ck.model, clean[i], adv[i], t);
      for (std::size_t b = 0; b < m.size(); ++b) {
        csv += std::to_string(t) + "," + std::to_string(i) + "," + std::to_string(b) + "," + names[b] + "," +
               num(m[b]) + "\n";
      }
    }
  }
  write_file(dir / "probe.csv", csv);
  out << "wrote block probe for " << clean.size() << " pairs\n";
}

void cmd_spectra(const Config& c, std::ostream& out) {
  const ImageSet in = read_nonempty_set(require_path(c, "io.in", "--in"));
  const std::size_t s = c.get_u64("metrics.patch_size");
  const fs::path dir = prepare_out(c);
  std::string csv = "image,m,n,energy\n";
  std::string hf = "image,hf_ratio\n";
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::vector<double> spec = patch_energy_spectrum(in[i], s);
    for (std::size_t m = 0; m < s; ++m)
      for (std::size_t n = 0; n < s; ++n)
        csv += std::to_string(i) + "," + std::to_string(m) + "," + std::to_string(n) + "," + num(spec[m * s + n]) + "\n";
    hf += std::to_string(i) + "," + num(hf_energy_ratio(in[i], s)) + "\n";
  }
  write_file(dir / "spectra.csv", csv);
  write_file(dir / "hf.csv", hf);
  out << "wrote spectra for " << in.size() << " images\n";
}

void cmd_eval(const Config& c, std::ostream& out) {
  const ImageSet in = read_nonempty_set(require_path(c, "io.in", "--in"));
  const std::size_t s = c.get_u64("metrics.patch_size");
  ImageSet clean;
  if (!c.get("io.clean").empty()) {
    clean = read_nonempty_set(c.get("io.clean"));
    if (clean.size() != in.size()) throw std::invalid_argument("--clean and --in hold different image counts");
  }
  std::string csv = clean.empty() ? "image,hf_ratio\n" : "image,hf_ratio,linf_to_clean,mse_to_clean,psnr\n";
  double worst = 0.0, hf_sum = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const double hf = hf_energy_ratio(in[i], s);
    hf_sum += hf;
    csv += std::to_string(i) + "," + num(hf);
    if (!clean.empty()) {
      const double linf = linf_distance(in[i], clean[i]);
      worst = std::max(worst, linf);
      csv += "," + num(linf) + "," + num(mse(in[i], clean[i])) + "," + num(psnr(in[i], clean[i]));
    }
    csv += "\n";
  }
  if (!c.get("io.out").empty()) write_file(prepare_out(c) / "eval.csv", csv);
  out << csv;
  out << "mean_hf_ratio=" << num(hf_sum / static_cast<double>(in.size())) << "\n";
  if (!clean.empty()) out << "max_linf=" << num(worst) << "\n";
}

void cmd_run_pc(const Config& c, std::ostream& out) {
  const fs::path dir = prepare_out(c);
  const DenoiserSpec spec = denoiser_spec(c);
  const std::size_t size = c.get_u64("data.size");
  ImageSet clean = c.get("io.in").empty() ? procedural_dataset(c.get_u64("workflow.images"), spec.in_channels, size,
                                                               c.get_u64("workflow.image_seed"))
                                          : read_nonempty_set(c.get("io.in"));
  Checkpoint ck;
  if (c.get("io.model").empty()) {
    ck.schedule = schedule_params(c);
    const ImageSet data = procedural_dataset(c.get_u64("data.count"), spec.in_channels, size, c.get_u64("data.seed"));
    ck.model = train(spec, data, make_schedule(ck.schedule), train_options(c));
  } else {
    ck = load_model(c);
  }
  save_checkpoint(dir / "purifier.ckpt", ck.model, ck.schedule);
  write_image_set(dir / "clean", clean);

  WorkflowConfig w;
  w.arms.clear();
  for (const std::string& a : c.get_list("workflow.arms")) w.arms.push_back(parse_arm(a));
  w.attack = attack_config(c);
  w.purify = purify_config(c);
  w.finetune = finetune_params(c);
  w.checkpoints = c.get_int_list("workflow.checkpoints");
  w.samples = c.get_u64("workflow.samples");
  w.metric_patch = c.get_u64("metrics.patch_size");
  w.seed = c.get_u64("global.seed");
  const ExperimentReport report = run_pc(clean, w, ck.model, ck.model, make_schedule(ck.schedule));
  write_file(dir / "report.csv", image_report_csv(report));
  write_file(dir / "summary.csv", summary_report_csv(report));
  out << summary_report_csv(report);
}

struct Command {
  const char* name;
  const char* help;
  std::function<void(const Config&, std::ostream&)> run;
};

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const std::vector<Command> commands = {
      {"gen-data", "Write the procedural image set", cmd_gen_data},
      {"train", "Train the purification denoiser", cmd_train},
      {"attack", "Craft perturbations (attack.method selects the loss terms)", cmd_attack},
      {"purify", "Grid purification of an image set", cmd_purify},
      {"finetune", "Fine-tune a checkpoint on an image set", cmd_finetune},
      {"sample", "Draw images with the full reverse chain", cmd_sample},
      {"probe-blocks", "Per-block activation MSE between clean and perturbed images", cmd_probe_blocks},
      {"spectra", "Per-image patch DCT energy CSV", cmd_spectra},
      {"run-pc", "Full perturb / purify / fine-tune / sample / score workflow", cmd_run_pc},
      {"eval", "Metrics of an image set, optionally against clean references", cmd_eval},
  };

  CLI::App app{"Anti-purification laboratory", "antipure"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Inputs>> inputs;
  std::vector<CLI::App*> subs;
  for (const Command& cmd : commands) {
    auto in = std::make_unique<Inputs>();
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    sub->add_option("-c,--config", in->config, "Config file (key = value with [section] headers)");
    sub->add_option("-s,--set", in->sets, "Override a config key: section.key=value");
    sub->add_option("--in", in->in, "Input image directory (io.in)");
    sub->add_option("--clean", in->clean, "Clean reference image directory (io.clean)");
    sub->add_option("--model", in->model, "Checkpoint file (io.model)");
    sub->add_option("--out", in->out, "Output directory (io.out)");
    sub->add_option("--seed", in->seed, "Global seed (global.seed)");
    inputs.push_back(std::move(in));
    subs.push_back(sub);
  }

  std::vector<const char*> argv{"antipure"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 2;
  }

  for (std::size_t k = 0; k < commands.size(); ++k) {
    if (!subs[k]->parsed()) continue;
    const Inputs& in = *inputs[k];
    try {
      Config cfg = Config::defaults();
      if (!in.config.empty()) cfg.merge_text(read_file(in.config), in.config);
      for (const std::string& s : in.sets) cfg.set_override(s);
      if (!in.in.empty()) cfg.set("io.in", in.in);
      if (!in.clean.empty()) cfg.set("io.clean", in.clean);
      if (!in.model.empty()) cfg.set("io.model", in.model);
      if (!in.out.empty()) cfg.set("io.out", in.out);
      if (in.seed) cfg.set("global.seed", std::to_string(*in.seed));
      commands[k].run(cfg, out);
      return 0;
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}

}  // namespace antipure
