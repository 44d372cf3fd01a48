#include "antipure/workflow.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "antipure/metrics.hpp"
#include "antipure/rng.hpp"

namespace antipure {

namespace {

// Stage tags for seed derivation; every arm uses the same derived seeds.
enum : std::uint64_t { kAttackSeed = 1, kPurifySeed = 2, kFinetuneSeed = 3, kSampleSeed = 4, kEvalSeed = 5 };

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

std::string_view arm_name(Arm arm) {
  switch (arm) {
    case Arm::none: return "none";
    case Arm::pgd_ddpm: return "pgd_ddpm";
    case Arm::pgd_ddpm_fre: return "pgd_ddpm+fre";
    case Arm::pgd_ddpm_err_t: return "pgd_ddpm+err_t";
    case Arm::antipure: return "antipure";
  }
  return "?";
}

Arm parse_arm(std::string_view name) {
  for (Arm a : {Arm::none, Arm::pgd_ddpm, Arm::pgd_ddpm_fre, Arm::pgd_ddpm_err_t, Arm::antipure}) {
    if (arm_name(a) == name) return a;
  }
  throw std::invalid_argument("unknown arm '" + std::string(name) +
                              "' (expected none, pgd_ddpm, pgd_ddpm+fre, pgd_ddpm+err_t, antipure)");
}

AttackConfig arm_attack_config(Arm arm, const AttackConfig& base) {
  AttackConfig c = base;
  switch (arm) {
    case Arm::none:
    case Arm::pgd_ddpm: c.mask = {true, false, false}; break;
    case Arm::pgd_ddpm_fre: c.mask = {true, true, false}; break;
    case Arm::pgd_ddpm_err_t: c.mask = {true, false, true}; break;
    case Arm::antipure: c.mask = {true, true, true}; break;
  }
  return c;
}

DenoiserModel finetune_on(const ImageSet& dataset, const DenoiserModel& base, const NoiseSchedule& sched,
                          const FinetuneParams& params) {
  if (dataset.empty()) throw std::invalid_argument("fine-tuning dataset is empty");
  DenoiserModel model = base;
  model.meta().loss_curve.clear();
  sgd_fit(model, dataset, sched, TrainOptions{params.steps, params.lr, params.batch_size, params.seed});
  return model;
}

ImageSet sample_images(const DenoiserModel& model, const NoiseSchedule& sched, const Shape& shape,
                       std::size_t count, std::uint64_t seed) {
  model.spec().check_image(shape);
  ImageSet out(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::uint64_t>(i);
    Image x = reverse(model, randn(shape, derive_seed(seed, {k, 0})), sched.steps(), 0, sched,
                      derive_seed(seed, {k, 1}));
    for (double& v : x.data()) v = std::clamp(v, -1.0, 1.0);
    out[static_cast<std::size_t>(i)] = std::move(x);
  }
  return out;
}

double eval_ddpm_loss(const NoisePredictor& model, const ImageSet& images, const NoiseSchedule& sched,
                      std::uint64_t seed, int draws) {
  Rng rng(seed);
  double acc = 0.0;
  int n = 0;
  for (const Image& x : images) {
    for (int d = 0; d < draws; ++d) {
      const int t = uniform_int(rng, 1, sched.steps());
      const Image eps = randn(x.shape(), rng);
      acc += ddpm_loss(model, x, t, eps, sched);
      ++n;
    }
  }
  return n ? acc / n : 0.0;
}

const ArmSummary& ExperimentReport::find(std::string_view arm, int checkpoint) const {
  for (const ArmSummary& s : summary)
    if (s.arm == arm && s.checkpoint == checkpoint) return s;
  throw std::out_of_range("no summary row for arm " + std::string(arm) + " at checkpoint " + std::to_string(checkpoint));
}

ExperimentReport run_pc(const ImageSet& clean_set, const WorkflowConfig& cfg, const DenoiserModel& purifier,
                        const DenoiserModel& custom_base, const NoiseSchedule& sched) {
  if (clean_set.empty()) throw std::invalid_argument("run_pc needs at least one clean image");
  if (cfg.arms.empty()) throw std::invalid_argument("run_pc needs at least one arm");
  cfg.purify.validate(sched);
  const int total_iters = cfg.purify.rounds * cfg.purify.iterations;
  std::vector<int> checkpoints = cfg.checkpoints;
  if (checkpoints.empty()) checkpoints.push_back(total_iters);
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());
  for (int c : checkpoints) {
    if (c < 1 || c > total_iters) {
      throw std::invalid_argument("checkpoint " + std::to_string(c) + " outside [1, " + std::to_string(total_iters) + "]");
    }
  }

  const std::size_t n_img = clean_set.size();
  std::vector<double> hf_clean(n_img);
  for (std::size_t i = 0; i < n_img; ++i) hf_clean[i] = hf_energy_ratio(clean_set[i], cfg.metric_patch);

  ExperimentReport report;
  report.seed = cfg.seed;
  for (Arm arm : cfg.arms) {
    const AttackConfig attack = arm_attack_config(arm, cfg.attack);
    std::vector<Image> perturbed(n_img);
    std::vector<GridPureResult> purified(n_img);
    const auto n = static_cast<std::ptrdiff_t>(n_img);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      if (arm == Arm::none) {
        perturbed[i] = clean_set[i];
      } else {
        AttackConfig a = attack;
        a.seed = derive_seed(cfg.seed, {kAttackSeed, i});
        perturbed[i] = pgd_attack(clean_set[i], purifier, sched, a).adversarial;
      }
      PurifyConfig p = cfg.purify;
      p.seed = derive_seed(cfg.seed, {kPurifySeed, i});
      purified[i] = gridpure(perturbed[i], p, purifier, sched, checkpoints);
    }

    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
      const int ck = checkpoints[k];
      ImageSet set(n_img);
      std::vector<double> linf, hfp, hfq, err, ps;
      for (std::size_t i = 0; i < n_img; ++i) {
        set[i] = purified[i].checkpoints.at(k).second;
        ImageRecord r;
        r.arm = std::string(arm_name(arm));
        r.checkpoint = ck;
        r.image = i;
        r.delta_linf = linf_distance(perturbed[i], clean_set[i]);
        r.hf_perturbed = hf_energy_ratio(perturbed[i], cfg.metric_patch);
        r.hf_purified = hf_energy_ratio(set[i], cfg.metric_patch);
        r.mse_to_clean = mse(set[i], clean_set[i]);
        r.psnr = psnr(set[i], clean_set[i]);
        linf.push_back(r.delta_linf);
        hfp.push_back(r.hf_perturbed);
        hfq.push_back(r.hf_purified);
        err.push_back(r.mse_to_clean);
        ps.push_back(r.psnr);
        report.images.push_back(std::move(r));
      }
      FinetuneParams ft = cfg.finetune;
      ft.seed = derive_seed(cfg.seed, {kFinetuneSeed});
      const DenoiserModel tuned = finetune_on(set, custom_base, sched, ft);
      const ImageSet samples = sample_images(tuned, sched, clean_set.front().shape(), cfg.samples, derive_seed(cfg.seed, {kSampleSeed}));
      std::vector<double> shf;
      for (const Image& s : samples) shf.push_back(hf_energy_ratio(s, cfg.metric_patch));

      ArmSummary s;
      s.arm = std::string(arm_name(arm));
      s.checkpoint = ck;
      s.mean_delta_linf = mean_of(linf);
      s.mean_hf_clean = mean_of(hf_clean);
      s.mean_hf_perturbed = mean_of(hfp);
      s.mean_hf_purified = mean_of(hfq);
      s.mean_mse_to_clean = mean_of(err);
      s.mean_psnr = mean_of(ps);
      s.sample_hf = mean_of(shf);
      s.eval_ddpm_loss = eval_ddpm_loss(tuned, clean_set, sched, derive_seed(cfg.seed, {kEvalSeed}));
      s.amplification = s.mean_hf_purified > 0.0 ? s.sample_hf / s.mean_hf_purified : 0.0;
      report.summary.push_back(s);
    }
  }
  return report;
}

std::string image_report_csv(const ExperimentReport& report) {
  std::string out = "arm,checkpoint,image,delta_linf,hf_perturbed,hf_purified,mse_to_clean,psnr\n";
  for (const ImageRecord& r : report.images) {
    out += r.arm + ',' + std::to_string(r.checkpoint) + ',' + std::to_string(r.image) + ',' + fmt(r.delta_linf) + ',' +
           fmt(r.hf_perturbed) + ',' + fmt(r.hf_purified) + ',' + fmt(r.mse_to_clean) + ',' + fmt(r.psnr) + '\n';
  }
  return out;
}

std::string summary_report_csv(const ExperimentReport& report) {
  std::string out =
      "arm,checkpoint,mean_delta_linf,mean_hf_clean,mean_hf_perturbed,mean_hf_purified,mean_mse_to_clean,"
      "mean_psnr,sample_hf,eval_ddpm_loss,amplification\n";
  for (const ArmSummary& s : report.summary) {
    out += s.arm + ',' + std::to_string(s.checkpoint) + ',' + fmt(s.mean_delta_linf) + ',' + fmt(s.mean_hf_clean) +
           ',' + fmt(s.mean_hf_perturbed) + ',' + fmt(s.mean_hf_purified) + ',' + fmt(s.mean_mse_to_clean) + ',' +
           fmt(s.mean_psnr) + ',' + fmt(s.sample_hf) + ',' + fmt(s.eval_ddpm_loss) + ',' + fmt(s.amplification) + '\n';
  }
  return out;
}

}  // namespace antipure
