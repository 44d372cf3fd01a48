#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "antipure/attack.hpp"
#include "antipure/denoiser.hpp"
#include "antipure/purification.hpp"

namespace antipure {

// Perturbation methods compared by the purification-customization harness.
enum class Arm { none, pgd_ddpm, pgd_ddpm_fre, pgd_ddpm_err_t, antipure };

std::string_view arm_name(Arm arm);
// Accepts none, pgd_ddpm, pgd_ddpm+fre, pgd_ddpm+err_t, antipure.
Arm parse_arm(std::string_view name);
// Base config with the loss mask each arm uses.
AttackConfig arm_attack_config(Arm arm, const AttackConfig& base);

struct FinetuneParams {
  std::uint64_t steps = 300;
  double lr = 0.05;
  std::size_t batch_size = 8;
  std::uint64_t seed = 0;
};

// Continues SGD on ddpm_loss from `base` over `dataset`; `base` is left untouched.
DenoiserModel finetune_on(const ImageSet& dataset, const DenoiserModel& base, const NoiseSchedule& sched,
                          const FinetuneParams& params);

// Images drawn by the full reverse chain from T starting at N(0, I), clamped to [-1, 1].
ImageSet sample_images(const DenoiserModel& model, const NoiseSchedule& sched, const Shape& shape,
                       std::size_t count, std::uint64_t seed);

// Mean ddpm_loss over `draws` seeded (t, eps) pairs per image.
double eval_ddpm_loss(const NoisePredictor& model, const ImageSet& images, const NoiseSchedule& sched,
                      std::uint64_t seed, int draws = 4);

struct WorkflowConfig {
  std::vector<Arm> arms{Arm::none, Arm::pgd_ddpm, Arm::pgd_ddpm_fre, Arm::pgd_ddpm_err_t, Arm::antipure};
  AttackConfig attack;
  PurifyConfig purify;
  FinetuneParams finetune;
  // Cumulative purification iteration counts at which to fine-tune and score.
  // Empty means only the final iterate.
  std::vector<int> checkpoints;
  std::size_t samples = 16;
  std::size_t metric_patch = 8;
  std::uint64_t seed = 0;
};

struct ImageRecord {
  std::string arm;
  int checkpoint = 0;
  std::size_t image = 0;
  double delta_linf = 0.0;    // perturbed vs clean
  double hf_perturbed = 0.0;  // before purification
  double hf_purified = 0.0;
  double mse_to_clean = 0.0;  // purified vs clean
  double psnr = 0.0;
};

struct ArmSummary {
  std::string arm;
  int checkpoint = 0;
  double mean_delta_linf = 0.0;
  double mean_hf_clean = 0.0;
  double mean_hf_perturbed = 0.0;
  double mean_hf_purified = 0.0;
  double mean_mse_to_clean = 0.0;
  double mean_psnr = 0.0;
  double sample_hf = 0.0;  // post-finetune samples
  double eval_ddpm_loss = 0.0;  // fine-tuned model on the clean set
  double amplification = 0.0;  // sample_hf / mean_hf_purified
};

struct ExperimentReport {
  std::vector<ImageRecord> images;
  std::vector<ArmSummary> summary;
  std::uint64_t seed = 0;
  std::string config_snapshot;

  const ArmSummary& find(std::string_view arm, int checkpoint) const;
};

// Perturb -> purify (recording checkpoints) -> fine-tune a copy of
// `custom_base` on the purified set -> sample -> score, for every arm, with
// identical seeds across arms.
ExperimentReport run_pc(const ImageSet& clean_set, const WorkflowConfig& cfg, const DenoiserModel& purifier,
                        const DenoiserModel& custom_base, const NoiseSchedule& sched);

// CSV renderings with fixed column lists (documented in docs/formats.md).
std::string image_report_csv(const ExperimentReport& report);
std::string summary_report_csv(const ExperimentReport& report);

}  // namespace antipure
