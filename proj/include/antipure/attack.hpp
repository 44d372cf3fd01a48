#pragma once

#include <cstdint>
#include <vector>

#include "antipure/diffusion.hpp"

namespace antipure {

struct LossMask {
  bool ddpm = true;
  bool fre = true;
  bool err_t = true;
  bool operator==(const LossMask&) const = default;
};

struct AttackConfig {
  double eta = 16.0 / 255.0;  // l-inf budget in [-1, 1] image units
  double alpha = 5e-3;        // PGD step size
  int steps = 100;
  double lambda1 = 0.5;  // frequency guidance weight
  double lambda2 = 0.5;  // erroneous-timestep guidance weight
  int t_err = 99;
  int t_p = 10;  // attack timesteps are drawn from U(1, t_p)
  std::size_t patch_size = 8;
  LossMask mask;
  std::uint64_t seed = 0;
  // Draw (t, eps) once and reuse it on every step. Test mode for ascent checks.
  bool freeze_noise = false;

  void validate(const NoiseSchedule& sched, const Shape& image_shape) const;
};

// sigma(mean over patches and channels of 4/s^2 * sum of the high-frequency
// quarter of each patch's DCT coefficients).
Var loss_fre(Var x0_hat, std::size_t s);
double loss_fre(const Image& x0_hat, std::size_t s);

// -mean((eps(x_t, t_err) - eps(x_t, t))^2); never positive.
Var loss_err_t(const NoisePredictor& model, Var x_t, int t, int t_err, const NoiseSchedule& sched);

// e^{alpha_bar_t - 1}, the weight on the frequency term.
double fre_weight(int t, const NoiseSchedule& sched);

struct PgdLoss {
  Var total;
  double ddpm = 0.0;
  double fre = 0.0;
  double err_t = 0.0;
};

// L_ddpm + lambda1 e^{ab_t - 1} L_fre + lambda2 e^{L_err-t}, each term gated by cfg.mask.
// Component values are reported even for masked terms.
PgdLoss loss_pgd(const NoisePredictor& model, Var x0, Var delta, int t, Var eps, const AttackConfig& cfg,
                 const NoiseSchedule& sched);

struct StepRecord {
  int t = 0;
  double ddpm = 0.0;
  double fre = 0.0;
  double err_t = 0.0;
  double total = 0.0;       // evaluated before this step's update
  double delta_linf = 0.0;  // after this step's update and projection
};

struct AttackResult {
  Image adversarial;
  std::vector<StepRecord> trace;
};

// Sign-gradient ascent on loss_pgd with projection onto the eta-ball around x0
// and onto [-1, 1]. One (t, eps) sample per step; delta starts at zero.
AttackResult pgd_attack(const Image& x0, const NoisePredictor& model, const NoiseSchedule& sched,
                        const AttackConfig& cfg);

}  // namespace antipure
