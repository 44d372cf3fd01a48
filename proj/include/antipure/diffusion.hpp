#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "antipure/tape.hpp"
#include "antipure/tensor.hpp"

namespace antipure {

using Image = Tensor;  // (C, H, W), values nominally in [-1, 1]

// eps_theta(x_t, t). Implementations must be pure functions of (x_t, t).
class NoisePredictor {
 public:
  virtual ~NoisePredictor() = default;
  // Records the prediction on x_t's tape, differentiable w.r.t. x_t.
  virtual Var predict(Var x_t, int t) const = 0;
  Tensor predict(const Image& x_t, int t) const;
};

// Linear-beta DDPM schedule. Timesteps are 1-based: t in [1, T].
class NoiseSchedule {
 public:
  static NoiseSchedule from_betas(std::vector<double> betas);

  int steps() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const { return beta_[index(t)]; }
  double alpha(int t) const { return 1.0 - beta_[index(t)]; }
  double alpha_bar(int t) const { return alpha_bar_[index(t)]; }
  std::span<const double> betas() const { return beta_; }
  std::span<const double> alpha_bars() const { return alpha_bar_; }

  // Throws std::invalid_argument unless 1 <= t <= T.
  void check_timestep(int t) const;

 private:
  std::size_t index(int t) const {
    check_timestep(t);
    return static_cast<std::size_t>(t - 1);
  }
  std::vector<double> beta_;
  std::vector<double> alpha_bar_;
};

NoiseSchedule make_schedule(int T, double beta_start, double beta_end);

// sqrt(ab) x0 + sqrt(1 - ab) eps
Image diffuse_with_alpha_bar(const Image& x0, const Image& eps, double alpha_bar);
Image diffuse(const Image& x0, int t, const Image& eps, const NoiseSchedule& sched);
Var diffuse(Var x0, int t, Var eps, const NoiseSchedule& sched);

// (x_t - sqrt(1 - ab) eps_pred) / sqrt(ab)
Image predict_x0(const Image& x_t, const Image& eps_pred, int t, const NoiseSchedule& sched);
Var predict_x0(Var x_t, Var eps_pred, int t, const NoiseSchedule& sched);

// mean((eps - eps_theta(diffuse(x0, t, eps), t))^2); caller supplies eps.
Var ddpm_loss(const NoisePredictor& model, Var x0, int t, Var eps, const NoiseSchedule& sched);
double ddpm_loss(const NoisePredictor& model, const Image& x0, int t, const Image& eps,
                 const NoiseSchedule& sched);

// Ancestral DDPM sampling from t_from down to t_to with posterior variance beta_t.
// Fresh noise (scaled by noise_scale) is injected on every step except the last.
Image reverse(const NoisePredictor& model, Image x_t, int t_from, int t_to, const NoiseSchedule& sched,
              std::uint64_t seed, double noise_scale = 1.0);

}  // namespace antipure
