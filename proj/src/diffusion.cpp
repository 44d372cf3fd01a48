#include "antipure/diffusion.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "antipure/ops.hpp"
#include "antipure/rng.hpp"

namespace antipure {

Tensor NoisePredictor::predict(const Image& x_t, int t) const {
  Tape tape;
  return predict(tape.constant(x_t), t).value();
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.size() < 2) throw std::invalid_argument("noise schedule needs at least 2 timesteps");
  NoiseSchedule s;
  double prod = 1.0;
  for (double b : betas) {
    if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("beta must lie in (0,1), got " + std::to_string(b));
    prod *= 1.0 - b;
    s.alpha_bar_.push_back(prod);
  }
  s.beta_ = std::move(betas);
  return s;
}

void NoiseSchedule::check_timestep(int t) const {
  if (t < 1 || t > steps()) {
    throw std::invalid_argument("timestep " + std::to_string(t) + " outside [1, " + std::to_string(steps()) + "]");
  }
}

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
  if (T < 2) throw std::invalid_argument("schedule needs T >= 2, got " + std::to_string(T));
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw std::invalid_argument("schedule needs 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(static_cast<std::size_t>(T));
  for (int i = 0; i < T; ++i) {
    betas[static_cast<std::size_t>(i)] =
        beta_start + (beta_end - beta_start) * static_cast<double>(i) / static_cast<double>(T - 1);
  }
  return NoiseSchedule::from_betas(std::move(betas));
}

Image diffuse_with_alpha_bar(const Image& x0, const Image& eps, double alpha_bar) {
  require_same_shape(x0, eps, "diffuse");
  const double a = std::sqrt(alpha_bar);
  const double b = std::sqrt(1.0 - alpha_bar);
  Image out(x0.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x0[i] + b * eps[i];
  return out;
}

Image diffuse(const Image& x0, int t, const Image& eps, const NoiseSchedule& sched) {
  return diffuse_with_alpha_bar(x0, eps, sched.alpha_bar(t));
}

Var diffuse(Var x0, int t, Var eps, const NoiseSchedule& sched) {
  const double ab = sched.alpha_bar(t);
  return ops::add(ops::scale(x0, std::sqrt(ab)), ops::scale(eps, std::sqrt(1.0 - ab)));
}

Image predict_x0(const Image& x_t, const Image& eps_pred, int t, const NoiseSchedule& sched) {
  require_same_shape(x_t, eps_pred, "predict_x0");
  const double ab = sched.alpha_bar(t);
  const double a = std::sqrt(ab);
  const double b = std::sqrt(1.0 - ab);
  Image out(x_t.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (x_t[i] - b * eps_pred[i]) / a;
  return out;
}

Var predict_x0(Var x_t, Var eps_pred, int t, const NoiseSchedule& sched) {
  const double ab = sched.alpha_bar(t);
  return ops::scale(ops::sub(x_t, ops::scale(eps_pred, std::sqrt(1.0 - ab))), 1.0 / std::sqrt(ab));
}

Var ddpm_loss(const NoisePredictor& model, Var x0, int t, Var eps, const NoiseSchedule& sched) {
  const Var x_t = diffuse(x0, t, eps, sched);
  const Var pred = model.predict(x_t, t);
  return ops::mean(ops::square(ops::sub(eps, pred)));
}

double ddpm_loss(const NoisePredictor& model, const Image& x0, int t, const Image& eps,
                 const NoiseSchedule& sched) {
  const Image x_t = diffuse(x0, t, eps, sched);
  return mean_squared_diff(eps, model.predict(x_t, t));
}

Image reverse(const NoisePredictor& model, Image x_t, int t_from, int t_to, const NoiseSchedule& sched,
              std::uint64_t seed, double noise_scale) {
  if (t_from <= t_to || t_to < 0) {
    throw std::invalid_argument("reverse needs t_from > t_to >= 0, got " + std::to_string(t_from) + " -> " +
                                std::to_string(t_to));
  }
  sched.check_timestep(t_from);
  Rng rng(seed);
  Image x = std::move(x_t);
  for (int t = t_from; t > t_to; --t) {
    const Image eps = model.predict(x, t);
    const double beta = sched.beta(t);
    const double coef = beta / std::sqrt(1.0 - sched.alpha_bar(t));
    const double inv_sqrt_alpha = 1.0 / std::sqrt(sched.alpha(t));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = inv_sqrt_alpha * (x[i] - coef * eps[i]);
    if (t - 1 > t_to) {
      const Image z = randn(x.shape(), rng);
      const double sigma = noise_scale * std::sqrt(beta);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] += sigma * z[i];
    }
  }
  return x;
}

}  // namespace antipure
