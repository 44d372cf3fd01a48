#include "antipure/attack.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "antipure/dct.hpp"
#include "antipure/ops.hpp"
#include "antipure/rng.hpp"

namespace antipure {

void AttackConfig::validate(const NoiseSchedule& sched, const Shape& image_shape) const {
  if (!(eta > 0.0)) throw std::invalid_argument("attack eta must be positive");
  if (!(alpha > 0.0)) throw std::invalid_argument("attack alpha must be positive");
  if (steps < 0) throw std::invalid_argument("attack steps must be non-negative");
  sched.check_timestep(t_p);
  sched.check_timestep(t_err);
  check_patch_geometry(image_shape, patch_size);
  if (!mask.ddpm && !mask.fre && !mask.err_t) throw std::invalid_argument("attack loss mask disables every term");
}

Var loss_fre(Var x0_hat, std::size_t s) {
  check_patch_geometry(x0_hat.shape(), s);
  const Shape& sh = x0_hat.shape();
  const double patches = static_cast<double>(sh[0] * (sh[1] / s) * (sh[2] / s));
  const double w = 4.0 / static_cast<double>(s * s) / patches;
  Tensor mask(sh);
  for (std::size_t c = 0; c < sh[0]; ++c)
    for (std::size_t y = 0; y < sh[1]; ++y)
      for (std::size_t x = 0; x < sh[2]; ++x)
        if (y % s >= s / 2 && x % s >= s / 2) mask.at(c, y, x) = w;
  return ops::sigmoid(ops::sum(ops::mul_const(ops::patch_dct(x0_hat, s), mask)));
}

double loss_fre(const Image& x0_hat, std::size_t s) {
  Tape tape;
  return loss_fre(tape.constant(x0_hat), s).value().item();
}

Var loss_err_t(const NoisePredictor& model, Var x_t, int t, int t_err, const NoiseSchedule& sched) {
  sched.check_timestep(t);
  sched.check_timestep(t_err);
  const Var wrong = model.predict(x_t, t_err);
  const Var right = model.predict(x_t, t);
  return ops::scale(ops::mean(ops::square(ops::sub(wrong, right))), -1.0);
}

double fre_weight(int t, const NoiseSchedule& sched) { return std::exp(sched.alpha_bar(t) - 1.0); }

PgdLoss loss_pgd(const NoisePredictor& model, Var x0, Var delta, int t, Var eps, const AttackConfig& cfg,
                 const NoiseSchedule& sched) {
  sched.check_timestep(t);
  if (t > cfg.t_p) {
    throw std::invalid_argument("attack timestep " + std::to_string(t) + " exceeds t_p " + std::to_string(cfg.t_p));
  }
  const Var x_adv = ops::add(x0, delta);
  const Var x_t = diffuse(x_adv, t, eps, sched);
  const Var pred = model.predict(x_t, t);
  const Var ddpm = ops::mean(ops::square(ops::sub(eps, pred)));
  PgdLoss out;
  out.ddpm = ddpm.value().item();

  std::vector<Var> terms;
  if (cfg.mask.ddpm) terms.push_back(ddpm);
  if (cfg.mask.fre) {
    const Var fre = loss_fre(predict_x0(x_t, pred, t, sched), cfg.patch_size);
    out.fre = fre.value().item();
    terms.push_back(ops::scale(fre, cfg.lambda1 * fre_weight(t, sched)));
  } else {
    out.fre = loss_fre(predict_x0(x_t.value(), pred.value(), t, sched), cfg.patch_size);
  }
  if (cfg.mask.err_t) {
    const Var wrong = model.predict(x_t, cfg.t_err);
    const Var err = ops::scale(ops::mean(ops::square(ops::sub(wrong, pred))), -1.0);
    out.err_t = err.value().item();
    terms.push_back(ops::scale(ops::exp(err), cfg.lambda2));
  } else {
    out.err_t = -mean_squared_diff(model.predict(x_t.value(), cfg.t_err), pred.value());
  }
  if (terms.empty()) throw std::invalid_argument("attack loss mask disables every term");
  out.total = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) out.total = ops::add(out.total, terms[i]);
  return out;
}

AttackResult pgd_attack(const Image& x0, const NoisePredictor& model, const NoiseSchedule& sched,
                        const AttackConfig& cfg) {
  cfg.validate(sched, x0.shape());
  for (double v : x0.data()) {
    if (!(v >= -1.0 && v <= 1.0)) throw std::invalid_argument("attack input must lie in [-1, 1]");
  }
  Rng rng(cfg.seed);
  int frozen_t = 0;
  Image frozen_eps;
  if (cfg.freeze_noise) {
    frozen_t = uniform_int(rng, 1, cfg.t_p);
    frozen_eps = randn(x0.shape(), rng);
  }

  Image delta(x0.shape());
  AttackResult result;
  result.trace.reserve(static_cast<std::size_t>(cfg.steps));
  for (int step = 0; step < cfg.steps; ++step) {
    int t = frozen_t;
    Image eps;
    if (cfg.freeze_noise) {
      eps = frozen_eps;
    } else {
      t = uniform_int(rng, 1, cfg.t_p);
      eps = randn(x0.shape(), rng);
    }
    Tape tape;
    const Var x0v = tape.constant(x0);
    const Var dv = tape.leaf(delta);
    const PgdLoss loss = loss_pgd(model, x0v, dv, t, tape.constant(std::move(eps)), cfg, sched);
    const Tensor grad = backward(loss.total, tape, dv);

    double linf = 0.0;
    for (std::size_t i = 0; i < delta.size(); ++i) {
      const double g = grad[i];
      const double sign = g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0);
      double d = std::clamp(delta[i] + cfg.alpha * sign, -cfg.eta, cfg.eta);
      d = std::clamp(x0[i] + d, -1.0, 1.0) - x0[i];
      delta[i] = d;
      linf = std::max(linf, std::abs(d));
    }
    result.trace.push_back({t, loss.ddpm, loss.fre, loss.err_t, loss.total.value().item(), linf});
  }

  result.adversarial = Image(x0.shape());
  for (std::size_t i = 0; i < x0.size(); ++i) result.adversarial[i] = std::clamp(x0[i] + delta[i], -1.0, 1.0);
  return result;
}

}  // namespace antipure
