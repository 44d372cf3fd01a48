#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "antipure/diffusion.hpp"
#include "antipure/ops.hpp"
#include "antipure/rng.hpp"

namespace testing {

using antipure::Image;
using antipure::Tape;
using antipure::Tensor;
using antipure::Var;

using ScalarFn = std::function<Var(Tape&, Var)>;

// Largest elementwise |analytic - numeric| / max(|analytic|, |numeric|, floor)
// with central differences of step h.
inline double grad_check(const ScalarFn& f, const Tensor& x, double h = 1e-5, double floor = 1e-7) {
  Tape tape;
  const Var leaf = tape.leaf(x);
  const Tensor g = antipure::backward(f(tape, leaf), tape, leaf);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    Tape tp, tm;
    const double fp = f(tp, tp.constant(xp)).value().item();
    const double fm = f(tm, tm.constant(xm)).value().item();
    const double num = (fp - fm) / (2.0 * h);
    const double den = std::max({std::abs(g[i]), std::abs(num), floor});
    worst = std::max(worst, std::abs(g[i] - num) / den);
  }
  return worst;
}

// Returns a fixed tensor regardless of input; a "perfect" predictor when that
// tensor is the eps used to diffuse.
struct FixedNoise : antipure::NoisePredictor {
  Tensor eps;
  explicit FixedNoise(Tensor e) : eps(std::move(e)) {}
  using NoisePredictor::predict;
  Var predict(Var x_t, int) const override {
    return antipure::ops::add(antipure::ops::scale(x_t, 0.0), x_t.tape->constant(eps));
  }
};

// Knows the clean image and returns the exact noise that explains x_t at t.
struct KnowsClean : antipure::NoisePredictor {
  Image x0;
  const antipure::NoiseSchedule* sched;
  KnowsClean(Image x, const antipure::NoiseSchedule& s) : x0(std::move(x)), sched(&s) {}
  using NoisePredictor::predict;
  Var predict(Var x_t, int t) const override {
    const double ab = sched->alpha_bar(t);
    Tensor shift = x0;
    shift *= -std::sqrt(ab);
    return antipure::ops::scale(antipure::ops::add(x_t, x_t.tape->constant(shift)), 1.0 / std::sqrt(1.0 - ab));
  }
};

// Ignores the timestep entirely.
struct TimestepBlind : antipure::NoisePredictor {
  using NoisePredictor::predict;
  Var predict(Var x_t, int) const override { return antipure::ops::silu(antipure::ops::scale(x_t, 0.7)); }
};

inline Tensor uniform(const antipure::Shape& shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  antipure::Rng rng(seed);
  Tensor t(shape);
  for (double& v : t.data()) v = lo + (hi - lo) * antipure::uniform01(rng);
  return t;
}

}  // namespace testing
