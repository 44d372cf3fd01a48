#include "antipure/metrics.hpp"

#include <cmath>
#include <limits>

#include "antipure/dct.hpp"
#include "antipure/kernels.hpp"

namespace antipure {

namespace {

Tensor patch_coefficients(const Image& x, std::size_t s) {
  check_patch_geometry(x.shape(), s);
  Tensor coef(x.shape());
  kernels::patch_dct(x.dim(0), x.dim(1), x.dim(2), s, false, x.data(), coef.data());
  return coef;
}

}  // namespace

double hf_energy_ratio(const Image& x, std::size_t s) {
  const Tensor coef = patch_coefficients(x, s);
  const std::size_t H = x.dim(1), W = x.dim(2);
  double hf = 0.0, total = 0.0;
  for (std::size_t c = 0; c < x.dim(0); ++c) {
    for (std::size_t y = 0; y < H; ++y) {
      for (std::size_t xx = 0; xx < W; ++xx) {
        const double e = coef.at(c, y, xx) * coef.at(c, y, xx);
        total += e;
        if (y % s >= s / 2 && xx % s >= s / 2) hf += e;
      }
    }
  }
  return total > 0.0 ? hf / total : 0.0;
}

std::vector<double> patch_energy_spectrum(const Image& x, std::size_t s) {
  const Tensor coef = patch_coefficients(x, s);
  std::vector<double> spec(s * s, 0.0);
  const std::size_t H = x.dim(1), W = x.dim(2);
  for (std::size_t c = 0; c < x.dim(0); ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t xx = 0; xx < W; ++xx) spec[(y % s) * s + xx % s] += coef.at(c, y, xx) * coef.at(c, y, xx);
  const double patches = static_cast<double>(x.dim(0) * (H / s) * (W / s));
  for (double& v : spec) v /= patches;
  return spec;
}

double mse(const Image& a, const Image& b) { return mean_squared_diff(a, b); }

double psnr(const Image& a, const Image& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(4.0 / m);
}

double linf_distance(const Image& a, const Image& b) { return max_abs_diff(a, b); }

}  // namespace antipure
