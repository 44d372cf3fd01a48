#include "antipure/dct.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "antipure/kernels.hpp"

namespace antipure {

namespace {

void check_side(std::size_t s) {
  if (s < 2 || s % 2 != 0) {
    throw std::invalid_argument("DCT patch side must be even and >= 2, got " + std::to_string(s));
  }
}

}  // namespace

std::vector<double> dct_basis(std::size_t s) {
  check_side(s);
  std::vector<double> b(s * s);
  const double sd = static_cast<double>(s);
  for (std::size_t k = 0; k < s; ++k) {
    const double a = k == 0 ? std::sqrt(1.0 / sd) : std::sqrt(2.0 / sd);
    for (std::size_t n = 0; n < s; ++n) {
      b[k * s + n] = a * std::cos(std::numbers::pi * static_cast<double>((2 * n + 1) * k) / (2.0 * sd));
    }
  }
  return b;
}

Tensor dct2d(const Tensor& patch, bool inverse) {
  if (patch.rank() != 2 || patch.dim(0) != patch.dim(1)) {
    throw std::invalid_argument("dct2d expects a square matrix, got " + shape_str(patch.shape()));
  }
  const std::size_t s = patch.dim(0);
  check_side(s);
  Tensor out(patch.shape());
  kernels::patch_dct(1, s, s, s, inverse, patch.data(), out.data());
  return out;
}

void check_patch_geometry(const Shape& image_shape, std::size_t s) {
  check_side(s);
  if (image_shape.size() != 3) {
    throw std::invalid_argument("patch DCT expects a (C,H,W) image, got " + shape_str(image_shape));
  }
  if (image_shape[1] % s != 0 || image_shape[2] % s != 0) {
    throw std::invalid_argument("patch side " + std::to_string(s) + " does not divide image " +
                                shape_str(image_shape));
  }
}

}  // namespace antipure
