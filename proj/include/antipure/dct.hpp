#pragma once

#include <cstddef>
#include <vector>

#include "antipure/tensor.hpp"

namespace antipure {

// Row-major s x s orthonormal DCT-II matrix B, B[k][n] = a_k cos(pi (2n+1) k / 2s).
std::vector<double> dct_basis(std::size_t s);

// Orthonormal 2D DCT-II of an s x s patch (B X B^T), or its exact inverse.
// s must be even and >= 2.
Tensor dct2d(const Tensor& patch, bool inverse = false);

// Throws std::invalid_argument unless s is even, >= 2 and divides both spatial dims.
void check_patch_geometry(const Shape& image_shape, std::size_t s);

}  // namespace antipure
