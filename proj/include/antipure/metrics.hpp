#pragma once

#include <cstddef>
#include <vector>

#include "antipure/diffusion.hpp"

namespace antipure {

// Share of patch-DCT energy in the high-frequency quarter (both indices >= s/2).
// Zero for an all-zero image.
double hf_energy_ratio(const Image& x, std::size_t s);

// Mean squared patch-DCT coefficient per (m, n) position, averaged over all
// patches and channels; row-major s x s.
std::vector<double> patch_energy_spectrum(const Image& x, std::size_t s);

double mse(const Image& a, const Image& b);
// Peak-to-peak range 2 for [-1, 1] images; +inf when the images are identical.
double psnr(const Image& a, const Image& b);
double linf_distance(const Image& a, const Image& b);

}  // namespace antipure
