#pragma once

#include <cstdint>

#include "antipure/denoiser.hpp"

namespace antipure {

// One procedural image: a random linear-gradient background with one to three
// anti-aliased filled ellipses, clamped to [-1, 1].
Image procedural_image(std::size_t channels, std::size_t size, std::uint64_t seed);

// `count` images with per-image seeds derived from `seed`.
ImageSet procedural_dataset(std::size_t count, std::size_t channels, std::size_t size, std::uint64_t seed);

}  // namespace antipure
