#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "antipure/tensor.hpp"

namespace antipure {

using Rng = std::mt19937_64;

// Deterministic child seed from a parent seed and a path of indices (splitmix64 chain).
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

Tensor randn(const Shape& shape, Rng& rng);
Tensor randn(const Shape& shape, std::uint64_t seed);
// Uniform integer in [lo, hi].
int uniform_int(Rng& rng, int lo, int hi);
double uniform01(Rng& rng);

}  // namespace antipure
