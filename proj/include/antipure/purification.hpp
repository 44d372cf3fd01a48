#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "antipure/diffusion.hpp"

namespace antipure {

struct PurifyConfig {
  int t_p = 10;
  int iterations = 20;  // per round
  int rounds = 2;
  double gamma = 0.1;  // residual weight on the input image
  std::size_t grid_size = 32;
  std::size_t grid_stride = 32;
  std::uint64_t seed = 0;
  // Scales the noise injected by the reverse sampler; 1 is standard DDPM.
  double noise_scale = 1.0;

  void validate(const NoiseSchedule& sched) const;
};

// Diffuse to t_p with seeded noise, run the reverse chain to 0, clamp to [-1, 1].
Image diffpure(const Image& x, int t_p, const NoisePredictor& model, const NoiseSchedule& sched,
               std::uint64_t seed, double noise_scale = 1.0);

// Tile origins along one axis: every `stride` from 0, plus a final tile flush with the edge.
std::vector<std::size_t> tile_origins(std::size_t extent, std::size_t size, std::size_t stride);

// Seed used for tile `tile` in iteration `iteration` of round `round`.
std::uint64_t tile_seed(const PurifyConfig& cfg, int round, int iteration, std::size_t tile);

struct GridPureResult {
  Image output;
  // (cumulative iteration count, iterate after that iteration)
  std::vector<std::pair<int, Image>> checkpoints;
};

// Iterative grid purification. Each iteration purifies every overlapping tile,
// averages overlaps per pixel, then blends x <- (1 - gamma) avg + gamma input,
// where input is the image passed in. Iterates are clamped to [-1, 1].
// `checkpoints` lists cumulative iteration counts to record.
GridPureResult gridpure(const Image& x, const PurifyConfig& cfg, const NoisePredictor& model,
                        const NoiseSchedule& sched, std::span<const int> checkpoints = {});

}  // namespace antipure
