#include "antipure/purification.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "antipure/rng.hpp"

namespace antipure {

void PurifyConfig::validate(const NoiseSchedule& sched) const {
  sched.check_timestep(t_p);
  if (iterations < 0 || rounds < 0) throw std::invalid_argument("purification iterations and rounds must be >= 0");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("purification gamma must lie in [0, 1]");
  if (grid_size == 0 || grid_stride == 0 || grid_stride > grid_size) {
    throw std::invalid_argument("purification grid needs 0 < grid_stride <= grid_size");
  }
}

Image diffpure(const Image& x, int t_p, const NoisePredictor& model, const NoiseSchedule& sched,
               std::uint64_t seed, double noise_scale) {
  sched.check_timestep(t_p);
  const Image eps = randn(x.shape(), derive_seed(seed, {0}));
  Image out = reverse(model, diffuse(x, t_p, eps, sched), t_p, 0, sched, derive_seed(seed, {1}), noise_scale);
  for (double& v : out.data()) v = std::clamp(v, -1.0, 1.0);
  return out;
}

std::vector<std::size_t> tile_origins(std::size_t extent, std::size_t size, std::size_t stride) {
  if (size > extent) {
    throw std::invalid_argument("grid size " + std::to_string(size) + " larger than image side " +
                                std::to_string(extent));
  }
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p + size <= extent; p += stride) out.push_back(p);
  if (out.back() + size < extent) out.push_back(extent - size);
  return out;
}

std::uint64_t tile_seed(const PurifyConfig& cfg, int round, int iteration, std::size_t tile) {
  return derive_seed(cfg.seed, {static_cast<std::uint64_t>(round), static_cast<std::uint64_t>(iteration), tile});
}

GridPureResult gridpure(const Image& x, const PurifyConfig& cfg, const NoisePredictor& model,
                        const NoiseSchedule& sched, std::span<const int> checkpoints) {
  cfg.validate(sched);
  if (x.rank() != 3) throw std::invalid_argument("gridpure expects a (C,H,W) image, got " + shape_str(x.shape()));
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::vector<std::size_t> ys = tile_origins(H, cfg.grid_size, cfg.grid_stride);
  const std::vector<std::size_t> xs = tile_origins(W, cfg.grid_size, cfg.grid_stride);
  const std::size_t G = cfg.grid_size;
  const std::size_t n_tiles = ys.size() * xs.size();

  Tensor coverage(Shape{1, H, W});
  for (std::size_t oy : ys)
    for (std::size_t ox : xs)
      for (std::size_t y = 0; y < G; ++y)
        for (std::size_t xx = 0; xx < G; ++xx) coverage.at(0, oy + y, ox + xx) += 1.0;

  GridPureResult result;
  Image cur = x;
  int done = 0;
  for (int r = 0; r < cfg.rounds; ++r) {
    for (int it = 0; it < cfg.iterations; ++it) {
      std::vector<Image> purified(n_tiles);
      const auto n = static_cast<std::ptrdiff_t>(n_tiles);
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t k = 0; k < n; ++k) {
        const std::size_t oy = ys[static_cast<std::size_t>(k) / xs.size()];
        const std::size_t ox = xs[static_cast<std::size_t>(k) % xs.size()];
        Image tile(Shape{C, G, G});
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t y = 0; y < G; ++y)
            for (std::size_t xx = 0; xx < G; ++xx) tile.at(c, y, xx) = cur.at(c, oy + y, ox + xx);
        purified[static_cast<std::size_t>(k)] =
            diffpure(tile, cfg.t_p, model, sched, tile_seed(cfg, r, it, static_cast<std::size_t>(k)), cfg.noise_scale);
      }
      Image avg(x.shape());
      for (std::size_t k = 0; k < n_tiles; ++k) {
        const std::size_t oy = ys[k / xs.size()];
        const std::size_t ox = xs[k % xs.size()];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t y = 0; y < G; ++y)
            for (std::size_t xx = 0; xx < G; ++xx) avg.at(c, oy + y, ox + xx) += purified[k].at(c, y, xx);
      }
      for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t y = 0; y < H; ++y) {
          for (std::size_t xx = 0; xx < W; ++xx) {
            const double a = avg.at(c, y, xx) / coverage.at(0, y, xx);
            cur.at(c, y, xx) = std::clamp((1.0 - cfg.gamma) * a + cfg.gamma * x.at(c, y, xx), -1.0, 1.0);
          }
        }
      }
      ++done;
      if (std::find(checkpoints.begin(), checkpoints.end(), done) != checkpoints.end()) {
        result.checkpoints.emplace_back(done, cur);
      }
    }
  }
  result.output = std::move(cur);
  return result;
}

}  // namespace antipure
