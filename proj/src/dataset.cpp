#include "antipure/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "antipure/rng.hpp"

namespace antipure {

namespace {

struct Ellipse {
  double cx, cy, rx, ry, cos_a, sin_a, value;
};

constexpr int kSuper = 4;  // supersamples per axis for edge anti-aliasing

}  // namespace

Image procedural_image(std::size_t channels, std::size_t size, std::uint64_t seed) {
  Rng rng(seed);
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * uniform01(rng); };
  const double n = static_cast<double>(size);

  Image img(Shape{channels, size, size});
  for (std::size_t c = 0; c < channels; ++c) {
    const double angle = u(0.0, 2.0 * std::numbers::pi);
    const double slope = u(-0.6, 0.6);
    const double offset = u(-0.5, 0.5);
    std::vector<Ellipse> shapes(static_cast<std::size_t>(uniform_int(rng, 1, 3)));
    for (Ellipse& e : shapes) {
      const double a = u(0.0, std::numbers::pi);
      e = {u(0.2, 0.8) * n, u(0.2, 0.8) * n, u(0.12, 0.35) * n, u(0.12, 0.35) * n,
           std::cos(a), std::sin(a), u(-0.9, 0.9)};
    }
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        double acc = 0.0;
        for (int sy = 0; sy < kSuper; ++sy) {
          for (int sx = 0; sx < kSuper; ++sx) {
            const double px = static_cast<double>(x) + (sx + 0.5) / kSuper;
            const double py = static_cast<double>(y) + (sy + 0.5) / kSuper;
            const double gx = (px / n - 0.5) * std::cos(angle) + (py / n - 0.5) * std::sin(angle);
            double v = offset + slope * gx;
            // Later ellipses paint over earlier ones.
            for (const Ellipse& e : shapes) {
              const double dx = px - e.cx;
              const double dy = py - e.cy;
              const double lx = (dx * e.cos_a + dy * e.sin_a) / e.rx;
              const double ly = (-dx * e.sin_a + dy * e.cos_a) / e.ry;
              if (lx * lx + ly * ly <= 1.0) v = e.value;
            }
            acc += v;
          }
        }
        img.at(c, y, x) = std::clamp(acc / (kSuper * kSuper), -1.0, 1.0);
      }
    }
  }
  return img;
}

ImageSet procedural_dataset(std::size_t count, std::size_t channels, std::size_t size, std::uint64_t seed) {
  ImageSet set;
  set.reserve(count);
  for (std::size_t i = 0; i < count; ++i) set.push_back(procedural_image(channels, size, derive_seed(seed, {i})));
  return set;
}

}  // namespace antipure
