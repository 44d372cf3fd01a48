#include "antipure/kernels.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "antipure/dct.hpp"

namespace antipure::kernels {

namespace {

// Valid output range [lo, hi) along one axis for kernel tap offset `off` (= k - pad).
inline void valid_range(std::ptrdiff_t n, std::ptrdiff_t off, std::ptrdiff_t& lo, std::ptrdiff_t& hi) {
  lo = off < 0 ? -off : 0;
  hi = off > 0 ? n - off : n;
}

}  // namespace

void conv2d_forward(const ConvDims& d, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out) {
  const auto H = static_cast<std::ptrdiff_t>(d.height);
  const auto W = static_cast<std::ptrdiff_t>(d.width);
  const auto K = static_cast<std::ptrdiff_t>(d.kernel);
  const auto P = K / 2;
  const auto Ci = static_cast<std::ptrdiff_t>(d.in_channels);
  const auto Co = static_cast<std::ptrdiff_t>(d.out_channels);
  const double* ip = in.data();
  const double* wp = weight.data();
  double* op = out.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t co = 0; co < Co; ++co) {
    double* o = op + co * H * W;
    const double b = bias.empty() ? 0.0 : bias[co];
    for (std::ptrdiff_t i = 0; i < H * W; ++i) o[i] = b;
    for (std::ptrdiff_t ci = 0; ci < Ci; ++ci) {
      const double* src = ip + ci * H * W;
      for (std::ptrdiff_t ky = 0; ky < K; ++ky) {
        std::ptrdiff_t y0, y1;
        valid_range(H, ky - P, y0, y1);
        for (std::ptrdiff_t kx = 0; kx < K; ++kx) {
          std::ptrdiff_t x0, x1;
          valid_range(W, kx - P, x0, x1);
          const double w = wp[((co * Ci + ci) * K + ky) * K + kx];
          for (std::ptrdiff_t y = y0; y < y1; ++y) {
            double* orow = o + y * W;
            const double* srow = src + (y + ky - P) * W + (kx - P);
            for (std::ptrdiff_t x = x0; x < x1; ++x) orow[x] += w * srow[x];
          }
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvDims& d, std::span<const double> grad_out,
                           std::span<const double> weight, std::span<double> grad_in) {
  const auto H = static_cast<std::ptrdiff_t>(d.height);
  const auto W = static_cast<std::ptrdiff_t>(d.width);
  const auto K = static_cast<std::ptrdiff_t>(d.kernel);
  const auto P = K / 2;
  const auto Ci = static_cast<std::ptrdiff_t>(d.in_channels);
  const auto Co = static_cast<std::ptrdiff_t>(d.out_channels);
  const double* gp = grad_out.data();
  const double* wp = weight.data();
  double* gip = grad_in.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ci = 0; ci < Ci; ++ci) {
    double* gi = gip + ci * H * W;
    for (std::ptrdiff_t co = 0; co < Co; ++co) {
      const double* g = gp + co * H * W;
      for (std::ptrdiff_t ky = 0; ky < K; ++ky) {
        std::ptrdiff_t y0, y1;
        valid_range(H, ky - P, y0, y1);
        for (std::ptrdiff_t kx = 0; kx < K; ++kx) {
          std::ptrdiff_t x0, x1;
          valid_range(W, kx - P, x0, x1);
          const double w = wp[((co * Ci + ci) * K + ky) * K + kx];
          for (std::ptrdiff_t y = y0; y < y1; ++y) {
            const double* grow = g + y * W;
            double* dst = gi + (y + ky - P) * W + (kx - P);
            for (std::ptrdiff_t x = x0; x < x1; ++x) dst[x] += w * grow[x];
          }
        }
      }
    }
  }
}

void conv2d_backward_weight(const ConvDims& d, std::span<const double> grad_out,
                            std::span<const double> in, std::span<double> grad_w,
                            std::span<double> grad_b) {
  const auto H = static_cast<std::ptrdiff_t>(d.height);
  const auto W = static_cast<std::ptrdiff_t>(d.width);
  const auto K = static_cast<std::ptrdiff_t>(d.kernel);
  const auto P = K / 2;
  const auto Ci = static_cast<std::ptrdiff_t>(d.in_channels);
  const auto Co = static_cast<std::ptrdiff_t>(d.out_channels);
  const double* gp = grad_out.data();
  const double* ip = in.data();
  double* gwp = grad_w.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t co = 0; co < Co; ++co) {
    const double* g = gp + co * H * W;
    if (!grad_b.empty()) {
      double s = 0.0;
      for (std::ptrdiff_t i = 0; i < H * W; ++i) s += g[i];
      grad_b[co] += s;
    }
    for (std::ptrdiff_t ci = 0; ci < Ci; ++ci) {
      const double* src = ip + ci * H * W;
      for (std::ptrdiff_t ky = 0; ky < K; ++ky) {
        std::ptrdiff_t y0, y1;
        valid_range(H, ky - P, y0, y1);
        for (std::ptrdiff_t kx = 0; kx < K; ++kx) {
          std::ptrdiff_t x0, x1;
          valid_range(W, kx - P, x0, x1);
          double s = 0.0;
          for (std::ptrdiff_t y = y0; y < y1; ++y) {
            const double* grow = g + y * W;
            const double* srow = src + (y + ky - P) * W + (kx - P);
            for (std::ptrdiff_t x = x0; x < x1; ++x) s += grow[x] * srow[x];
          }
          gwp[((co * Ci + ci) * K + ky) * K + kx] += s;
        }
      }
    }
  }
}

void patch_dct(std::size_t channels, std::size_t height, std::size_t width, std::size_t s,
               bool inverse, std::span<const double> in, std::span<double> out) {
  const std::vector<double> basis = dct_basis(s);
  const auto py = static_cast<std::ptrdiff_t>(height / s);
  const auto px = static_cast<std::ptrdiff_t>(width / s);
  const auto total = static_cast<std::ptrdiff_t>(channels) * py * px;
  const auto S = static_cast<std::ptrdiff_t>(s);
  const auto Wd = static_cast<std::ptrdiff_t>(width);
  const auto Hd = static_cast<std::ptrdiff_t>(height);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < total; ++p) {
    const std::ptrdiff_t c = p / (py * px);
    const std::ptrdiff_t by = (p / px) % py;
    const std::ptrdiff_t bx = p % px;
    const std::ptrdiff_t base = c * Hd * Wd + by * S * Wd + bx * S;
    std::vector<double> tmp(s * s, 0.0);
    // forward: Y = B X B^T ; inverse: X = B^T Y B
    for (std::ptrdiff_t i = 0; i < S; ++i) {
      for (std::ptrdiff_t j = 0; j < S; ++j) {
        double acc = 0.0;
        for (std::ptrdiff_t k = 0; k < S; ++k) {
          const double b = inverse ? basis[k * S + i] : basis[i * S + k];
          acc += b * in[base + k * Wd + j];
        }
        tmp[i * S + j] = acc;
      }
    }
    for (std::ptrdiff_t i = 0; i < S; ++i) {
      for (std::ptrdiff_t j = 0; j < S; ++j) {
        double acc = 0.0;
        for (std::ptrdiff_t k = 0; k < S; ++k) {
          const double b = inverse ? basis[k * S + j] : basis[j * S + k];
          acc += tmp[i * S + k] * b;
        }
        out[base + i * Wd + j] = acc;
      }
    }
  }
}

namespace reference {

void conv2d_forward(const ConvDims& d, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out) {
  const auto H = static_cast<std::ptrdiff_t>(d.height);
  const auto W = static_cast<std::ptrdiff_t>(d.width);
  const auto K = static_cast<std::ptrdiff_t>(d.kernel);
  const auto P = K / 2;
  const auto Ci = static_cast<std::ptrdiff_t>(d.in_channels);
  const auto Co = static_cast<std::ptrdiff_t>(d.out_channels);
  for (std::ptrdiff_t co = 0; co < Co; ++co) {
    for (std::ptrdiff_t y = 0; y < H; ++y) {
      for (std::ptrdiff_t x = 0; x < W; ++x) {
        double acc = bias.empty() ? 0.0 : bias[co];
        for (std::ptrdiff_t ci = 0; ci < Ci; ++ci) {
          for (std::ptrdiff_t ky = 0; ky < K; ++ky) {
            for (std::ptrdiff_t kx = 0; kx < K; ++kx) {
              const std::ptrdiff_t sy = y + ky - P;
              const std::ptrdiff_t sx = x + kx - P;
              if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
              acc += weight[((co * Ci + ci) * K + ky) * K + kx] * in[(ci * H + sy) * W + sx];
            }
          }
        }
        out[(co * H + y) * W + x] = acc;
      }
    }
  }
}

void conv2d_backward_input(const ConvDims& d, std::span<const double> grad_out,
                           std::span<const double> weight, std::span<double> grad_in) {
  const auto H = static_cast<std::ptrdiff_t>(d.height);
  const auto W = static_cast<std::ptrdiff_t>(d.width);
  const auto K = static_cast<std::ptrdiff_t>(d.kernel);
  const auto P = K / 2;
  const auto Ci = static_cast<std::ptrdiff_t>(d.in_channels);
  const auto Co = static_cast<std::ptrdiff_t>(d.out_channels);
  // Gather form: each input pixel collects from the outputs it fed.
  for (std::ptrdiff_t ci = 0; ci < Ci; ++ci) {
    for (std::ptrdiff_t sy = 0; sy < H; ++sy) {
      for (std::ptrdiff_t sx = 0; sx < W; ++sx) {
        double acc = 0.0;
        for (std::ptrdiff_t co = 0; co < Co; ++co) {
          for (std::ptrdiff_t ky = 0; ky < K; ++ky) {
            for (std::ptrdiff_t kx = 0; kx < K; ++kx) {
              const std::ptrdiff_t y = sy - ky + P;
              const std::ptrdiff_t x = sx - kx + P;
              if (y < 0 || y >= H || x < 0 || x >= W) continue;
              acc += weight[((co * Ci + ci) * K + ky) * K + kx] * grad_out[(co * H + y) * W + x];
            }
          }
        }
        grad_in[(ci * H + sy) * W + sx] += acc;
      }
    }
  }
}

void conv2d_backward_weight(const ConvDims& d, std::span<const double> grad_out,
                            std::span<const double> in, std::span<double> grad_w,
                            std::span<double> grad_b) {
  const auto H = static_cast<std::ptrdiff_t>(d.height);
  const auto W = static_cast<std::ptrdiff_t>(d.width);
  const auto K = static_cast<std::ptrdiff_t>(d.kernel);
  const auto P = K / 2;
  const auto Ci = static_cast<std::ptrdiff_t>(d.in_channels);
  const auto Co = static_cast<std::ptrdiff_t>(d.out_channels);
  for (std::ptrdiff_t co = 0; co < Co; ++co) {
    for (std::ptrdiff_t y = 0; y < H; ++y) {
      for (std::ptrdiff_t x = 0; x < W; ++x) {
        const double g = grad_out[(co * H + y) * W + x];
        if (!grad_b.empty()) grad_b[co] += g;
        for (std::ptrdiff_t ci = 0; ci < Ci; ++ci) {
          for (std::ptrdiff_t ky = 0; ky < K; ++ky) {
            for (std::ptrdiff_t kx = 0; kx < K; ++kx) {
              const std::ptrdiff_t sy = y + ky - P;
              const std::ptrdiff_t sx = x + kx - P;
              if (sy < 0 || sy >= H || sx < 0 || sx >= W) continue;
              grad_w[((co * Ci + ci) * K + ky) * K + kx] += g * in[(ci * H + sy) * W + sx];
            }
          }
        }
      }
    }
  }
}

void patch_dct(std::size_t channels, std::size_t height, std::size_t width, std::size_t s,
               bool inverse, std::span<const double> in, std::span<double> out) {
  // Direct O(s^4) cosine sums per patch.
  const double pi = std::numbers::pi;
  auto norm = [s](std::size_t k) {
    return k == 0 ? std::sqrt(1.0 / static_cast<double>(s)) : std::sqrt(2.0 / static_cast<double>(s));
  };
  auto cosv = [&](std::size_t n, std::size_t k) {
    return std::cos(pi * static_cast<double>((2 * n + 1) * k) / (2.0 * static_cast<double>(s)));
  };
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t by = 0; by < height / s; ++by) {
      for (std::size_t bx = 0; bx < width / s; ++bx) {
        const std::size_t base = c * height * width + by * s * width + bx * s;
        for (std::size_t u = 0; u < s; ++u) {
          for (std::size_t v = 0; v < s; ++v) {
            double acc = 0.0;
            for (std::size_t m = 0; m < s; ++m) {
              for (std::size_t n = 0; n < s; ++n) {
                const double x = in[base + m * width + n];
                if (inverse) {
                  // out at spatial (u, v) from coefficients (m, n)
                  acc += norm(m) * norm(n) * cosv(u, m) * cosv(v, n) * x;
                } else {
                  acc += norm(u) * norm(v) * cosv(m, u) * cosv(n, v) * x;
                }
              }
            }
            out[base + u * width + v] = acc;
          }
        }
      }
    }
  }
}

}  // namespace reference

}  // namespace antipure::kernels
