// Times the OpenMP kernels against the serial reference loops on the shapes the
// denoiser actually uses, and checks that both produce the same numbers.
//
//   bench_kernels [repeats]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "antipure/kernels.hpp"

namespace k = antipure::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// best-of-N wall time in microseconds
double time_us(int repeats, const std::function<void()>& fn) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::micro>(t1 - t0).count());
  }
  return best;
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

void row(const std::string& name, double par, double ref, double diff) {
  std::printf("%-34s %12.1f %12.1f %8.2fx %10.3g\n", name.c_str(), par, ref, ref / par, diff);
}

void bench_conv(const k::ConvDims& d, int repeats, std::mt19937_64& rng) {
  const std::size_t in_n = d.in_channels * d.height * d.width;
  const std::size_t out_n = d.out_channels * d.height * d.width;
  const std::size_t w_n = d.out_channels * d.in_channels * d.kernel * d.kernel;
  const auto in = random_vec(in_n, rng), w = random_vec(w_n, rng), b = random_vec(d.out_channels, rng);
  const auto gout = random_vec(out_n, rng);
  const std::string tag = std::to_string(d.in_channels) + "->" + std::to_string(d.out_channels) + " @" +
                          std::to_string(d.height) + "x" + std::to_string(d.width);

  std::vector<double> o1(out_n), o2(out_n);
  const double pf = time_us(repeats, [&] { k::conv2d_forward(d, in, w, b, o1); });
  const double rf = time_us(repeats, [&] { k::reference::conv2d_forward(d, in, w, b, o2); });
  row("conv fwd " + tag, pf, rf, max_diff(o1, o2));

  std::vector<double> g1(in_n), g2(in_n);
  const double pi = time_us(repeats, [&] {
    std::fill(g1.begin(), g1.end(), 0.0);
    k::conv2d_backward_input(d, gout, w, g1);
  });
  const double ri = time_us(repeats, [&] {
    std::fill(g2.begin(), g2.end(), 0.0);
    k::reference::conv2d_backward_input(d, gout, w, g2);
  });
  row("conv bwd-input " + tag, pi, ri, max_diff(g1, g2));

  std::vector<double> w1(w_n), w2(w_n), b1(d.out_channels), b2(d.out_channels);
  const double pw = time_us(repeats, [&] {
    std::fill(w1.begin(), w1.end(), 0.0);
    std::fill(b1.begin(), b1.end(), 0.0);
    k::conv2d_backward_weight(d, gout, in, w1, b1);
  });
  const double rw = time_us(repeats, [&] {
    std::fill(w2.begin(), w2.end(), 0.0);
    std::fill(b2.begin(), b2.end(), 0.0);
    k::reference::conv2d_backward_weight(d, gout, in, w2, b2);
  });
  row("conv bwd-weight " + tag, pw, rw, std::max(max_diff(w1, w2), max_diff(b1, b2)));
}

void bench_dct(std::size_t c, std::size_t n, std::size_t s, int repeats, std::mt19937_64& rng) {
  const auto in = random_vec(c * n * n, rng);
  std::vector<double> o1(in.size()), o2(in.size());
  const double p = time_us(repeats, [&] { k::patch_dct(c, n, n, s, false, in, o1); });
  const double r = time_us(repeats, [&] { k::reference::patch_dct(c, n, n, s, false, in, o2); });
  row("patch_dct " + std::to_string(c) + "x" + std::to_string(n) + "^2 s=" + std::to_string(s), p, r,
      max_diff(o1, o2));
}

}  // namespace

int main(int argc, char** argv) {
  const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 20;
#ifdef _OPENMP
  std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
  std::printf("openmp: not enabled\n");
#endif
  std::printf("%-34s %12s %12s %9s %10s\n", "kernel", "omp us", "serial us", "speedup", "max diff");
  std::mt19937_64 rng(7);
  bench_conv({1, 8, 32, 32, 3}, repeats, rng);
  bench_conv({8, 8, 32, 32, 3}, repeats, rng);
  bench_conv({16, 16, 8, 8, 3}, repeats, rng);
  bench_conv({32, 16, 16, 16, 3}, repeats, rng);
  bench_conv({16, 32, 64, 64, 3}, std::max(1, repeats / 4), rng);
  bench_dct(1, 32, 8, repeats, rng);
  bench_dct(3, 256, 8, std::max(1, repeats / 4), rng);
  bench_dct(1, 256, 16, std::max(1, repeats / 4), rng);
  return 0;
}
