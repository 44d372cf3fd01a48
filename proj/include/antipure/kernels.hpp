#pragma once

#include <cstddef>
#include <span>

// Raw compute kernels behind the differentiable ops. The default versions are
// OpenMP-parallel over an outer independent axis (each output element is owned
// by exactly one thread, so results do not depend on the thread count). The
// `reference` namespace keeps straightforward serial loops used as test oracles
// and as the baseline in bench/.

namespace antipure::kernels {

struct ConvDims {
  std::size_t in_channels;
  std::size_t out_channels;
  std::size_t height;
  std::size_t width;
  std::size_t kernel;  // odd; zero padding of kernel/2 keeps the spatial size
};

// out[co,y,x] = bias[co] + sum_{ci,ky,kx} w[co,ci,ky,kx] * in[ci, y+ky-p, x+kx-p]
void conv2d_forward(const ConvDims& d, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out);
// grad_in += W^T * grad_out
void conv2d_backward_input(const ConvDims& d, std::span<const double> grad_out,
                           std::span<const double> weight, std::span<double> grad_in);
// grad_w += grad_out (x) in, grad_b += sum over pixels of grad_out
void conv2d_backward_weight(const ConvDims& d, std::span<const double> grad_out,
                            std::span<const double> in, std::span<double> grad_w,
                            std::span<double> grad_b);

// Orthonormal DCT-II applied independently to every non-overlapping s x s patch
// of each channel of a (C, H, W) image. `inverse` applies the exact inverse.
void patch_dct(std::size_t channels, std::size_t height, std::size_t width, std::size_t s,
               bool inverse, std::span<const double> in, std::span<double> out);

namespace reference {

void conv2d_forward(const ConvDims& d, std::span<const double> in, std::span<const double> weight,
                    std::span<const double> bias, std::span<double> out);
void conv2d_backward_input(const ConvDims& d, std::span<const double> grad_out,
                           std::span<const double> weight, std::span<double> grad_in);
void conv2d_backward_weight(const ConvDims& d, std::span<const double> grad_out,
                            std::span<const double> in, std::span<double> grad_w,
                            std::span<double> grad_b);
void patch_dct(std::size_t channels, std::size_t height, std::size_t width, std::size_t s,
               bool inverse, std::span<const double> in, std::span<double> out);

}  // namespace reference

}  // namespace antipure::kernels
