#pragma once

#include <cstddef>

#include "antipure/tape.hpp"
#include "antipure/tensor.hpp"

// Differentiable primitives. Each records its value and adjoint on the tape of
// its first operand; all operands must live on the same tape.
namespace antipure::ops {

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
// a * mask with a constant mask of the same shape.
Var mul_const(Var a, const Tensor& mask);

Var square(Var a);
Var exp(Var a);
Var sigmoid(Var a);
Var silu(Var a);

Var sum(Var a);
Var mean(Var a);

// x (Ci,H,W), weight (Co,Ci,k,k), bias (Co) -> (Co,H,W); stride 1, zero padding k/2.
Var conv2d(Var x, Var weight, Var bias);
// x (In), weight (Out,In), bias (Out) -> (Out)
Var linear(Var x, Var weight, Var bias);
// x (C,H,W) + v[c] broadcast over each channel plane.
Var add_channel_bias(Var x, Var v);
Var avg_pool2(Var x);
Var upsample2(Var x);
Var concat_channels(Var a, Var b);

// Orthonormal DCT-II on non-overlapping s x s patches of each channel.
Var patch_dct(Var x, std::size_t s);

}  // namespace antipure::ops

namespace antipure {

// Sinusoidal embedding: [sin(t w_0..w_{h-1}), cos(t w_0..w_{h-1})] with
// w_i = 10000^{-i/h}, h = dim/2. dim must be even.
Tensor timestep_embed(int t, std::size_t dim);

}  // namespace antipure
