#include "antipure/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "antipure/dct.hpp"
#include "antipure/kernels.hpp"

namespace antipure::ops {

namespace {

Tape& tape_of(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw std::invalid_argument("operands live on different tapes");
  return *a.tape;
}

inline double sigmoid_scalar(double v) {
  return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

}  // namespace

Var add(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out += b.value();
  return tape.record(std::move(out), {a.id, b.id}, [](const Tensor& g, GradSink& s) {
    if (s.wants(0)) s.grad(0) += g;
    if (s.wants(1)) s.grad(1) += g;
  });
}

Var sub(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return tape.record(std::move(out), {a.id, b.id}, [](const Tensor& g, GradSink& s) {
    if (s.wants(0)) s.grad(0) += g;
    if (s.wants(1)) {
      Tensor& gb = s.grad(1);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return tape.record(std::move(out), {a.id, b.id}, [a, b](const Tensor& g, GradSink& s) {
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    if (s.wants(0)) {
      Tensor& ga = s.grad(0);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (s.wants(1)) {
      Tensor& gb = s.grad(1);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double k) {
  Tensor out = a.value();
  out *= k;
  return a.tape->record(std::move(out), {a.id}, [k](const Tensor& g, GradSink& s) {
    Tensor& ga = s.grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += k * g[i];
  });
}

Var add_scalar(Var a, double k) {
  Tensor out = a.value();
  for (double& v : out.data()) v += k;
  return a.tape->record(std::move(out), {a.id}, [](const Tensor& g, GradSink& s) { s.grad(0) += g; });
}

Var mul_const(Var a, const Tensor& mask) {
  require_same_shape(a.value(), mask, "mul_const");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return a.tape->record(std::move(out), {a.id}, [mask](const Tensor& g, GradSink& s) {
    Tensor& ga = s.grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

Var square(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v *= v;
  return a.tape->record(std::move(out), {a.id}, [a](const Tensor& g, GradSink& s) {
    const Tensor& av = a.value();
    Tensor& ga = s.grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += 2.0 * av[i] * g[i];
  });
}

Var exp(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = std::exp(v);
  const std::size_t self = a.tape->size();
  Tape* tape = a.tape;
  return tape->record(std::move(out), {a.id}, [tape, self](const Tensor& g, GradSink& s) {
    const Tensor& ev = tape->value(self);
    Tensor& ga = s.grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += ev[i] * g[i];
  });
}

Var sigmoid(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = sigmoid_scalar(v);
  const std::size_t self = a.tape->size();
  Tape* tape = a.tape;
  return tape->record(std::move(out), {a.id}, [tape, self](const Tensor& g, GradSink& s) {
    const Tensor& sv = tape->value(self);
    Tensor& ga = s.grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += sv[i] * (1.0 - sv[i]) * g[i];
  });
}

Var silu(Var a) {
  Tensor out = a.value();
  for (double& v : out.data()) v = v * sigmoid_scalar(v);
  return a.tape->record(std::move(out), {a.id}, [a](const Tensor& g, GradSink& s) {
    const Tensor& av = a.value();
    Tensor& ga = s.grad(0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double sg = sigmoid_scalar(av[i]);
      ga[i] += g[i] * sg * (1.0 + av[i] * (1.0 - sg));
    }
  });
}

Var sum(Var a) {
  double acc = 0.0;
  for (double v : a.value().data()) acc += v;
  return a.tape->record(Tensor::scalar(acc), {a.id}, [](const Tensor& g, GradSink& s) {
    Tensor& ga = s.grad(0);
    const double gv = g[0];
    for (double& v : ga.data()) v += gv;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  double acc = 0.0;
  for (double v : a.value().data()) acc += v;
  return a.tape->record(Tensor::scalar(acc / n), {a.id}, [n](const Tensor& g, GradSink& s) {
    Tensor& ga = s.grad(0);
    const double gv = g[0] / n;
    for (double& v : ga.data()) v += gv;
  });
}

Var conv2d(Var x, Var weight, Var bias) {
  Tape& tape = tape_of(x, weight);
  tape_of(x, bias);
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 3 || ws.size() != 4 || ws[1] != xs[0] || ws[2] != ws[3] || ws[2] % 2 == 0 ||
      bias.shape() != Shape{ws[0]}) {
    throw std::invalid_argument("conv2d: shape mismatch input " + shape_str(xs) + " weight " +
                                shape_str(ws) + " bias " + shape_str(bias.shape()));
  }
  const kernels::ConvDims d{xs[0], ws[0], xs[1], xs[2], ws[2]};
  Tensor out(Shape{d.out_channels, d.height, d.width});
  kernels::conv2d_forward(d, x.value().data(), weight.value().data(), bias.value().data(), out.data());
  return tape.record(std::move(out), {x.id, weight.id, bias.id}, [x, weight, d](const Tensor& g, GradSink& s) {
    if (s.wants(0)) kernels::conv2d_backward_input(d, g.data(), weight.value().data(), s.grad(0).data());
    if (s.wants(1) || s.wants(2)) {
      Tensor& gw = s.grad(1);
      Tensor& gb = s.grad(2);
      kernels::conv2d_backward_weight(d, g.data(), x.value().data(), gw.data(), gb.data());
    }
  });
}

Var linear(Var x, Var weight, Var bias) {
  Tape& tape = tape_of(x, weight);
  tape_of(x, bias);
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 1 || ws.size() != 2 || ws[1] != xs[0] || bias.shape() != Shape{ws[0]}) {
    throw std::invalid_argument("linear: shape mismatch input " + shape_str(xs) + " weight " +
                                shape_str(ws) + " bias " + shape_str(bias.shape()));
  }
  const std::size_t out_n = ws[0];
  const std::size_t in_n = ws[1];
  Tensor out(Shape{out_n});
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  for (std::size_t o = 0; o < out_n; ++o) {
    double acc = bv[o];
    for (std::size_t i = 0; i < in_n; ++i) acc += wv[o * in_n + i] * xv[i];
    out[o] = acc;
  }
  return tape.record(std::move(out), {x.id, weight.id, bias.id},
                     [x, weight, out_n, in_n](const Tensor& g, GradSink& s) {
                       const Tensor& xv = x.value();
                       const Tensor& wv = weight.value();
                       if (s.wants(0)) {
                         Tensor& gx = s.grad(0);
                         for (std::size_t o = 0; o < out_n; ++o)
                           for (std::size_t i = 0; i < in_n; ++i) gx[i] += wv[o * in_n + i] * g[o];
                       }
                       if (s.wants(1)) {
                         Tensor& gw = s.grad(1);
                         for (std::size_t o = 0; o < out_n; ++o)
                           for (std::size_t i = 0; i < in_n; ++i) gw[o * in_n + i] += g[o] * xv[i];
                       }
                       if (s.wants(2)) s.grad(2) += g;
                     });
}

Var add_channel_bias(Var x, Var v) {
  Tape& tape = tape_of(x, v);
  const Shape& xs = x.shape();
  if (xs.size() != 3 || v.shape() != Shape{xs[0]}) {
    throw std::invalid_argument("add_channel_bias: shape mismatch input " + shape_str(xs) + " bias " +
                                shape_str(v.shape()));
  }
  const std::size_t C = xs[0];
  const std::size_t plane = xs[1] * xs[2];
  Tensor out = x.value();
  const Tensor& vv = v.value();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] += vv[c];
  return tape.record(std::move(out), {x.id, v.id}, [C, plane](const Tensor& g, GradSink& s) {
    if (s.wants(0)) s.grad(0) += g;
    if (s.wants(1)) {
      Tensor& gv = s.grad(1);
      for (std::size_t c = 0; c < C; ++c) {
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i) acc += g[c * plane + i];
        gv[c] += acc;
      }
    }
  });
}

Var avg_pool2(Var x) {
  const Shape& xs = x.shape();
  if (xs.size() != 3 || xs[1] % 2 != 0 || xs[2] % 2 != 0) {
    throw std::invalid_argument("avg_pool2: expected (C,H,W) with even H,W, got " + shape_str(xs));
  }
  const std::size_t C = xs[0], H = xs[1], W = xs[2];
  Tensor out(Shape{C, H / 2, W / 2});
  const Tensor& xv = x.value();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H / 2; ++y)
      for (std::size_t xx = 0; xx < W / 2; ++xx)
        out.at(c, y, xx) = 0.25 * (xv.at(c, 2 * y, 2 * xx) + xv.at(c, 2 * y, 2 * xx + 1) +
                                   xv.at(c, 2 * y + 1, 2 * xx) + xv.at(c, 2 * y + 1, 2 * xx + 1));
  return x.tape->record(std::move(out), {x.id}, [C, H, W](const Tensor& g, GradSink& s) {
    Tensor& gx = s.grad(0);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t xx = 0; xx < W; ++xx) gx.at(c, y, xx) += 0.25 * g.at(c, y / 2, xx / 2);
  });
}

Var upsample2(Var x) {
  const Shape& xs = x.shape();
  if (xs.size() != 3) throw std::invalid_argument("upsample2: expected (C,H,W), got " + shape_str(xs));
  const std::size_t C = xs[0], H = xs[1], W = xs[2];
  Tensor out(Shape{C, 2 * H, 2 * W});
  const Tensor& xv = x.value();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < 2 * H; ++y)
      for (std::size_t xx = 0; xx < 2 * W; ++xx) out.at(c, y, xx) = xv.at(c, y / 2, xx / 2);
  return x.tape->record(std::move(out), {x.id}, [C, H, W](const Tensor& g, GradSink& s) {
    Tensor& gx = s.grad(0);
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < 2 * H; ++y)
        for (std::size_t xx = 0; xx < 2 * W; ++xx) gx.at(c, y / 2, xx / 2) += g.at(c, y, xx);
  });
}

Var concat_channels(Var a, Var b) {
  Tape& tape = tape_of(a, b);
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() != 3 || bs.size() != 3 || as[1] != bs[1] || as[2] != bs[2]) {
    throw std::invalid_argument("concat_channels: shape mismatch " + shape_str(as) + " vs " + shape_str(bs));
  }
  const std::size_t na = a.value().size();
  std::vector<double> data(a.value().storage());
  data.insert(data.end(), b.value().storage().begin(), b.value().storage().end());
  Tensor out(Shape{as[0] + bs[0], as[1], as[2]}, std::move(data));
  return tape.record(std::move(out), {a.id, b.id}, [na](const Tensor& g, GradSink& s) {
    if (s.wants(0)) {
      Tensor& ga = s.grad(0);
      for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
    }
    if (s.wants(1)) {
      Tensor& gb = s.grad(1);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
    }
  });
}

Var patch_dct(Var x, std::size_t s) {
  check_patch_geometry(x.shape(), s);
  const std::size_t C = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
  Tensor out(x.shape());
  kernels::patch_dct(C, H, W, s, false, x.value().data(), out.data());
  // Orthonormal transform: the adjoint is the inverse.
  return x.tape->record(std::move(out), {x.id}, [C, H, W, s](const Tensor& g, GradSink& sink) {
    Tensor back(g.shape());
    kernels::patch_dct(C, H, W, s, true, g.data(), back.data());
    sink.grad(0) += back;
  });
}

}  // namespace antipure::ops

namespace antipure {

Tensor timestep_embed(int t, std::size_t dim) {
  if (dim < 2 || dim % 2 != 0) {
    throw std::invalid_argument("timestep embedding width must be even, got " + std::to_string(dim));
  }
  const std::size_t half = dim / 2;
  Tensor out(Shape{dim});
  for (std::size_t i = 0; i < half; ++i) {
    const double w = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(half));
    out[i] = std::sin(static_cast<double>(t) * w);
    out[half + i] = std::cos(static_cast<double>(t) * w);
  }
  return out;
}

}  // namespace antipure
