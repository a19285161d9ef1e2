// Copyright 2026 The pstyle Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "pstyle/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pstyle/error.hpp"
#include "pstyle/kernels.hpp"

namespace pstyle {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + " expects a rank-" +
                     std::to_string(rank) + " tensor, got " +
                     shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + " shape mismatch: " +
                     shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

std::size_t reflect_index(std::ptrdiff_t p, std::size_t n) {
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  if (p < 0) p = -p;
  if (p > last) p = 2 * last - p;
  return static_cast<std::size_t>(p);
}

// Elementwise unary op with derivative computed from (input, output).
template <typename Fwd, typename Deriv>
Var unary(Var x, Fwd fwd, Deriv deriv) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) out[i] = fwd(in[i]);
  return x.graph().record(std::move(out), {x}, [deriv](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& in = ctx.input(0);
    const Tensor& out = ctx.output();
    const Tensor& go = ctx.grad_output();
    for (std::size_t i = 0; i < in.numel(); ++i) {
      (*gx)[i] += go[i] * deriv(in[i], out[i]);
    }
  });
}

}  // namespace

Var pad2d(Var x, std::size_t pad, PadMode mode) {
  const Tensor& in = x.value();
  require_rank(in, 4, "pad2d");
  if (pad == 0) return x;
  const std::size_t n = in.dim(0), c = in.dim(1), h = in.dim(2), w = in.dim(3);
  if (mode == PadMode::kReflect && (pad >= h || pad >= w)) {
    throw ShapeError("reflect padding " + std::to_string(pad) +
                     " needs spatial dims larger than the pad, got " +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  const std::size_t ph = h + 2 * pad, pw = w + 2 * pad;
  // Source index in the unpadded plane for every padded position, or -1.
  auto source = [=](std::size_t py, std::size_t px) -> std::ptrdiff_t {
    const auto sy = static_cast<std::ptrdiff_t>(py) - static_cast<std::ptrdiff_t>(pad);
    const auto sx = static_cast<std::ptrdiff_t>(px) - static_cast<std::ptrdiff_t>(pad);
    if (mode == PadMode::kZero) {
      if (sy < 0 || sx < 0 || sy >= static_cast<std::ptrdiff_t>(h) ||
          sx >= static_cast<std::ptrdiff_t>(w)) {
        return -1;
      }
      return sy * static_cast<std::ptrdiff_t>(w) + sx;
    }
    return static_cast<std::ptrdiff_t>(reflect_index(sy, h) * w +
                                       reflect_index(sx, w));
  };

  Tensor out({n, c, ph, pw});
  for (std::size_t plane = 0; plane < n * c; ++plane) {
    const double* src = in.data().data() + plane * h * w;
    double* dst = out.data().data() + plane * ph * pw;
    for (std::size_t py = 0; py < ph; ++py)
      for (std::size_t px = 0; px < pw; ++px) {
        const auto s = source(py, px);
        dst[py * pw + px] = s < 0 ? 0.0 : src[s];
      }
  }
  return x.graph().record(std::move(out), {x}, [=](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& go = ctx.grad_output();
    for (std::size_t plane = 0; plane < n * c; ++plane) {
      const double* g = go.data().data() + plane * ph * pw;
      double* dst = gx->data().data() + plane * h * w;
      for (std::size_t py = 0; py < ph; ++py)
        for (std::size_t px = 0; px < pw; ++px) {
          const auto s = source(py, px);
          if (s >= 0) dst[s] += g[py * pw + px];
        }
    }
  });
}

Var conv2d(Var x, Var kernel, Var bias, const ConvOptions& opts) {
  const Tensor& in = x.value();
  const Tensor& k = kernel.value();
  const Tensor& b = bias.value();
  require_rank(in, 4, "conv2d input");
  require_rank(k, 4, "conv2d kernel");
  require_rank(b, 1, "conv2d bias");
  if (opts.stride < 1) throw ShapeError("conv2d stride must be >= 1");
  if (k.dim(1) != in.dim(1)) {
    throw ShapeError("conv2d channel mismatch: input has " +
                     std::to_string(in.dim(1)) + " channels, kernel expects " +
                     std::to_string(k.dim(1)));
  }
  if (b.dim(0) != k.dim(0)) {
    throw ShapeError("conv2d bias has " + std::to_string(b.dim(0)) +
                     " entries for " + std::to_string(k.dim(0)) +
                     " output channels");
  }
  const std::size_t ph = in.dim(2) + 2 * opts.pad;
  const std::size_t pw = in.dim(3) + 2 * opts.pad;
  if (k.dim(2) > ph || k.dim(3) > pw) {
    throw ShapeError("conv2d kernel " + std::to_string(k.dim(2)) + "x" +
                     std::to_string(k.dim(3)) + " exceeds padded input " +
                     std::to_string(ph) + "x" + std::to_string(pw));
  }
  if ((ph - k.dim(2)) % opts.stride != 0 || (pw - k.dim(3)) % opts.stride != 0) {
    throw ShapeError("conv2d output size is not exact: padded input " +
                     std::to_string(ph) + "x" + std::to_string(pw) +
                     ", kernel " + std::to_string(k.dim(2)) + "x" +
                     std::to_string(k.dim(3)) + ", stride " +
                     std::to_string(opts.stride));
  }

  Var padded = pad2d(x, opts.pad, opts.mode);
  kernels::ConvGeometry geom;
  geom.batch = in.dim(0);
  geom.in_channels = in.dim(1);
  geom.in_h = ph;
  geom.in_w = pw;
  geom.out_channels = k.dim(0);
  geom.kernel_h = k.dim(2);
  geom.kernel_w = k.dim(3);
  geom.stride = opts.stride;

  Tensor out({geom.batch, geom.out_channels, geom.out_h(), geom.out_w()});
  kernels::conv2d_forward(geom, padded.value().data(), k.data(), b.data(),
                          out.data());
  return x.graph().record(
      std::move(out), {padded, kernel, bias}, [geom](const BackwardContext& ctx) {
        const Tensor& go = ctx.grad_output();
        if (Tensor* gx = ctx.input_grad(0)) {
          Tensor tmp(gx->shape());
          kernels::conv2d_backward_input(geom, go.data(), ctx.input(1).data(),
                                         tmp.data());
          *gx += tmp;
        }
        if (Tensor* gk = ctx.input_grad(1)) {
          Tensor tmp(gk->shape());
          kernels::conv2d_backward_kernel(geom, go.data(), ctx.input(0).data(),
                                          tmp.data());
          *gk += tmp;
        }
        if (Tensor* gb = ctx.input_grad(2)) {
          Tensor tmp(gb->shape());
          kernels::conv2d_backward_bias(geom, go.data(), tmp.data());
          *gb += tmp;
        }
      });
}

Var relu(Var x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Var instance_norm(Var x, double eps) {
  const Tensor& in = x.value();
  require_rank(in, 4, "instance_norm");
  const std::size_t planes = in.dim(0) * in.dim(1);
  const std::size_t hw = in.dim(2) * in.dim(3);
  if (hw == 0) throw ShapeError("instance_norm needs H*W >= 1");

  Tensor out(in.shape());
  std::vector<double> inv_std(planes);
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = in.data().data() + p * hw;
    double mean = 0.0;
    for (std::size_t i = 0; i < hw; ++i) mean += src[i];
    mean /= static_cast<double>(hw);
    double var = 0.0;
    for (std::size_t i = 0; i < hw; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= static_cast<double>(hw);
    inv_std[p] = 1.0 / std::sqrt(var + eps);
    double* dst = out.data().data() + p * hw;
    for (std::size_t i = 0; i < hw; ++i) dst[i] = (src[i] - mean) * inv_std[p];
  }
  return x.graph().record(
      std::move(out), {x},
      [planes, hw, inv_std = std::move(inv_std)](const BackwardContext& ctx) {
        Tensor* gx = ctx.input_grad(0);
        if (!gx) return;
        const Tensor& xhat = ctx.output();
        const Tensor& go = ctx.grad_output();
        const double n = static_cast<double>(hw);
        for (std::size_t p = 0; p < planes; ++p) {
          const double* y = xhat.data().data() + p * hw;
          const double* dy = go.data().data() + p * hw;
          double sum_dy = 0.0, sum_dy_y = 0.0;
          for (std::size_t i = 0; i < hw; ++i) {
            sum_dy += dy[i];
            sum_dy_y += dy[i] * y[i];
          }
          double* dx = gx->data().data() + p * hw;
          for (std::size_t i = 0; i < hw; ++i) {
            dx[i] += inv_std[p] * (dy[i] - sum_dy / n - y[i] * sum_dy_y / n);
          }
        }
      });
}

Var softmax_rows(Var m) {
  const Tensor& in = m.value();
  require_rank(in, 2, "softmax_rows");
  const std::size_t rows = in.dim(0), cols = in.dim(1);
  if (cols < 1) throw ShapeError("softmax_rows needs at least one column");
  Tensor out(in.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* src = in.data().data() + r * cols;
    double* dst = out.data().data() + r * cols;
    const double peak = *std::max_element(src, src + cols);
    double total = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      dst[c] = std::exp(src[c] - peak);
      total += dst[c];
    }
    for (std::size_t c = 0; c < cols; ++c) dst[c] /= total;
  }
  return m.graph().record(std::move(out), {m}, [rows, cols](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& y = ctx.output();
    const Tensor& go = ctx.grad_output();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * cols;
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += go[base + c] * y[base + c];
      for (std::size_t c = 0; c < cols; ++c) {
        (*gx)[base + c] += y[base + c] * (go[base + c] - dot);
      }
    }
  });
}

namespace {

Tensor transposed(const Tensor& m) {
  const std::size_t rows = m.dim(0), cols = m.dim(1);
  Tensor out({cols, rows});
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = m[r * cols + c];
  return out;
}

}  // namespace

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank(av, 2, "matmul lhs");
  require_rank(bv, 2, "matmul rhs");
  if (av.dim(1) != bv.dim(0)) {
    throw ShapeError("matmul inner dimension mismatch: " + shape_str(av.shape()) +
                     " x " + shape_str(bv.shape()));
  }
  const std::size_t rows = av.dim(0), inner = av.dim(1), cols = bv.dim(1);
  Tensor out({rows, cols});
  kernels::matmul(rows, inner, cols, av.data(), bv.data(), out.data());
  return a.graph().record(
      std::move(out), {a, b}, [rows, inner, cols](const BackwardContext& ctx) {
        const Tensor& go = ctx.grad_output();
        if (Tensor* ga = ctx.input_grad(0)) {
          Tensor tmp({rows, inner});
          const Tensor bt = transposed(ctx.input(1));
          kernels::matmul(rows, cols, inner, go.data(), bt.data(), tmp.data());
          *ga += tmp;
        }
        if (Tensor* gb = ctx.input_grad(1)) {
          Tensor tmp({inner, cols});
          const Tensor at = transposed(ctx.input(0));
          kernels::matmul(inner, rows, cols, at.data(), go.data(), tmp.data());
          *gb += tmp;
        }
      });
}

Var transpose(Var m) {
  const Tensor& in = m.value();
  require_rank(in, 2, "transpose");
  return m.graph().record(transposed(in), {m}, [](const BackwardContext& ctx) {
    if (Tensor* gx = ctx.input_grad(0)) *gx += transposed(ctx.grad_output());
  });
}

Var reshape(Var x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return x.graph().record(std::move(out), {x}, [](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const auto g = ctx.grad_output().data();
    for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
  });
}

Var upsample_nearest(Var x, std::size_t factor) {
  const Tensor& in = x.value();
  require_rank(in, 4, "upsample_nearest");
  if (factor < 1) throw ShapeError("upsample_nearest factor must be >= 1");
  if (factor == 1) return x;
  const std::size_t planes = in.dim(0) * in.dim(1);
  const std::size_t h = in.dim(2), w = in.dim(3);
  const std::size_t oh = h * factor, ow = w * factor;
  Tensor out({in.dim(0), in.dim(1), oh, ow});
  for (std::size_t p = 0; p < planes; ++p) {
    const double* src = in.data().data() + p * h * w;
    double* dst = out.data().data() + p * oh * ow;
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t xx = 0; xx < ow; ++xx)
        dst[y * ow + xx] = src[(y / factor) * w + xx / factor];
  }
  return x.graph().record(std::move(out), {x}, [=](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& go = ctx.grad_output();
    for (std::size_t p = 0; p < planes; ++p) {
      const double* g = go.data().data() + p * oh * ow;
      double* dst = gx->data().data() + p * h * w;
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t xx = 0; xx < ow; ++xx)
          dst[(y / factor) * w + xx / factor] += g[y * ow + xx];
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  out += b.value();
  return a.graph().record(std::move(out), {a, b}, [](const BackwardContext& ctx) {
    if (Tensor* ga = ctx.input_grad(0)) *ga += ctx.grad_output();
    if (Tensor* gb = ctx.input_grad(1)) *gb += ctx.grad_output();
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = av[i] - bv[i];
  return a.graph().record(std::move(out), {a, b}, [](const BackwardContext& ctx) {
    const Tensor& go = ctx.grad_output();
    if (Tensor* ga = ctx.input_grad(0)) *ga += go;
    if (Tensor* gb = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < go.numel(); ++i) (*gb)[i] -= go[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = av[i] * bv[i];
  return a.graph().record(std::move(out), {a, b}, [](const BackwardContext& ctx) {
    const Tensor& go = ctx.grad_output();
    const Tensor& av = ctx.input(0);
    const Tensor& bv = ctx.input(1);
    if (Tensor* ga = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < go.numel(); ++i) (*ga)[i] += go[i] * bv[i];
    }
    if (Tensor* gb = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < go.numel(); ++i) (*gb)[i] += go[i] * av[i];
    }
  });
}

Var scale(Var x, double factor) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = in[i] * factor;
  return x.graph().record(std::move(out), {x}, [factor](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& go = ctx.grad_output();
    for (std::size_t i = 0; i < go.numel(); ++i) (*gx)[i] += go[i] * factor;
  });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return x.graph().record(Tensor::scalar(total), {x}, [](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const double g = ctx.grad_output()[0];
    for (double& v : gx->data()) v += g;
  });
}

Var l2_norm(Var x) {
  double sq = 0.0;
  for (double v : x.value().data()) sq += v * v;
  return x.graph().record(
      Tensor::scalar(std::sqrt(sq)), {x}, [](const BackwardContext& ctx) {
        Tensor* gx = ctx.input_grad(0);
        if (!gx) return;
        const double norm = ctx.output()[0];
        if (norm == 0.0) return;
        const double g = ctx.grad_output()[0] / norm;
        const Tensor& in = ctx.input(0);
        for (std::size_t i = 0; i < in.numel(); ++i) (*gx)[i] += g * in[i];
      });
}

Var channel_mean(Var x) {
  const Tensor& in = x.value();
  require_rank(in, 4, "channel_mean");
  const std::size_t planes = in.dim(0) * in.dim(1);
  const std::size_t hw = in.dim(2) * in.dim(3);
  Tensor out({in.dim(0), in.dim(1)});
  for (std::size_t p = 0; p < planes; ++p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc += in[p * hw + i];
    out[p] = acc / static_cast<double>(hw);
  }
  return x.graph().record(std::move(out), {x}, [planes, hw](const BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& go = ctx.grad_output();
    for (std::size_t p = 0; p < planes; ++p) {
      const double g = go[p] / static_cast<double>(hw);
      for (std::size_t i = 0; i < hw; ++i) (*gx)[p * hw + i] += g;
    }
  });
}

Var channel_std(Var x, double eps) {
  const Tensor& in = x.value();
  require_rank(in, 4, "channel_std");
  const std::size_t planes = in.dim(0) * in.dim(1);
  const std::size_t hw = in.dim(2) * in.dim(3);
  Tensor out({in.dim(0), in.dim(1)});
  std::vector<double> means(planes);
  for (std::size_t p = 0; p < planes; ++p) {
    double mean = 0.0;
    for (std::size_t i = 0; i < hw; ++i) mean += in[p * hw + i];
    mean /= static_cast<double>(hw);
    double var = 0.0;
    for (std::size_t i = 0; i < hw; ++i) {
      var += (in[p * hw + i] - mean) * (in[p * hw + i] - mean);
    }
    var /= static_cast<double>(hw);
    means[p] = mean;
    out[p] = std::sqrt(var + eps);
  }
  return x.graph().record(
      std::move(out), {x},
      [planes, hw, means = std::move(means)](const BackwardContext& ctx) {
        Tensor* gx = ctx.input_grad(0);
        if (!gx) return;
        const Tensor& in = ctx.input(0);
        const Tensor& sd = ctx.output();
        const Tensor& go = ctx.grad_output();
        for (std::size_t p = 0; p < planes; ++p) {
          const double g = go[p] / (static_cast<double>(hw) * sd[p]);
          for (std::size_t i = 0; i < hw; ++i) {
            (*gx)[p * hw + i] += g * (in[p * hw + i] - means[p]);
          }
        }
      });
}

}  // namespace pstyle
