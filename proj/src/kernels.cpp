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

#include "pstyle/kernels.hpp"

#include <algorithm>
#include <cstddef>

namespace pstyle::kernels {

namespace {
using Index = std::ptrdiff_t;
}

void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel,
                    std::span<const double> bias, std::span<double> output) {
  const Index batch = static_cast<Index>(g.batch);
  const Index out_c = static_cast<Index>(g.out_channels);
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const std::size_t in_plane = g.in_h * g.in_w;
  const std::size_t k_plane = g.kernel_h * g.kernel_w;

#pragma omp parallel for collapse(2) schedule(static)
  for (Index n = 0; n < batch; ++n) {
    for (Index o = 0; o < out_c; ++o) {
      const double* x_n = input.data() + n * g.in_channels * in_plane;
      const double* k_o = kernel.data() + o * g.in_channels * k_plane;
      double* y = output.data() + (n * out_c + o) * oh * ow;
      for (std::size_t yy = 0; yy < oh; ++yy) {
        for (std::size_t xx = 0; xx < ow; ++xx) {
          double acc = bias[o];
          for (std::size_t c = 0; c < g.in_channels; ++c) {
            const double* x_c = x_n + c * in_plane;
            const double* k_c = k_o + c * k_plane;
            for (std::size_t i = 0; i < g.kernel_h; ++i) {
              const double* row = x_c + (yy * g.stride + i) * g.in_w +
                                  xx * g.stride;
              const double* krow = k_c + i * g.kernel_w;
              for (std::size_t j = 0; j < g.kernel_w; ++j) {
                acc += row[j] * krow[j];
              }
            }
          }
          y[yy * ow + xx] = acc;
        }
      }
    }
  }
}

void conv2d_backward_input(const ConvGeometry& g,
                           std::span<const double> grad_output,
                           std::span<const double> kernel,
                           std::span<double> grad_input) {
  const Index batch = static_cast<Index>(g.batch);
  const Index in_c = static_cast<Index>(g.in_channels);
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const std::size_t in_plane = g.in_h * g.in_w;
  const std::size_t k_plane = g.kernel_h * g.kernel_w;

#pragma omp parallel for collapse(2) schedule(static)
  for (Index n = 0; n < batch; ++n) {
    for (Index c = 0; c < in_c; ++c) {
      double* dx = grad_input.data() + (n * in_c + c) * in_plane;
      std::fill(dx, dx + in_plane, 0.0);
      for (std::size_t o = 0; o < g.out_channels; ++o) {
        const double* dy =
            grad_output.data() + (n * g.out_channels + o) * oh * ow;
        const double* k = kernel.data() + (o * g.in_channels + c) * k_plane;
        for (std::size_t yy = 0; yy < oh; ++yy) {
          for (std::size_t xx = 0; xx < ow; ++xx) {
            const double d = dy[yy * ow + xx];
            for (std::size_t i = 0; i < g.kernel_h; ++i) {
              double* row = dx + (yy * g.stride + i) * g.in_w + xx * g.stride;
              const double* krow = k + i * g.kernel_w;
              for (std::size_t j = 0; j < g.kernel_w; ++j) {
                row[j] += d * krow[j];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_kernel(const ConvGeometry& g,
                            std::span<const double> grad_output,
                            std::span<const double> input,
                            std::span<double> grad_kernel) {
  const Index out_c = static_cast<Index>(g.out_channels);
  const Index in_c = static_cast<Index>(g.in_channels);
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const std::size_t in_plane = g.in_h * g.in_w;
  const std::size_t k_plane = g.kernel_h * g.kernel_w;

#pragma omp parallel for collapse(2) schedule(static)
  for (Index o = 0; o < out_c; ++o) {
    for (Index c = 0; c < in_c; ++c) {
      double* dk = grad_kernel.data() + (o * in_c + c) * k_plane;
      for (std::size_t i = 0; i < g.kernel_h; ++i) {
        for (std::size_t j = 0; j < g.kernel_w; ++j) {
          double acc = 0.0;
          for (std::size_t n = 0; n < g.batch; ++n) {
            const double* dy =
                grad_output.data() + (n * g.out_channels + o) * oh * ow;
            const double* x = input.data() + (n * g.in_channels + c) * in_plane;
            for (std::size_t yy = 0; yy < oh; ++yy) {
              const double* row = x + (yy * g.stride + i) * g.in_w + j;
              for (std::size_t xx = 0; xx < ow; ++xx) {
                acc += dy[yy * ow + xx] * row[xx * g.stride];
              }
            }
          }
          dk[i * g.kernel_w + j] = acc;
        }
      }
    }
  }
}

void conv2d_backward_bias(const ConvGeometry& g,
                          std::span<const double> grad_output,
                          std::span<double> grad_bias) {
  const std::size_t plane = g.out_h() * g.out_w();
  for (std::size_t o = 0; o < g.out_channels; ++o) {
    double acc = 0.0;
    for (std::size_t n = 0; n < g.batch; ++n) {
      const double* dy = grad_output.data() + (n * g.out_channels + o) * plane;
      for (std::size_t p = 0; p < plane; ++p) acc += dy[p];
    }
    grad_bias[o] = acc;
  }
}

void matmul(std::size_t rows, std::size_t inner, std::size_t cols,
            std::span<const double> a, std::span<const double> b,
            std::span<double> c) {
  const Index r = static_cast<Index>(rows);
#pragma omp parallel for schedule(static)
  for (Index i = 0; i < r; ++i) {
    double* c_row = c.data() + i * cols;
    std::fill(c_row, c_row + cols, 0.0);
    const double* a_row = a.data() + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const double av = a_row[k];
      const double* b_row = b.data() + k * cols;
      for (std::size_t j = 0; j < cols; ++j) c_row[j] += av * b_row[j];
    }
  }
}

namespace reference {

void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel,
                    std::span<const double> bias, std::span<double> output) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t o = 0; o < g.out_channels; ++o)
      for (std::size_t yy = 0; yy < oh; ++yy)
        for (std::size_t xx = 0; xx < ow; ++xx) {
          double acc = bias[o];
          for (std::size_t c = 0; c < g.in_channels; ++c)
            for (std::size_t i = 0; i < g.kernel_h; ++i)
              for (std::size_t j = 0; j < g.kernel_w; ++j) {
                const std::size_t xi =
                    ((n * g.in_channels + c) * g.in_h + yy * g.stride + i) *
                        g.in_w +
                    xx * g.stride + j;
                const std::size_t ki =
                    ((o * g.in_channels + c) * g.kernel_h + i) * g.kernel_w + j;
                acc += input[xi] * kernel[ki];
              }
          output[((n * g.out_channels + o) * oh + yy) * ow + xx] = acc;
        }
}

void conv2d_backward_input(const ConvGeometry& g,
                           std::span<const double> grad_output,
                           std::span<const double> kernel,
                           std::span<double> grad_input) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  std::fill(grad_input.begin(), grad_input.end(), 0.0);
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t c = 0; c < g.in_channels; ++c)
      for (std::size_t o = 0; o < g.out_channels; ++o)
        for (std::size_t yy = 0; yy < oh; ++yy)
          for (std::size_t xx = 0; xx < ow; ++xx) {
            const double d =
                grad_output[((n * g.out_channels + o) * oh + yy) * ow + xx];
            for (std::size_t i = 0; i < g.kernel_h; ++i)
              for (std::size_t j = 0; j < g.kernel_w; ++j) {
                const std::size_t xi =
                    ((n * g.in_channels + c) * g.in_h + yy * g.stride + i) *
                        g.in_w +
                    xx * g.stride + j;
                const std::size_t ki =
                    ((o * g.in_channels + c) * g.kernel_h + i) * g.kernel_w + j;
                grad_input[xi] += d * kernel[ki];
              }
          }
}

void conv2d_backward_kernel(const ConvGeometry& g,
                            std::span<const double> grad_output,
                            std::span<const double> input,
                            std::span<double> grad_kernel) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t o = 0; o < g.out_channels; ++o)
    for (std::size_t c = 0; c < g.in_channels; ++c)
      for (std::size_t i = 0; i < g.kernel_h; ++i)
        for (std::size_t j = 0; j < g.kernel_w; ++j) {
          double acc = 0.0;
          for (std::size_t n = 0; n < g.batch; ++n)
            for (std::size_t yy = 0; yy < oh; ++yy)
              for (std::size_t xx = 0; xx < ow; ++xx) {
                const std::size_t xi =
                    ((n * g.in_channels + c) * g.in_h + yy * g.stride + i) *
                        g.in_w +
                    xx * g.stride + j;
                acc += grad_output[((n * g.out_channels + o) * oh + yy) * ow +
                                   xx] *
                       input[xi];
              }
          grad_kernel[((o * g.in_channels + c) * g.kernel_h + i) * g.kernel_w +
                      j] = acc;
        }
}

void matmul(std::size_t rows, std::size_t inner, std::size_t cols,
            std::span<const double> a, std::span<const double> b,
            std::span<double> c) {
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < inner; ++k)
        acc += a[i * inner + k] * b[k * cols + j];
      c[i * cols + j] = acc;
    }
}

}  // namespace reference

}  // namespace pstyle::kernels
