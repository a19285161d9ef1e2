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

#pragma once

#include <cstddef>
#include <span>

// Raw numeric kernels behind the differentiable ops. The top-level functions
// are OpenMP-parallel; `reference::` holds straightforward serial versions
// kept for equivalence tests and the benchmark. Both visit every output
// element in the same summation order, so results agree bit for bit.
namespace pstyle::kernels {

// Geometry of a valid (already padded) strided cross-correlation.
struct ConvGeometry {
  std::size_t batch = 1;
  std::size_t in_channels = 1;
  std::size_t in_h = 1;
  std::size_t in_w = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_h = 1;
  std::size_t kernel_w = 1;
  std::size_t stride = 1;

  std::size_t out_h() const { return (in_h - kernel_h) / stride + 1; }
  std::size_t out_w() const { return (in_w - kernel_w) / stride + 1; }
};

// output[n,o,y,x] = bias[o] + sum_{c,i,j} input[n,c,y*s+i,x*s+j] * kernel[o,c,i,j]
void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel,
                    std::span<const double> bias, std::span<double> output);

// Overwrites grad_input with d(output)/d(input) contracted against grad_output.
void conv2d_backward_input(const ConvGeometry& g,
                           std::span<const double> grad_output,
                           std::span<const double> kernel,
                           std::span<double> grad_input);

// Overwrites grad_kernel.
void conv2d_backward_kernel(const ConvGeometry& g,
                            std::span<const double> grad_output,
                            std::span<const double> input,
                            std::span<double> grad_kernel);

// Overwrites grad_bias.
void conv2d_backward_bias(const ConvGeometry& g,
                          std::span<const double> grad_output,
                          std::span<double> grad_bias);

// c[rows x cols] = a[rows x inner] * b[inner x cols]
void matmul(std::size_t rows, std::size_t inner, std::size_t cols,
            std::span<const double> a, std::span<const double> b,
            std::span<double> c);

namespace reference {

void conv2d_forward(const ConvGeometry& g, std::span<const double> input,
                    std::span<const double> kernel,
                    std::span<const double> bias, std::span<double> output);
void conv2d_backward_input(const ConvGeometry& g,
                           std::span<const double> grad_output,
                           std::span<const double> kernel,
                           std::span<double> grad_input);
void conv2d_backward_kernel(const ConvGeometry& g,
                            std::span<const double> grad_output,
                            std::span<const double> input,
                            std::span<double> grad_kernel);
void matmul(std::size_t rows, std::size_t inner, std::size_t cols,
            std::span<const double> a, std::span<const double> b,
            std::span<double> c);

}  // namespace reference

}  // namespace pstyle::kernels
