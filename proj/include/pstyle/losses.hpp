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

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "pstyle/image_io.hpp"
#include "pstyle/net_blocks.hpp"
#include "pstyle/style_attention.hpp"

namespace pstyle {

// A style-transfer network as seen by the losses: the transfer itself and
// the per-stage features phi_i used in the feature terms. Stubs used in
// tests implement these directly.
struct StyleNet {
  std::function<Var(Var content, Var style)> transfer;
  std::function<std::vector<Var>(Var image)> features;
};

// The real network over bound parameters.
StyleNet make_style_net(const Bindings& params, const FusionWeights& w);

struct LossWeights {
  double identity_pixel = 1.0;     // lambda_identity1
  double identity_feature = 50.0;  // lambda_identity2
  double content = 0.0;
  double style = 0.0;
};

struct LossTerms {
  double pixel_identity = 0.0;
  double feature_identity = 0.0;
  double content_aux = 0.0;
  double style_aux = 0.0;
  double total = 0.0;
};

struct IdentityLoss {
  Var pixel;    // ||Icc - Ic|| + ||Iss - Is||
  Var feature;  // sum_i ||phi_i(Icc) - phi_i(Ic)|| + ||phi_i(Iss) - phi_i(Is)||
  Var total;    // lambda1 * pixel + lambda2 * feature
};

// Norms are Euclidean over all elements (not squared, not averaged).
IdentityLoss identity_loss(const StyleNet& net, Var content, Var style,
                           double lambda1, double lambda2);

// ||norm(phi_L(Ics)) - norm(phi_L(Ic))|| with Ics = net(Ic, Is).
Var content_loss(const StyleNet& net, Var content, Var style);

// sum_i ||mean(phi_i(Ics)) - mean(phi_i(Is))|| + ||std(phi_i(Ics)) - std(phi_i(Is))||
Var style_loss(const StyleNet& net, Var content, Var style);

struct LossGraph {
  Var total;
  LossTerms terms;
};

// Identity terms plus the auxiliary terms whose weight is non-zero.
LossGraph total_loss(const StyleNet& net, Var content, Var style,
                     const LossWeights& weights);

// Convenience wrappers building the image leaves in `graph`.
LossTerms identity_loss(const StyleNet& net, Graph& graph,
                        const ImageBuffer& content, const ImageBuffer& style,
                        double lambda1, double lambda2);
double content_loss(const StyleNet& net, Graph& graph,
                    const ImageBuffer& content, const ImageBuffer& style);
double style_loss(const StyleNet& net, Graph& graph, const ImageBuffer& content,
                  const ImageBuffer& style);

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamOptions options;
  ParameterSet first_moment;
  ParameterSet second_moment;
  std::uint64_t step = 0;
};

// One bias-corrected Adam update of every parameter. Gradients are checked
// for finiteness before anything is modified; a NumericError names the
// offending parameter.
void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state);

// Uniformly placed size x size sub-rectangle copy. size must be divisible by
// 8 and fit the image.
ImageBuffer random_crop(const ImageBuffer& img, std::size_t size,
                        std::mt19937_64& rng);

}  // namespace pstyle
