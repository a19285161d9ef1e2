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

#include "pstyle/losses.hpp"

#include <cmath>

#include "pstyle/error.hpp"

namespace pstyle {

namespace {

void check_pair(Var content, Var style) {
  if (content.shape() != style.shape()) {
    throw ShapeError("content and style images differ in size: " +
                     shape_str(content.shape()) + " vs " +
                     shape_str(style.shape()));
  }
}

Var norm_of_diff(Var a, Var b) { return l2_norm(sub(a, b)); }

Var summed(const std::vector<Var>& terms) {
  Var acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

void check_feature_counts(const std::vector<Var>& a, const std::vector<Var>& b) {
  if (a.size() != b.size() || a.empty()) {
    throw ShapeError("feature extractor returned inconsistent layer counts");
  }
}

}  // namespace

StyleNet make_style_net(const Bindings& params, const FusionWeights& w) {
  StyleNet net;
  net.transfer = [&params, w](Var c, Var s) { return transfer(params, c, s, w); };
  net.features = [&params](Var image) {
    const FeaturePyramid p = encode(params, image);
    return std::vector<Var>(p.stages.begin(), p.stages.end());
  };
  return net;
}

IdentityLoss identity_loss(const StyleNet& net, Var content, Var style,
                           double lambda1, double lambda2) {
  check_pair(content, style);
  Var icc = net.transfer(content, content);
  Var iss = net.transfer(style, style);

  IdentityLoss out;
  out.pixel = add(norm_of_diff(icc, content), norm_of_diff(iss, style));

  const auto phi_icc = net.features(icc);
  const auto phi_ic = net.features(content);
  const auto phi_iss = net.features(iss);
  const auto phi_is = net.features(style);
  check_feature_counts(phi_icc, phi_ic);
  check_feature_counts(phi_iss, phi_is);
  std::vector<Var> terms;
  for (std::size_t i = 0; i < phi_ic.size(); ++i) {
    terms.push_back(add(norm_of_diff(phi_icc[i], phi_ic[i]),
                        norm_of_diff(phi_iss[i], phi_is[i])));
  }
  out.feature = summed(terms);
  out.total = add(scale(out.pixel, lambda1), scale(out.feature, lambda2));
  return out;
}

Var content_loss(const StyleNet& net, Var content, Var style) {
  check_pair(content, style);
  Var ics = net.transfer(content, style);
  const auto phi_ics = net.features(ics);
  const auto phi_ic = net.features(content);
  check_feature_counts(phi_ics, phi_ic);
  return norm_of_diff(instance_norm(phi_ics.back()), instance_norm(phi_ic.back()));
}

Var style_loss(const StyleNet& net, Var content, Var style) {
  check_pair(content, style);
  Var ics = net.transfer(content, style);
  const auto phi_ics = net.features(ics);
  const auto phi_is = net.features(style);
  check_feature_counts(phi_ics, phi_is);
  std::vector<Var> terms;
  for (std::size_t i = 0; i < phi_ics.size(); ++i) {
    terms.push_back(
        add(norm_of_diff(channel_mean(phi_ics[i]), channel_mean(phi_is[i])),
            norm_of_diff(channel_std(phi_ics[i]), channel_std(phi_is[i]))));
  }
  return summed(terms);
}

LossGraph total_loss(const StyleNet& net, Var content, Var style,
                     const LossWeights& weights) {
  const IdentityLoss id = identity_loss(net, content, style, weights.identity_pixel,
                                        weights.identity_feature);
  LossGraph out;
  out.terms.pixel_identity = id.pixel.value()[0];
  out.terms.feature_identity = id.feature.value()[0];
  Var total = id.total;
  if (weights.content != 0.0) {
    Var c = content_loss(net, content, style);
    out.terms.content_aux = c.value()[0];
    total = add(total, scale(c, weights.content));
  }
  if (weights.style != 0.0) {
    Var s = style_loss(net, content, style);
    out.terms.style_aux = s.value()[0];
    total = add(total, scale(s, weights.style));
  }
  out.total = total;
  out.terms.total = total.value()[0];
  return out;
}

LossTerms identity_loss(const StyleNet& net, Graph& graph,
                        const ImageBuffer& content, const ImageBuffer& style,
                        double lambda1, double lambda2) {
  const IdentityLoss id =
      identity_loss(net, graph.constant(to_tensor(content)),
                    graph.constant(to_tensor(style)), lambda1, lambda2);
  LossTerms terms;
  terms.pixel_identity = id.pixel.value()[0];
  terms.feature_identity = id.feature.value()[0];
  terms.total = id.total.value()[0];
  return terms;
}

double content_loss(const StyleNet& net, Graph& graph,
                    const ImageBuffer& content, const ImageBuffer& style) {
  return content_loss(net, graph.constant(to_tensor(content)),
                      graph.constant(to_tensor(style)))
      .value()[0];
}

double style_loss(const StyleNet& net, Graph& graph, const ImageBuffer& content,
                  const ImageBuffer& style) {
  return style_loss(net, graph.constant(to_tensor(content)),
                    graph.constant(to_tensor(style)))
      .value()[0];
}

void adam_step(ParameterSet& params, const ParameterSet& grads, AdamState& state) {
  for (const auto& [name, p] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) {
      throw ShapeError("no gradient supplied for parameter '" + name + "'");
    }
    if (it->second.shape() != p.shape()) {
      throw ShapeError("gradient for '" + name + "' has shape " +
                       shape_str(it->second.shape()) + ", parameter has " +
                       shape_str(p.shape()));
    }
    if (!it->second.all_finite()) {
      throw NumericError("non-finite gradient for parameter '" + name + "'");
    }
  }

  const AdamOptions& o = state.options;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(o.beta1, t);
  const double bias2 = 1.0 - std::pow(o.beta2, t);
  for (auto& [name, p] : params) {
    const Tensor& g = grads.at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, p.shape());
    auto [v_it, v_new] = state.second_moment.try_emplace(name, p.shape());
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    for (std::size_t i = 0; i < p.numel(); ++i) {
      m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
      v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p[i] -= o.lr * m_hat / (std::sqrt(v_hat) + o.eps);
    }
  }
}

ImageBuffer random_crop(const ImageBuffer& img, std::size_t size,
                        std::mt19937_64& rng) {
  if (size == 0 || size % 8 != 0) {
    throw ConfigError("crop size must be a positive multiple of 8, got " +
                      std::to_string(size));
  }
  if (size > img.width || size > img.height) {
    throw ShapeError("crop size " + std::to_string(size) + " exceeds image " +
                     std::to_string(img.width) + "x" + std::to_string(img.height));
  }
  std::uniform_int_distribution<std::size_t> pick_x(0, img.width - size);
  std::uniform_int_distribution<std::size_t> pick_y(0, img.height - size);
  const std::size_t x0 = pick_x(rng);
  const std::size_t y0 = pick_y(rng);
  ImageBuffer out(size, size, img.channels);
  for (std::size_t y = 0; y < size; ++y)
    for (std::size_t x = 0; x < size; ++x)
      for (std::size_t c = 0; c < img.channels; ++c) {
        out.at(x, y, c) = img.at(x0 + x, y0 + y, c);
      }
  return out;
}

}  // namespace pstyle
