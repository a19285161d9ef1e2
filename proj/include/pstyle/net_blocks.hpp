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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pstyle/autodiff.hpp"
#include "pstyle/ops.hpp"

namespace pstyle {

// Channel counts of the two fused feature levels.
inline constexpr std::size_t kLowChannels = 48;   // f4
inline constexpr std::size_t kHighChannels = 64;  // f5
inline constexpr std::size_t kEncoderStages = 4;

using ParameterSet = std::map<std::string, Tensor>;

struct Checkpoint {
  ParameterSet params;
  std::uint64_t step = 0;
  std::uint64_t config_digest = 0;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

struct ParamSpec {
  std::string name;
  Shape shape;
  std::size_t fan_in = 0;  // 0 for biases
};

// Every learnable tensor of the network (encoder, attention blocks, fusion,
// decoder) with its stable name and shape.
const std::vector<ParamSpec>& parameter_layout();

// FNV-1a digest of the architecture description; stored in fresh checkpoints.
std::uint64_t architecture_digest();
std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = 0xcbf29ce484222325ULL);

// He-normal weights (std = sqrt(2 / fan_in)) from a seeded mt19937_64, zero
// biases. Same seed gives bit-identical parameters.
Checkpoint init_parameters(std::uint64_t seed);

// Throws CheckpointError naming the first missing, unknown or misshapen key.
void validate_checkpoint(const Checkpoint& ckpt);

// Binary format: "PSTY", u16 version, u64 step, u64 digest, u32 count, then
// per tensor {u32 name length, name, u32 rank, u64 dims..., f64 data...},
// then a CRC32 of everything before it. All little-endian.
inline constexpr std::uint16_t kCheckpointVersion = 1;
std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
// Parses without checking keys against the layout.
Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Parses and validates against parameter_layout().
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Parameters placed into a graph as leaves, looked up by name.
class Bindings {
 public:
  Bindings(Graph& graph, const ParameterSet& params, bool requires_grad);
  // Wraps leaves that already live in `graph`.
  static Bindings from_vars(Graph& graph, std::map<std::string, Var> vars);

  Var operator()(const std::string& name) const;
  Graph& graph() const { return *graph_; }

  // Gradients of every bound parameter; valid after graph.backward().
  ParameterSet gradients() const;

 private:
  explicit Bindings(Graph& graph) : graph_(&graph) {}

  Graph* graph_;
  std::map<std::string, Var> vars_;
};

struct FeaturePyramid {
  // Outputs of the four encoder stages at H, H/2, H/4, H/8.
  std::array<Var, kEncoderStages> stages;

  Var f4() const { return stages[2]; }
  Var f5() const { return stages[3]; }
};

// x is [N,3,H,W] with H, W divisible by 8 and at least 16.
FeaturePyramid encode(const Bindings& params, Var x);

// [N,48,h,w] -> [N,3,4h,4w]
Var decode(const Bindings& params, Var res);

}  // namespace pstyle
