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

#include "pstyle/net_blocks.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <set>
#include <sstream>

#include <zlib.h>

#include "pstyle/error.hpp"

namespace pstyle {

namespace {

struct ConvLayer {
  const char* name;
  std::size_t in;
  std::size_t out;
  std::size_t kernel;
  ConvOptions opts;
  bool relu;
};

// Stride-2 stages use 4x4 kernels with pad 1 so (H + 2 - 4) / 2 + 1 = H / 2
// is exact for even H.
const std::array<ConvLayer, kEncoderStages> kEncoder = {{
    {"encoder.conv1", 3, 16, 3, {1, 1, PadMode::kZero}, true},
    {"encoder.conv2", 16, 32, 4, {2, 1, PadMode::kZero}, true},
    {"encoder.conv3", 32, kLowChannels, 4, {2, 1, PadMode::kZero}, true},
    {"encoder.conv4", kLowChannels, kHighChannels, 4, {2, 1, PadMode::kZero}, true},
}};

// Upsampling happens before conv2 and conv3.
const std::array<ConvLayer, 3> kDecoder = {{
    {"decoder.conv1", kLowChannels, 32, 3, {1, 1, PadMode::kReflect}, true},
    {"decoder.conv2", 32, 16, 3, {1, 1, PadMode::kReflect}, true},
    {"decoder.conv3", 16, 3, 3, {1, 1, PadMode::kReflect}, false},
}};

void add_conv(std::vector<ParamSpec>& out, const std::string& name,
              std::size_t in, std::size_t o, std::size_t k) {
  out.push_back({name + ".weight", {o, in, k, k}, in * k * k});
  out.push_back({name + ".bias", {o}, 0});
}

std::vector<ParamSpec> build_layout() {
  std::vector<ParamSpec> specs;
  for (const auto& l : kEncoder) add_conv(specs, l.name, l.in, l.out, l.kernel);
  for (auto [prefix, c] : {std::pair{"attn4", kLowChannels},
                           std::pair{"attn5", kHighChannels}}) {
    const std::string p = prefix;
    add_conv(specs, p + ".f", c, c / 2, 1);
    add_conv(specs, p + ".g", c, c / 2, 1);
    add_conv(specs, p + ".h", c, c, 1);
  }
  add_conv(specs, "fusion.proj", kHighChannels, kLowChannels, 1);
  add_conv(specs, "fusion.merge", kLowChannels, kLowChannels, 3);
  for (const auto& l : kDecoder) add_conv(specs, l.name, l.in, l.out, l.kernel);
  return specs;
}

Var apply(const Bindings& params, const ConvLayer& layer, Var x) {
  const std::string name = layer.name;
  Var y = conv2d(x, params(name + ".weight"), params(name + ".bias"), layer.opts);
  return layer.relu ? relu(y) : y;
}

// Little-endian byte writer/reader for the checkpoint format.
class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::uint16_t>>;
    const U bits = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
    }
  }
  void put_raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::size_t end)
      : bytes_(bytes), end_(end) {}

  template <typename T>
  T get() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::uint16_t>>;
    need(sizeof(U));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      bits |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(U);
    return std::bit_cast<T>(bits);
  }
  std::string get_raw(std::size_t n) {
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw CheckpointError("checkpoint is truncated");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

const std::vector<ParamSpec>& parameter_layout() {
  static const std::vector<ParamSpec> layout = build_layout();
  return layout;
}

std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t architecture_digest() {
  std::ostringstream os;
  for (const auto& entry : parameter_layout()) {
    os << entry.name << shape_str(entry.shape) << ';';
  }
  return fnv1a64(os.str());
}

Checkpoint init_parameters(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Checkpoint ckpt;
  ckpt.config_digest = architecture_digest();
  for (const auto& entry : parameter_layout()) {
    Tensor t(entry.shape);
    if (entry.fan_in > 0) {
      std::normal_distribution<double> dist(
          0.0, std::sqrt(2.0 / static_cast<double>(entry.fan_in)));
      for (double& v : t.data()) v = dist(rng);
    }
    ckpt.params.emplace(entry.name, std::move(t));
  }
  return ckpt;
}

void validate_checkpoint(const Checkpoint& ckpt) {
  std::set<std::string> expected;
  for (const auto& entry : parameter_layout()) {
    expected.insert(entry.name);
    auto it = ckpt.params.find(entry.name);
    if (it == ckpt.params.end()) {
      throw CheckpointError("checkpoint is missing parameter '" + entry.name + "'");
    }
    if (it->second.shape() != entry.shape) {
      throw CheckpointError("parameter '" + entry.name + "' has shape " +
                            shape_str(it->second.shape()) + ", expected " +
                            shape_str(entry.shape));
    }
  }
  for (const auto& [name, _] : ckpt.params) {
    if (!expected.contains(name)) {
      throw CheckpointError("checkpoint has unknown parameter '" + name + "'");
    }
  }
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.put_raw("PSTY");
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint64_t>(ckpt.step);
  w.put<std::uint64_t>(ckpt.config_digest);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& [name, t] : ckpt.params) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.put_raw(name);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.put<std::uint64_t>(d);
    for (double v : t.data()) w.put<double>(v);
  }
  auto& bytes = w.bytes();
  const auto crc = static_cast<std::uint32_t>(
      ::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
  w.put<std::uint32_t>(crc);
  return std::move(bytes);
}

Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 6 || std::string(bytes.begin(), bytes.begin() + 4) != "PSTY") {
    throw CheckpointError("not a checkpoint file (bad magic)");
  }
  ByteReader header(bytes, bytes.size());
  header.get_raw(4);
  const auto version = header.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < 4 + 2 + 8 + 8 + 4 + 4) {
    throw CheckpointError("checkpoint is truncated");
  }
  const std::size_t body_end = bytes.size() - 4;
  ByteReader trailer(bytes, bytes.size());
  trailer.get_raw(body_end);
  const auto stored_crc = trailer.get<std::uint32_t>();
  const auto crc = static_cast<std::uint32_t>(
      ::crc32(0L, bytes.data(), static_cast<uInt>(body_end)));
  if (crc != stored_crc) throw CheckpointError("checkpoint CRC mismatch");

  ByteReader r(bytes, body_end);
  r.get_raw(4);
  r.get<std::uint16_t>();
  Checkpoint ckpt;
  ckpt.step = r.get<std::uint64_t>();
  ckpt.config_digest = r.get<std::uint64_t>();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint32_t>();
    std::string name = r.get_raw(name_len);
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) throw CheckpointError("tensor '" + name + "' has implausible rank");
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint64_t>();
    const std::size_t numel = shape_numel(shape);
    if (numel * 8 > body_end - r.pos()) {
      throw CheckpointError("tensor '" + name + "' extends past end of file");
    }
    std::vector<double> data(numel);
    for (double& v : data) v = r.get<double>();
    if (!ckpt.params.emplace(name, Tensor(std::move(shape), std::move(data))).second) {
      throw CheckpointError("duplicate parameter '" + name + "'");
    }
  }
  if (r.pos() != body_end) throw CheckpointError("trailing bytes in checkpoint");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  Checkpoint ckpt = parse_checkpoint(bytes);
  validate_checkpoint(ckpt);
  return ckpt;
}

Bindings::Bindings(Graph& graph, const ParameterSet& params, bool requires_grad)
    : graph_(&graph) {
  for (const auto& [name, t] : params) {
    vars_.emplace(name, graph.leaf(t, requires_grad));
  }
}

Bindings Bindings::from_vars(Graph& graph, std::map<std::string, Var> vars) {
  Bindings b(graph);
  b.vars_ = std::move(vars);
  return b;
}

Var Bindings::operator()(const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw CheckpointError("no parameter named '" + name + "'");
  return it->second;
}

ParameterSet Bindings::gradients() const {
  ParameterSet grads;
  for (const auto& [name, v] : vars_) grads.emplace(name, graph_->grad(v));
  return grads;
}

FeaturePyramid encode(const Bindings& params, Var x) {
  const Shape& s = x.shape();
  if (s.size() != 4 || s[1] != 3) {
    throw ShapeError("encode expects [N,3,H,W], got " + shape_str(s));
  }
  if (s[2] % 8 != 0 || s[3] % 8 != 0 || s[2] < 16 || s[3] < 16) {
    throw ShapeError("encode needs H and W divisible by 8 and >= 16, got " +
                     std::to_string(s[2]) + "x" + std::to_string(s[3]));
  }
  FeaturePyramid out;
  Var h = x;
  for (std::size_t i = 0; i < kEncoderStages; ++i) {
    h = apply(params, kEncoder[i], h);
    out.stages[i] = h;
  }
  return out;
}

Var decode(const Bindings& params, Var res) {
  const Shape& s = res.shape();
  if (s.size() != 4 || s[1] != kLowChannels) {
    throw ShapeError("decode expects [N," + std::to_string(kLowChannels) +
                     ",h,w], got " + shape_str(s));
  }
  Var h = apply(params, kDecoder[0], res);
  h = upsample_nearest(h, 2);
  h = apply(params, kDecoder[1], h);
  h = upsample_nearest(h, 2);
  return apply(params, kDecoder[2], h);
}

}  // namespace pstyle
