// Copyright 2026 The SpikeStream Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spikestream/network.h"

#include <zlib.h>

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace spikestream {

using nlohmann::json;

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view to_string(Readout r) {
  switch (r) {
    case Readout::kSum: return "sum";
    case Readout::kSpikeOnly: return "s-only";
    case Readout::kAccumulationOnly: return "a-only";
  }
  return "?";
}

std::string_view to_string(InferenceMode m) { return m == InferenceMode::kFsnn ? "fsnn" : "dsnn"; }

Readout parse_readout(std::string_view s) {
  const std::string u = upper(s);
  if (u == "SUM") return Readout::kSum;
  if (u == "S-ONLY" || u == "S_ONLY" || u == "SPIKE") return Readout::kSpikeOnly;
  if (u == "A-ONLY" || u == "A_ONLY" || u == "ACCUMULATION") return Readout::kAccumulationOnly;
  throw std::invalid_argument("unknown readout '" + std::string(s) + "' (sum|s-only|a-only)");
}

InferenceMode parse_mode(std::string_view s) {
  const std::string u = upper(s);
  if (u == "FSNN") return InferenceMode::kFsnn;
  if (u == "DSNN") return InferenceMode::kDsnn;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (fsnn|dsnn)");
}

// --- config -----------------------------------------------------------------

void NetworkConfig::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument("network config: " + m); };
  if (in_channels < 1 || height < 1 || width < 1) fail("input dims must be positive");
  if (stem_channels < 1) fail("stem_channels must be >= 1");
  if (stages.empty()) fail("at least one stage is required");
  if (time_steps < 1) fail("time_steps must be >= 1");
  if (num_classes < 2) fail("num_classes must be >= 2");
  neuron.validate();
  surrogate.validate();
  if (block_kind == BlockKind::kSnResidual && !residual_neuron.passes_binary_identity()) {
    fail("residual-connection neurons must be IF with 0 < v_threshold <= 1 and v_reset = 0");
  }
  int64_t h = height, w = width;
  for (size_t i = 0; i < stages.size(); ++i) {
    const StageConfig& s = stages[i];
    if (s.blocks < 1) fail("stage " + std::to_string(i) + " needs at least one block");
    if (s.channels < 1) fail("stage " + std::to_string(i) + " channels must be >= 1");
    if (s.downsample) {
      try {
        h = conv_out_dim(h, 3, {2, 1});
        w = conv_out_dim(w, 3, {2, 1});
        conv_out_dim(h, 1, {1, 0});
      } catch (const ShapeError& e) {
        fail("stage " + std::to_string(i) + " downsample: " + e.what());
      }
    }
  }
}

int NetworkConfig::total_blocks() const {
  int n = 0;
  for (const StageConfig& s : stages) n += s.blocks;
  return n;
}

namespace {

json neuron_json(const NeuronConfig& n) {
  return json{{"kind", n.kind == NeuronKind::kIF ? "IF" : "LIF"},
              {"v_threshold", n.v_threshold},
              {"v_reset", n.v_reset},
              {"tau", n.tau},
              {"detach_reset", n.detach_reset}};
}

NeuronConfig neuron_from(const json& j) {
  NeuronConfig n;
  const std::string kind = upper(j.value("kind", std::string("IF")));
  if (kind == "IF") {
    n.kind = NeuronKind::kIF;
  } else if (kind == "LIF") {
    n.kind = NeuronKind::kLIF;
  } else {
    throw std::invalid_argument("unknown neuron kind '" + kind + "'");
  }
  n.v_threshold = j.value("v_threshold", n.v_threshold);
  n.v_reset = j.value("v_reset", n.v_reset);
  n.tau = j.value("tau", n.tau);
  n.detach_reset = j.value("detach_reset", n.detach_reset);
  return n;
}

}  // namespace

json NetworkConfig::to_json() const {
  json st = json::array();
  for (const StageConfig& s : stages) {
    st.push_back({{"blocks", s.blocks}, {"channels", s.channels}, {"downsample", s.downsample}});
  }
  return json{{"in_channels", in_channels},
              {"height", height},
              {"width", width},
              {"stem_channels", stem_channels},
              {"stages", st},
              {"block_kind", to_string(block_kind)},
              {"g", to_string(g)},
              {"neuron", neuron_json(neuron)},
              {"residual_neuron", neuron_json(residual_neuron)},
              {"surrogate_alpha", surrogate.alpha},
              {"time_steps", time_steps},
              {"num_classes", num_classes},
              {"readout", to_string(readout)},
              {"downsample_spike_sn", downsample_spike_sn}};
}

NetworkConfig NetworkConfig::from_json(const json& j) {
  NetworkConfig c;
  c.in_channels = j.at("in_channels").get<int64_t>();
  c.height = j.at("height").get<int64_t>();
  c.width = j.at("width").get<int64_t>();
  c.stem_channels = j.at("stem_channels").get<int64_t>();
  c.stages.clear();
  for (const json& s : j.at("stages")) {
    c.stages.push_back(StageConfig{s.at("blocks").get<int>(), s.at("channels").get<int64_t>(),
                                   s.value("downsample", false)});
  }
  c.block_kind = parse_block_kind(j.at("block_kind").get<std::string>());
  c.g = parse_g_function(j.at("g").get<std::string>());
  c.neuron = neuron_from(j.at("neuron"));
  c.residual_neuron = neuron_from(j.at("residual_neuron"));
  c.surrogate.alpha = j.at("surrogate_alpha").get<float>();
  c.time_steps = j.at("time_steps").get<int>();
  c.num_classes = j.at("num_classes").get<int>();
  c.readout = parse_readout(j.value("readout", std::string("sum")));
  c.downsample_spike_sn = j.value("downsample_spike_sn", true);
  c.validate();
  return c;
}

Var DualLogits::logits_a() const {
  if (!accumulation) {
    throw LogitsAbsentError("accumulation logits do not exist in FSNN mode");
  }
  return *accumulation;
}

// --- build / forward -----------------------------------------------------------

Network Network::build(const NetworkConfig& config, uint64_t seed) {
  config.validate();
  Network net;
  net.config_ = config;
  Rng rng(seed);
  net.stem = ConvBn("stem", config.in_channels, config.stem_channels, 3, ConvGeometry{1, 1},
                    Pathway::kSpike, rng);
  net.blocks.reserve(static_cast<size_t>(config.total_blocks()));
  int64_t ch = config.stem_channels;
  for (size_t si = 0; si < config.stages.size(); ++si) {
    const StageConfig& stage = config.stages[si];
    for (int bi = 0; bi < stage.blocks; ++bi) {
      BlockConfig bc;
      bc.kind = config.block_kind;
      bc.g = config.g;
      bc.neuron = config.neuron;
      bc.residual_neuron = config.residual_neuron;
      bc.surrogate = config.surrogate;
      bc.in_channels = ch;
      bc.out_channels = stage.channels;
      bc.stride = (bi == 0 && stage.downsample) ? 2 : 1;
      bc.downsample_spike_sn = config.downsample_spike_sn;
      net.blocks.emplace_back("stage" + std::to_string(si) + ".block" + std::to_string(bi), bc,
                              rng);
      net.blocks.back().identity_init();
      ch = stage.channels;
    }
  }
  net.head_spike = LinearLayer("head_spike", ch, config.num_classes, Pathway::kSpike, rng);
  net.head_accum = LinearLayer("head_accum", ch, config.num_classes, Pathway::kAccumulation, rng);
  return net;
}

DualLogits Network::forward(ForwardContext& ctx, const Tensor& x, bool input_binary,
                            InferenceMode mode, ForwardTrace* trace) {
  return forward(ctx, ctx.tape.leaf(x), input_binary, mode, trace);
}

DualLogits Network::forward(ForwardContext& ctx, Var x, bool input_binary, InferenceMode mode,
                            ForwardTrace* trace) {
  Tape& tape = ctx.tape;
  const Tensor& xv = tape.value(x);
  const NetworkConfig& c = config_;
  if (xv.rank() != 5 || xv.dim(0) != c.time_steps || xv.dim(2) != c.in_channels ||
      xv.dim(3) != c.height || xv.dim(4) != c.width) {
    throw ShapeError("network input must be (T=" + std::to_string(c.time_steps) + ", N, " +
                     std::to_string(c.in_channels) + ", " + std::to_string(c.height) + ", " +
                     std::to_string(c.width) + "), got " + shape_str(xv.shape()));
  }
  if (input_binary && ctx.check_spikes) check_binary(xv, "network input");

  Activation o = spike(ctx, stem.forward(ctx, Activation{x, input_binary}).value, c.neuron,
                       c.surrogate);
  if (trace) {
    trace->stem = o.value;
    trace->blocks.clear();
    trace->blocks.reserve(blocks.size());
  }
  DualStreamState state{o, std::nullopt};
  if (mode == InferenceMode::kDsnn) state.a = o.value;
  for (ResidualBlock& b : blocks) {
    BlockTrace* bt = trace ? &trace->blocks.emplace_back() : nullptr;
    state = b.forward(ctx, state, bt);
  }

  DualLogits out;
  out.mode = mode;
  Var pooled_s = global_avg_pool(tape, sum_time(tape, state.o.value));
  out.spike = head_spike.forward(ctx, Activation{pooled_s, false});
  if (mode == InferenceMode::kDsnn) {
    Var mean_a = scale(tape, sum_time(tape, *state.a), 1.0f / static_cast<float>(c.time_steps));
    Var pooled_a = global_avg_pool(tape, mean_a);
    out.accumulation = head_accum.forward(ctx, Activation{pooled_a, false});
  }
  return out;
}

Tensor Network::scores(const Tape& tape, const DualLogits& logits) const {
  if (logits.mode == InferenceMode::kFsnn) return tape.value(logits.spike);
  switch (config_.readout) {
    case Readout::kSpikeOnly: return tape.value(logits.spike);
    case Readout::kAccumulationOnly: return tape.value(logits.logits_a());
    case Readout::kSum: {
      Tensor s = tape.value(logits.spike);
      s += tape.value(logits.logits_a());
      return s;
    }
  }
  return {};
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (ConvBn* c : conv_layers()) c->collect(out);
  head_spike.collect(out);
  head_accum.collect(out);
  return out;
}

std::vector<ConvBn*> Network::conv_layers() {
  std::vector<ConvBn*> out{&stem};
  for (ResidualBlock& b : blocks) {
    for (ConvBn* c : b.conv_layers()) out.push_back(c);
  }
  return out;
}

std::vector<LinearLayer*> Network::linear_layers() { return {&head_spike, &head_accum}; }

void Network::fuse() {
  if (fused_) throw std::logic_error("network is already fused");
  for (ConvBn* c : conv_layers()) c->fuse();
  fused_ = true;
}

// --- checkpoint ------------------------------------------------------------------
//
// Layout (little-endian):
//   "SPKC" | u16 version | u32 header_len | header JSON | u32 tensor_count |
//   tensor_count x (u16 name_len | name | u8 rank | u32 dims[rank] | f32 data) |
//   u32 CRC32 of every preceding byte

namespace {

constexpr char kCheckpointMagic[4] = {'S', 'P', 'K', 'C'};
constexpr uint16_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little, "little-endian host required");

template <typename T>
void put(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

class Reader {
 public:
  Reader(const std::string& data, size_t end) : data_(data), end_(end) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string bytes(size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void floats(float* dst, size_t n) {
    need(n * sizeof(float));
    std::memcpy(dst, data_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }
  bool done() const { return pos_ == end_; }

 private:
  void need(size_t n) const {
    if (pos_ + n > end_) throw CheckpointError("checkpoint truncated");
  }
  const std::string& data_;
  size_t end_;
  size_t pos_ = 0;
};

std::map<std::string, Tensor*> named_tensors(Network& net) {
  std::map<std::string, Tensor*> out;
  auto add_named = [&](const std::string& name, Tensor* t) {
    if (!out.emplace(name, t).second) throw std::logic_error("duplicate tensor name " + name);
  };
  for (ConvBn* c : net.conv_layers()) {
    add_named(c->weight.name, &c->weight.value);
    if (c->bias) add_named(c->bias->name, &c->bias->value);
    if (c->has_bn) {
      add_named(c->gamma.name, &c->gamma.value);
      add_named(c->beta.name, &c->beta.value);
      add_named(c->name + ".bn.running_mean", &c->stats.mean);
      add_named(c->name + ".bn.running_var", &c->stats.var);
    }
  }
  for (LinearLayer* l : net.linear_layers()) {
    add_named(l->weight.name, &l->weight.value);
    add_named(l->bias.name, &l->bias.value);
  }
  return out;
}

void write_container(const std::filesystem::path& path, const json& header,
                     const std::map<std::string, Tensor*>& tensors) {
  std::string buf(kCheckpointMagic, 4);
  put<uint16_t>(buf, kCheckpointVersion);
  const std::string h = header.dump();
  put<uint32_t>(buf, static_cast<uint32_t>(h.size()));
  buf += h;
  put<uint32_t>(buf, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put<uint16_t>(buf, static_cast<uint16_t>(name.size()));
    buf += name;
    put<uint8_t>(buf, static_cast<uint8_t>(t->rank()));
    for (int64_t d : t->shape()) put<uint32_t>(buf, static_cast<uint32_t>(d));
    buf.append(reinterpret_cast<const char*>(t->ptr()), static_cast<size_t>(t->numel()) * 4);
  }
  const uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(buf.size()));
  put<uint32_t>(buf, static_cast<uint32_t>(crc));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot open " + path.string() + " for writing");
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw CheckpointError("failed writing " + path.string());
}

struct Container {
  json header;
  std::map<std::string, Tensor> tensors;
};

Container read_container(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string data = ss.str();
  if (data.size() < 4 || std::memcmp(data.data(), kCheckpointMagic, 4) != 0) {
    throw CheckpointError(path.string() + ": not a checkpoint (bad magic)");
  }
  if (data.size() < 10) throw CheckpointError("checkpoint truncated");
  const size_t body = data.size() - 4;
  uint32_t stored;
  std::memcpy(&stored, data.data() + body, 4);
  const uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(body));
  Reader r(data, body);
  r.bytes(4);
  const uint16_t version = r.get<uint16_t>();
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const uint32_t hlen = r.get<uint32_t>();
  Container c;
  const std::string htext = r.bytes(hlen);
  if (static_cast<uint32_t>(crc) != stored) throw CheckpointError("checkpoint checksum mismatch");
  c.header = json::parse(htext);
  const uint32_t count = r.get<uint32_t>();
  for (uint32_t i = 0; i < count; ++i) {
    const uint16_t nlen = r.get<uint16_t>();
    std::string name = r.bytes(nlen);
    const uint8_t rank = r.get<uint8_t>();
    Shape shape;
    for (uint8_t d = 0; d < rank; ++d) shape.push_back(r.get<uint32_t>());
    Tensor t(shape);
    r.floats(t.ptr(), static_cast<size_t>(t.numel()));
    c.tensors.emplace(std::move(name), std::move(t));
  }
  if (!r.done()) throw CheckpointError("checkpoint has trailing bytes");
  return c;
}

json make_header(const Network& net, bool weights) {
  return json{{"format", "spikestream-checkpoint"},
              {"config", net.config().to_json()},
              {"fused", net.fused()},
              {"weights", weights}};
}

}  // namespace

void Network::save(const std::filesystem::path& path) const {
  Network& self = const_cast<Network&>(*this);
  write_container(path, make_header(*this, true), named_tensors(self));
}

void Network::save_architecture(const std::filesystem::path& path) const {
  write_container(path, make_header(*this, false), {});
}

namespace {

Network from_header(const json& header) {
  Network net = Network::build(NetworkConfig::from_json(header.at("config")), 0);
  if (header.value("fused", false)) net.fuse();
  return net;
}

}  // namespace

Network Network::load(const std::filesystem::path& path) {
  Container c = read_container(path);
  if (!c.header.value("weights", false)) {
    throw CheckpointError(path.string() + " is an architecture description without weights");
  }
  Network net = from_header(c.header);
  std::map<std::string, Tensor*> slots = named_tensors(net);
  for (auto& [name, slot] : slots) {
    auto it = c.tensors.find(name);
    if (it == c.tensors.end()) throw CheckpointError("checkpoint is missing tensor " + name);
    if (it->second.shape() != slot->shape()) {
      throw CheckpointError("tensor " + name + " has shape " + shape_str(it->second.shape()) +
                            ", expected " + shape_str(slot->shape()));
    }
    *slot = std::move(it->second);
    c.tensors.erase(it);
  }
  if (!c.tensors.empty()) {
    throw CheckpointError("checkpoint has unexpected tensor " + c.tensors.begin()->first);
  }
  return net;
}

Network Network::load_architecture(const std::filesystem::path& path) {
  return from_header(read_container(path).header);
}

}  // namespace spikestream
