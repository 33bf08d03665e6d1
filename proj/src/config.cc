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

#include "spikestream/config.h"

#include <algorithm>
#include <cctype>
#include <climits>
#include <charconv>
#include <fstream>
#include <sstream>

namespace spikestream {

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(line > 0 ? source + ":" + std::to_string(line) + ": " + message
                                  : source + ": " + message),
      line_(line) {}

namespace {

bool is_key_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string trim(std::string_view s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Removes a trailing comment, honouring quoted strings.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted && c == '\\') {
      ++i;
    } else if (c == '"') {
      quoted = !quoted;
    } else if (c == '#' && !quoted) {
      return line.substr(0, i);
    }
  }
  return line;
}

class ValueParser {
 public:
  ValueParser(std::string_view text, const std::string& source, int line)
      : text_(text), source_(source), line_(line) {}

  ConfigValue parse_all() {
    ConfigValue v = parse_value(true);
    skip_space();
    if (pos_ != text_.size()) error("unexpected '" + std::string(text_.substr(pos_)) + "' after value");
    return v;
  }

 private:
  [[noreturn]] void error(const std::string& msg) const { throw ConfigError(source_, line_, msg); }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  ConfigValue parse_value(bool allow_array) {
    skip_space();
    if (pos_ >= text_.size()) error("missing value");
    const char c = text_[pos_];
    if (c == '"') return {parse_string(), line_};
    if (c == '[') {
      if (!allow_array) error("nested arrays are not supported");
      return {parse_array(), line_};
    }
    size_t end = pos_;
    while (end < text_.size() && text_[end] != ',' && text_[end] != ']' &&
           !std::isspace(static_cast<unsigned char>(text_[end]))) {
      ++end;
    }
    const std::string token(text_.substr(pos_, end - pos_));
    pos_ = end;
    if (token == "true") return {true, line_};
    if (token == "false") return {false, line_};
    const bool looks_float = token.find_first_of(".eE") != std::string::npos;
    if (!looks_float) {
      int64_t iv = 0;
      const char* first = token.data() + (token.size() > 1 && token[0] == '+' ? 1 : 0);
      auto [p, ec] = std::from_chars(first, token.data() + token.size(), iv);
      if (ec == std::errc() && p == token.data() + token.size()) return {iv, line_};
    } else {
      // from_chars for double is not available in every libstdc++ of interest.
      std::istringstream in(token);
      in.imbue(std::locale::classic());
      double dv = 0.0;
      in >> dv;
      if (in && in.peek() == std::char_traits<char>::eof()) return {dv, line_};
    }
    error("cannot parse value '" + token + "'");
  }

  std::string parse_string() {
    ++pos_;  // opening quote
    std::string out;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos_ >= text_.size()) break;
      switch (const char e = text_[pos_++]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: error(std::string("unknown escape '\\") + e + "'");
      }
    }
    error("unterminated string");
  }

  ConfigArray parse_array() {
    ++pos_;  // [
    ConfigArray out;
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == ']') {
      ++pos_;
      return out;
    }
    while (true) {
      out.push_back(parse_value(false));
      skip_space();
      if (pos_ >= text_.size()) error("unterminated array");
      const char c = text_[pos_++];
      if (c == ']') return out;
      if (c != ',') error("expected ',' or ']' in array");
      skip_space();
      if (pos_ < text_.size() && text_[pos_] == ']') {
        ++pos_;
        return out;
      }
    }
  }

  std::string_view text_;
  const std::string& source_;
  int line_;
  size_t pos_ = 0;
};

const char* type_name(const ConfigValue& v) {
  switch (v.value.index()) {
    case 0: return "integer";
    case 1: return "float";
    case 2: return "boolean";
    case 3: return "string";
    default: return "array";
  }
}

}  // namespace

ConfigDocument ConfigDocument::parse(const std::string& text, const std::string& source) {
  ConfigDocument doc;
  doc.source_ = source;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source, line_no, "malformed section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty() || !std::all_of(section.begin(), section.end(), is_key_char)) {
        throw ConfigError(source, line_no, "invalid section name '" + section + "'");
      }
      if (doc.section_lines_.count(section)) {
        throw ConfigError(source, line_no, "duplicate section [" + section + "]");
      }
      doc.section_lines_[section] = line_no;
      doc.sections_[section];
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(source, line_no, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    if (key.empty() || !std::all_of(key.begin(), key.end(), is_key_char)) {
      throw ConfigError(source, line_no, "invalid key '" + key + "'");
    }
    if (section.empty()) throw ConfigError(source, line_no, "key '" + key + "' outside of a section");
    auto& keys = doc.sections_[section];
    if (keys.count(key)) throw ConfigError(source, line_no, "duplicate key '" + key + "'");
    keys[key] = ValueParser(std::string_view(line).substr(eq + 1), source, line_no).parse_all();
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

bool ConfigDocument::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const ConfigValue* ConfigDocument::find(const std::string& section, const std::string& key) const {
  auto s = sections_.find(section);
  if (s == sections_.end()) return nullptr;
  auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

void ConfigDocument::fail(const std::string& section, const std::string& key,
                          const std::string& message) const {
  const ConfigValue* v = find(section, key);
  int line = v ? v->line : 0;
  if (!v) {
    auto s = section_lines_.find(section);
    if (s != section_lines_.end()) line = s->second;
  }
  throw ConfigError(source_, line, (key.empty() ? section : section + "." + key) + ": " + message);
}

std::optional<int64_t> ConfigDocument::get_int(const std::string& section, const std::string& key) const {
  const ConfigValue* v = find(section, key);
  if (!v) return std::nullopt;
  if (const auto* i = std::get_if<int64_t>(&v->value)) return *i;
  fail(section, key, std::string("expected an integer, got ") + type_name(*v));
}

std::optional<double> ConfigDocument::get_float(const std::string& section, const std::string& key) const {
  const ConfigValue* v = find(section, key);
  if (!v) return std::nullopt;
  if (const auto* d = std::get_if<double>(&v->value)) return *d;
  if (const auto* i = std::get_if<int64_t>(&v->value)) return static_cast<double>(*i);
  fail(section, key, std::string("expected a number, got ") + type_name(*v));
}

std::optional<bool> ConfigDocument::get_bool(const std::string& section, const std::string& key) const {
  const ConfigValue* v = find(section, key);
  if (!v) return std::nullopt;
  if (const auto* b = std::get_if<bool>(&v->value)) return *b;
  fail(section, key, std::string("expected true or false, got ") + type_name(*v));
}

std::optional<std::string> ConfigDocument::get_string(const std::string& section,
                                                       const std::string& key) const {
  const ConfigValue* v = find(section, key);
  if (!v) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(&v->value)) return *s;
  fail(section, key, std::string("expected a string, got ") + type_name(*v));
}

std::optional<std::vector<int64_t>> ConfigDocument::get_int_array(const std::string& section,
                                                                  const std::string& key) const {
  const ConfigValue* v = find(section, key);
  if (!v) return std::nullopt;
  const auto* arr = std::get_if<ConfigArray>(&v->value);
  if (!arr) fail(section, key, std::string("expected an array of integers, got ") + type_name(*v));
  std::vector<int64_t> out;
  for (const ConfigValue& e : *arr) {
    const auto* i = std::get_if<int64_t>(&e.value);
    if (!i) fail(section, key, std::string("array element is a ") + type_name(e) + ", expected integer");
    out.push_back(*i);
  }
  return out;
}

std::optional<std::vector<bool>> ConfigDocument::get_bool_array(const std::string& section,
                                                                const std::string& key) const {
  const ConfigValue* v = find(section, key);
  if (!v) return std::nullopt;
  const auto* arr = std::get_if<ConfigArray>(&v->value);
  if (!arr) fail(section, key, std::string("expected an array of booleans, got ") + type_name(*v));
  std::vector<bool> out;
  for (const ConfigValue& e : *arr) {
    const auto* b = std::get_if<bool>(&e.value);
    if (!b) fail(section, key, std::string("array element is a ") + type_name(e) + ", expected boolean");
    out.push_back(*b);
  }
  return out;
}

void ConfigDocument::check_keys(const std::map<std::string, std::vector<std::string>>& allowed) const {
  for (const auto& [section, keys] : sections_) {
    auto a = allowed.find(section);
    if (a == allowed.end()) {
      throw ConfigError(source_, section_lines_.at(section), "unknown section [" + section + "]");
    }
    for (const auto& [key, value] : keys) {
      if (std::find(a->second.begin(), a->second.end(), key) == a->second.end()) {
        throw ConfigError(source_, value.line, "unknown key '" + key + "' in [" + section + "]");
      }
    }
  }
}

namespace {

const std::map<std::string, std::vector<std::string>> kAllowedKeys = {
    {"network",
     {"in_channels", "height", "width", "stem_channels", "stage_blocks", "stage_channels",
      "stage_downsample", "block", "g", "neuron", "v_threshold", "v_reset", "tau", "detach_reset",
      "residual_neuron", "residual_v_threshold", "alpha", "time_steps", "num_classes", "readout",
      "downsample_spike_sn"}},
    {"train",
     {"epochs", "lr", "momentum", "weight_decay", "schedule", "t_max", "step_size", "step_gamma",
      "batch_size", "seed", "dual_stream", "encoder", "encoder_seed", "checkpoint", "log"}},
    {"data", {"kind", "path", "n", "seed", "burst_rate", "noise_rate"}},
};

NeuronKind parse_neuron_kind(const std::string& s) {
  std::string u = s;
  for (char& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "IF") return NeuronKind::kIF;
  if (u == "LIF") return NeuronKind::kLIF;
  throw std::invalid_argument("unknown neuron '" + s + "' (IF|LIF)");
}

DataKind parse_data_kind(const std::string& s) {
  if (s == "synth2") return DataKind::kSynth2;
  if (s == "spkd") return DataKind::kSpkd;
  throw std::invalid_argument("unknown data kind '" + s + "' (synth2|spkd)");
}

// Runs `fn` and re-throws std::invalid_argument at the key's line.
template <typename Fn>
void at_key(const ConfigDocument& doc, const std::string& section, const std::string& key, Fn fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    doc.fail(section, key, e.what());
  }
}

int to_int(const ConfigDocument& doc, const std::string& s, const std::string& k, int64_t v) {
  if (v < INT32_MIN || v > INT32_MAX) doc.fail(s, k, "value out of range");
  return static_cast<int>(v);
}

}  // namespace

RunConfig run_config_from(const ConfigDocument& doc) {
  doc.check_keys(kAllowedKeys);
  RunConfig rc;
  NetworkConfig& n = rc.network;
  const std::string net = "network";
  if (auto v = doc.get_int(net, "in_channels")) n.in_channels = *v;
  if (auto v = doc.get_int(net, "height")) n.height = *v;
  if (auto v = doc.get_int(net, "width")) n.width = *v;
  if (auto v = doc.get_int(net, "stem_channels")) n.stem_channels = *v;
  auto blocks = doc.get_int_array(net, "stage_blocks");
  auto channels = doc.get_int_array(net, "stage_channels");
  auto downsample = doc.get_bool_array(net, "stage_downsample");
  if (blocks || channels || downsample) {
    if (!blocks || !channels) doc.fail(net, "stage_blocks", "stage_blocks and stage_channels go together");
    if (blocks->size() != channels->size() || (downsample && downsample->size() != blocks->size())) {
      doc.fail(net, "stage_channels", "stage arrays must have equal length");
    }
    n.stages.clear();
    for (size_t i = 0; i < blocks->size(); ++i) {
      n.stages.push_back(StageConfig{to_int(doc, net, "stage_blocks", (*blocks)[i]), (*channels)[i],
                                     downsample ? static_cast<bool>((*downsample)[i]) : false});
    }
  }
  if (auto v = doc.get_string(net, "block")) at_key(doc, net, "block", [&] { n.block_kind = parse_block_kind(*v); });
  if (auto v = doc.get_string(net, "g")) at_key(doc, net, "g", [&] { n.g = parse_g_function(*v); });
  if (auto v = doc.get_string(net, "neuron")) at_key(doc, net, "neuron", [&] { n.neuron.kind = parse_neuron_kind(*v); });
  if (auto v = doc.get_float(net, "v_threshold")) n.neuron.v_threshold = static_cast<float>(*v);
  if (auto v = doc.get_float(net, "v_reset")) n.neuron.v_reset = static_cast<float>(*v);
  if (auto v = doc.get_float(net, "tau")) n.neuron.tau = static_cast<float>(*v);
  if (auto v = doc.get_bool(net, "detach_reset")) n.neuron.detach_reset = *v;
  n.residual_neuron.detach_reset = n.neuron.detach_reset;
  if (auto v = doc.get_string(net, "residual_neuron")) {
    at_key(doc, net, "residual_neuron", [&] { n.residual_neuron.kind = parse_neuron_kind(*v); });
  }
  if (auto v = doc.get_float(net, "residual_v_threshold")) n.residual_neuron.v_threshold = static_cast<float>(*v);
  if (auto v = doc.get_float(net, "alpha")) n.surrogate.alpha = static_cast<float>(*v);
  if (auto v = doc.get_int(net, "time_steps")) n.time_steps = to_int(doc, net, "time_steps", *v);
  if (auto v = doc.get_int(net, "num_classes")) n.num_classes = to_int(doc, net, "num_classes", *v);
  if (auto v = doc.get_string(net, "readout")) at_key(doc, net, "readout", [&] { n.readout = parse_readout(*v); });
  if (auto v = doc.get_bool(net, "downsample_spike_sn")) n.downsample_spike_sn = *v;

  TrainConfig& t = rc.train;
  const std::string tr = "train";
  if (auto v = doc.get_int(tr, "epochs")) t.epochs = to_int(doc, tr, "epochs", *v);
  if (auto v = doc.get_float(tr, "lr")) t.lr = static_cast<float>(*v);
  if (auto v = doc.get_float(tr, "momentum")) t.momentum = static_cast<float>(*v);
  if (auto v = doc.get_float(tr, "weight_decay")) t.weight_decay = static_cast<float>(*v);
  if (auto v = doc.get_string(tr, "schedule")) at_key(doc, tr, "schedule", [&] { t.schedule = parse_schedule(*v); });
  if (auto v = doc.get_int(tr, "t_max")) t.t_max = to_int(doc, tr, "t_max", *v);
  if (auto v = doc.get_int(tr, "step_size")) t.step_size = to_int(doc, tr, "step_size", *v);
  if (auto v = doc.get_float(tr, "step_gamma")) t.step_gamma = static_cast<float>(*v);
  if (auto v = doc.get_int(tr, "batch_size")) t.batch_size = to_int(doc, tr, "batch_size", *v);
  if (auto v = doc.get_int(tr, "seed")) {
    if (*v < 0) doc.fail(tr, "seed", "must be >= 0");
    t.seed = static_cast<uint64_t>(*v);
    rc.seed_given = true;
  }
  if (auto v = doc.get_bool(tr, "dual_stream")) t.dual_stream = *v;
  if (auto v = doc.get_string(tr, "encoder")) at_key(doc, tr, "encoder", [&] { t.encoder.kind = parse_encoder(*v); });
  if (auto v = doc.get_int(tr, "encoder_seed")) t.encoder.seed = static_cast<uint64_t>(*v);
  if (auto v = doc.get_string(tr, "checkpoint")) rc.checkpoint = *v;
  if (auto v = doc.get_string(tr, "log")) rc.log = *v;
  t.encoder.time_steps = n.time_steps;

  DataConfig& d = rc.data;
  const std::string da = "data";
  if (auto v = doc.get_string(da, "kind")) at_key(doc, da, "kind", [&] { d.kind = parse_data_kind(*v); });
  if (auto v = doc.get_string(da, "path")) d.path = *v;
  if (auto v = doc.get_int(da, "n")) {
    if (*v < 0) doc.fail(da, "n", "must be >= 0");
    d.n = *v;
  }
  if (auto v = doc.get_int(da, "seed")) d.seed = static_cast<uint64_t>(*v);
  if (auto v = doc.get_float(da, "burst_rate")) d.burst_rate = static_cast<float>(*v);
  if (auto v = doc.get_float(da, "noise_rate")) d.noise_rate = static_cast<float>(*v);
  if (d.kind == DataKind::kSpkd && d.path.empty()) doc.fail(da, "path", "required when kind = \"spkd\"");

  // Whole-object checks have no single key; report them at the section.
  try {
    n.validate();
  } catch (const std::invalid_argument& e) {
    doc.fail(net, "", e.what());
  }
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    doc.fail(tr, "", e.what());
  }
  return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return run_config_from(ConfigDocument::load(path));
}

Dataset load_dataset(const DataConfig& data, const NetworkConfig& net) {
  if (data.kind == DataKind::kSpkd) return load_spkd(data.path);
  SynthOptions opts;
  opts.channels = net.in_channels;
  opts.height = net.height;
  opts.width = net.width;
  opts.burst_rate = data.burst_rate;
  opts.noise_rate = data.noise_rate;
  return synth_two_class(data.n, net.time_steps, data.seed, opts);
}

}  // namespace spikestream
