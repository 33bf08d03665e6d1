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

#ifndef SPIKESTREAM_CONFIG_H_
#define SPIKESTREAM_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "spikestream/data.h"
#include "spikestream/network.h"
#include "spikestream/train.h"

namespace spikestream {

// A small TOML subset: [section] headers, key = value lines, # comments.
// Values are integers, floats, booleans, "strings" or flat [arrays] of those.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct ConfigValue;
using ConfigArray = std::vector<ConfigValue>;
struct ConfigValue {
  std::variant<int64_t, double, bool, std::string, ConfigArray> value;
  int line = 0;
};

class ConfigDocument {
 public:
  static ConfigDocument parse(const std::string& text, const std::string& source = "<config>");
  static ConfigDocument load(const std::filesystem::path& path);

  const std::string& source() const { return source_; }
  bool has(const std::string& section, const std::string& key) const;
  const ConfigValue* find(const std::string& section, const std::string& key) const;

  // Typed getters; a wrong type throws ConfigError at the value's line.
  std::optional<int64_t> get_int(const std::string& section, const std::string& key) const;
  std::optional<double> get_float(const std::string& section, const std::string& key) const;
  std::optional<bool> get_bool(const std::string& section, const std::string& key) const;
  std::optional<std::string> get_string(const std::string& section, const std::string& key) const;
  std::optional<std::vector<int64_t>> get_int_array(const std::string& section,
                                                     const std::string& key) const;
  std::optional<std::vector<bool>> get_bool_array(const std::string& section,
                                                   const std::string& key) const;

  // Throws ConfigError on the first key not in `allowed` for that section,
  // or on a section not listed at all.
  void check_keys(const std::map<std::string, std::vector<std::string>>& allowed) const;

  [[noreturn]] void fail(const std::string& section, const std::string& key,
                         const std::string& message) const;

 private:
  std::string source_;
  // section -> key -> value, plus the header line of each section
  std::map<std::string, std::map<std::string, ConfigValue>> sections_;
  std::map<std::string, int> section_lines_;
};

enum class DataKind { kSynth2, kSpkd };

struct DataConfig {
  DataKind kind = DataKind::kSynth2;
  std::string path;  // SPKD file for kSpkd
  int64_t n = 2000;
  uint64_t seed = 0;
  float burst_rate = SynthOptions{}.burst_rate;
  float noise_rate = SynthOptions{}.noise_rate;
};

struct RunConfig {
  NetworkConfig network;
  TrainConfig train;
  DataConfig data;
  std::string checkpoint = "checkpoint.spkc";
  std::string log = "train_log.ndjson";
  bool seed_given = false;  // [train] seed was present
};

// Reads [network], [train] and [data]. Every key is optional; unknown keys
// and invalid values are reported with their line.
RunConfig run_config_from(const ConfigDocument& doc);
RunConfig load_run_config(const std::filesystem::path& path);

// Synthetic sets take channels/size/T from the network config.
Dataset load_dataset(const DataConfig& data, const NetworkConfig& net);

}  // namespace spikestream

#endif  // SPIKESTREAM_CONFIG_H_
