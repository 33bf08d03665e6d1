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

#ifndef SPIKESTREAM_DATA_H_
#define SPIKESTREAM_DATA_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spikestream/tensor.h"

namespace spikestream {

// Samples stacked along dim 0: either static images (n, C, H, W) or spike
// sequences (n, T, C, H, W).
struct Dataset {
  Tensor inputs;
  std::vector<int> labels;
  int num_classes = 2;
  bool binary = false;
  std::string split = "train";

  int64_t size() const { return static_cast<int64_t>(labels.size()); }
  bool temporal() const { return inputs.rank() == 5; }
  Shape sample_shape() const;
  // Throws std::invalid_argument on label/shape inconsistencies.
  void validate() const;
};

enum class EncoderKind { kPoisson, kDirect };

struct EncoderConfig {
  EncoderKind kind = EncoderKind::kDirect;
  int time_steps = 4;
  uint64_t seed = 0;
};

EncoderKind parse_encoder(std::string_view s);

// (C, H, W) in [0, 1] -> binary (T, C, H, W); pixel p spikes with
// probability p at each step. Throws std::invalid_argument outside [0, 1].
Tensor poisson_encode(const Tensor& image, int time_steps, uint64_t seed);
// (C, H, W) -> (T, C, H, W), the image repeated.
Tensor direct_encode(const Tensor& image, int time_steps);

struct SynthOptions {
  int64_t channels = 2;
  int64_t height = 3;
  int64_t width = 3;
  // Per-step spike probability inside a burst and outside of it.
  float burst_rate = 0.9f;
  float noise_rate = 0.1f;
};

// Balanced two-class spike sequences: class 0 bursts in the first half of the
// window, class 1 in the second half. Samples alternate classes.
Dataset synth_two_class(int64_t n, int time_steps, uint64_t seed, const SynthOptions& opts = {});

struct Batch {
  Tensor x;  // (T, B, C, H, W)
  std::vector<int> labels;
  bool binary = false;
};

// Gathers samples `indices`. Static images are encoded with `enc`; temporal
// samples must already have T == time_steps.
Batch make_batch(const Dataset& data, std::span<const int64_t> indices, int time_steps,
                 const EncoderConfig& enc);

// --- SPKD container -------------------------------------------------------------
//
//   "SPKD" | u16 version | u32 sample_count | u8 ndim | u32 dims[ndim] (per sample)
//   | u8 label_width (1, 2 or 4) | u8 flags (bit 0: binary) | u32 num_classes
//   | labels (label_width bytes each) | f32 payload | u32 CRC32 of all prior bytes
//
// All integers and floats little-endian.

class DataFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class BadMagicError : public DataFormatError {
 public:
  using DataFormatError::DataFormatError;
};
class TruncatedError : public DataFormatError {
 public:
  using DataFormatError::DataFormatError;
};
class ChecksumError : public DataFormatError {
 public:
  using DataFormatError::DataFormatError;
};

std::string encode_spkd(const Dataset& data);
Dataset decode_spkd(const std::string& bytes);
void save_spkd(const Dataset& data, const std::filesystem::path& path);
Dataset load_spkd(const std::filesystem::path& path);

}  // namespace spikestream

#endif  // SPIKESTREAM_DATA_H_
