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

#include "spikestream/data.h"

#include <zlib.h>

#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>

namespace spikestream {

Shape Dataset::sample_shape() const {
  return Shape(inputs.shape().begin() + 1, inputs.shape().end());
}

void Dataset::validate() const {
  if (num_classes < 1) throw std::invalid_argument("dataset: num_classes must be >= 1");
  if (inputs.rank() != 4 && inputs.rank() != 5) {
    throw std::invalid_argument("dataset: samples must be (C,H,W) or (T,C,H,W), got stacked " +
                                shape_str(inputs.shape()));
  }
  if (inputs.dim(0) != size()) throw std::invalid_argument("dataset: label count != sample count");
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw std::invalid_argument("dataset: label " + std::to_string(y) + " out of range");
    }
  }
  if (binary && !inputs.is_binary()) throw std::invalid_argument("dataset: flagged binary but is not");
}

EncoderKind parse_encoder(std::string_view s) {
  std::string u(s);
  for (char& c : u) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (u == "poisson") return EncoderKind::kPoisson;
  if (u == "direct") return EncoderKind::kDirect;
  throw std::invalid_argument("unknown encoder '" + std::string(s) + "' (poisson|direct)");
}

Tensor poisson_encode(const Tensor& image, int time_steps, uint64_t seed) {
  if (time_steps < 1) throw std::invalid_argument("poisson_encode: T must be >= 1");
  for (float v : image.data()) {
    if (!(v >= 0.0f && v <= 1.0f)) throw std::invalid_argument("poisson_encode: pixel outside [0, 1]");
  }
  Shape shape{time_steps};
  shape.insert(shape.end(), image.shape().begin(), image.shape().end());
  Tensor out(shape);
  Rng rng(seed);
  const int64_t n = image.numel();
  for (int t = 0; t < time_steps; ++t) {
    for (int64_t i = 0; i < n; ++i) out[t * n + i] = rng.uniform() < image[i] ? 1.0f : 0.0f;
  }
  return out;
}

Tensor direct_encode(const Tensor& image, int time_steps) {
  if (time_steps < 1) throw std::invalid_argument("direct_encode: T must be >= 1");
  Shape shape{time_steps};
  shape.insert(shape.end(), image.shape().begin(), image.shape().end());
  Tensor out(shape);
  const int64_t n = image.numel();
  for (int t = 0; t < time_steps; ++t) std::copy_n(image.ptr(), n, out.ptr() + t * n);
  return out;
}

Dataset synth_two_class(int64_t n, int time_steps, uint64_t seed, const SynthOptions& o) {
  if (n < 0) throw std::invalid_argument("synth_two_class: n must be >= 0");
  if (time_steps < 2) throw std::invalid_argument("synth_two_class: T must be >= 2");
  if (o.channels < 1 || o.height < 1 || o.width < 1) {
    throw std::invalid_argument("synth_two_class: sample dims must be >= 1");
  }
  for (float r : {o.burst_rate, o.noise_rate}) {
    if (!(r >= 0.0f && r <= 1.0f)) throw std::invalid_argument("synth_two_class: rates must be in [0, 1]");
  }
  Dataset d;
  d.num_classes = 2;
  d.binary = true;
  d.inputs = Tensor({n, time_steps, o.channels, o.height, o.width});
  d.labels.resize(static_cast<size_t>(n));
  Rng rng(seed);
  const int64_t frame = o.channels * o.height * o.width;
  const int half = time_steps / 2;
  float* p = d.inputs.ptr();
  for (int64_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    d.labels[static_cast<size_t>(i)] = label;
    for (int t = 0; t < time_steps; ++t) {
      const bool in_burst = label == 0 ? t < half : t >= half;
      const float rate = in_burst ? o.burst_rate : o.noise_rate;
      for (int64_t k = 0; k < frame; ++k) *p++ = rng.uniform() < rate ? 1.0f : 0.0f;
    }
  }
  return d;
}

Batch make_batch(const Dataset& data, std::span<const int64_t> indices, int time_steps,
                 const EncoderConfig& enc) {
  const Shape ss = data.sample_shape();
  const int64_t b = static_cast<int64_t>(indices.size());
  Batch out;
  out.labels.reserve(indices.size());
  if (data.temporal()) {
    if (ss[0] != time_steps) {
      throw ShapeError("dataset has T=" + std::to_string(ss[0]) + ", network expects " +
                       std::to_string(time_steps));
    }
    const int64_t frame = ss[1] * ss[2] * ss[3];
    out.x = Tensor({time_steps, b, ss[1], ss[2], ss[3]});
    for (int64_t j = 0; j < b; ++j) {
      const int64_t i = indices[static_cast<size_t>(j)];
      const float* src = data.inputs.ptr() + i * time_steps * frame;
      for (int t = 0; t < time_steps; ++t) {
        std::copy_n(src + t * frame, frame, out.x.ptr() + (t * b + j) * frame);
      }
      out.labels.push_back(data.labels[static_cast<size_t>(i)]);
    }
    out.binary = data.binary;
    return out;
  }
  const int64_t frame = ss[0] * ss[1] * ss[2];
  out.x = Tensor({time_steps, b, ss[0], ss[1], ss[2]});
  for (int64_t j = 0; j < b; ++j) {
    const int64_t i = indices[static_cast<size_t>(j)];
    Tensor image(ss, std::vector<float>(data.inputs.ptr() + i * frame,
                                        data.inputs.ptr() + (i + 1) * frame));
    Tensor seq = enc.kind == EncoderKind::kPoisson
                     ? poisson_encode(image, time_steps, enc.seed * 0x9E3779B97F4A7C15ull + static_cast<uint64_t>(i))
                     : direct_encode(image, time_steps);
    for (int t = 0; t < time_steps; ++t) {
      std::copy_n(seq.ptr() + t * frame, frame, out.x.ptr() + (t * b + j) * frame);
    }
    out.labels.push_back(data.labels[static_cast<size_t>(i)]);
  }
  out.binary = enc.kind == EncoderKind::kPoisson || data.binary;
  return out;
}

// --- SPKD ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'P', 'K', 'D'};
constexpr uint16_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "little-endian host required");

template <typename T>
void put(std::string& buf, T v) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &v, sizeof(T));
  buf.append(bytes, sizeof(T));
}

class Cursor {
 public:
  explicit Cursor(const std::string& b) : b_(b) {}
  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(size_t n, const char* what) const {
    if (pos_ + n > b_.size()) {
      throw TruncatedError(std::string("SPKD truncated while reading ") + what);
    }
  }
  size_t pos() const { return pos_; }
  void skip(size_t n) { pos_ += n; }

 private:
  const std::string& b_;
  size_t pos_ = 0;
};

uint32_t crc_of(const char* p, size_t n) {
  return static_cast<uint32_t>(crc32(0L, reinterpret_cast<const Bytef*>(p), static_cast<uInt>(n)));
}

}  // namespace

std::string encode_spkd(const Dataset& data) {
  data.validate();
  const Shape ss = data.sample_shape();
  std::string buf(kMagic, 4);
  put<uint16_t>(buf, kVersion);
  put<uint32_t>(buf, static_cast<uint32_t>(data.size()));
  put<uint8_t>(buf, static_cast<uint8_t>(ss.size()));
  for (int64_t d : ss) put<uint32_t>(buf, static_cast<uint32_t>(d));
  const uint8_t width = data.num_classes <= 256 ? 1 : data.num_classes <= 65536 ? 2 : 4;
  put<uint8_t>(buf, width);
  put<uint8_t>(buf, data.binary ? 1 : 0);
  put<uint32_t>(buf, static_cast<uint32_t>(data.num_classes));
  for (int y : data.labels) {
    if (width == 1) put<uint8_t>(buf, static_cast<uint8_t>(y));
    else if (width == 2) put<uint16_t>(buf, static_cast<uint16_t>(y));
    else put<uint32_t>(buf, static_cast<uint32_t>(y));
  }
  buf.append(reinterpret_cast<const char*>(data.inputs.ptr()),
             static_cast<size_t>(data.inputs.numel()) * sizeof(float));
  put<uint32_t>(buf, crc_of(buf.data(), buf.size()));
  return buf;
}

Dataset decode_spkd(const std::string& bytes) {
  const size_t head = std::min<size_t>(bytes.size(), 4);
  if (std::memcmp(bytes.data(), kMagic, head) != 0) throw BadMagicError("not an SPKD container (bad magic)");
  if (head < 4) throw TruncatedError("SPKD truncated inside the magic");
  Cursor c(bytes);
  c.skip(4);
  const uint16_t version = c.get<uint16_t>("version");
  if (version != kVersion) throw DataFormatError("unsupported SPKD version " + std::to_string(version));
  const uint32_t count = c.get<uint32_t>("sample count");
  const uint8_t ndim = c.get<uint8_t>("rank");
  if (ndim != 3 && ndim != 4) throw DataFormatError("SPKD sample rank must be 3 or 4");
  Shape shape{static_cast<int64_t>(count)};
  for (uint8_t i = 0; i < ndim; ++i) shape.push_back(c.get<uint32_t>("dims"));
  const uint8_t width = c.get<uint8_t>("label width");
  if (width != 1 && width != 2 && width != 4) throw DataFormatError("SPKD label width must be 1, 2 or 4");
  const uint8_t flags = c.get<uint8_t>("flags");
  Dataset d;
  d.num_classes = static_cast<int>(c.get<uint32_t>("class count"));
  d.binary = (flags & 1) != 0;
  d.labels.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    if (width == 1) d.labels.push_back(c.get<uint8_t>("labels"));
    else if (width == 2) d.labels.push_back(c.get<uint16_t>("labels"));
    else d.labels.push_back(static_cast<int>(c.get<uint32_t>("labels")));
  }
  const size_t payload = static_cast<size_t>(shape_numel(shape)) * sizeof(float);
  c.need(payload, "payload");
  d.inputs = Tensor(shape);
  std::memcpy(d.inputs.ptr(), bytes.data() + c.pos(), payload);
  c.skip(payload);
  const size_t body = c.pos();
  const uint32_t stored = c.get<uint32_t>("checksum");
  if (c.pos() != bytes.size()) throw DataFormatError("SPKD has trailing bytes");
  if (stored != crc_of(bytes.data(), body)) throw ChecksumError("SPKD checksum mismatch");
  d.validate();
  return d;
}

void save_spkd(const Dataset& data, const std::filesystem::path& path) {
  const std::string buf = encode_spkd(data);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

Dataset load_spkd(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_spkd(ss.str());
}

}  // namespace spikestream
