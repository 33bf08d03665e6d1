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

#ifndef SPIKESTREAM_TENSOR_H_
#define SPIKESTREAM_TENSOR_H_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikestream {

using Shape = std::vector<int64_t>;

// Raised for any tensor shape contract violation. The message always names
// the offending shapes.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_str(const Shape& shape);
int64_t shape_numel(const Shape& shape);

// Dense row-major float32 array. Images use (N, C, H, W); sequences prepend a
// time axis, (T, N, C, H, W), and time is always the outermost dimension.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape), 0.0f); }
  static Tensor full(Shape shape, float v) { return Tensor(std::move(shape), v); }
  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape_, 0.0f); }

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int64_t dim(int i) const;
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  std::span<float> data() & { return data_; }
  std::span<const float> data() const& { return data_; }
  // Spans into a temporary would dangle.
  std::span<const float> data() && = delete;
  float* ptr() { return data_.data(); }
  const float* ptr() const { return data_.data(); }
  std::vector<float> to_vector() const { return data_; }

  float& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  float operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }

  // Multi-index access; bounds are checked.
  float& at(std::initializer_list<int64_t> idx);
  float at(std::initializer_list<int64_t> idx) const;

  Tensor reshaped(Shape shape) const&;
  Tensor reshaped(Shape shape) &&;

  void fill(float v);
  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(float s);

  bool all_finite() const;
  bool is_binary() const;
  double sum() const;
  float max_abs() const;

  bool operator==(const Tensor& other) const = default;

 private:
  int64_t offset(std::initializer_list<int64_t> idx) const;

  Shape shape_;
  std::vector<float> data_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* what);

// Deterministic generator. Uniform and normal draws are computed here instead
// of through <random> distributions so streams are identical across standard
// library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  // Uniform in [0, 1) with 24 bits of resolution.
  float uniform();
  float normal();
  int64_t below(int64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (int64_t i = static_cast<int64_t>(v.size()) - 1; i > 0; --i) {
      std::swap(v[static_cast<size_t>(i)], v[static_cast<size_t>(below(i + 1))]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  float spare_ = 0.0f;
};

}  // namespace spikestream

#endif  // SPIKESTREAM_TENSOR_H_
