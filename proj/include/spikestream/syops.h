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

#ifndef SPIKESTREAM_SYOPS_H_
#define SPIKESTREAM_SYOPS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "spikestream/network.h"

namespace spikestream {

// Synaptic operation totals. A layer whose input is statically a spike signal
// is billed one AC per (nonzero input element, output it reaches); any other
// layer is billed its dense MAC count. Counts are summed over every time step
// and every sample; the *_per_sample accessors divide by the batch size.
// Batch norm is never billed: it folds into the preceding convolution.
//
// These totals already include the firing rate and T, so energy is simply
// E_ac * ac + E_mac * mac.
struct LayerOps {
  std::string layer;
  Pathway pathway = Pathway::kSpike;
  bool spike_input = false;
  uint64_t ac_ops = 0;
  uint64_t mac_ops = 0;
  uint64_t ac_max = 0;  // ac_ops if every spike input were 1
  int64_t calls = 0;
};

struct OpCount {
  std::vector<LayerOps> per_layer;
  uint64_t ac_ops = 0;
  uint64_t mac_ops = 0;
  uint64_t ac_max = 0;
  int64_t samples = 1;
  int time_steps = 1;

  double ac_per_sample() const { return static_cast<double>(ac_ops) / static_cast<double>(samples); }
  double mac_per_sample() const { return static_cast<double>(mac_ops) / static_cast<double>(samples); }
  double ac_max_per_sample() const {
    return static_cast<double>(ac_max) / static_cast<double>(samples);
  }
  // Totals restricted to one pathway.
  OpCount only(Pathway p) const;
  // Adds another batch: per-layer rows by name, totals and samples.
  void merge(const OpCount& other);
};

class UninstrumentedLayerError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// AC ops for one spike-input convolution: each nonzero element at (y, x)
// reaches out_ch * (#output rows whose window covers y) * (#output cols whose
// window covers x) outputs.
uint64_t spike_conv_ac_ops(const Tensor& input, const Shape& weight_shape, const ConvGeometry& g);
// Same geometry with every input element set to 1.
uint64_t spike_conv_ac_max(const Shape& input_shape, const Shape& weight_shape,
                           const ConvGeometry& g);
uint64_t dense_conv_mac_ops(const Shape& input_shape, const Shape& weight_shape,
                            const ConvGeometry& g);

class OpCounter : public SynapticObserver {
 public:
  explicit OpCounter(const Tape& tape) : tape_(tape), baseline_(tape.synaptic_ops()) {}

  void on_synaptic(const SynapticCall& call) override;
  // Throws UninstrumentedLayerError when the tape executed synaptic ops that
  // were never reported to this counter.
  OpCount finish(int64_t samples, int time_steps) const;

 private:
  const Tape& tape_;
  int64_t baseline_;
  int64_t seen_ = 0;
  std::vector<LayerOps> layers_;
};

OpCount count_ops(Network& net, const Tensor& batch, bool input_binary, InferenceMode mode);

struct EnergyModel {
  double e_ac_pj = 0.9;
  double e_mac_pj = 4.6;
};

// Energy in mJ for op counts (per inference).
double dynamic_consumption(double ac_ops, double mac_ops, const EnergyModel& m = {});
double dynamic_consumption(const OpCount& c, const EnergyModel& m = {});
// [E_mac * mac, E_mac * mac + E_ac * ac_max] in mJ.
std::pair<double, double> estimated_consumption(double mac_total, double ac_max,
                                                const EnergyModel& m = {});
// SNN/ANN energy ratio T * fr * E_ac / E_mac.
double energy_ratio(int time_steps, double firing_rate, const EnergyModel& m = {});

struct BlockFiringRate {
  std::string block;
  double body = 0.0;    // s
  double output = 0.0;  // o; fraction of nonzero elements for non-spike outputs
};

struct FiringRateReport {
  double stem = 0.0;
  std::vector<BlockFiringRate> blocks;
};

FiringRateReport firing_rates(Network& net, const Tensor& batch, bool input_binary,
                              InferenceMode mode);
// Fraction of nonzero elements.
double firing_rate(const Tensor& t);

nlohmann::json report_json(const OpCount& c, const EnergyModel& m,
                           const std::optional<FiringRateReport>& rates);

// Published (O_ac, O_mac) pairs in units of 1e9 ops and the DC they yield.
struct CalibrationRow {
  const char* name;
  double ac_g;
  double mac_g;
  double dc_mj;
};
std::span<const CalibrationRow> calibration_rows();

}  // namespace spikestream

#endif  // SPIKESTREAM_SYOPS_H_
