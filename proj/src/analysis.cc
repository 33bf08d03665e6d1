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

#include "spikestream/analysis.h"

#include <cctype>
#include <cmath>

#include "spikestream/data.h"
#include "spikestream/train.h"

namespace spikestream {

std::string_view to_string(Regime r) { return r == Regime::kVanish ? "VANISH" : "EXPLODE"; }

Regime parse_regime(std::string_view s) {
  std::string u(s);
  for (char& c : u) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "VANISH") return Regime::kVanish;
  if (u == "EXPLODE") return Regime::kExplode;
  throw std::invalid_argument("unknown regime '" + std::string(s) + "' (vanish|explode)");
}

float regime_alpha(Regime r) { return r == Regime::kVanish ? 2.0f : 3.0f; }

NetworkConfig probe_network_config(const ProbeConfig& cfg) {
  if (cfg.depth < 1) throw std::invalid_argument("probe depth must be >= 1");
  NetworkConfig nc;
  nc.in_channels = cfg.channels;
  nc.height = cfg.spatial;
  nc.width = cfg.spatial;
  nc.stem_channels = cfg.channels;
  nc.stages = {StageConfig{cfg.depth, cfg.channels, false}};
  nc.block_kind = cfg.kind;
  nc.g = cfg.g;
  nc.neuron = NeuronConfig{NeuronKind::kIF, 1.0f, 0.0f};
  nc.residual_neuron = NeuronConfig{NeuronKind::kIF, 1.0f, 0.0f};
  nc.surrogate.alpha = regime_alpha(cfg.regime);
  nc.time_steps = cfg.time_steps;
  nc.num_classes = 2;
  return nc;
}

namespace {

double l2(const Tensor& t) {
  double s = 0.0;
  for (float v : t.data()) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

Tensor bernoulli(Shape shape, float p, Rng& rng) {
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = rng.uniform() < p ? 1.0f : 0.0f;
  return t;
}

}  // namespace

ProbeResult grad_probe(const ProbeConfig& cfg) {
  Network net = Network::build(probe_network_config(cfg), cfg.seed);
  Rng rng(cfg.seed ^ 0x5DEECE66Dull);
  Tensor x = bernoulli({cfg.time_steps, cfg.batch, cfg.channels, cfg.spatial, cfg.spatial},
                       cfg.input_rate, rng);
  Tape tape;
  ForwardContext ctx{tape};
  ForwardTrace trace;
  const InferenceMode mode = cfg.with_aap ? InferenceMode::kDsnn : InferenceMode::kFsnn;
  DualLogits logits = net.forward(ctx, x, true, mode, &trace);
  Var loss = sum_all(tape, logits.spike);
  if (logits.accumulation) loss = add(tape, loss, sum_all(tape, *logits.accumulation));
  Gradients grads = tape.backward(loss);
  ProbeResult r;
  for (const BlockTrace& b : trace.blocks) {
    r.amplitude.push_back(l2(grads.of(b.s)));
    if (b.a) r.accumulation_amplitude.push_back(l2(grads.of(*b.a)));
  }
  r.stem_amplitude = l2(grads.of(trace.stem));
  return r;
}

std::string variant_name(BlockKind kind, GFunction g) {
  if (kind == BlockKind::kLogical) return "LOGICAL_" + std::string(to_string(g));
  return std::string(to_string(kind));
}

void write_probe_csv_header(std::ostream& out) {
  out << "block_index,grad_amplitude,variant,regime,with_aap,seed\n";
}

void write_probe_csv(std::ostream& out, const ProbeConfig& cfg, const ProbeResult& r) {
  const std::string variant = variant_name(cfg.kind, cfg.g);
  char buf[64];
  for (size_t i = 0; i < r.amplitude.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.9g", r.amplitude[i]);
    out << (i + 1) << ',' << buf << ',' << variant << ',' << to_string(cfg.regime) << ','
        << (cfg.with_aap ? 1 : 0) << ',' << cfg.seed << '\n';
  }
}

ConstancyReport identity_gradient_check(int depth, GFunction g, uint64_t seed, int time_steps) {
  ProbeConfig pc;
  pc.depth = depth;
  pc.g = g;
  pc.time_steps = time_steps;
  pc.seed = seed;
  Network net = Network::build(probe_network_config(pc), seed);
  Rng rng(seed + 17);
  const Shape shape{time_steps, pc.batch, pc.channels, pc.spatial, pc.spatial};
  const Tensor o0 = bernoulli(shape, 0.5f, rng);
  Tensor a0(shape);
  for (float& v : a0.data()) v = static_cast<float>(rng.below(4));

  auto run = [&](const Tensor& a_in, Tape& tape, Var& o_var, Var& a_var) {
    ForwardContext ctx{tape};
    o_var = tape.leaf(o0, tape.grad_enabled());
    a_var = tape.leaf(a_in, tape.grad_enabled());
    DualStreamState st{Activation{o_var, true}, a_var};
    for (ResidualBlock& b : net.blocks) st = b.forward(ctx, st);
    return st;
  };

  ConstancyReport rep;
  {
    Tape tape;
    Var o_var, a_var;
    DualStreamState st = run(a0, tape, o_var, a_var);
    Gradients go = tape.backward(sum_all(tape, st.o.value));
    const Tensor g_o = go.of(o_var);
    for (float v : g_o.data()) rep.spike_max_dev = std::max(rep.spike_max_dev, std::abs(v - 1.0));
  }
  {
    Tape tape;
    Var o_var, a_var;
    DualStreamState st = run(a0, tape, o_var, a_var);
    Gradients ga = tape.backward(sum_all(tape, *st.a));
    const Tensor g_a = ga.of(a_var);
    for (float v : g_a.data()) {
      rep.accumulation_max_dev = std::max(rep.accumulation_max_dev, std::abs(v - 1.0));
    }
  }
  // Central differences on a_0; the sum is accumulated in double.
  auto sum_a = [&](const Tensor& a_in) {
    Tape tape(false);
    Var o_var, a_var;
    DualStreamState st = run(a_in, tape, o_var, a_var);
    return tape.value(*st.a).sum();
  };
  Tensor probe = a0;
  const float h = 0.25f;
  for (int64_t i = 0; i < probe.numel(); ++i) {
    const float orig = probe[i];
    probe[i] = orig + h;
    const double up = sum_a(probe);
    probe[i] = orig - h;
    const double down = sum_a(probe);
    probe[i] = orig;
    rep.accumulation_fd_max_dev =
        std::max(rep.accumulation_fd_max_dev, std::abs((up - down) / (2.0 * h) - 1.0));
  }
  return rep;
}

std::vector<VanishingRow> compare_vanishing(const VanishingOptions& opts) {
  std::vector<VanishingRow> rows;
  for (int depth : opts.depths) {
    for (Regime regime : opts.regimes) {
      for (const auto& [kind, g] : opts.variants) {
        for (bool aap : {false, true}) {
          ProbeConfig pc;
          pc.depth = depth;
          pc.kind = kind;
          pc.g = g;
          pc.regime = regime;
          pc.with_aap = aap;
          pc.seed = opts.seed;
          pc.input_rate = opts.input_rate;
          VanishingRow row{depth, variant_name(kind, g), regime, aap, 0.0, -1.0};
          row.first_block_norm = grad_probe(pc).amplitude.front();
          if (opts.train_epochs > 0) {
            NetworkConfig nc = probe_network_config(pc);
            nc.in_channels = 2;
            nc.height = nc.width = 2;
            nc.time_steps = 8;
            Network net = Network::build(nc, opts.seed);
            Dataset data = synth_two_class(opts.train_samples, 8, opts.seed + 1);
            TrainConfig tc;
            tc.epochs = opts.train_epochs;
            tc.seed = opts.seed;
            tc.dual_stream = aap;
            row.accuracy = train(net, data, tc).back().acc_s;
          }
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

void write_vanishing_csv(std::ostream& out, const std::vector<VanishingRow>& rows) {
  out << "depth,variant,regime,with_aap,first_block_grad_norm,accuracy\n";
  char buf[64];
  for (const VanishingRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.9g", r.first_block_norm);
    out << r.depth << ',' << r.variant << ',' << to_string(r.regime) << ',' << (r.with_aap ? 1 : 0)
        << ',' << buf << ',';
    if (r.accuracy >= 0) out << r.accuracy;
    out << '\n';
  }
}

}  // namespace spikestream
