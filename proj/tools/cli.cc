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

#include "cli.h"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "spikestream/analysis.h"
#include "spikestream/config.h"
#include "spikestream/data.h"
#include "spikestream/network.h"
#include "spikestream/syops.h"
#include "spikestream/train.h"

namespace spikestream::cli {
namespace {

using nlohmann::json;

// Bad flags, configs or values: exit 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

uint64_t resolve_seed(const std::optional<uint64_t>& flag, const std::optional<uint64_t>& config) {
  if (flag) return *flag;
  if (config) return *config;
  if (const char* env = std::getenv("SPIKESTREAM_SEED"); env && *env) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || *end != '\0' || env[0] == '-') {
      throw UsageError(std::string("SPIKESTREAM_SEED is not an unsigned integer: '") + env + "'");
    }
    return v;
  }
  return 0;
}

void ensure_parent(const std::filesystem::path& p) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  ensure_parent(p);
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + p.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + p.string());
}

// The machine-readable report goes to --out when given, else to `out`, and
// the human summary then moves to `err` so `out` stays parseable.
struct Reporter {
  std::ostream& out;
  std::ostream& err;
  std::string out_path;

  std::ostream& summary() { return out_path.empty() ? err : out; }
  void emit(const std::string& text) {
    if (out_path.empty()) {
      out << text;
    } else {
      write_file(out_path, text);
      summary() << "wrote " << out_path << '\n';
    }
  }
};

std::string fmt_pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * v);
  return buf;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<int> epochs;
  std::optional<float> lr;
  std::optional<int> batch_size;
  std::optional<std::string> checkpoint;
  std::optional<std::string> log;
  bool no_dst = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  if (!std::filesystem::exists(a.config)) throw UsageError("config file not found: " + a.config);
  RunConfig rc = load_run_config(a.config);
  rc.train.seed = resolve_seed(a.seed, rc.seed_given ? std::optional<uint64_t>(rc.train.seed) : std::nullopt);
  if (a.epochs) rc.train.epochs = *a.epochs;
  if (a.lr) rc.train.lr = *a.lr;
  if (a.batch_size) rc.train.batch_size = *a.batch_size;
  if (a.checkpoint) rc.checkpoint = *a.checkpoint;
  if (a.log) rc.log = *a.log;
  if (a.no_dst) rc.train.dual_stream = false;
  try {
    rc.train.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  Dataset data = load_dataset(rc.data, rc.network);
  Network net = Network::build(rc.network, rc.train.seed);
  ensure_parent(rc.log);
  std::ofstream log(rc.log, std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write log " + rc.log);
  out << "training " << rc.network.total_blocks() << " " << to_string(rc.network.block_kind)
      << " blocks on " << data.size() << " samples, seed " << rc.train.seed
      << (rc.train.dual_stream ? ", dual-stream" : ", spike head only") << '\n';
  train(net, data, rc.train, [&](const EpochRecord& r) {
    log << r.to_json().dump() << '\n';
    log.flush();
    char line[160];
    std::snprintf(line, sizeof(line), "epoch %3d  lr %.5f  loss_s %.4f  loss_a %.4f  acc_s %s  acc %s\n",
                  r.epoch, r.lr, r.loss_s, r.loss_a, fmt_pct(r.acc_s).c_str(),
                  fmt_pct(r.acc_combined).c_str());
    out << line;
  });
  ensure_parent(rc.checkpoint);
  net.save(rc.checkpoint);
  out << "checkpoint " << rc.checkpoint << "\nlog " << rc.log << '\n';
  return kExitOk;
}

// --- eval --------------------------------------------------------------------

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string mode = "both";
  int batch_size = 64;
  std::string encoder = "direct";
  std::optional<uint64_t> seed;
  std::string out;
};

json eval_one(Network& net, const Dataset& data, InferenceMode mode, const EvalArgs& a,
              const EncoderConfig& enc) {
  OpCount ops;
  EvalResult r = evaluate(net, data, mode, a.batch_size, enc, &ops);
  const OpCount acc = ops.only(Pathway::kAccumulation);
  const OpCount spk = ops.only(Pathway::kSpike);
  json j = r.to_json();
  j["mode"] = to_string(mode);
  j["synaptic_ops"] = {
      {"spike_path", {{"ac_ops", spk.ac_ops}, {"mac_ops", spk.mac_ops}}},
      {"accumulation_path", {{"ac_ops", acc.ac_ops}, {"mac_ops", acc.mac_ops}}},
  };
  return j;
}

int cmd_eval(const EvalArgs& a, Reporter& rep) {
  std::vector<InferenceMode> modes;
  if (a.mode == "both") {
    modes = {InferenceMode::kFsnn, InferenceMode::kDsnn};
  } else {
    modes = {parse_mode(a.mode)};
  }
  Network net = Network::load(a.checkpoint);
  Dataset data = load_spkd(a.data);
  EncoderConfig enc{parse_encoder(a.encoder), net.config().time_steps, resolve_seed(a.seed, std::nullopt)};
  json report{{"checkpoint", a.checkpoint}, {"data", a.data}, {"samples", data.size()},
              {"results", json::array()}};
  for (InferenceMode m : modes) {
    json r = eval_one(net, data, m, a, enc);
    rep.summary() << to_string(m) << ": accuracy " << fmt_pct(r["accuracy"].get<double>())
                  << "  spike head " << fmt_pct(r["acc_s"].get<double>());
    if (r.contains("acc_a") && !r["acc_a"].is_null()) {
      rep.summary() << "  accumulation head " << fmt_pct(r["acc_a"].get<double>());
    }
    const auto& ap = r["synaptic_ops"]["accumulation_path"];
    rep.summary() << "  a-path ops " << ap["ac_ops"].get<uint64_t>() + ap["mac_ops"].get<uint64_t>()
                  << '\n';
    report["results"].push_back(std::move(r));
  }
  rep.emit(report.dump(2) + "\n");
  return kExitOk;
}

// --- count -------------------------------------------------------------------

struct CountArgs {
  std::string checkpoint;
  std::string data;
  std::string mode = "fsnn";
  bool static_only = false;
  bool analog_input = false;
  bool self_test = false;
  int batch_size = 64;
  std::string out;
};

int count_self_test(Reporter& rep) {
  json rows = json::array();
  bool ok = true;
  for (const CalibrationRow& r : calibration_rows()) {
    const double dc = dynamic_consumption(r.ac_g * 1e9, r.mac_g * 1e9);
    const bool pass = std::abs(dc - r.dc_mj) <= 0.01 + 1e-9;
    ok &= pass;
    char line[128];
    std::snprintf(line, sizeof(line), "%-14s ac %.2fG mac %.2fG  dc %.3f mJ  published %.2f  %s\n",
                  r.name, r.ac_g, r.mac_g, dc, r.dc_mj, pass ? "ok" : "MISMATCH");
    rep.summary() << line;
    rows.push_back({{"name", r.name}, {"ac_ops", r.ac_g * 1e9}, {"mac_ops", r.mac_g * 1e9},
                    {"dc_mj", dc}, {"published_dc_mj", r.dc_mj}, {"pass", pass}});
  }
  rep.emit(json{{"self_test", rows}, {"pass", ok}}.dump(2) + "\n");
  return ok ? kExitOk : kExitFailure;
}

int cmd_count(const CountArgs& a, Reporter& rep) {
  if (a.self_test) return count_self_test(rep);
  if (a.checkpoint.empty()) throw UsageError("count: --checkpoint is required (or --self-test)");
  const InferenceMode mode = parse_mode(a.mode);
  const EnergyModel energy;
  if (a.static_only) {
    Network net = Network::load_architecture(a.checkpoint);
    const NetworkConfig& c = net.config();
    // Counts from shapes alone: every spike input set to 1 gives ac_max.
    Tensor ones = Tensor::full({c.time_steps, 1, c.in_channels, c.height, c.width}, 1.0f);
    OpCount ops = count_ops(net, ones, !a.analog_input, mode);
    auto [lo, hi] = estimated_consumption(ops.mac_per_sample(), ops.ac_max_per_sample(), energy);
    rep.summary() << "EC [" << lo << ", " << hi << "] mJ per sample (" << to_string(mode) << ")\n";
    rep.emit(json{{"mode", to_string(mode)}, {"mac_ops", ops.mac_per_sample()},
                  {"ac_max", ops.ac_max_per_sample()}, {"ec_lower_mj", lo}, {"ec_upper_mj", hi}}
                 .dump(2) + "\n");
    return kExitOk;
  }
  if (a.data.empty()) throw UsageError("count: --data is required without --static");
  Network net = Network::load(a.checkpoint);
  Dataset data = load_spkd(a.data);
  if (data.size() == 0) throw UsageError("count: dataset is empty");
  OpCount ops;
  evaluate(net, data, mode, a.batch_size, {}, &ops);
  std::vector<int64_t> first;
  for (int64_t i = 0; i < std::min<int64_t>(data.size(), a.batch_size); ++i) first.push_back(i);
  Batch b = make_batch(data, first, net.config().time_steps, {});
  FiringRateReport rates = firing_rates(net, b.x, b.binary, mode);
  json report = report_json(ops, energy, rates);
  report["mode"] = to_string(mode);
  rep.summary() << to_string(mode) << ": " << ops.ac_per_sample() << " AC + " << ops.mac_per_sample()
                << " MAC per sample, DC " << report["dc_mj"].get<double>() << " mJ\n";
  rep.emit(report.dump(2) + "\n");
  return kExitOk;
}

// --- probe -------------------------------------------------------------------

struct ProbeArgs {
  int depth = 8;
  std::string kind = "LOGICAL";
  std::string g = "IAND";
  std::string regime = "vanish";
  std::string aap = "both";
  std::optional<uint64_t> seed;
  int time_steps = 1;
  int channels = 4;
  int spatial = 4;
  float input_rate = 0.5f;
  std::string out;
};

int cmd_probe(const ProbeArgs& a, Reporter& rep) {
  std::vector<bool> aap_modes;
  if (a.aap == "both") aap_modes = {false, true};
  else if (a.aap == "on") aap_modes = {true};
  else if (a.aap == "off") aap_modes = {false};
  else throw UsageError("--aap must be on, off or both");
  ProbeConfig pc;
  pc.depth = a.depth;
  pc.kind = parse_block_kind(a.kind);
  pc.g = parse_g_function(a.g);
  pc.regime = parse_regime(a.regime);
  pc.seed = resolve_seed(a.seed, std::nullopt);
  pc.time_steps = a.time_steps;
  pc.channels = a.channels;
  pc.spatial = a.spatial;
  pc.input_rate = a.input_rate;
  if (!(a.input_rate >= 0.0f && a.input_rate <= 1.0f)) throw UsageError("--input-rate must be in [0, 1]");
  std::ostringstream csv;
  write_probe_csv_header(csv);
  for (bool aap : aap_modes) {
    pc.with_aap = aap;
    ProbeResult r = grad_probe(pc);
    write_probe_csv(csv, pc, r);
    rep.summary() << variant_name(pc.kind, pc.g) << " " << to_string(pc.regime)
                  << (aap ? " with AAP" : " without AAP") << ": first block " << r.amplitude.front()
                  << ", last block " << r.amplitude.back() << '\n';
  }
  rep.emit(csv.str());
  return kExitOk;
}

// --- fuse --------------------------------------------------------------------

int cmd_fuse(const std::string& in, const std::string& out_path, std::ostream& out) {
  Network net = Network::load(in);
  if (net.fused()) throw std::runtime_error(in + " is already fused");
  net.fuse();
  ensure_parent(out_path);
  net.save(out_path);
  out << "fused " << net.conv_layers().size() << " conv+BN layers into " << out_path << '\n';
  return kExitOk;
}

// --- gen ---------------------------------------------------------------------

struct GenArgs {
  std::string kind;
  int64_t n = 2000;
  int time_steps = 8;
  std::optional<uint64_t> seed;
  std::string out;
  std::string in;
  int64_t channels = SynthOptions{}.channels;
  int64_t height = SynthOptions{}.height;
  int64_t width = SynthOptions{}.width;
  float burst_rate = SynthOptions{}.burst_rate;
  float noise_rate = SynthOptions{}.noise_rate;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  Dataset d;
  if (a.kind == "synth2") {
    SynthOptions o{a.channels, a.height, a.width, a.burst_rate, a.noise_rate};
    try {
      d = synth_two_class(a.n, a.time_steps, resolve_seed(a.seed, std::nullopt), o);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else if (a.kind == "spkd-import") {
    if (a.in.empty()) throw UsageError("gen --kind spkd-import needs --in");
    d = load_spkd(a.in);
  } else {
    throw UsageError("unknown --kind '" + a.kind + "' (synth2|spkd-import)");
  }
  ensure_parent(a.out);
  save_spkd(d, a.out);
  out << "wrote " << d.size() << " samples to " << a.out << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-stream spiking network toolkit", "spikestream"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a network from a config file");
  train_cmd->add_option("config,--config", ta.config, "Config file")->required();
  train_cmd->add_option("--seed", ta.seed, "Seed (falls back to the config, then SPIKESTREAM_SEED)");
  train_cmd->add_option("--epochs", ta.epochs);
  train_cmd->add_option("--lr", ta.lr);
  train_cmd->add_option("--batch-size", ta.batch_size);
  train_cmd->add_option("--checkpoint", ta.checkpoint, "Output checkpoint path");
  train_cmd->add_option("--log", ta.log, "Epoch log (NDJSON)");
  train_cmd->add_flag("--no-dst", ta.no_dst, "Train the spike head alone");

  EvalArgs ea;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on an SPKD dataset");
  eval_cmd->add_option("--checkpoint", ea.checkpoint)->required();
  eval_cmd->add_option("--data", ea.data)->required();
  eval_cmd->add_option("--mode", ea.mode, "fsnn, dsnn or both")
      ->check(CLI::IsMember({"fsnn", "dsnn", "both"}, CLI::ignore_case));
  eval_cmd->add_option("--batch-size", ea.batch_size)->check(CLI::PositiveNumber);
  eval_cmd->add_option("--encoder", ea.encoder, "direct or poisson (static images)");
  eval_cmd->add_option("--seed", ea.seed, "Encoder seed");
  eval_cmd->add_option("--out", ea.out, "Report path (JSON)");

  CountArgs ca;
  auto* count_cmd = app.add_subcommand("count", "Count synaptic operations and energy");
  count_cmd->add_option("--checkpoint", ca.checkpoint, "Checkpoint or architecture file");
  count_cmd->add_option("--data", ca.data);
  count_cmd->add_option("--mode", ca.mode, "fsnn or dsnn")
      ->check(CLI::IsMember({"fsnn", "dsnn"}, CLI::ignore_case));
  count_cmd->add_flag("--static", ca.static_only, "Estimated consumption from shapes only");
  count_cmd->add_flag("--analog-input", ca.analog_input, "With --static: real-valued input");
  count_cmd->add_flag("--self-test", ca.self_test, "Recompute the published consumption table");
  count_cmd->add_option("--batch-size", ca.batch_size)->check(CLI::PositiveNumber);
  count_cmd->add_option("--out", ca.out, "Report path (JSON)");

  ProbeArgs pa;
  auto* probe_cmd = app.add_subcommand("probe", "Per-block gradient amplitudes as CSV");
  probe_cmd->add_option("--depth", pa.depth)->check(CLI::PositiveNumber);
  probe_cmd->add_option("--kind", pa.kind, "LOGICAL, SN_RESIDUAL or ADD");
  probe_cmd->add_option("--g", pa.g, "AND, IAND, OR or XOR");
  probe_cmd->add_option("--regime", pa.regime, "vanish or explode");
  probe_cmd->add_option("--aap", pa.aap, "on, off or both");
  probe_cmd->add_option("--seed", pa.seed);
  probe_cmd->add_option("--time-steps", pa.time_steps)->check(CLI::PositiveNumber);
  probe_cmd->add_option("--channels", pa.channels)->check(CLI::PositiveNumber);
  probe_cmd->add_option("--spatial", pa.spatial)->check(CLI::PositiveNumber);
  probe_cmd->add_option("--input-rate", pa.input_rate, "Bernoulli input spike rate");
  probe_cmd->add_option("--out", pa.out, "CSV path");

  std::string fuse_in, fuse_out;
  auto* fuse_cmd = app.add_subcommand("fuse", "Fold batch norm into convolutions");
  fuse_cmd->add_option("input", fuse_in)->required();
  fuse_cmd->add_option("output", fuse_out)->required();

  GenArgs ga;
  auto* gen_cmd = app.add_subcommand("gen", "Write a dataset container");
  gen_cmd->add_option("--kind", ga.kind, "synth2 or spkd-import")->required();
  gen_cmd->add_option("--n", ga.n)->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--T", ga.time_steps);
  gen_cmd->add_option("--seed", ga.seed);
  gen_cmd->add_option("--out", ga.out)->required();
  gen_cmd->add_option("--in", ga.in, "Source container for spkd-import");
  gen_cmd->add_option("--channels", ga.channels);
  gen_cmd->add_option("--height", ga.height);
  gen_cmd->add_option("--width", ga.width);
  gen_cmd->add_option("--burst-rate", ga.burst_rate);
  gen_cmd->add_option("--noise-rate", ga.noise_rate);

  std::vector<const char*> argv;
  for (const std::string& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(ta, out);
    if (*eval_cmd) {
      Reporter rep{out, err, ea.out};
      return cmd_eval(ea, rep);
    }
    if (*count_cmd) {
      Reporter rep{out, err, ca.out};
      return cmd_count(ca, rep);
    }
    if (*probe_cmd) {
      Reporter rep{out, err, pa.out};
      return cmd_probe(pa, rep);
    }
    if (*fuse_cmd) return cmd_fuse(fuse_in, fuse_out, out);
    if (*gen_cmd) return cmd_gen(ga, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    // Bad option values (unknown g, mode, ...) surface here.
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace spikestream::cli
