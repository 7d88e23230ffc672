// Copyright 2026 The KWS Streaming Authors.
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

// kws: featurize / count / rf / infer / stream / eval / init-random.
// Exit status: 0 ok, 1 runtime error, 2 usage error.

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "kws/arch.hpp"
#include "kws/detect.hpp"
#include "kws/error.hpp"
#include "kws/eval.hpp"
#include "kws/frontend.hpp"
#include "kws/model.hpp"
#include "kws/streaming.hpp"
#include "kws/weights_io.hpp"

namespace {

void print_trace(std::ostream& os, const std::vector<kws::StreamPosterior>& trace) {
  os << "step,first,last,posterior\n";
  char line[128];
  for (const kws::StreamPosterior& p : trace) {
    std::snprintf(line, sizeof line, "%lld,%lld,%lld,%.9g\n", static_cast<long long>(p.step_index),
                  static_cast<long long>(p.first_frame), static_cast<long long>(p.last_frame),
                  static_cast<double>(p.posterior));
    os << line;
  }
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw kws::Error(kws::ErrorKind::kIo, "cannot write " + path);
  return out;
}

int cmd_featurize(const std::string& wav, int bins, bool delta, const std::string& out_path) {
  kws::FeatureMatrix f = kws::compute_lfbe(kws::read_wav(wav), bins);
  if (delta) f = kws::delta_lfbe(f);
  std::ofstream file;
  if (!out_path.empty()) file = open_out(out_path);
  std::ostream& os = out_path.empty() ? std::cout : file;
  const Eigen::IOFormat csv(Eigen::FullPrecision, Eigen::DontAlignCols, ",", "\n");
  os << f.format(csv) << "\n";
  return 0;
}

int cmd_count(const std::string& config, bool json) {
  const kws::ModelConfig cfg = kws::resolve_config(config);
  const kws::FootprintReport r = kws::footprint(cfg);
  if (json) {
    nlohmann::json layers = nlohmann::json::array();
    for (const kws::LayerFootprint& l : r.layers)
      layers.push_back({{"name", l.name},
                        {"kind", std::string(kws::to_string(l.kind))},
                        {"parameters", l.parameters},
                        {"multiplies", l.multiplies},
                        {"biases", l.biases}});
    std::cout << nlohmann::json{{"model", cfg.name},
                                {"parameters", r.parameters},
                                {"multiplies", r.multiplies},
                                {"biases", r.biases},
                                {"layers", layers}}
                     .dump(2)
              << "\n";
    return 0;
  }
  std::printf("%-16s %-12s %12s %14s %8s\n", "layer", "kind", "params", "multiplies", "biases");
  for (const kws::LayerFootprint& l : r.layers)
    std::printf("%-16s %-12s %12lld %14lld %8lld\n", l.name.c_str(),
                std::string(kws::to_string(l.kind)).c_str(), static_cast<long long>(l.parameters),
                static_cast<long long>(l.multiplies), static_cast<long long>(l.biases));
  std::printf("%-16s %-12s %12lld %14lld %8lld\n", "total", "", static_cast<long long>(r.parameters),
              static_cast<long long>(r.multiplies), static_cast<long long>(r.biases));
  std::printf("model=%s parameters=%lld multiplies=%lld\n", cfg.name.c_str(),
              static_cast<long long>(r.parameters), static_cast<long long>(r.multiplies));
  return 0;
}

int cmd_rf(const std::string& config) {
  const kws::ReceptiveField rf = kws::receptive_field(kws::resolve_config(config));
  std::printf("rf=%d stride=%d steps=%d\n", rf.frames, rf.stride, rf.steps);
  return 0;
}

int cmd_infer(const std::string& weights, const std::string& wav) {
  const kws::Model model = kws::load_model(weights);
  const kws::AudioBuffer audio = kws::pad_to_frames(kws::read_wav(wav), model.window_frames());
  print_trace(std::cout, model.infer_sliding(model.features(audio)));
  return 0;
}

struct StreamArgs {
  std::string weights;
  std::string strategy = "bank";
  float threshold = 0.5f;
  int hangover = 1;
  std::string trace;
  std::string binary_trace;
  std::size_t chunk = 1600;
};

int cmd_stream(const StreamArgs& a) {
  auto model = std::make_shared<const kws::Model>(kws::load_model(a.weights));
  const kws::Strategy strategy = a.strategy == "hyper" ? kws::Strategy::kHyper : kws::Strategy::kBank;
  kws::ReplayClock clock;
  kws::StreamEngine engine(model, strategy, kws::DetectorConfig{a.threshold, a.hangover},
                           [&clock] { return clock.now(); });
  std::vector<kws::StreamPosterior> trace;
  kws::StreamCallbacks cb;
  cb.on_posterior = [&](const kws::StreamPosterior& p) { trace.push_back(p); };
  cb.on_event = [](const kws::DetectionEvent& e) {
    std::cout << kws::event_to_json(e) << std::endl;
  };
  std::ios::sync_with_stdio(false);
  stream_engine_run(engine, std::cin, cb, a.chunk, &clock);
  if (!a.trace.empty()) {
    std::ofstream out = open_out(a.trace);
    print_trace(out, trace);
  }
  if (!a.binary_trace.empty()) {
    std::ofstream out = open_out(a.binary_trace, true);
    for (const kws::StreamPosterior& p : trace) {
      const float v = p.posterior;
      unsigned char b[4];
      std::memcpy(b, &v, 4);
      if constexpr (std::endian::native == std::endian::big) std::swap(b[0], b[3]), std::swap(b[1], b[2]);
      out.write(reinterpret_cast<const char*>(b), 4);
    }
  }
  return 0;
}

int cmd_eval(const std::string& weights, const std::string& manifest, double mr, bool json) {
  const kws::Model model = kws::load_model(weights);
  const std::vector<kws::ManifestEntry> entries = kws::load_manifest(manifest);
  const kws::ScoreReport scores = kws::score_dataset(model, entries);
  for (const kws::ScoreFailure& f : scores.failures)
    std::cerr << "skipped " << f.path.string() << ": " << f.message << "\n";
  const kws::OperatingPoint op = kws::fa_at_mr(scores.scores, mr);
  const std::vector<kws::OperatingPoint> sweep = kws::det_sweep(scores.scores);
  const kws::EndpointReport ends =
      kws::endpoint_report(model, entries, kws::DetectorConfig{std::clamp(op.threshold, 1e-6f, 1.0f - 1e-6f), 1});

  if (json) {
    nlohmann::json j{{"positives", scores.scores.positives.size()},
                     {"negatives", scores.scores.negatives.size()},
                     {"failures", scores.failures.size()},
                     {"operating_point",
                      {{"mr", op.miss_rate}, {"target_mr", mr}, {"threshold", op.threshold},
                       {"fa_count", op.false_accepts}}}};
    nlohmann::json pts = nlohmann::json::array();
    for (const kws::OperatingPoint& p : sweep)
      pts.push_back({{"mr", p.miss_rate}, {"threshold", p.threshold}, {"fa_count", p.false_accepts}});
    j["det"] = pts;
    if (ends.delta)
      j["endpoints"] = {{"utterances", ends.utterances},
                        {"matched", ends.delta->matched},
                        {"missed", ends.delta->missed_refs},
                        {"mean_start_delta_ms", ends.delta->mean_start_ms},
                        {"mean_end_delta_ms", ends.delta->mean_end_ms}};
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::printf("positives=%zu negatives=%zu failures=%zu\n", scores.scores.positives.size(),
              scores.scores.negatives.size(), scores.failures.size());
  std::printf("%10s %12s %10s\n", "mr", "threshold", "fa_count");
  for (const kws::OperatingPoint& p : sweep)
    std::printf("%10.4f %12.6g %10zu\n", p.miss_rate, static_cast<double>(p.threshold),
                p.false_accepts);
  std::printf("fa_at_mr(%.2f): threshold=%.6g fa=%zu mr=%.4f\n", mr,
              static_cast<double>(op.threshold), op.false_accepts, op.miss_rate);
  if (ends.delta)
    std::printf("endpoints: matched=%zu/%zu mean_start_delta=%.1fms mean_end_delta=%.1fms\n",
                ends.delta->matched, ends.utterances, ends.delta->mean_start_ms,
                ends.delta->mean_end_ms);
  return 0;
}

int cmd_init_random(const std::string& config, const std::string& out, std::uint64_t seed,
                    float scale) {
  const kws::ModelConfig cfg = kws::resolve_config(config);
  kws::save_weights(cfg, kws::init_random_weights(cfg, seed, scale), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming keyword spotting toolkit"};
  app.require_subcommand(1);

  auto* featurize = app.add_subcommand("featurize", "WAV to log-mel features (CSV)");
  std::string wav, out_path;
  int bins = 64;
  bool delta = false;
  featurize->add_option("wav", wav)->required()->check(CLI::ExistingFile);
  featurize->add_option("--bins", bins)->check(CLI::Range(1, 256));
  featurize->add_flag("--delta", delta, "frame-to-frame differences");
  featurize->add_option("-o,--out", out_path);

  auto* count = app.add_subcommand("count", "parameter and multiply counts");
  std::string config;
  bool json = false;
  count->add_option("config", config, "zoo name or config JSON")->required();
  count->add_flag("--json", json);

  auto* rf = app.add_subcommand("rf", "receptive field, window stride and steps per window");
  rf->add_option("config", config)->required();

  auto* infer = app.add_subcommand("infer", "offline sliding-window posteriors");
  std::string weights;
  infer->add_option("weights", weights)->required()->check(CLI::ExistingFile);
  infer->add_option("wav", wav)->required()->check(CLI::ExistingFile);

  auto* stream = app.add_subcommand("stream", "s16le PCM on stdin to detection events");
  StreamArgs sa;
  stream->add_option("weights", sa.weights)->required()->check(CLI::ExistingFile);
  stream->add_option("--strategy", sa.strategy)->check(CLI::IsMember({"bank", "hyper"}));
  stream->add_option("--threshold", sa.threshold)->check(CLI::Range(0.0f, 1.0f));
  stream->add_option("--hangover", sa.hangover)->check(CLI::NonNegativeNumber);
  stream->add_option("--trace", sa.trace, "write posteriors as CSV");
  stream->add_option("--binary-trace", sa.binary_trace, "write posteriors as f32 LE");
  stream->add_option("--chunk", sa.chunk, "samples per read")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("eval", "false accepts at a fixed miss rate");
  std::string manifest;
  double mr = 0.15;
  eval->add_option("weights", weights)->required()->check(CLI::ExistingFile);
  eval->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);
  eval->add_option("--mr", mr)->check(CLI::Range(0.0, 0.999999));
  eval->add_flag("--json", json);

  auto* init = app.add_subcommand("init-random", "random-weight file");
  std::uint64_t seed = 0;
  float scale = 0.1f;
  init->add_option("config", config)->required();
  init->add_option("out", out_path)->required();
  init->add_option("--seed", seed);
  init->add_option("--scale", scale)->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*featurize) return cmd_featurize(wav, bins, delta, out_path);
    if (*count) return cmd_count(config, json);
    if (*rf) return cmd_rf(config);
    if (*infer) return cmd_infer(weights, wav);
    if (*stream) return cmd_stream(sa);
    if (*eval) return cmd_eval(weights, manifest, mr, json);
    if (*init) return cmd_init_random(config, out_path, seed, scale);
  } catch (const kws::Error& e) {
    std::cerr << "error [" << kws::to_string(e.kind()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
