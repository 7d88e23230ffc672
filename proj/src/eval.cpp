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

#include "kws/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "kws/error.hpp"

namespace kws {

std::vector<ManifestEntry> parse_manifest(const std::string& text,
                                          const std::filesystem::path& base_dir) {
  std::vector<ManifestEntry> entries;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "manifest line " + std::to_string(lineno) + ": ";
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kInvalidArgument, where + e.what());
    }
    ManifestEntry e;
    try {
      e.path = base_dir / j.at("path").get<std::string>();
      const std::string label = j.at("label").get<std::string>();
      if (label != "positive" && label != "negative")
        throw Error(ErrorKind::kInvalidArgument, where + "label must be positive or negative");
      e.positive = label == "positive";
      if (j.contains("start_ms")) e.start_ms = j["start_ms"].get<double>();
      if (j.contains("end_ms")) e.end_ms = j["end_ms"].get<double>();
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::kInvalidArgument, where + ex.what());
    }
    if (e.start_ms.has_value() != e.end_ms.has_value())
      throw Error(ErrorKind::kInvalidArgument, where + "start_ms and end_ms come together");
    if (e.start_ms && *e.end_ms < *e.start_ms)
      throw Error(ErrorKind::kInvalidArgument, where + "end_ms precedes start_ms");
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open manifest " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  std::vector<ManifestEntry> entries = parse_manifest(buf.str(), path.parent_path());
  for (const ManifestEntry& e : entries)
    if (!std::filesystem::exists(e.path))
      throw Error(ErrorKind::kIo, "manifest references missing file " + e.path.string());
  return entries;
}

float utterance_score(const Model& model, const AudioBuffer& audio) {
  const AudioBuffer padded = pad_to_frames(audio, model.window_frames());
  const FeatureMatrix feats = model.features(padded);
  const std::vector<StreamPosterior> trace = model.infer_sliding(feats);
  float best = 0.0f;
  for (const StreamPosterior& p : trace) best = std::max(best, p.posterior);
  return best;
}

ScoreReport score_dataset(const Model& model, std::span<const ManifestEntry> entries) {
  ScoreReport report;
  for (const ManifestEntry& e : entries) {
    try {
      const float s = utterance_score(model, read_wav(e.path));
      (e.positive ? report.scores.positives : report.scores.negatives).push_back(s);
    } catch (const Error& err) {
      report.failures.push_back({e.path, err.what()});
    }
  }
  if (!entries.empty() && report.failures.size() * 10 > entries.size())
    throw Error(ErrorKind::kTooManyFailures,
                std::to_string(report.failures.size()) + " of " + std::to_string(entries.size()) +
                    " utterances failed; first: " + report.failures.front().message);
  return report;
}

namespace {

std::size_t count_at_or_above(const std::vector<float>& sorted, float threshold) {
  return static_cast<std::size_t>(sorted.end() -
                                  std::lower_bound(sorted.begin(), sorted.end(), threshold));
}

std::vector<float> sorted_copy(const std::vector<float>& v) {
  std::vector<float> s = v;
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

OperatingPoint fa_at_mr(const ScoreSet& scores, double miss_rate) {
  if (scores.positives.empty())
    throw Error(ErrorKind::kUndefinedThreshold, "no positive utterances");
  if (!(miss_rate >= 0.0 && miss_rate < 1.0))
    throw Error(ErrorKind::kInvalidArgument, "miss rate must lie in [0, 1)");
  const std::vector<float> pos = sorted_copy(scores.positives);
  const std::vector<float> neg = sorted_copy(scores.negatives);
  const auto m = static_cast<std::size_t>(
      std::floor(miss_rate * static_cast<double>(pos.size()) + 1e-9));
  OperatingPoint op;
  op.threshold = pos[std::min(m, pos.size() - 1)];
  op.miss_rate = static_cast<double>(pos.size() - count_at_or_above(pos, op.threshold)) /
                 static_cast<double>(pos.size());
  op.false_accepts = count_at_or_above(neg, op.threshold);
  return op;
}

std::vector<OperatingPoint> det_sweep(const ScoreSet& scores) {
  if (scores.positives.empty())
    throw Error(ErrorKind::kUndefinedThreshold, "no positive utterances");
  const std::vector<float> pos = sorted_copy(scores.positives);
  const std::vector<float> neg = sorted_copy(scores.negatives);
  std::vector<OperatingPoint> out;
  for (std::size_t i = 0; i < pos.size(); ++i) {
    if (i > 0 && pos[i] == pos[i - 1]) continue;
    OperatingPoint op;
    op.threshold = pos[i];
    op.miss_rate = static_cast<double>(i) / static_cast<double>(pos.size());
    op.false_accepts = count_at_or_above(neg, pos[i]);
    out.push_back(op);
  }
  return out;
}

EndpointReport endpoint_report(const Model& model, std::span<const ManifestEntry> entries,
                               const DetectorConfig& detector) {
  EndpointReport report;
  std::vector<EventMatch> matches;
  std::size_t events = 0;
  for (const ManifestEntry& e : entries) {
    if (!e.start_ms) continue;
    ++report.utterances;
    const AudioBuffer audio = pad_to_frames(read_wav(e.path), model.window_frames());
    const std::vector<StreamPosterior> trace = model.infer_sliding(model.features(audio));
    const std::vector<DetectionEvent> found = detect(trace, detector);
    const EndpointRef ref{*e.start_ms, *e.end_ms};
    const std::vector<EventMatch> m = match_events(found, std::span(&ref, 1));
    events += found.size();
    matches.insert(matches.end(), m.begin(), m.end());
  }
  if (!matches.empty()) report.delta = summarize_matches(matches, report.utterances, events);
  return report;
}

}  // namespace kws
