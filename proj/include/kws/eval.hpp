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

#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kws/detect.hpp"
#include "kws/model.hpp"

namespace kws {

// One JSON object per line:
//   {"path": "a.wav", "label": "positive", "start_ms": 410, "end_ms": 980}
// Paths are relative to the manifest's directory. Endpoints are optional.
struct ManifestEntry {
  std::filesystem::path path;
  bool positive = false;
  std::optional<double> start_ms;
  std::optional<double> end_ms;
};

std::vector<ManifestEntry> parse_manifest(const std::string& text,
                                          const std::filesystem::path& base_dir);
// Also checks that every referenced file exists (kIo otherwise).
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

// Utterance score: the maximum window posterior.
struct ScoreSet {
  std::vector<float> positives;
  std::vector<float> negatives;
};

struct ScoreFailure {
  std::filesystem::path path;
  std::string message;
};

struct ScoreReport {
  ScoreSet scores;
  std::vector<ScoreFailure> failures;
};

// Utterances shorter than one window are zero-padded. Unreadable entries are
// recorded as failures; more than 10% failures raises kTooManyFailures.
ScoreReport score_dataset(const Model& model, std::span<const ManifestEntry> entries);

float utterance_score(const Model& model, const AudioBuffer& audio);

// Threshold at which the fraction of positives scoring below it is `miss_rate`
// (a positive scoring exactly the threshold is accepted), and the number of
// negatives accepted there.
struct OperatingPoint {
  float threshold = 0.0f;
  double miss_rate = 0.0;
  std::size_t false_accepts = 0;
};

OperatingPoint fa_at_mr(const ScoreSet& scores, double miss_rate);

// One point per distinct positive score, ascending threshold. Miss rate never
// decreases and false accepts never increase along the sweep.
std::vector<OperatingPoint> det_sweep(const ScoreSet& scores);

// Endpoint agreement over entries that carry reference endpoints: offline
// detection at `detector` on each, matched against its reference. Returns
// nothing when no entry has endpoints or nothing matched.
struct EndpointReport {
  std::size_t utterances = 0;
  std::optional<EndpointDelta> delta;
};

EndpointReport endpoint_report(const Model& model, std::span<const ManifestEntry> entries,
                               const DetectorConfig& detector);

}  // namespace kws
