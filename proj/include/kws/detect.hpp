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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kws/posterior.hpp"

namespace kws {

struct DetectorConfig {
  float threshold = 0.5f;
  // Consecutive sub-threshold steps that close an open event (0 acts as 1).
  int hangover_steps = 1;

  void validate() const;
};

// Endpoints are the bounds of the window with the highest posterior.
struct DetectionEvent {
  std::int64_t start_frame = 0;
  std::int64_t end_frame = 0;
  std::int64_t peak_step = 0;
  float peak_posterior = 0.0f;
  double detect_wall_ms = 0.0;  // when the peak window's posterior was produced
  double end_audio_ms = 0.0;    // when the last sample of end_frame arrived

  double start_ms() const;
  double end_ms() const;
};

// Incremental form of detect(); feeding a trace step by step yields exactly
// the events detect() returns for the whole trace.
class EventDetector {
 public:
  explicit EventDetector(DetectorConfig config);

  std::optional<DetectionEvent> push(const StreamPosterior& p);
  std::optional<DetectionEvent> finish();

 private:
  DetectorConfig config_;
  std::optional<DetectionEvent> open_;
  int below_ = 0;
};

std::vector<DetectionEvent> detect(std::span<const StreamPosterior> trace,
                                   const DetectorConfig& config);

// Reference endpoints in milliseconds.
struct EndpointRef {
  double start_ms = 0.0;
  double end_ms = 0.0;
};

// Signed deltas are event minus reference.
struct EventMatch {
  std::size_t event = 0;
  std::size_t ref = 0;
  double start_delta_ms = 0.0;
  double end_delta_ms = 0.0;
};

// One-to-one matching, greedy by largest time overlap. Pairs that do not
// overlap are never matched.
std::vector<EventMatch> match_events(std::span<const DetectionEvent> events,
                                     std::span<const EndpointRef> refs);

struct EndpointDelta {
  double mean_start_ms = 0.0;  // mean |start delta|
  double mean_end_ms = 0.0;    // mean |end delta|
  std::size_t matched = 0;
  std::size_t missed_refs = 0;
  std::size_t unmatched_events = 0;
};

// Throws kUndefinedMean when nothing matched.
EndpointDelta summarize_matches(std::span<const EventMatch> matches, std::size_t num_refs,
                                std::size_t num_events);
EndpointDelta endpoint_delta(std::span<const DetectionEvent> events,
                             std::span<const EndpointRef> refs);

// detect_wall_ms - end_audio_ms + baseline_ms. Throws kClock on negative
// timestamps.
double latency(const DetectionEvent& event, double baseline_ms = 0.0);

// Latency relative to another system: its own latency plus the mean delta
// between the two systems' end indices.
double compose_latency(double baseline_latency_ms, double mean_end_delta_ms);

// {"start_ms":..,"end_ms":..,"peak":..,"latency_ms":..}
std::string event_to_json(const DetectionEvent& event, double baseline_ms = 0.0);

}  // namespace kws
