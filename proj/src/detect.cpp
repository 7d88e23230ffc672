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

#include "kws/detect.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "json.hpp"
#include "kws/error.hpp"
#include "kws/frontend.hpp"

namespace kws {

void DetectorConfig::validate() const {
  if (!(threshold > 0.0f && threshold < 1.0f))
    throw Error(ErrorKind::kInvalidArgument, "threshold must lie in (0, 1)");
  if (hangover_steps < 0)
    throw Error(ErrorKind::kInvalidArgument, "hangover_steps must be non-negative");
}

double DetectionEvent::start_ms() const { return static_cast<double>(start_frame) * kFrameMs; }
double DetectionEvent::end_ms() const { return static_cast<double>(end_frame) * kFrameMs; }

EventDetector::EventDetector(DetectorConfig config) : config_(config) { config_.validate(); }

std::optional<DetectionEvent> EventDetector::push(const StreamPosterior& p) {
  if (p.posterior >= config_.threshold) {
    below_ = 0;
    if (!open_ || p.posterior > open_->peak_posterior) {
      DetectionEvent e;
      e.start_frame = p.first_frame;
      e.end_frame = p.last_frame;
      e.peak_step = p.step_index;
      e.peak_posterior = p.posterior;
      e.detect_wall_ms = p.emit_wall_ms;
      e.end_audio_ms = static_cast<double>(p.last_frame) * kFrameMs + kWindowMs;
      open_ = e;
    }
    return std::nullopt;
  }
  if (!open_) return std::nullopt;
  if (++below_ >= std::max(1, config_.hangover_steps)) return finish();
  return std::nullopt;
}

std::optional<DetectionEvent> EventDetector::finish() {
  std::optional<DetectionEvent> out = std::move(open_);
  open_.reset();
  below_ = 0;
  return out;
}

std::vector<DetectionEvent> detect(std::span<const StreamPosterior> trace,
                                   const DetectorConfig& config) {
  EventDetector detector(config);
  std::vector<DetectionEvent> events;
  for (const StreamPosterior& p : trace)
    if (auto e = detector.push(p)) events.push_back(*e);
  if (auto e = detector.finish()) events.push_back(*e);
  return events;
}

std::vector<EventMatch> match_events(std::span<const DetectionEvent> events,
                                     std::span<const EndpointRef> refs) {
  struct Candidate {
    double overlap;
    std::size_t event;
    std::size_t ref;
  };
  std::vector<Candidate> candidates;
  for (std::size_t e = 0; e < events.size(); ++e) {
    for (std::size_t r = 0; r < refs.size(); ++r) {
      const double overlap = std::min(events[e].end_ms(), refs[r].end_ms) -
                             std::max(events[e].start_ms(), refs[r].start_ms);
      if (overlap > 0.0) candidates.push_back({overlap, e, r});
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(b.overlap, a.event, a.ref) < std::tie(a.overlap, b.event, b.ref);
  });
  std::vector<bool> event_used(events.size()), ref_used(refs.size());
  std::vector<EventMatch> matches;
  for (const Candidate& c : candidates) {
    if (event_used[c.event] || ref_used[c.ref]) continue;
    event_used[c.event] = ref_used[c.ref] = true;
    matches.push_back({c.event, c.ref, events[c.event].start_ms() - refs[c.ref].start_ms,
                       events[c.event].end_ms() - refs[c.ref].end_ms});
  }
  std::sort(matches.begin(), matches.end(),
            [](const EventMatch& a, const EventMatch& b) { return a.ref < b.ref; });
  return matches;
}

EndpointDelta summarize_matches(std::span<const EventMatch> matches, std::size_t num_refs,
                                std::size_t num_events) {
  if (matches.empty())
    throw Error(ErrorKind::kUndefinedMean, "no detection overlaps any reference endpoint");
  EndpointDelta out;
  for (const EventMatch& m : matches) {
    out.mean_start_ms += std::abs(m.start_delta_ms);
    out.mean_end_ms += std::abs(m.end_delta_ms);
  }
  out.matched = matches.size();
  out.mean_start_ms /= static_cast<double>(out.matched);
  out.mean_end_ms /= static_cast<double>(out.matched);
  out.missed_refs = num_refs - out.matched;
  out.unmatched_events = num_events - out.matched;
  return out;
}

EndpointDelta endpoint_delta(std::span<const DetectionEvent> events,
                             std::span<const EndpointRef> refs) {
  const std::vector<EventMatch> matches = match_events(events, refs);
  return summarize_matches(matches, refs.size(), events.size());
}

double latency(const DetectionEvent& event, double baseline_ms) {
  if (event.end_audio_ms < 0.0 || event.detect_wall_ms < 0.0)
    throw Error(ErrorKind::kClock, "negative timestamp on detection event");
  return event.detect_wall_ms - event.end_audio_ms + baseline_ms;
}

double compose_latency(double baseline_latency_ms, double mean_end_delta_ms) {
  return baseline_latency_ms + mean_end_delta_ms;
}

std::string event_to_json(const DetectionEvent& event, double baseline_ms) {
  nlohmann::json j{{"start_ms", event.start_ms()},
                   {"end_ms", event.end_ms()},
                   {"peak", event.peak_posterior},
                   {"latency_ms", latency(event, baseline_ms)}};
  return j.dump();
}

}  // namespace kws
