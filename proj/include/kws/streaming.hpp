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

#include <chrono>
#include <cstdint>
#include <functional>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "kws/detect.hpp"
#include "kws/frontend.hpp"
#include "kws/model.hpp"
#include "kws/posterior.hpp"

namespace kws {

// The layers below keep a pointer to the Model they were built from; the
// model must outlive them.

// Convolutional front end run one input frame at a time. Each conv layer
// keeps only the last kernel_t + stride_t - 1 input slices, so memory does
// not grow with stream length. Output rows equal the rows Model::run_front
// produces over the same frames, bit for bit.
class StreamingFrontEnd {
 public:
  explicit StreamingFrontEnd(const Model& model);

  // Feeds frames (rows of num_bins) and returns the front-end steps they
  // complete, one flattened row each.
  RowMatrixf push(const FeatureMatrix& frames);

  std::int64_t frames_seen() const { return frames_seen_; }
  std::int64_t steps_emitted() const { return steps_emitted_; }
  Index step_width() const { return step_width_; }
  std::size_t state_bytes() const;

 private:
  struct DeltaStage {
    RowVectorf previous;
    bool primed = false;
  };
  struct ConvStage {
    const ops::Conv* op = nullptr;
    Index in_freq = 0;
    RowMatrixf ring;  // (kernel_t + stride_t - 1) x in_width
    std::int64_t received = 0;
  };
  struct NormStage {
    const ops::BatchNorm* op = nullptr;
  };
  using Stage = std::variant<DeltaStage, ConvStage, NormStage>;

  bool advance(std::size_t stage, RowVectorf& slice);

  std::vector<Stage> stages_;
  Index num_bins_ = 0;
  Index step_width_ = 0;
  std::int64_t frames_seen_ = 0;
  std::int64_t steps_emitted_ = 0;
};

// h staggered recurrent decoders over the shared front-end steps. Decoder
// (s - 1) mod h is reset at step s, so after warm-up exactly one decoder has
// seen a full window at every step and emits its posterior.
class DecoderBank {
 public:
  explicit DecoderBank(const Model& model);

  std::optional<StreamPosterior> step(const RowVectorf& front_step);

  int size() const { return static_cast<int>(decoders_.size()); }
  std::int64_t steps_seen() const { return step_; }
  std::size_t state_bytes() const;

 private:
  struct Decoder {
    std::vector<RowMatrixf> hidden;  // one 1 x d state per GRU layer
    RowMatrixf outputs;              // h x d of the last GRU layer
    Index filled = 0;
  };

  const Model* model_;
  std::vector<Decoder> decoders_;
  std::int64_t step_ = 0;
};

// Batched alternative to the bank. Buffers 2h - 1 front-end steps, runs all
// h windows that end inside the buffer as one h x d recurrent state, and
// keeps the last h - 1 steps for the next block. Posteriors arrive in bursts
// of h, which trades latency for fewer, larger matrix products.
class HyperGru {
 public:
  explicit HyperGru(const Model& model);

  // Returns h posteriors when this step fills the buffer, otherwise none.
  std::vector<StreamPosterior> push(const RowVectorf& front_step);

  // Runs the current buffer. Returns nothing if it is not full.
  std::vector<StreamPosterior> run_block();

  Index buffered() const { return filled_; }
  std::size_t state_bytes() const;

 private:
  const Model* model_;
  Index h_;
  RowMatrixf block_;  // (2h - 1) x step width
  Index filled_ = 0;
  std::int64_t block_start_ = 1;  // step index of block_ row 0
};

enum class Strategy { kBank, kHyper };

struct StreamOutput {
  std::vector<StreamPosterior> posteriors;
  std::vector<DetectionEvent> events;
};

// PCM in, posteriors and detection events out. The clock returns ms since
// the stream started and stamps every posterior; by default it measures
// steady wall time from construction.
class StreamEngine {
 public:
  using Clock = std::function<double()>;

  StreamEngine(std::shared_ptr<const Model> model, Strategy strategy, DetectorConfig detector,
               Clock clock = {});

  StreamOutput push_audio(std::span<const std::int16_t> samples);
  StreamOutput push_frames(const FeatureMatrix& frames);
  // Flushes an open detection. Buffered hyper steps that do not fill a
  // block produce no posteriors.
  StreamOutput finish();

  const Model& model() const { return *model_; }
  std::int64_t frames_seen() const { return front_.frames_seen(); }
  std::size_t state_bytes() const;

 private:
  void emit(std::vector<StreamPosterior> posteriors, StreamOutput& out);

  std::shared_ptr<const Model> model_;
  Strategy strategy_;
  Clock clock_;
  LfbeStream lfbe_;
  StreamingFrontEnd front_;
  std::optional<DecoderBank> bank_;
  std::optional<HyperGru> hyper_;
  EventDetector detector_;
  std::vector<StreamPosterior> pending_;
};

// Clock for replaying recorded audio faster than real time. Reads as the
// audio time of the samples delivered so far plus the compute time spent
// since the last delivery, which is what a live stream would observe.
class ReplayClock {
 public:
  void deliver(std::size_t samples);
  double now() const;

 private:
  std::size_t samples_ = 0;
  std::chrono::steady_clock::time_point delivered_at_ = std::chrono::steady_clock::now();
};

struct StreamCallbacks {
  std::function<void(const StreamPosterior&)> on_posterior;
  std::function<void(const DetectionEvent&)> on_event;
};

// Reads raw 16 kHz s16le mono PCM until EOF in chunks of `chunk_samples`.
// `replay`, if given, is told about every chunk before it is processed.
void stream_engine_run(StreamEngine& engine, std::istream& pcm, const StreamCallbacks& callbacks,
                       std::size_t chunk_samples = 1600, ReplayClock* replay = nullptr);

}  // namespace kws
