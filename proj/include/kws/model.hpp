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
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "kws/arch.hpp"
#include "kws/frontend.hpp"
#include "kws/nncore.hpp"
#include "kws/posterior.hpp"

namespace kws {

struct TensorDescriptor {
  std::string name;
  std::vector<std::int64_t> shape;

  std::int64_t size() const;
  bool operator==(const TensorDescriptor&) const = default;
};

struct NamedTensor {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> data;  // row-major

  bool operator==(const NamedTensor&) const = default;
};

// Trained tensors keyed by "<layer>.<role>", kept in insertion order.
class WeightSet {
 public:
  void add(NamedTensor tensor);
  const NamedTensor* find(std::string_view name) const;
  const NamedTensor& at(std::string_view name) const;
  std::span<const NamedTensor> tensors() const { return tensors_; }
  std::span<NamedTensor> tensors() { return tensors_; }
  std::size_t total_floats() const;

  bool operator==(const WeightSet&) const = default;

 private:
  std::vector<NamedTensor> tensors_;
};

// Every tensor the config needs, in canonical (file) order.
std::vector<TensorDescriptor> expected_tensors(const ModelConfig& config);

// Throws kMissingTensor, kUnexpectedTensor or kShape naming the layer.
void validate_weights(const ModelConfig& config, const WeightSet& weights);

// Uniform(-scale, scale) for weights and biases; batch-norm gamma and
// variance are centred on 1 so the network stays well conditioned.
WeightSet init_random_weights(const ModelConfig& config, std::uint64_t seed, float scale = 0.1f);

// Zero-pads audio at the end so that it yields at least `frames` frames.
AudioBuffer pad_to_frames(AudioBuffer audio, Index frames);

namespace ops {
struct Delta {};
struct Conv {
  ConvKernel<float> kernel;
  Activation activation = Activation::kNone;
};
struct BatchNorm {
  BatchNormParams<float> params;
  Activation activation = Activation::kNone;
};
struct Flatten {
  bool keep_time = true;
};
struct Gru {
  GruParams<float> params;
};
struct Attention {
  AttentionParams<float> params;
};
struct SumOverTime {};
struct Dense {
  DenseParams<float> params;
};
}  // namespace ops

using LayerOp = std::variant<ops::Delta, ops::Conv, ops::BatchNorm, ops::Flatten, ops::Gru,
                             ops::Attention, ops::SumOverTime, ops::Dense>;

// A config bound to validated weights. Immutable after construction and safe
// to share between threads and stream engines.
class Model {
 public:
  Model(ModelConfig config, const WeightSet& weights);

  const ModelConfig& config() const { return config_; }
  std::span<const LayerOp> layers() const { return ops_; }

  Index window_frames() const { return config_.input_frames; }
  Index num_bins() const { return config_.input_bins; }
  // Frames between consecutive windows (k), 1 for models without convs.
  int window_stride() const { return stride_; }
  // Front-end steps per window (h), 1 for models without convs.
  int steps_per_window() const { return steps_; }

  // Index of the flatten op; ops before it form the streaming front end.
  std::size_t flatten_index() const { return flatten_index_; }
  // CRNN layout: a time-preserving flatten followed directly by one or more
  // GRUs. Only such models can be streamed with decoder banks.
  bool streamable() const { return streamable_; }
  // Number of GRU ops directly after the flatten.
  std::size_t recurrent_depth() const { return recurrent_depth_; }
  const GruParams<float>& recurrent(std::size_t i) const;

  // Front end over a block of frames (before the flatten).
  Tensor3f run_front(const FeatureMatrix& frames) const;

  // Runs ops [first, end) on `x`, which must have the shape those ops expect,
  // and returns the final scalar posterior.
  float run_from(std::size_t first, RowMatrixf x) const;

  float infer_window(const FeatureMatrix& window) const;

  // Posterior for every window of window_frames() frames at window_stride().
  std::vector<StreamPosterior> infer_sliding(const FeatureMatrix& features) const;

  FeatureMatrix features(const AudioBuffer& audio) const;

 private:
  ModelConfig config_;
  std::vector<LayerOp> ops_;
  std::size_t flatten_index_ = 0;
  std::size_t recurrent_depth_ = 0;
  bool streamable_ = false;
  int stride_ = 1;
  int steps_ = 1;
};

}  // namespace kws
