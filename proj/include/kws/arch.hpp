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

// Declarative model topologies, shape propagation, receptive-field math and
// parameter / multiply accounting.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kws/nncore.hpp"

namespace kws {

inline constexpr int kConfigSchemaVersion = 1;

enum class LayerKind {
  kDelta,        // frame differencing in front of the network, no parameters
  kConv,
  kBatchNorm,
  kFlatten,      // keep_time: t x f x C -> t x fC, otherwise -> one vector
  kGru,
  kAttention,
  kSumOverTime,
  kDense,
};

std::string_view to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::kDense;
  std::string name;
  int kernel_t = 1;
  int kernel_f = 1;
  int stride_t = 1;
  int stride_f = 1;
  int units = 0;  // conv channels, GRU cells, attention width, dense outputs
  Activation activation = Activation::kNone;
  bool keep_time = true;
  AttentionScale scale = AttentionScale::kKeyDim;
  float eps = 1e-3f;

  static LayerSpec delta();
  static LayerSpec conv(std::string name, int kernel_t, int kernel_f, int stride_t,
                        int stride_f, int channels, Activation act = Activation::kNone);
  static LayerSpec batchnorm(std::string name, Activation act = Activation::kNone,
                             float eps = 1e-3f);
  static LayerSpec flatten(bool keep_time = true);
  static LayerSpec gru(std::string name, int cells);
  static LayerSpec attention(std::string name, int dim,
                             AttentionScale scale = AttentionScale::kKeyDim);
  static LayerSpec sum_over_time();
  static LayerSpec dense(std::string name, int units, Activation act = Activation::kNone);

  bool has_parameters() const;
  bool operator==(const LayerSpec&) const = default;
};

struct ModelConfig {
  std::string name;
  int input_frames = 100;
  int input_bins = 64;
  std::vector<LayerSpec> layers;

  bool operator==(const ModelConfig&) const = default;
};

enum class ShapeForm { kTensor, kSequence, kVector };

// Tensor: time x freq x channels. Sequence: time x freq (channels == 1).
// Vector: freq entries (time == channels == 1).
struct Shape {
  ShapeForm form = ShapeForm::kTensor;
  Index time = 1;
  Index freq = 1;
  Index channels = 1;

  Index width() const { return freq * channels; }
  bool operator==(const Shape&) const = default;
};

struct LayerShape {
  Shape in;
  Shape out;
};

// Propagates shapes through every layer; throws kShape / kInvalidConfig on
// any incompatibility. Entry i describes layers[i].
std::vector<LayerShape> shape_check(const ModelConfig& config);

// shape_check plus: the network ends in one sigmoid unit, as inference needs.
void require_posterior_output(const ModelConfig& config);

enum class ModelFamily { kCrnn, kCnn, kDnn };
ModelFamily model_family(const ModelConfig& config);

struct ReceptiveField {
  int frames = 0;  // input frames seen by one front-end output step
  int stride = 0;  // input frames between consecutive output steps (k)
  int steps = 0;   // output steps for one input window (h)
};

// Time-axis receptive field of the leading delta/conv/batch-norm stack:
//   rf = 1 + sum_i (kt_i - 1) * prod_{j<i} st_j,  k = prod st_i,
//   h = floor((t - rf) / k) + 1.
ReceptiveField receptive_field(const ModelConfig& config);

// Frames between consecutive sliding-window evaluations: k for models with a
// conv front end, 1 otherwise.
int window_stride(const ModelConfig& config);

struct LayerFootprint {
  std::string name;
  LayerKind kind = LayerKind::kDense;
  std::int64_t parameters = 0;
  std::int64_t multiplies = 0;
  std::int64_t biases = 0;
};

// Multiplies count one per multiply-accumulate in conv / dense / GRU /
// attention matrix products for a single window. Activations, softmax,
// normalization and elementwise gating are not counted. Batch-norm counts its
// two trained vectors; the running statistics are not parameters.
struct FootprintReport {
  std::vector<LayerFootprint> layers;
  std::int64_t parameters = 0;
  std::int64_t multiplies = 0;
  std::int64_t biases = 0;
};

FootprintReport footprint(const ModelConfig& config);
inline std::int64_t count_parameters(const ModelConfig& config) {
  return footprint(config).parameters;
}
inline std::int64_t count_multiplies(const ModelConfig& config) {
  return footprint(config).multiplies;
}

// Reference model zoo.
struct ReferenceBudget {
  std::string_view name;
  std::int64_t parameters;  // budget encoded in the name
  std::int64_t multiplies;  // published multiply count for the same name
};

std::span<const ReferenceBudget> reference_budgets();
ModelConfig reference_config(std::string_view name);

// JSON round trip. The text carries "schema_version".
std::string config_to_json(const ModelConfig& config, int indent = -1);
ModelConfig config_from_json(std::string_view text);

// Accepts a zoo name or a path to a JSON config file.
ModelConfig resolve_config(const std::string& name_or_path);

}  // namespace kws
