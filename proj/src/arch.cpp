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

#include "kws/arch.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "config_json.hpp"
#include "kws/error.hpp"

namespace kws {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::kDelta: return "delta";
    case LayerKind::kConv: return "conv";
    case LayerKind::kBatchNorm: return "batchnorm";
    case LayerKind::kFlatten: return "flatten";
    case LayerKind::kGru: return "gru";
    case LayerKind::kAttention: return "attention";
    case LayerKind::kSumOverTime: return "sum_over_time";
    case LayerKind::kDense: return "dense";
  }
  return "?";
}

LayerSpec LayerSpec::delta() {
  LayerSpec s;
  s.kind = LayerKind::kDelta;
  s.name = "delta";
  return s;
}

LayerSpec LayerSpec::conv(std::string name, int kernel_t, int kernel_f, int stride_t,
                          int stride_f, int channels, Activation act) {
  LayerSpec s;
  s.kind = LayerKind::kConv;
  s.name = std::move(name);
  s.kernel_t = kernel_t;
  s.kernel_f = kernel_f;
  s.stride_t = stride_t;
  s.stride_f = stride_f;
  s.units = channels;
  s.activation = act;
  return s;
}

LayerSpec LayerSpec::batchnorm(std::string name, Activation act, float eps) {
  LayerSpec s;
  s.kind = LayerKind::kBatchNorm;
  s.name = std::move(name);
  s.activation = act;
  s.eps = eps;
  return s;
}

LayerSpec LayerSpec::flatten(bool keep_time) {
  LayerSpec s;
  s.kind = LayerKind::kFlatten;
  s.name = "flatten";
  s.keep_time = keep_time;
  return s;
}

LayerSpec LayerSpec::gru(std::string name, int cells) {
  LayerSpec s;
  s.kind = LayerKind::kGru;
  s.name = std::move(name);
  s.units = cells;
  return s;
}

LayerSpec LayerSpec::attention(std::string name, int dim, AttentionScale scale) {
  LayerSpec s;
  s.kind = LayerKind::kAttention;
  s.name = std::move(name);
  s.units = dim;
  s.scale = scale;
  return s;
}

LayerSpec LayerSpec::sum_over_time() {
  LayerSpec s;
  s.kind = LayerKind::kSumOverTime;
  s.name = "sum_over_time";
  return s;
}

LayerSpec LayerSpec::dense(std::string name, int units, Activation act) {
  LayerSpec s;
  s.kind = LayerKind::kDense;
  s.name = std::move(name);
  s.units = units;
  s.activation = act;
  return s;
}

bool LayerSpec::has_parameters() const {
  switch (kind) {
    case LayerKind::kConv:
    case LayerKind::kBatchNorm:
    case LayerKind::kGru:
    case LayerKind::kAttention:
    case LayerKind::kDense:
      return true;
    default:
      return false;
  }
}

namespace {

[[noreturn]] void shape_error(const LayerSpec& layer, std::size_t index, const std::string& what) {
  throw Error(ErrorKind::kShape, "layer " + std::to_string(index) + " (" +
                                     std::string(to_string(layer.kind)) + " '" + layer.name +
                                     "'): " + what);
}

std::string dims(const Shape& s) {
  std::ostringstream os;
  switch (s.form) {
    case ShapeForm::kTensor: os << s.time << "x" << s.freq << "x" << s.channels; break;
    case ShapeForm::kSequence: os << s.time << "x" << s.freq << " sequence"; break;
    case ShapeForm::kVector: os << s.freq << "-vector"; break;
  }
  return os.str();
}

}  // namespace

std::vector<LayerShape> shape_check(const ModelConfig& config) {
  if (config.input_frames < 1 || config.input_bins < 1)
    throw Error(ErrorKind::kInvalidConfig, "input dimensions must be positive");

  std::set<std::string> names;
  int flattens = 0;
  bool has_gru = false;
  Shape cur{ShapeForm::kTensor, config.input_frames, config.input_bins, 1};
  std::vector<LayerShape> shapes;
  shapes.reserve(config.layers.size());

  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerSpec& l = config.layers[i];
    if (l.has_parameters()) {
      if (l.name.empty())
        throw Error(ErrorKind::kInvalidConfig, "layer " + std::to_string(i) + " has no name");
      if (!names.insert(l.name).second)
        throw Error(ErrorKind::kInvalidConfig, "duplicate layer name '" + l.name + "'");
    }
    Shape out = cur;
    switch (l.kind) {
      case LayerKind::kDelta:
        if (i != 0) shape_error(l, i, "delta must be the first layer");
        if (cur.time < 2) shape_error(l, i, "delta needs at least 2 input frames");
        out.time = cur.time - 1;
        break;
      case LayerKind::kConv:
        if (cur.form != ShapeForm::kTensor) shape_error(l, i, "conv needs a tensor input, got " + dims(cur));
        if (l.kernel_t < 1 || l.kernel_f < 1 || l.stride_t < 1 || l.stride_f < 1 || l.units < 1)
          shape_error(l, i, "kernel, stride and channels must be positive");
        if (l.kernel_t > cur.time || l.kernel_f > cur.freq)
          shape_error(l, i, "kernel " + std::to_string(l.kernel_t) + "x" +
                                std::to_string(l.kernel_f) + " larger than input " + dims(cur));
        out.time = (cur.time - l.kernel_t) / l.stride_t + 1;
        out.freq = (cur.freq - l.kernel_f) / l.stride_f + 1;
        out.channels = l.units;
        break;
      case LayerKind::kBatchNorm:
        if (!(l.eps >= 0.0f)) shape_error(l, i, "eps must be non-negative");
        break;
      case LayerKind::kFlatten:
        if (cur.form != ShapeForm::kTensor) shape_error(l, i, "flatten needs a tensor input");
        ++flattens;
        if (l.keep_time)
          out = Shape{ShapeForm::kSequence, cur.time, cur.width(), 1};
        else
          out = Shape{ShapeForm::kVector, 1, cur.time * cur.width(), 1};
        break;
      case LayerKind::kGru:
        if (cur.form != ShapeForm::kSequence) shape_error(l, i, "GRU needs a sequence input, got " + dims(cur));
        if (l.units < 1) shape_error(l, i, "GRU needs at least one cell");
        has_gru = true;
        out.freq = l.units;
        break;
      case LayerKind::kAttention:
        if (cur.form != ShapeForm::kSequence) shape_error(l, i, "attention needs a sequence input");
        if (l.units != cur.freq)
          shape_error(l, i, "attention width " + std::to_string(l.units) +
                                " must equal input width " + std::to_string(cur.freq));
        break;
      case LayerKind::kSumOverTime:
        if (cur.form != ShapeForm::kSequence) shape_error(l, i, "sum over time needs a sequence input");
        out = Shape{ShapeForm::kVector, 1, cur.freq, 1};
        break;
      case LayerKind::kDense:
        if (cur.form != ShapeForm::kVector) shape_error(l, i, "dense needs a vector input, got " + dims(cur));
        if (l.units < 1) shape_error(l, i, "dense needs at least one unit");
        out.freq = l.units;
        break;
    }
    shapes.push_back({cur, out});
    cur = out;
  }
  if (flattens != 1)
    throw Error(ErrorKind::kInvalidConfig,
                "expected exactly one flatten layer, found " + std::to_string(flattens));
  if (has_gru) {
    const auto flat = std::find_if(config.layers.begin(), config.layers.end(),
                                   [](const LayerSpec& l) { return l.kind == LayerKind::kFlatten; });
    if (!flat->keep_time)
      throw Error(ErrorKind::kInvalidConfig, "recurrent models need a time-preserving flatten");
    const auto at = static_cast<std::size_t>(flat - config.layers.begin());
    if (shapes[at].out.time < 2)
      throw Error(ErrorKind::kInvalidConfig, "recurrent models need at least 2 conv output steps");
  }
  return shapes;
}

void require_posterior_output(const ModelConfig& config) {
  shape_check(config);
  if (config.layers.empty() || config.layers.back().kind != LayerKind::kDense ||
      config.layers.back().units != 1 ||
      config.layers.back().activation != Activation::kSigmoid)
    throw Error(ErrorKind::kInvalidConfig,
                "model '" + config.name + "' must end in a single sigmoid dense unit");
}

ModelFamily model_family(const ModelConfig& config) {
  bool conv = false;
  for (const LayerSpec& l : config.layers) {
    if (l.kind == LayerKind::kGru) return ModelFamily::kCrnn;
    if (l.kind == LayerKind::kConv) conv = true;
  }
  return conv ? ModelFamily::kCnn : ModelFamily::kDnn;
}

ReceptiveField receptive_field(const ModelConfig& config) {
  std::int64_t rf = 1;
  std::int64_t stride = 1;
  bool has_conv = false;
  for (const LayerSpec& l : config.layers) {
    if (l.kind == LayerKind::kDelta) {
      rf += stride;
    } else if (l.kind == LayerKind::kConv) {
      if (l.kernel_t < 1 || l.stride_t < 1)
        throw Error(ErrorKind::kInvalidConfig, "conv '" + l.name + "' has a non-positive kernel or stride");
      rf += static_cast<std::int64_t>(l.kernel_t - 1) * stride;
      stride *= l.stride_t;
      has_conv = true;
    } else if (l.kind != LayerKind::kBatchNorm) {
      break;
    }
  }
  if (!has_conv)
    throw Error(ErrorKind::kInvalidConfig, "model '" + config.name + "' has no convolutional front end");
  if (rf > config.input_frames)
    throw Error(ErrorKind::kFrontEndTooDeep, "receptive field " + std::to_string(rf) +
                                                 " exceeds input of " +
                                                 std::to_string(config.input_frames) + " frames");
  const std::int64_t steps = (config.input_frames - rf) / stride + 1;
  return {static_cast<int>(rf), static_cast<int>(stride), static_cast<int>(steps)};
}

int window_stride(const ModelConfig& config) {
  if (model_family(config) == ModelFamily::kDnn) return 1;
  return receptive_field(config).stride;
}

FootprintReport footprint(const ModelConfig& config) {
  const std::vector<LayerShape> shapes = shape_check(config);
  FootprintReport report;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerSpec& l = config.layers[i];
    const Shape& in = shapes[i].in;
    const Shape& out = shapes[i].out;
    LayerFootprint f{l.name, l.kind, 0, 0, 0};
    switch (l.kind) {
      case LayerKind::kConv: {
        const std::int64_t taps = std::int64_t{l.kernel_t} * l.kernel_f * in.channels;
        f.parameters = taps * l.units + l.units;
        f.multiplies = out.time * out.freq * l.units * taps;
        f.biases = l.units;
        break;
      }
      case LayerKind::kBatchNorm: {
        const std::int64_t c = in.form == ShapeForm::kTensor ? in.channels : in.freq;
        f.parameters = 2 * c;
        f.biases = c;
        break;
      }
      case LayerKind::kGru: {
        const std::int64_t d = l.units;
        const std::int64_t n = in.freq;
        f.parameters = 3 * (d * (n + d) + d);
        f.multiplies = in.time * 3 * (d * n + d * d);
        f.biases = 3 * d;
        break;
      }
      case LayerKind::kAttention: {
        const std::int64_t d = l.units;
        const std::int64_t t = in.time;
        f.parameters = 3 * (d * d + d);
        f.multiplies = 3 * t * d * d + 2 * t * t * d;
        f.biases = 3 * d;
        break;
      }
      case LayerKind::kDense:
        f.parameters = in.freq * l.units + l.units;
        f.multiplies = in.freq * l.units;
        f.biases = l.units;
        break;
      default:
        break;
    }
    report.parameters += f.parameters;
    report.multiplies += f.multiplies;
    report.biases += f.biases;
    report.layers.push_back(std::move(f));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Zoo

namespace {

constexpr std::array<ReferenceBudget, 9> kBudgets{{
    {"CRNN-239k", 239'000, 10'250'000},
    {"CRNN-183k", 183'000, 5'730'000},
    {"Delta-LFBE-CRNN-239k", 239'000, 10'200'000},
    {"CRNN-89k", 89'000, 1'770'000},
    {"CRNN-58k", 58'000, 1'470'000},
    {"CNN-263k", 263'000, 5'250'000},
    {"CNN-28k", 28'000, 2'920'000},
    {"DNN-233k", 233'000, 233'000},
    {"DNN-51k", 51'000, 51'000},
}};

using A = Activation;

// conv -> batch-norm -> relu
void conv_block(std::vector<LayerSpec>& layers, int index, int kt, int kf, int st, int sf,
                int channels) {
  const std::string id = std::to_string(index);
  layers.push_back(LayerSpec::conv("conv" + id, kt, kf, st, sf, channels));
  layers.push_back(LayerSpec::batchnorm("bn" + id, A::kRelu));
}

void attention_head(std::vector<LayerSpec>& layers, int cells, std::initializer_list<int> hidden) {
  layers.push_back(LayerSpec::gru("gru", cells));
  layers.push_back(LayerSpec::attention("attention", cells));
  layers.push_back(LayerSpec::sum_over_time());
  int i = 1;
  for (const int units : hidden)
    layers.push_back(LayerSpec::dense("dense" + std::to_string(i++), units, A::kRelu));
  layers.push_back(LayerSpec::dense("output", 1, A::kSigmoid));
}

// 100 x 64 -> 47x28x8 -> 22x11x32 -> 10x4x128, rf 28, k 8.
ModelConfig crnn_239k() {
  ModelConfig c{"CRNN-239k", 100, 64, {}};
  conv_block(c.layers, 1, 8, 10, 2, 2, 8);
  conv_block(c.layers, 2, 5, 7, 2, 2, 32);
  conv_block(c.layers, 3, 4, 5, 2, 2, 128);
  c.layers.push_back(LayerSpec::flatten(true));
  attention_head(c.layers, 64, {256, 32});
  return c;
}

ModelConfig crnn_183k() {
  ModelConfig c{"CRNN-183k", 100, 64, {}};
  conv_block(c.layers, 1, 8, 10, 2, 2, 8);
  conv_block(c.layers, 2, 5, 7, 2, 2, 32);
  conv_block(c.layers, 3, 4, 5, 2, 2, 128);
  // Halves the frequency axis and the channels: GRU input 512 -> 128.
  conv_block(c.layers, 4, 1, 2, 1, 2, 64);
  c.layers.push_back(LayerSpec::flatten(true));
  attention_head(c.layers, 64, {256, 32});
  return c;
}

ModelConfig delta_crnn_239k() {
  ModelConfig c = crnn_239k();
  c.name = "Delta-LFBE-CRNN-239k";
  c.input_frames = 101;
  c.layers.insert(c.layers.begin(), LayerSpec::delta());
  return c;
}

// 100 x 20 -> 47x8 -> 22x6 -> 10x4, rf 28, k 8.
ModelConfig small_crnn(std::string name, int c1, int c2, int c3, int cells,
                       std::initializer_list<int> hidden) {
  ModelConfig c{std::move(name), 100, 20, {}};
  conv_block(c.layers, 1, 8, 5, 2, 2, c1);
  conv_block(c.layers, 2, 5, 3, 2, 1, c2);
  conv_block(c.layers, 3, 4, 3, 2, 1, c3);
  c.layers.push_back(LayerSpec::flatten(true));
  attention_head(c.layers, cells, hidden);
  return c;
}

ModelConfig cnn_263k() {
  ModelConfig c{"CNN-263k", 100, 64, {}};
  conv_block(c.layers, 1, 5, 5, 2, 2, 16);
  conv_block(c.layers, 2, 5, 5, 2, 2, 32);
  conv_block(c.layers, 3, 3, 3, 2, 2, 64);
  c.layers.push_back(LayerSpec::flatten(false));
  c.layers.push_back(LayerSpec::dense("dense1", 60, A::kRelu));
  c.layers.push_back(LayerSpec::dense("output", 1, A::kSigmoid));
  return c;
}

// Five conv layers and one fully connected layer.
ModelConfig cnn_28k() {
  ModelConfig c{"CNN-28k", 100, 20, {}};
  conv_block(c.layers, 1, 3, 3, 1, 1, 8);
  conv_block(c.layers, 2, 3, 3, 2, 1, 16);
  conv_block(c.layers, 3, 3, 3, 2, 1, 16);
  conv_block(c.layers, 4, 3, 3, 2, 1, 32);
  conv_block(c.layers, 5, 3, 3, 2, 2, 64);
  c.layers.push_back(LayerSpec::flatten(false));
  c.layers.push_back(LayerSpec::dense("output", 1, A::kSigmoid));
  return c;
}

// Six fully connected layers on the flattened 100 x 20 window.
ModelConfig dnn(std::string name, int width) {
  ModelConfig c{std::move(name), 100, 20, {}};
  c.layers.push_back(LayerSpec::flatten(false));
  for (int i = 1; i <= 5; ++i)
    c.layers.push_back(LayerSpec::dense("dense" + std::to_string(i), width, A::kRelu));
  c.layers.push_back(LayerSpec::dense("output", 1, A::kSigmoid));
  return c;
}

}  // namespace

std::span<const ReferenceBudget> reference_budgets() { return kBudgets; }

ModelConfig reference_config(std::string_view name) {
  if (name == "CRNN-239k") return crnn_239k();
  if (name == "CRNN-183k") return crnn_183k();
  if (name == "Delta-LFBE-CRNN-239k") return delta_crnn_239k();
  if (name == "CRNN-89k") return small_crnn("CRNN-89k", 4, 16, 64, 64, {16});
  if (name == "CRNN-58k") return small_crnn("CRNN-58k", 4, 16, 48, 48, {96});
  if (name == "CNN-263k") return cnn_263k();
  if (name == "CNN-28k") return cnn_28k();
  if (name == "DNN-233k") return dnn("DNN-233k", 96);
  if (name == "DNN-51k") return dnn("DNN-51k", 24);
  throw Error(ErrorKind::kUnknownModel, "no reference config named '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {
namespace {

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::kNone: return "none";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "none";
}

Activation activation_from(const std::string& s) {
  if (s == "none") return Activation::kNone;
  if (s == "relu") return Activation::kRelu;
  if (s == "sigmoid") return Activation::kSigmoid;
  throw Error(ErrorKind::kInvalidConfig, "unknown activation '" + s + "'");
}

LayerKind kind_from(const std::string& s) {
  for (const LayerKind k : {LayerKind::kDelta, LayerKind::kConv, LayerKind::kBatchNorm,
                            LayerKind::kFlatten, LayerKind::kGru, LayerKind::kAttention,
                            LayerKind::kSumOverTime, LayerKind::kDense})
    if (to_string(k) == s) return k;
  throw Error(ErrorKind::kInvalidConfig, "unknown layer kind '" + s + "'");
}

}  // namespace

nlohmann::json config_to_json_value(const ModelConfig& config) {
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec& l : config.layers) {
    nlohmann::json j;
    j["kind"] = to_string(l.kind);
    switch (l.kind) {
      case LayerKind::kDelta:
      case LayerKind::kSumOverTime:
        break;
      case LayerKind::kConv:
        j["name"] = l.name;
        j["kernel"] = {l.kernel_t, l.kernel_f};
        j["stride"] = {l.stride_t, l.stride_f};
        j["channels"] = l.units;
        j["activation"] = activation_name(l.activation);
        break;
      case LayerKind::kBatchNorm:
        j["name"] = l.name;
        j["activation"] = activation_name(l.activation);
        j["eps"] = l.eps;
        break;
      case LayerKind::kFlatten:
        j["keep_time"] = l.keep_time;
        break;
      case LayerKind::kGru:
        j["name"] = l.name;
        j["units"] = l.units;
        break;
      case LayerKind::kAttention:
        j["name"] = l.name;
        j["units"] = l.units;
        j["scale"] = l.scale == AttentionScale::kKeyDim ? "dk" : "sqrt_dk";
        break;
      case LayerKind::kDense:
        j["name"] = l.name;
        j["units"] = l.units;
        j["activation"] = activation_name(l.activation);
        break;
    }
    layers.push_back(std::move(j));
  }
  return nlohmann::json{{"schema_version", kConfigSchemaVersion},
                        {"name", config.name},
                        {"input", {{"frames", config.input_frames}, {"bins", config.input_bins}}},
                        {"layers", std::move(layers)}};
}

ModelConfig config_from_json_value(const nlohmann::json& value) {
  try {
    const int version = value.at("schema_version").get<int>();
    if (version != kConfigSchemaVersion)
      throw Error(ErrorKind::kInvalidConfig, "unsupported config schema_version " + std::to_string(version));
    ModelConfig c;
    c.name = value.at("name").get<std::string>();
    c.input_frames = value.at("input").at("frames").get<int>();
    c.input_bins = value.at("input").at("bins").get<int>();
    for (const nlohmann::json& j : value.at("layers")) {
      const LayerKind kind = kind_from(j.at("kind").get<std::string>());
      LayerSpec l;
      switch (kind) {
        case LayerKind::kDelta: l = LayerSpec::delta(); break;
        case LayerKind::kSumOverTime: l = LayerSpec::sum_over_time(); break;
        case LayerKind::kConv:
          l = LayerSpec::conv(j.at("name"), j.at("kernel").at(0), j.at("kernel").at(1),
                              j.at("stride").at(0), j.at("stride").at(1), j.at("channels"),
                              activation_from(j.value("activation", "none")));
          break;
        case LayerKind::kBatchNorm:
          l = LayerSpec::batchnorm(j.at("name"), activation_from(j.value("activation", "none")),
                                   j.value("eps", 1e-3f));
          break;
        case LayerKind::kFlatten: l = LayerSpec::flatten(j.value("keep_time", true)); break;
        case LayerKind::kGru: l = LayerSpec::gru(j.at("name"), j.at("units")); break;
        case LayerKind::kAttention: {
          const std::string scale = j.value("scale", "dk");
          if (scale != "dk" && scale != "sqrt_dk")
            throw Error(ErrorKind::kInvalidConfig, "unknown attention scale '" + scale + "'");
          l = LayerSpec::attention(j.at("name"), j.at("units"),
                                   scale == "dk" ? AttentionScale::kKeyDim
                                                 : AttentionScale::kSqrtKeyDim);
          break;
        }
        case LayerKind::kDense:
          l = LayerSpec::dense(j.at("name"), j.at("units"),
                               activation_from(j.value("activation", "none")));
          break;
      }
      c.layers.push_back(std::move(l));
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("malformed config: ") + e.what());
  }
}

}  // namespace detail

std::string config_to_json(const ModelConfig& config, int indent) {
  return detail::config_to_json_value(config).dump(indent);
}

ModelConfig config_from_json(std::string_view text) {
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kInvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  return detail::config_from_json_value(value);
}

ModelConfig resolve_config(const std::string& name_or_path) {
  for (const ReferenceBudget& b : kBudgets)
    if (b.name == name_or_path) return reference_config(name_or_path);
  std::ifstream in(name_or_path);
  if (!in)
    throw Error(ErrorKind::kUnknownModel,
                "'" + name_or_path + "' is neither a zoo model nor a readable config file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

}  // namespace kws
