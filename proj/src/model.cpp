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

#include "kws/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include "kws/error.hpp"

namespace kws {
namespace {

std::string shape_string(const std::vector<std::int64_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

std::string layer_of(const std::string& tensor_name) {
  return tensor_name.substr(0, tensor_name.rfind('.'));
}

RowMatrixf as_matrix(const NamedTensor& t, Index rows, Index cols) {
  return Eigen::Map<const RowMatrixf>(t.data.data(), rows, cols);
}

RowVectorf as_row(const NamedTensor& t) {
  return Eigen::Map<const RowVectorf>(t.data.data(), static_cast<Index>(t.data.size()));
}

}  // namespace

std::int64_t TensorDescriptor::size() const {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

void WeightSet::add(NamedTensor tensor) {
  if (find(tensor.name))
    throw Error(ErrorKind::kInvalidArgument, "duplicate tensor '" + tensor.name + "'");
  tensors_.push_back(std::move(tensor));
}

const NamedTensor* WeightSet::find(std::string_view name) const {
  const auto it = std::find_if(tensors_.begin(), tensors_.end(),
                               [&](const NamedTensor& t) { return t.name == name; });
  return it == tensors_.end() ? nullptr : &*it;
}

const NamedTensor& WeightSet::at(std::string_view name) const {
  const NamedTensor* t = find(name);
  if (!t) throw Error(ErrorKind::kMissingTensor, "no tensor '" + std::string(name) + "'");
  return *t;
}

std::size_t WeightSet::total_floats() const {
  std::size_t n = 0;
  for (const NamedTensor& t : tensors_) n += t.data.size();
  return n;
}

std::vector<TensorDescriptor> expected_tensors(const ModelConfig& config) {
  const std::vector<LayerShape> shapes = shape_check(config);
  std::vector<TensorDescriptor> out;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const LayerSpec& l = config.layers[i];
    const Shape& in = shapes[i].in;
    const std::int64_t units = l.units;
    auto add = [&](const char* role, std::vector<std::int64_t> shape) {
      out.push_back({l.name + "." + role, std::move(shape)});
    };
    switch (l.kind) {
      case LayerKind::kConv:
        add("kernel", {l.kernel_t, l.kernel_f, in.channels, units});
        add("bias", {units});
        break;
      case LayerKind::kBatchNorm: {
        const std::int64_t c = in.form == ShapeForm::kTensor ? in.channels : in.freq;
        for (const char* role : {"gamma", "beta", "mean", "var"}) add(role, {c});
        break;
      }
      case LayerKind::kGru:
        for (const char* gate : {"z", "r", "h"}) {
          const std::string g(gate);
          add(("W_" + g).c_str(), {units, in.freq});
          add(("U_" + g).c_str(), {units, units});
          add(("b_" + g).c_str(), {units});
        }
        break;
      case LayerKind::kAttention:
        for (const char* map : {"q", "k", "v"}) {
          const std::string m(map);
          add(("W_" + m).c_str(), {units, units});
          add(("b_" + m).c_str(), {units});
        }
        break;
      case LayerKind::kDense:
        add("weight", {units, in.freq});
        add("bias", {units});
        break;
      default:
        break;
    }
  }
  return out;
}

void validate_weights(const ModelConfig& config, const WeightSet& weights) {
  const std::vector<TensorDescriptor> expected = expected_tensors(config);
  std::set<std::string> wanted;
  for (const TensorDescriptor& d : expected) {
    wanted.insert(d.name);
    const NamedTensor* t = weights.find(d.name);
    if (!t)
      throw Error(ErrorKind::kMissingTensor,
                  "layer '" + layer_of(d.name) + "' is missing tensor " + d.name);
    if (t->shape != d.shape)
      throw Error(ErrorKind::kShape, "layer '" + layer_of(d.name) + "': tensor " + d.name +
                                         " has shape " + shape_string(t->shape) +
                                         ", expected " + shape_string(d.shape));
    if (static_cast<std::int64_t>(t->data.size()) != d.size())
      throw Error(ErrorKind::kShape, "tensor " + d.name + " holds " +
                                         std::to_string(t->data.size()) + " values for shape " +
                                         shape_string(d.shape));
  }
  for (const NamedTensor& t : weights.tensors())
    if (!wanted.count(t.name))
      throw Error(ErrorKind::kUnexpectedTensor,
                  "tensor " + t.name + " is not used by model '" + config.name + "'");
}

WeightSet init_random_weights(const ModelConfig& config, std::uint64_t seed, float scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> uniform(-scale, scale);
  WeightSet weights;
  for (const TensorDescriptor& d : expected_tensors(config)) {
    NamedTensor t{d.name, d.shape, std::vector<float>(static_cast<std::size_t>(d.size()))};
    const std::string role = d.name.substr(d.name.rfind('.') + 1);
    for (float& v : t.data) {
      v = uniform(rng);
      if (role == "gamma") v = 1.0f + v;
      if (role == "var") v = 1.0f + std::abs(v);
    }
    weights.add(std::move(t));
  }
  return weights;
}

AudioBuffer pad_to_frames(AudioBuffer audio, Index frames) {
  const auto needed = static_cast<std::size_t>(samples_for_frames(frames));
  if (audio.samples.size() < needed) audio.samples.resize(needed, 0);
  return audio;
}

Model::Model(ModelConfig config, const WeightSet& weights) : config_(std::move(config)) {
  require_posterior_output(config_);
  validate_weights(config_, weights);
  const std::vector<LayerShape> shapes = shape_check(config_);

  for (std::size_t i = 0; i < config_.layers.size(); ++i) {
    const LayerSpec& l = config_.layers[i];
    const Shape& in = shapes[i].in;
    const std::string& n = l.name;
    switch (l.kind) {
      case LayerKind::kDelta:
        ops_.emplace_back(ops::Delta{});
        break;
      case LayerKind::kConv: {
        ops::Conv op;
        op.kernel.kernel_t = l.kernel_t;
        op.kernel.kernel_f = l.kernel_f;
        op.kernel.in_channels = in.channels;
        op.kernel.out_channels = l.units;
        op.kernel.stride_t = l.stride_t;
        op.kernel.stride_f = l.stride_f;
        op.kernel.weights = as_matrix(weights.at(n + ".kernel"),
                                      Index{l.kernel_t} * l.kernel_f * in.channels, l.units);
        op.kernel.bias = as_row(weights.at(n + ".bias"));
        op.kernel.validate();
        op.activation = l.activation;
        ops_.emplace_back(std::move(op));
        break;
      }
      case LayerKind::kBatchNorm: {
        ops::BatchNorm op;
        op.params.gamma = as_row(weights.at(n + ".gamma"));
        op.params.beta = as_row(weights.at(n + ".beta"));
        op.params.mean = as_row(weights.at(n + ".mean"));
        op.params.var = as_row(weights.at(n + ".var"));
        op.params.eps = l.eps;
        op.params.validate();
        op.activation = l.activation;
        ops_.emplace_back(std::move(op));
        break;
      }
      case LayerKind::kFlatten:
        flatten_index_ = i;
        ops_.emplace_back(ops::Flatten{l.keep_time});
        break;
      case LayerKind::kGru: {
        ops::Gru op;
        const Index d = l.units;
        auto gate = [&](const std::string& g) {
          return GateParams<float>{as_matrix(weights.at(n + ".W_" + g), d, in.freq),
                                   as_matrix(weights.at(n + ".U_" + g), d, d),
                                   as_row(weights.at(n + ".b_" + g))};
        };
        op.params.update = gate("z");
        op.params.reset = gate("r");
        op.params.candidate = gate("h");
        op.params.validate();
        ops_.emplace_back(std::move(op));
        break;
      }
      case LayerKind::kAttention: {
        ops::Attention op;
        const Index d = l.units;
        op.params.query_weights = as_matrix(weights.at(n + ".W_q"), d, d);
        op.params.key_weights = as_matrix(weights.at(n + ".W_k"), d, d);
        op.params.value_weights = as_matrix(weights.at(n + ".W_v"), d, d);
        op.params.query_bias = as_row(weights.at(n + ".b_q"));
        op.params.key_bias = as_row(weights.at(n + ".b_k"));
        op.params.value_bias = as_row(weights.at(n + ".b_v"));
        op.params.scale = l.scale;
        op.params.validate();
        ops_.emplace_back(std::move(op));
        break;
      }
      case LayerKind::kSumOverTime:
        ops_.emplace_back(ops::SumOverTime{});
        break;
      case LayerKind::kDense: {
        ops::Dense op;
        op.params.weights = as_matrix(weights.at(n + ".weight"), l.units, in.freq);
        op.params.bias = as_row(weights.at(n + ".bias"));
        op.params.activation = l.activation;
        ops_.emplace_back(std::move(op));
        break;
      }
    }
  }

  if (model_family(config_) != ModelFamily::kDnn) {
    const ReceptiveField rf = receptive_field(config_);
    stride_ = rf.stride;
    steps_ = rf.steps;
  }
  const auto* flatten = std::get_if<ops::Flatten>(&ops_[flatten_index_]);
  for (std::size_t i = flatten_index_ + 1;
       i < ops_.size() && std::holds_alternative<ops::Gru>(ops_[i]); ++i)
    ++recurrent_depth_;
  streamable_ = flatten->keep_time && recurrent_depth_ > 0;
}

const GruParams<float>& Model::recurrent(std::size_t i) const {
  if (i >= recurrent_depth_) throw Error(ErrorKind::kInvalidArgument, "no such recurrent layer");
  return std::get<ops::Gru>(ops_[flatten_index_ + 1 + i]).params;
}

Tensor3f Model::run_front(const FeatureMatrix& frames) const {
  if (frames.cols() != config_.input_bins)
    throw Error(ErrorKind::kShape, "expected " + std::to_string(config_.input_bins) +
                                       " bins, got " + std::to_string(frames.cols()));
  Tensor3f x = Tensor3f::from_features(frames);
  for (std::size_t i = 0; i < flatten_index_; ++i) {
    const LayerOp& op = ops_[i];
    if (std::holds_alternative<ops::Delta>(op)) {
      if (x.time < 2) throw Error(ErrorKind::kInsufficientFrames, "delta needs 2 frames");
      const Index t = x.time - 1;
      x.data = (x.data.bottomRows(t) - x.data.topRows(t)).eval();
      x.time = t;
    } else if (const auto* conv = std::get_if<ops::Conv>(&op)) {
      x = conv2d(x, conv->kernel);
      apply_activation(x.data, conv->activation);
    } else if (const auto* bn = std::get_if<ops::BatchNorm>(&op)) {
      batchnorm_inplace(x.data, bn->params);
      apply_activation(x.data, bn->activation);
    }
  }
  return x;
}

float Model::run_from(std::size_t first, RowMatrixf x) const {
  if (first < flatten_index_)
    throw Error(ErrorKind::kInvalidArgument, "run_from starts inside the front end");
  for (std::size_t i = first; i < ops_.size(); ++i) {
    const LayerOp& op = ops_[i];
    if (const auto* flat = std::get_if<ops::Flatten>(&op)) {
      if (!flat->keep_time) {
        RowMatrixf v = Eigen::Map<const RowMatrixf>(x.data(), 1, x.size());
        x = std::move(v);
      }
    } else if (const auto* gru = std::get_if<ops::Gru>(&op)) {
      x = gru_forward(gru->params, x, RowVectorf(RowVectorf::Zero(gru->params.hidden_dim())));
    } else if (const auto* att = std::get_if<ops::Attention>(&op)) {
      x = scaled_dot_attention(att->params, x);
    } else if (std::holds_alternative<ops::SumOverTime>(op)) {
      RowMatrixf s = x.colwise().sum();
      x = std::move(s);
    } else if (const auto* dense = std::get_if<ops::Dense>(&op)) {
      x = dense_forward(dense->params, x);
    } else if (const auto* bn = std::get_if<ops::BatchNorm>(&op)) {
      batchnorm_inplace(x, bn->params);
      apply_activation(x, bn->activation);
    } else {
      throw Error(ErrorKind::kInvalidConfig, "front-end op after flatten");
    }
  }
  return x(0, 0);
}

float Model::infer_window(const FeatureMatrix& window) const {
  if (window.rows() != config_.input_frames)
    throw Error(ErrorKind::kShape, "window has " + std::to_string(window.rows()) +
                                       " frames, model expects " +
                                       std::to_string(config_.input_frames));
  Tensor3f front = run_front(window);
  return run_from(flatten_index_, std::move(front.data));
}

std::vector<StreamPosterior> Model::infer_sliding(const FeatureMatrix& features) const {
  const Index t = config_.input_frames;
  if (features.rows() < t)
    throw Error(ErrorKind::kInsufficientFrames, "need at least " + std::to_string(t) +
                                                    " frames, got " +
                                                    std::to_string(features.rows()));
  const Index windows = (features.rows() - t) / stride_ + 1;
  std::vector<StreamPosterior> out;
  out.reserve(static_cast<std::size_t>(windows));
  for (Index w = 0; w < windows; ++w) {
    const Index first = w * stride_;
    StreamPosterior p;
    p.step_index = w + steps_;
    p.first_frame = first;
    p.last_frame = first + t - 1;
    p.posterior = infer_window(features.middleRows(first, t));
    out.push_back(p);
  }
  return out;
}

FeatureMatrix Model::features(const AudioBuffer& audio) const {
  return compute_lfbe(audio, config_.input_bins);
}

}  // namespace kws
