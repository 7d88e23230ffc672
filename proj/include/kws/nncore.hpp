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

// Forward-pass kernels. Everything here is templated on the scalar type and
// pure: parameters are read-only, outputs are fresh values.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kws/error.hpp"
#include "kws/tensor.hpp"

namespace kws {

enum class Activation { kNone, kRelu, kSigmoid };

template <typename Derived>
void apply_activation(Eigen::MatrixBase<Derived>& x, Activation act) {
  using Scalar = typename Derived::Scalar;
  switch (act) {
    case Activation::kNone:
      break;
    case Activation::kRelu:
      x = x.array().max(Scalar(0)).matrix();
      break;
    case Activation::kSigmoid:
      x = (Scalar(1) + (-x.array()).exp()).inverse().matrix();
      break;
  }
}

template <typename Derived>
auto sigmoid(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return (Scalar(1) + (-x.array()).exp()).inverse().matrix();
}

// ---------------------------------------------------------------------------
// Convolution

// Valid-padding 2-D cross-correlation over (time, freq) with channel mixing.
// `weights` holds the (kt, kf, cin, cout) kernel flattened row-major, i.e.
// row ((dt * kf + df) * cin + ci), column co.
template <typename Scalar>
struct ConvKernel {
  Index kernel_t = 1;
  Index kernel_f = 1;
  Index in_channels = 1;
  Index out_channels = 1;
  Index stride_t = 1;
  Index stride_f = 1;
  RowMatrix<Scalar> weights;
  RowVector<Scalar> bias;

  Index out_time(Index in_time) const { return (in_time - kernel_t) / stride_t + 1; }
  Index out_freq(Index in_freq) const { return (in_freq - kernel_f) / stride_f + 1; }

  void validate() const {
    if (kernel_t < 1 || kernel_f < 1 || stride_t < 1 || stride_f < 1 ||
        in_channels < 1 || out_channels < 1)
      throw Error(ErrorKind::kShape, "conv kernel dimensions must be positive");
    if (weights.rows() != kernel_t * kernel_f * in_channels ||
        weights.cols() != out_channels || bias.size() != out_channels)
      throw Error(ErrorKind::kShape, "conv weights do not match kernel dimensions");
  }
};

// Computes one output time slice from `kernel_t` consecutive input slices.
// Each pointer addresses a contiguous row of in_freq * in_channels values.
// Offline conv2d and the streaming ring buffers both go through here.
template <typename Scalar>
RowVector<Scalar> conv_slice(const ConvKernel<Scalar>& k,
                             std::span<const Scalar* const> rows, Index in_freq) {
  if (static_cast<Index>(rows.size()) != k.kernel_t)
    throw Error(ErrorKind::kShape, "conv_slice needs exactly kernel_t input rows");
  if (in_freq < k.kernel_f)
    throw Error(ErrorKind::kShape, "conv kernel wider than input frequency axis");
  const Index out_f = k.out_freq(in_freq);
  const Index span = k.kernel_f * k.in_channels;
  RowMatrix<Scalar> patches(out_f, k.kernel_t * span);
  for (Index dt = 0; dt < k.kernel_t; ++dt) {
    Eigen::Map<const RowVector<Scalar>> row(rows[dt], in_freq * k.in_channels);
    for (Index fo = 0; fo < out_f; ++fo)
      patches.block(fo, dt * span, 1, span) =
          row.segment(fo * k.stride_f * k.in_channels, span);
  }
  // Accumulated in double so each output is rounded once.
  RowMatrix<double> acc = patches.template cast<double>() * k.weights.template cast<double>();
  acc.rowwise() += k.bias.template cast<double>();
  const RowMatrix<Scalar> out = acc.template cast<Scalar>();
  return Eigen::Map<const RowVector<Scalar>>(out.data(), out_f * k.out_channels);
}

template <typename Scalar>
Tensor3<Scalar> conv2d(const Tensor3<Scalar>& input, const ConvKernel<Scalar>& k) {
  k.validate();
  if (input.channels != k.in_channels)
    throw Error(ErrorKind::kShape, "conv input has " + std::to_string(input.channels) +
                                       " channels, kernel expects " +
                                       std::to_string(k.in_channels));
  if (input.time < k.kernel_t || input.freq < k.kernel_f)
    throw Error(ErrorKind::kShape, "conv kernel larger than input");
  Tensor3<Scalar> out(k.out_time(input.time), k.out_freq(input.freq), k.out_channels);
  std::vector<const Scalar*> rows(static_cast<std::size_t>(k.kernel_t));
  for (Index t = 0; t < out.time; ++t) {
    for (Index dt = 0; dt < k.kernel_t; ++dt)
      rows[static_cast<std::size_t>(dt)] = input.data.row(t * k.stride_t + dt).data();
    out.data.row(t) = conv_slice<Scalar>(k, rows, input.freq);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batch normalization (inference form)

template <typename Scalar>
struct BatchNormParams {
  RowVector<Scalar> mean;
  RowVector<Scalar> var;
  RowVector<Scalar> gamma;
  RowVector<Scalar> beta;
  Scalar eps = Scalar(1e-3);

  Index channels() const { return mean.size(); }

  void validate() const {
    const Index c = mean.size();
    if (var.size() != c || gamma.size() != c || beta.size() != c)
      throw Error(ErrorKind::kShape, "batch-norm statistics have mismatched lengths");
    if ((var.array() < Scalar(0)).any())
      throw Error(ErrorKind::kInvalidStats, "negative variance");
    if (!(eps >= Scalar(0)))
      throw Error(ErrorKind::kInvalidStats, "negative epsilon");
  }
};

// Normalizes `x` in place. Column j belongs to channel j % channels, which
// covers both (freq * channels) conv slices and plain feature rows.
template <typename Scalar>
void batchnorm_inplace(RowMatrix<Scalar>& x, const BatchNormParams<Scalar>& p) {
  const Index c = p.channels();
  if (c == 0 || x.cols() % c != 0)
    throw Error(ErrorKind::kShape, "batch-norm channel count does not divide input width");
  const RowVector<Scalar> scale =
      (p.gamma.array() / (p.var.array() + p.eps).sqrt()).matrix();
  for (Index j = 0; j < x.cols(); ++j) {
    const Index ch = j % c;
    x.col(j) = ((x.col(j).array() - p.mean(ch)) * scale(ch) + p.beta(ch)).matrix();
  }
}

template <typename Scalar>
RowMatrix<Scalar> batchnorm_inference(const RowMatrix<Scalar>& x,
                                      const BatchNormParams<Scalar>& p) {
  p.validate();
  RowMatrix<Scalar> out = x;
  batchnorm_inplace(out, p);
  return out;
}

// ---------------------------------------------------------------------------
// GRU
//
//   z  = sigmoid(W_z x + U_z h + b_z)
//   r  = sigmoid(W_r x + U_r h + b_r)
//   h~ = tanh(W_h x + U_h (r * h) + b_h)
//   h' = (1 - z) * h + z * h~

template <typename Scalar>
struct GateParams {
  RowMatrix<Scalar> input_weights;      // d x n
  RowMatrix<Scalar> recurrent_weights;  // d x d
  RowVector<Scalar> bias;               // d
};

template <typename Scalar>
struct GruParams {
  GateParams<Scalar> update;
  GateParams<Scalar> reset;
  GateParams<Scalar> candidate;

  Index input_dim() const { return update.input_weights.cols(); }
  Index hidden_dim() const { return update.input_weights.rows(); }

  void validate() const {
    const Index d = hidden_dim();
    const Index n = input_dim();
    if (d < 1) throw Error(ErrorKind::kShape, "GRU hidden dimension must be >= 1");
    for (const GateParams<Scalar>* g : {&update, &reset, &candidate}) {
      if (g->input_weights.rows() != d || g->input_weights.cols() != n ||
          g->recurrent_weights.rows() != d || g->recurrent_weights.cols() != d ||
          g->bias.size() != d)
        throw Error(ErrorKind::kShape, "GRU gate parameter shapes are inconsistent");
    }
  }
};

// Input-dependent half of a GRU step, one row per batch entry.
template <typename Scalar>
struct GruProjection {
  RowMatrix<Scalar> update;
  RowMatrix<Scalar> reset;
  RowMatrix<Scalar> candidate;
};

// Projects each input row independently, so a row's result does not depend on
// how many other rows share the batch.
template <typename Scalar>
GruProjection<Scalar> gru_project(const GruParams<Scalar>& p,
                                  const RowMatrix<Scalar>& inputs) {
  if (inputs.cols() != p.input_dim())
    throw Error(ErrorKind::kShape, "GRU input width " + std::to_string(inputs.cols()) +
                                       " != " + std::to_string(p.input_dim()));
  const Index b = inputs.rows();
  const Index d = p.hidden_dim();
  GruProjection<Scalar> out{RowMatrix<Scalar>(b, d), RowMatrix<Scalar>(b, d),
                            RowMatrix<Scalar>(b, d)};
  for (Index i = 0; i < b; ++i) {
    out.update.row(i).noalias() = inputs.row(i) * p.update.input_weights.transpose();
    out.reset.row(i).noalias() = inputs.row(i) * p.reset.input_weights.transpose();
    out.candidate.row(i).noalias() = inputs.row(i) * p.candidate.input_weights.transpose();
  }
  out.update.rowwise() += p.update.bias;
  out.reset.rowwise() += p.reset.bias;
  out.candidate.rowwise() += p.candidate.bias;
  return out;
}

// Advances a batch of hidden states (b x d) by one step.
template <typename Scalar>
void gru_recurrent_step(const GruParams<Scalar>& p, const GruProjection<Scalar>& x,
                        RowMatrix<Scalar>& hidden) {
  RowMatrix<Scalar> z = x.update;
  z.noalias() += hidden * p.update.recurrent_weights.transpose();
  z = sigmoid(z);
  RowMatrix<Scalar> r = x.reset;
  r.noalias() += hidden * p.reset.recurrent_weights.transpose();
  r = sigmoid(r);
  const RowMatrix<Scalar> gated = r.cwiseProduct(hidden);
  RowMatrix<Scalar> cand = x.candidate;
  cand.noalias() += gated * p.candidate.recurrent_weights.transpose();
  cand = cand.array().tanh().matrix();
  hidden = ((Scalar(1) - z.array()) * hidden.array() + z.array() * cand.array()).matrix();
}

// Runs a single GRU over `inputs` (t x n) starting from `h0` (1 x d) and
// returns every hidden state (t x d). The last row is the final state.
template <typename Scalar>
Sequence<Scalar> gru_forward(const GruParams<Scalar>& p, const Sequence<Scalar>& inputs,
                             const RowVector<Scalar>& h0) {
  p.validate();
  if (inputs.cols() != p.input_dim())
    throw Error(ErrorKind::kShape, "GRU input width " + std::to_string(inputs.cols()) +
                                       " != " + std::to_string(p.input_dim()));
  if (h0.size() != p.hidden_dim())
    throw Error(ErrorKind::kShape, "GRU initial state has wrong width");
  Sequence<Scalar> states(inputs.rows(), p.hidden_dim());
  RowMatrix<Scalar> hidden = h0;
  for (Index t = 0; t < inputs.rows(); ++t) {
    const GruProjection<Scalar> x = gru_project<Scalar>(p, inputs.middleRows(t, 1));
    gru_recurrent_step(p, x, hidden);
    states.row(t) = hidden;
  }
  return states;
}

// ---------------------------------------------------------------------------
// Scaled dot-product attention over a window of timesteps

enum class AttentionScale {
  kKeyDim,      // softmax(Q K^T / d_K) V
  kSqrtKeyDim,  // softmax(Q K^T / sqrt(d_K)) V
};

template <typename Scalar>
struct AttentionParams {
  RowMatrix<Scalar> query_weights;  // d x d
  RowMatrix<Scalar> key_weights;
  RowMatrix<Scalar> value_weights;
  RowVector<Scalar> query_bias;
  RowVector<Scalar> key_bias;
  RowVector<Scalar> value_bias;
  AttentionScale scale = AttentionScale::kKeyDim;

  Index dim() const { return query_weights.rows(); }

  void validate() const {
    const Index d = dim();
    for (const RowMatrix<Scalar>* w : {&query_weights, &key_weights, &value_weights})
      if (w->rows() != d || w->cols() != d)
        throw Error(ErrorKind::kShape, "attention maps must be d x d");
    for (const RowVector<Scalar>* b : {&query_bias, &key_bias, &value_bias})
      if (b->size() != d) throw Error(ErrorKind::kShape, "attention bias must have d entries");
  }
};

template <typename Scalar>
struct AttentionResult {
  Sequence<Scalar> output;     // t x d
  RowMatrix<Scalar> weights;   // t x t, rows sum to one
};

template <typename Scalar>
AttentionResult<Scalar> attention_with_weights(const AttentionParams<Scalar>& p,
                                               const Sequence<Scalar>& input) {
  p.validate();
  const Index d = p.dim();
  if (input.cols() != d)
    throw Error(ErrorKind::kShape, "attention input width " + std::to_string(input.cols()) +
                                       " != " + std::to_string(d));
  RowMatrix<Scalar> q = input * p.query_weights.transpose();
  RowMatrix<Scalar> k = input * p.key_weights.transpose();
  RowMatrix<Scalar> v = input * p.value_weights.transpose();
  q.rowwise() += p.query_bias;
  k.rowwise() += p.key_bias;
  v.rowwise() += p.value_bias;

  const Scalar divisor = p.scale == AttentionScale::kKeyDim
                             ? static_cast<Scalar>(d)
                             : std::sqrt(static_cast<Scalar>(d));
  RowMatrix<Scalar> scores = (q * k.transpose()) / divisor;
  for (Index i = 0; i < scores.rows(); ++i) {
    const Scalar peak = scores.row(i).maxCoeff();
    scores.row(i) = (scores.row(i).array() - peak).exp().matrix();
    scores.row(i) /= scores.row(i).sum();
  }
  AttentionResult<Scalar> out;
  out.output = scores * v;
  out.weights = std::move(scores);
  return out;
}

template <typename Scalar>
Sequence<Scalar> scaled_dot_attention(const AttentionParams<Scalar>& p,
                                      const Sequence<Scalar>& input) {
  return attention_with_weights(p, input).output;
}

// ---------------------------------------------------------------------------
// Dense layers and the pooled classification head

template <typename Scalar>
struct DenseParams {
  RowMatrix<Scalar> weights;  // out x in
  RowVector<Scalar> bias;     // out
  Activation activation = Activation::kNone;

  void validate() const {
    if (bias.size() != weights.rows())
      throw Error(ErrorKind::kShape, "dense bias length does not match output width");
  }
};

// Applies the layer to every row of `x`.
template <typename Scalar>
RowMatrix<Scalar> dense_forward(const DenseParams<Scalar>& p, const RowMatrix<Scalar>& x) {
  p.validate();
  if (x.cols() != p.weights.cols())
    throw Error(ErrorKind::kShape, "dense input width " + std::to_string(x.cols()) +
                                       " != " + std::to_string(p.weights.cols()));
  RowMatrix<Scalar> out = x * p.weights.transpose();
  out.rowwise() += p.bias;
  apply_activation(out, p.activation);
  return out;
}

// Sums the attention output over time and runs the dense head. The head must
// end in a single sigmoid unit; its value is the keyword posterior.
template <typename Scalar>
Scalar attention_pool_and_classify(const Sequence<Scalar>& attended,
                                   std::span<const DenseParams<Scalar>> head) {
  if (attended.rows() == 0) throw Error(ErrorKind::kShape, "empty attention output");
  if (head.empty()) throw Error(ErrorKind::kShape, "classification head has no layers");
  const DenseParams<Scalar>& last = head.back();
  if (last.weights.rows() != 1 || last.activation != Activation::kSigmoid)
    throw Error(ErrorKind::kShape, "head must end in one sigmoid unit");
  RowMatrix<Scalar> x = attended.colwise().sum();
  for (const DenseParams<Scalar>& layer : head) x = dense_forward(layer, x);
  return x(0, 0);
}

}  // namespace kws
