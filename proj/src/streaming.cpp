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

#include "kws/streaming.hpp"

#include <chrono>

#include "kws/error.hpp"

namespace kws {
namespace {

void require_streamable(const Model& model) {
  if (!model.streamable())
    throw Error(ErrorKind::kUnsupportedModel,
                "model '" + model.config().name + "' has no time-preserving recurrent decoder");
}

std::size_t matrix_bytes(const RowMatrixf& m) {
  return static_cast<std::size_t>(m.size()) * sizeof(float);
}

// Ops after the recurrent stack.
std::size_t tail_index(const Model& model) {
  return model.flatten_index() + 1 + model.recurrent_depth();
}

}  // namespace

// ---------------------------------------------------------------------------

StreamingFrontEnd::StreamingFrontEnd(const Model& model) : num_bins_(model.num_bins()) {
  Index freq = model.num_bins();
  Index channels = 1;
  const auto ops = model.layers();
  for (std::size_t i = 0; i < model.flatten_index(); ++i) {
    if (std::holds_alternative<ops::Delta>(ops[i])) {
      stages_.emplace_back(DeltaStage{RowVectorf::Zero(freq * channels), false});
    } else if (const auto* conv = std::get_if<ops::Conv>(&ops[i])) {
      const ConvKernel<float>& k = conv->kernel;
      ConvStage s;
      s.op = conv;
      s.in_freq = freq;
      s.ring = RowMatrixf::Zero(k.kernel_t + k.stride_t - 1, freq * channels);
      stages_.emplace_back(std::move(s));
      freq = k.out_freq(freq);
      channels = k.out_channels;
    } else if (const auto* bn = std::get_if<ops::BatchNorm>(&ops[i])) {
      stages_.emplace_back(NormStage{bn});
    }
  }
  step_width_ = freq * channels;
}

bool StreamingFrontEnd::advance(std::size_t stage, RowVectorf& slice) {
  Stage& s = stages_[stage];
  if (auto* delta = std::get_if<DeltaStage>(&s)) {
    if (!delta->primed) {
      delta->previous = slice;
      delta->primed = true;
      return false;
    }
    RowVectorf diff = slice - delta->previous;
    delta->previous = slice;
    slice = std::move(diff);
    return true;
  }
  if (auto* conv = std::get_if<ConvStage>(&s)) {
    const ConvKernel<float>& k = conv->op->kernel;
    const Index cap = conv->ring.rows();
    conv->ring.row(conv->received % cap) = slice;
    ++conv->received;
    if (conv->received < k.kernel_t || (conv->received - k.kernel_t) % k.stride_t != 0)
      return false;
    std::vector<const float*> rows(static_cast<std::size_t>(k.kernel_t));
    for (Index dt = 0; dt < k.kernel_t; ++dt)
      rows[static_cast<std::size_t>(dt)] =
          conv->ring.row((conv->received - k.kernel_t + dt) % cap).data();
    RowMatrixf out = conv_slice<float>(k, rows, conv->in_freq);
    apply_activation(out, conv->op->activation);
    slice = out;
    return true;
  }
  const auto& norm = std::get<NormStage>(s);
  RowMatrixf row = slice;
  batchnorm_inplace(row, norm.op->params);
  apply_activation(row, norm.op->activation);
  slice = row;
  return true;
}

RowMatrixf StreamingFrontEnd::push(const FeatureMatrix& frames) {
  if (frames.cols() != num_bins_)
    throw Error(ErrorKind::kShape, "expected " + std::to_string(num_bins_) + " bins, got " +
                                       std::to_string(frames.cols()));
  std::vector<RowVectorf> completed;
  for (Index r = 0; r < frames.rows(); ++r) {
    ++frames_seen_;
    RowVectorf slice = frames.row(r);
    bool alive = true;
    for (std::size_t i = 0; i < stages_.size() && alive; ++i) alive = advance(i, slice);
    if (alive) completed.push_back(std::move(slice));
  }
  RowMatrixf out(static_cast<Index>(completed.size()), step_width_);
  for (std::size_t i = 0; i < completed.size(); ++i) out.row(static_cast<Index>(i)) = completed[i];
  steps_emitted_ += out.rows();
  return out;
}

std::size_t StreamingFrontEnd::state_bytes() const {
  std::size_t bytes = 0;
  for (const Stage& s : stages_) {
    if (const auto* d = std::get_if<DeltaStage>(&s))
      bytes += static_cast<std::size_t>(d->previous.size()) * sizeof(float);
    else if (const auto* c = std::get_if<ConvStage>(&s))
      bytes += matrix_bytes(c->ring);
  }
  return bytes;
}

// ---------------------------------------------------------------------------

DecoderBank::DecoderBank(const Model& model) : model_(&model) {
  require_streamable(model);
  const Index h = model.steps_per_window();
  const Index last_d = model.recurrent(model.recurrent_depth() - 1).hidden_dim();
  decoders_.resize(static_cast<std::size_t>(h));
  for (Decoder& d : decoders_) {
    for (std::size_t l = 0; l < model.recurrent_depth(); ++l)
      d.hidden.push_back(RowMatrixf::Zero(1, model.recurrent(l).hidden_dim()));
    d.outputs = RowMatrixf::Zero(h, last_d);
  }
}

std::optional<StreamPosterior> DecoderBank::step(const RowVectorf& front_step) {
  ++step_;
  const Index h = size();
  Decoder& fresh = decoders_[static_cast<std::size_t>((step_ - 1) % h)];
  for (RowMatrixf& s : fresh.hidden) s.setZero();
  fresh.filled = 0;

  // The first layer's input projection is shared by every decoder.
  const RowMatrixf input = front_step;
  const GruProjection<float> shared = gru_project(model_->recurrent(0), input);
  std::optional<StreamPosterior> out;
  for (Decoder& d : decoders_) {
    if (d.filled >= h) continue;  // finished, waiting for its reset
    if (step_ < h && &d > &fresh) continue;  // not started yet
    gru_recurrent_step(model_->recurrent(0), shared, d.hidden[0]);
    for (std::size_t l = 1; l < d.hidden.size(); ++l) {
      const GruProjection<float> x = gru_project(model_->recurrent(l), d.hidden[l - 1]);
      gru_recurrent_step(model_->recurrent(l), x, d.hidden[l]);
    }
    d.outputs.row(d.filled++) = d.hidden.back();
    if (d.filled == h) {
      StreamPosterior p;
      p.step_index = step_;
      p.first_frame = (step_ - h) * model_->window_stride();
      p.last_frame = p.first_frame + model_->window_frames() - 1;
      p.posterior = model_->run_from(tail_index(*model_), d.outputs);
      out = p;
    }
  }
  return out;
}

std::size_t DecoderBank::state_bytes() const {
  std::size_t bytes = 0;
  for (const Decoder& d : decoders_) {
    for (const RowMatrixf& s : d.hidden) bytes += matrix_bytes(s);
    bytes += matrix_bytes(d.outputs);
  }
  return bytes;
}

// ---------------------------------------------------------------------------

HyperGru::HyperGru(const Model& model) : model_(&model), h_(model.steps_per_window()) {
  require_streamable(model);
  block_ = RowMatrixf::Zero(2 * h_ - 1, model.recurrent(0).input_dim());
}

std::vector<StreamPosterior> HyperGru::push(const RowVectorf& front_step) {
  if (front_step.size() != block_.cols())
    throw Error(ErrorKind::kShape, "front-end step width mismatch");
  block_.row(filled_++) = front_step;
  if (filled_ < block_.rows()) return {};
  return run_block();
}

std::vector<StreamPosterior> HyperGru::run_block() {
  if (filled_ < block_.rows()) return {};
  const std::size_t depth = model_->recurrent_depth();

  // layer_out[j] row i: window i's state after its j-th step.
  std::vector<RowMatrixf> layer_out(static_cast<std::size_t>(h_));
  {
    const GruParams<float>& p = model_->recurrent(0);
    const GruProjection<float> proj = gru_project(p, block_);
    RowMatrixf hidden = RowMatrixf::Zero(h_, p.hidden_dim());
    for (Index j = 0; j < h_; ++j) {
      const GruProjection<float> x{proj.update.middleRows(j, h_), proj.reset.middleRows(j, h_),
                                   proj.candidate.middleRows(j, h_)};
      gru_recurrent_step(p, x, hidden);
      layer_out[static_cast<std::size_t>(j)] = hidden;
    }
  }
  for (std::size_t l = 1; l < depth; ++l) {
    const GruParams<float>& p = model_->recurrent(l);
    RowMatrixf hidden = RowMatrixf::Zero(h_, p.hidden_dim());
    for (RowMatrixf& step : layer_out) {
      const GruProjection<float> x = gru_project(p, step);
      gru_recurrent_step(p, x, hidden);
      step = hidden;
    }
  }

  std::vector<StreamPosterior> out;
  const Index d = layer_out.front().cols();
  for (Index i = 0; i < h_; ++i) {
    RowMatrixf seq(h_, d);
    for (Index j = 0; j < h_; ++j) seq.row(j) = layer_out[static_cast<std::size_t>(j)].row(i);
    StreamPosterior p;
    p.step_index = block_start_ + i + h_ - 1;
    p.first_frame = (p.step_index - h_) * model_->window_stride();
    p.last_frame = p.first_frame + model_->window_frames() - 1;
    p.posterior = model_->run_from(tail_index(*model_), std::move(seq));
    out.push_back(p);
  }

  if (h_ > 1) {
    const RowMatrixf tail = block_.bottomRows(h_ - 1);
    block_.topRows(h_ - 1) = tail;
  }
  filled_ = h_ - 1;
  block_start_ += h_;
  return out;
}

std::size_t HyperGru::state_bytes() const { return matrix_bytes(block_); }

// ---------------------------------------------------------------------------

StreamEngine::StreamEngine(std::shared_ptr<const Model> model, Strategy strategy,
                           DetectorConfig detector, Clock clock)
    : model_(std::move(model)),
      strategy_(strategy),
      clock_(std::move(clock)),
      lfbe_(static_cast<int>(model_->num_bins())),
      front_(*model_),
      detector_(detector) {
  require_streamable(*model_);
  if (strategy_ == Strategy::kBank)
    bank_.emplace(*model_);
  else
    hyper_.emplace(*model_);
  if (!clock_) {
    const auto start = std::chrono::steady_clock::now();
    clock_ = [start] {
      return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
          .count();
    };
  }
}

void StreamEngine::emit(std::vector<StreamPosterior> posteriors, StreamOutput& out) {
  pending_.insert(pending_.end(), posteriors.begin(), posteriors.end());
  // A window can be complete in conv steps before its trailing frames
  // (input_frames beyond the receptive-field span) have arrived.
  std::size_t ready = 0;
  while (ready < pending_.size() && pending_[ready].last_frame < front_.frames_seen()) ++ready;
  if (ready == 0) return;
  const double now = clock_();
  for (std::size_t i = 0; i < ready; ++i) {
    StreamPosterior& p = pending_[i];
    p.emit_wall_ms = now;
    if (auto e = detector_.push(p)) out.events.push_back(*e);
    out.posteriors.push_back(p);
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(ready));
}

StreamOutput StreamEngine::push_frames(const FeatureMatrix& frames) {
  StreamOutput out;
  const RowMatrixf steps = front_.push(frames);
  std::vector<StreamPosterior> produced;
  for (Index s = 0; s < steps.rows(); ++s) {
    const RowVectorf step = steps.row(s);
    if (bank_) {
      if (auto p = bank_->step(step)) produced.push_back(*p);
    } else {
      const std::vector<StreamPosterior> block = hyper_->push(step);
      produced.insert(produced.end(), block.begin(), block.end());
    }
  }
  emit(std::move(produced), out);
  return out;
}

StreamOutput StreamEngine::push_audio(std::span<const std::int16_t> samples) {
  return push_frames(lfbe_.push(samples));
}

StreamOutput StreamEngine::finish() {
  StreamOutput out;
  if (auto e = detector_.finish()) out.events.push_back(*e);
  return out;
}

std::size_t StreamEngine::state_bytes() const {
  std::size_t bytes = lfbe_.state_bytes() + front_.state_bytes();
  if (bank_) bytes += bank_->state_bytes();
  if (hyper_) bytes += hyper_->state_bytes();
  return bytes + pending_.size() * sizeof(StreamPosterior);
}

void ReplayClock::deliver(std::size_t samples) {
  samples_ += samples;
  delivered_at_ = std::chrono::steady_clock::now();
}

double ReplayClock::now() const {
  const double audio_ms = static_cast<double>(samples_) * 1000.0 / kSampleRate;
  return audio_ms + std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                              delivered_at_)
                        .count();
}

void stream_engine_run(StreamEngine& engine, std::istream& pcm, const StreamCallbacks& callbacks,
                       std::size_t chunk_samples, ReplayClock* replay) {
  if (chunk_samples == 0) throw Error(ErrorKind::kInvalidArgument, "chunk size must be positive");
  std::vector<char> raw(chunk_samples * 2);
  std::vector<std::int16_t> samples;
  auto deliver = [&](const StreamOutput& out) {
    if (callbacks.on_posterior)
      for (const StreamPosterior& p : out.posteriors) callbacks.on_posterior(p);
    if (callbacks.on_event)
      for (const DetectionEvent& e : out.events) callbacks.on_event(e);
  };
  char carry = 0;
  bool has_carry = false;
  while (pcm) {
    std::size_t offset = 0;
    if (has_carry) {
      raw[0] = carry;
      offset = 1;
    }
    pcm.read(raw.data() + offset, static_cast<std::streamsize>(raw.size() - offset));
    const std::size_t got = offset + static_cast<std::size_t>(pcm.gcount());
    if (got == 0) break;
    const std::size_t whole = got / 2;
    has_carry = got % 2 != 0;
    if (has_carry) carry = raw[got - 1];
    samples.resize(whole);
    for (std::size_t i = 0; i < whole; ++i) {
      const auto lo = static_cast<std::uint8_t>(raw[2 * i]);
      const auto hi = static_cast<std::uint8_t>(raw[2 * i + 1]);
      samples[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(lo | (hi << 8)));
    }
    if (replay) replay->deliver(whole);
    deliver(engine.push_audio(samples));
  }
  deliver(engine.finish());
}

}  // namespace kws
