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

#include "kws/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "kws/error.hpp"

namespace kws {
namespace {

constexpr Index kSpectrumBins = kFftSize / 2 + 1;
constexpr double kMaxFrequencyHz = 8000.0;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

RowMatrixf make_filterbank(int num_bins) {
  RowMatrixf filters = RowMatrixf::Zero(num_bins, kSpectrumBins);
  const double top = hz_to_mel(kMaxFrequencyHz);
  std::vector<double> edges(static_cast<std::size_t>(num_bins) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(num_bins + 1));
  const double bin_hz = static_cast<double>(kSampleRate) / static_cast<double>(kFftSize);
  for (int m = 0; m < num_bins; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double mid = edges[static_cast<std::size_t>(m) + 1];
    const double hi = edges[static_cast<std::size_t>(m) + 2];
    for (Index k = 0; k < kSpectrumBins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid)
        w = (f - lo) / (mid - lo);
      else if (f > mid && f < hi)
        w = (hi - f) / (hi - mid);
      filters(m, k) = static_cast<float>(w);
    }
  }
  return filters;
}

}  // namespace

Index lfbe_frame_count(Index num_samples) {
  if (num_samples < kWindowSamples) return 0;
  return (num_samples - kWindowSamples) / kHopSamples + 1;
}

Index samples_for_frames(Index num_frames) {
  if (num_frames <= 0) return 0;
  return kWindowSamples + (num_frames - 1) * kHopSamples;
}

LfbeExtractor::LfbeExtractor(int num_bins)
    : filters_(num_bins >= 1 ? make_filterbank(num_bins) : RowMatrixf()),
      hann_(static_cast<std::size_t>(kWindowSamples)),
      padded_(static_cast<std::size_t>(kFftSize), 0.0f) {
  if (num_bins < 1) throw Error(ErrorKind::kInvalidArgument, "num_bins must be >= 1");
  for (Index n = 0; n < kWindowSamples; ++n)
    hann_[static_cast<std::size_t>(n)] = static_cast<float>(
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                             static_cast<double>(kWindowSamples)));
  fft_.SetFlag(Eigen::FFT<float>::HalfSpectrum);
}

RowVectorf LfbeExtractor::frame(std::span<const std::int16_t> window) {
  if (static_cast<Index>(window.size()) != kWindowSamples)
    throw Error(ErrorKind::kShape, "LFBE frame needs exactly 400 samples");
  for (std::size_t n = 0; n < window.size(); ++n)
    padded_[n] = static_cast<float>(window[n]) / 32768.0f * hann_[n];
  std::fill(padded_.begin() + kWindowSamples, padded_.end(), 0.0f);
  fft_.fwd(spectrum_, padded_);

  Eigen::Matrix<float, Eigen::Dynamic, 1> power(kSpectrumBins);
  for (Index k = 0; k < kSpectrumBins; ++k) power(k) = std::norm(spectrum_[static_cast<std::size_t>(k)]);
  RowVectorf energies = (filters_ * power).transpose();
  return energies.array().max(kEnergyFloor).log().matrix();
}

FeatureMatrix compute_lfbe(const AudioBuffer& audio, int num_bins) {
  if (audio.sample_rate != kSampleRate)
    throw Error(ErrorKind::kUnsupportedRate,
                "expected 16000 Hz, got " + std::to_string(audio.sample_rate));
  if (num_bins < 1) throw Error(ErrorKind::kInvalidArgument, "num_bins must be >= 1");
  const Index frames = lfbe_frame_count(static_cast<Index>(audio.samples.size()));
  if (frames == 0)
    throw Error(ErrorKind::kEmptyInput, "audio shorter than one 400-sample window");
  LfbeExtractor extractor(num_bins);
  FeatureMatrix out(frames, num_bins);
  const std::span<const std::int16_t> all(audio.samples);
  for (Index t = 0; t < frames; ++t)
    out.row(t) = extractor.frame(all.subspan(static_cast<std::size_t>(t * kHopSamples),
                                             static_cast<std::size_t>(kWindowSamples)));
  return out;
}

FeatureMatrix delta_lfbe(const FeatureMatrix& feats) {
  if (feats.rows() < 2)
    throw Error(ErrorKind::kInsufficientFrames, "delta needs at least 2 frames, got " +
                                                    std::to_string(feats.rows()));
  const Index t = feats.rows() - 1;
  return feats.bottomRows(t) - feats.topRows(t);
}

LfbeStream::LfbeStream(int num_bins) : extractor_(num_bins) {
  pending_.reserve(static_cast<std::size_t>(kWindowSamples + kHopSamples));
}

FeatureMatrix LfbeStream::push(std::span<const std::int16_t> samples) {
  samples_consumed_ += static_cast<Index>(samples.size());
  const Index available = static_cast<Index>(pending_.size() + samples.size());
  const Index ready = lfbe_frame_count(available);
  FeatureMatrix out(ready, extractor_.num_bins());
  if (ready == 0) {
    pending_.insert(pending_.end(), samples.begin(), samples.end());
    return out;
  }
  // Stitch the pending tail and the new chunk only as far as needed.
  std::vector<std::int16_t> joined;
  joined.reserve(static_cast<std::size_t>(available));
  joined.insert(joined.end(), pending_.begin(), pending_.end());
  joined.insert(joined.end(), samples.begin(), samples.end());
  const std::span<const std::int16_t> view(joined);
  for (Index t = 0; t < ready; ++t)
    out.row(t) = extractor_.frame(view.subspan(static_cast<std::size_t>(t * kHopSamples),
                                               static_cast<std::size_t>(kWindowSamples)));
  const auto keep_from = static_cast<std::size_t>(ready * kHopSamples);
  pending_.assign(joined.begin() + static_cast<std::ptrdiff_t>(keep_from), joined.end());
  frames_emitted_ += ready;
  return out;
}

std::size_t LfbeStream::state_bytes() const {
  // The pending tail stays below one window, so its capacity stops growing.
  return pending_.capacity() * sizeof(std::int16_t) +
         static_cast<std::size_t>(extractor_.filterbank().size()) * sizeof(float);
}

}  // namespace kws
