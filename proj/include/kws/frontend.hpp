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

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "kws/tensor.hpp"

namespace kws {

inline constexpr int kSampleRate = 16000;
inline constexpr Index kWindowSamples = 400;  // 25 ms
inline constexpr Index kHopSamples = 160;     // 10 ms
inline constexpr Index kFftSize = 512;
inline constexpr double kFrameMs = 10.0;
inline constexpr double kWindowMs = 25.0;
inline constexpr float kEnergyFloor = 1e-10f;

struct AudioBuffer {
  std::vector<std::int16_t> samples;
  int sample_rate = kSampleRate;
};

// t x f log-mel energies, one row per 10 ms frame.
using FeatureMatrix = RowMatrixf;

// Number of frames produced for `num_samples` samples (0 below one window).
Index lfbe_frame_count(Index num_samples);

// Number of samples needed to produce `num_frames` frames.
Index samples_for_frames(Index num_frames);

// Per-frame log-mel computation: Hann window, 512-point FFT, triangular mel
// filters over 0-8 kHz, energy floored before the log.
//
// Holds an FFT plan cache, so one extractor must not be shared between
// threads. compute_lfbe builds its own.
class LfbeExtractor {
 public:
  explicit LfbeExtractor(int num_bins);

  int num_bins() const { return static_cast<int>(filters_.rows()); }
  const RowMatrixf& filterbank() const { return filters_; }

  // `window` must hold exactly 400 samples.
  RowVectorf frame(std::span<const std::int16_t> window);

 private:
  RowMatrixf filters_;  // num_bins x (fft/2 + 1)
  std::vector<float> hann_;
  std::vector<float> padded_;
  std::vector<std::complex<float>> spectrum_;
  Eigen::FFT<float> fft_;
};

FeatureMatrix compute_lfbe(const AudioBuffer& audio, int num_bins);

// Row i of the result is feats[i + 1] - feats[i].
FeatureMatrix delta_lfbe(const FeatureMatrix& feats);

// Incremental framing over an unbounded PCM stream. Emits exactly the frames
// compute_lfbe would produce over the concatenated input, bit for bit.
class LfbeStream {
 public:
  explicit LfbeStream(int num_bins);

  // Returns the frames completed by this chunk (possibly zero rows).
  FeatureMatrix push(std::span<const std::int16_t> samples);

  Index frames_emitted() const { return frames_emitted_; }
  Index samples_consumed() const { return samples_consumed_; }
  std::size_t state_bytes() const;

 private:
  LfbeExtractor extractor_;
  std::vector<std::int16_t> pending_;
  Index frames_emitted_ = 0;
  Index samples_consumed_ = 0;
};

// RIFF/WAVE, PCM 16-bit signed little-endian, mono, 16 kHz. Anything else is
// rejected with kUnsupportedFormat or kUnsupportedRate.
AudioBuffer parse_wav(std::span<const std::uint8_t> bytes);
AudioBuffer read_wav(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_wav(const AudioBuffer& audio);
void write_wav(const std::filesystem::path& path, const AudioBuffer& audio);

}  // namespace kws
