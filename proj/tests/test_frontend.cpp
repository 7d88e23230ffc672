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

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "doctest.h"
#include "kws/error.hpp"
#include "kws/frontend.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using kws::AudioBuffer;
using kws::ErrorKind;
using kws::FeatureMatrix;

namespace {

AudioBuffer sine(double hz, double amplitude, std::size_t n) {
  AudioBuffer a;
  a.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    a.samples[i] = static_cast<std::int16_t>(
        std::lround(amplitude * std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / 16000.0)));
  return a;
}

// Log-mel of one frame by direct DFT and a separately built HTK filterbank.
std::vector<double> lfbe_oracle(const std::vector<std::int16_t>& s, std::size_t start, int bins) {
  std::vector<double> x(512, 0.0);
  for (int n = 0; n < 400; ++n)
    x[static_cast<std::size_t>(n)] = s[start + static_cast<std::size_t>(n)] / 32768.0 *
                                     (0.5 - 0.5 * std::cos(2 * std::numbers::pi * n / 400.0));
  std::vector<double> power(257);
  for (int k = 0; k <= 256; ++k) {
    std::complex<double> acc = 0;
    for (int n = 0; n < 512; ++n)
      acc += x[static_cast<std::size_t>(n)] * std::polar(1.0, -2 * std::numbers::pi * k * n / 512.0);
    power[static_cast<std::size_t>(k)] = std::norm(acc);
  }
  auto mel = [](double hz) { return 1127.0 * std::log(1.0 + hz / 700.0); };
  auto hz = [](double m) { return 700.0 * (std::exp(m / 1127.0) - 1.0); };
  std::vector<double> out(static_cast<std::size_t>(bins));
  for (int m = 0; m < bins; ++m) {
    const double lo = hz(mel(8000.0) * m / (bins + 1));
    const double mid = hz(mel(8000.0) * (m + 1) / (bins + 1));
    const double hi = hz(mel(8000.0) * (m + 2) / (bins + 1));
    double e = 0;
    for (int k = 0; k <= 256; ++k) {
      const double f = k * 16000.0 / 512.0;
      double w = 0;
      if (f > lo && f <= mid) w = (f - lo) / (mid - lo);
      if (f > mid && f < hi) w = (hi - f) / (hi - mid);
      e += w * power[static_cast<std::size_t>(k)];
    }
    out[static_cast<std::size_t>(m)] = std::log(std::max(e, 1e-10));
  }
  return out;
}

}  // namespace

TEST_CASE("one second of audio gives 100 frames of 64 bins") {
  AudioBuffer a;
  a.samples.assign(16240, 0);
  const FeatureMatrix f = kws::compute_lfbe(a, 64);
  CHECK(f.rows() == 100);
  CHECK(f.cols() == 64);
}

TEST_CASE("a single window gives one frame") {
  AudioBuffer a;
  a.samples.assign(400, 100);
  CHECK(kws::compute_lfbe(a, 20).rows() == 1);
}

TEST_CASE("frame count formula over random lengths") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    const auto n = std::uniform_int_distribution<std::size_t>(400, 6000)(rng);
    AudioBuffer a;
    a.samples = oracle::random_audio(rng, n);
    const FeatureMatrix f = kws::compute_lfbe(a, 16);
    CHECK(f.rows() == static_cast<kws::Index>((n - 400) / 160 + 1));
    CHECK(kws::lfbe_frame_count(static_cast<kws::Index>(n)) == f.rows());
    CHECK(kws::lfbe_frame_count(kws::samples_for_frames(f.rows())) == f.rows());
  }
}

TEST_CASE("input validation") {
  AudioBuffer shorty;
  shorty.samples.assign(399, 0);
  CHECK(testing::error_kind([&] { kws::compute_lfbe(shorty, 64); }) == ErrorKind::kEmptyInput);
  AudioBuffer wrong_rate;
  wrong_rate.samples.assign(16000, 0);
  wrong_rate.sample_rate = 8000;
  CHECK(testing::error_kind([&] { kws::compute_lfbe(wrong_rate, 64); }) == ErrorKind::kUnsupportedRate);
}

TEST_CASE("silence stays finite at the energy floor") {
  AudioBuffer a;
  a.samples.assign(4000, 0);
  const FeatureMatrix f = kws::compute_lfbe(a, 64);
  CHECK(f.allFinite());
  CHECK(f.maxCoeff() == doctest::Approx(std::log(1e-10f)));
}

TEST_CASE("features match a direct DFT oracle") {
  std::mt19937_64 rng(11);
  AudioBuffer a;
  a.samples = oracle::random_audio(rng, 1200, 4000);
  for (int bins : {20, 64}) {
    const FeatureMatrix f = kws::compute_lfbe(a, bins);
    for (kws::Index t = 0; t < f.rows(); ++t) {
      const std::vector<double> ref = lfbe_oracle(a.samples, static_cast<std::size_t>(t) * 160, bins);
      for (int m = 0; m < bins; ++m) CHECK(f(t, m) == doctest::Approx(ref[static_cast<std::size_t>(m)]).epsilon(1e-4));
    }
  }
}

TEST_CASE("doubling the amplitude of a sine adds log 4 to every bin") {
  const AudioBuffer quiet = sine(1000.0, 4000.0, 3200);
  const AudioBuffer loud = sine(1000.0, 8000.0, 3200);
  const FeatureMatrix a = kws::compute_lfbe(quiet, 64);
  const FeatureMatrix b = kws::compute_lfbe(loud, 64);
  for (kws::Index t = 0; t < a.rows(); ++t) {
    kws::Index arg_a, arg_b;
    a.row(t).maxCoeff(&arg_a);
    b.row(t).maxCoeff(&arg_b);
    CHECK(arg_a == arg_b);
    for (kws::Index m = 0; m < a.cols(); ++m) {
      // Integer rounding of the samples leaves a noise floor in the far
      // bins; only bins within 40 dB of the peak are compared.
      if (a(t, m) < a.row(t).maxCoeff() - std::log(1e4f)) continue;
      CHECK(b(t, m) - a(t, m) == doctest::Approx(std::log(4.0)).epsilon(1e-3));
    }
  }
}

TEST_CASE("streaming framing equals batch framing bitwise") {
  std::mt19937_64 rng(3);
  AudioBuffer a;
  a.samples = oracle::random_audio(rng, 9000);
  const FeatureMatrix batch = kws::compute_lfbe(a, 40);
  for (int trial = 0; trial < 5; ++trial) {
    kws::LfbeStream stream(40);
    std::vector<kws::RowVectorf> rows;
    std::size_t at = 0;
    while (at < a.samples.size()) {
      const std::size_t n = std::min<std::size_t>(
          a.samples.size() - at, std::uniform_int_distribution<std::size_t>(1, 700)(rng));
      const FeatureMatrix got = stream.push(std::span(a.samples).subspan(at, n));
      for (kws::Index r = 0; r < got.rows(); ++r) rows.push_back(got.row(r));
      at += n;
    }
    REQUIRE(static_cast<kws::Index>(rows.size()) == batch.rows());
    for (std::size_t r = 0; r < rows.size(); ++r)
      CHECK((rows[r].array() == batch.row(static_cast<kws::Index>(r)).array()).all());
    CHECK(stream.samples_consumed() == static_cast<kws::Index>(a.samples.size()));
  }
}

TEST_CASE("delta of constant frames is zero") {
  const FeatureMatrix f = FeatureMatrix::Constant(10, 8, -3.25f);
  CHECK(kws::delta_lfbe(f).isZero(0));
}

TEST_CASE("delta equals the row-wise first difference") {
  std::mt19937_64 rng(5);
  std::normal_distribution<float> g(0.0f, 4.0f);
  FeatureMatrix f(101, 64);
  for (kws::Index i = 0; i < f.size(); ++i) f.data()[i] = g(rng);
  const FeatureMatrix d = kws::delta_lfbe(f);
  REQUIRE(d.rows() == 100);
  REQUIRE(d.cols() == 64);
  for (kws::Index t = 0; t < 100; ++t)
    for (kws::Index m = 0; m < 64; ++m) CHECK(d(t, m) == f(t + 1, m) - f(t, m));
}

TEST_CASE("delta is unchanged by a constant log offset") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> q(-20000, 20000);
  // On a grid of 2^-10 with magnitudes below 2^13, adding the offset is
  // exact in float, so the differences must agree bit for bit.
  FeatureMatrix f(101, 64);
  for (kws::Index i = 0; i < f.size(); ++i) f.data()[i] = static_cast<float>(q(rng)) / 1024.0f;
  const FeatureMatrix base = kws::delta_lfbe(f);
  for (int trial = 0; trial < 20; ++trial) {
    const float c = static_cast<float>(q(rng)) / 1024.0f;
    const FeatureMatrix shifted = kws::delta_lfbe((f.array() + c).matrix());
    for (kws::Index i = 0; i < base.size(); ++i)
      CHECK(testing::float_bits(shifted.data()[i]) == testing::float_bits(base.data()[i]));
  }

  // Real features and arbitrary offsets: the only difference left is the
  // rounding of the offset addition itself.
  AudioBuffer a;
  a.samples = oracle::random_audio(rng, 16560);
  const FeatureMatrix lfbe = kws::compute_lfbe(a, 64);
  const FeatureMatrix d0 = kws::delta_lfbe(lfbe);
  for (float c : {0.37f, -2.5f, 11.0f}) {
    const FeatureMatrix d1 = kws::delta_lfbe((lfbe.array() + c).matrix());
    const float bound = 4 * std::numeric_limits<float>::epsilon() * (lfbe.cwiseAbs().maxCoeff() + std::abs(c));
    CHECK((d1 - d0).cwiseAbs().maxCoeff() <= bound);
  }
}

TEST_CASE("delta needs two frames") {
  CHECK(testing::error_kind([] { kws::delta_lfbe(FeatureMatrix::Zero(1, 4)); }) ==
        ErrorKind::kInsufficientFrames);
}

TEST_CASE("wav round trip and format checks") {
  std::mt19937_64 rng(1);
  AudioBuffer a;
  a.samples = oracle::random_audio(rng, 777);
  const std::vector<std::uint8_t> bytes = kws::encode_wav(a);
  CHECK(kws::parse_wav(bytes).samples == a.samples);

  auto patched = [&](std::size_t at, std::uint16_t v) {
    std::vector<std::uint8_t> b = bytes;
    b[at] = static_cast<std::uint8_t>(v);
    b[at + 1] = static_cast<std::uint8_t>(v >> 8);
    return b;
  };
  // fmt body starts at byte 20: format, channels, rate, ..., bits at +14.
  CHECK(testing::error_kind([&] { kws::parse_wav(patched(20, 3)); }) == ErrorKind::kUnsupportedFormat);
  CHECK(testing::error_kind([&] { kws::parse_wav(patched(22, 2)); }) == ErrorKind::kUnsupportedFormat);
  CHECK(testing::error_kind([&] { kws::parse_wav(patched(34, 8)); }) == ErrorKind::kUnsupportedFormat);
  CHECK(testing::error_kind([&] { kws::parse_wav(patched(24, 8000)); }) == ErrorKind::kUnsupportedRate);
  std::vector<std::uint8_t> junk(bytes.begin(), bytes.begin() + 10);
  CHECK(testing::error_kind([&] { kws::parse_wav(junk); }) == ErrorKind::kUnsupportedFormat);

  testing::TempDir dir("wav");
  kws::write_wav(dir / "a.wav", a);
  CHECK(kws::read_wav(dir / "a.wav").samples == a.samples);
}
