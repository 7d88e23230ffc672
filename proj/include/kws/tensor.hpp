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

#include <Eigen/Dense>

namespace kws {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// A t x n matrix, one row per timestep. Rows are contiguous.
template <typename Scalar>
using Sequence = RowMatrix<Scalar>;

// time x freq x channels, stored as a t x (freq * channels) row-major matrix
// so that each time slice is one contiguous row and flattening the last two
// dimensions is free.
template <typename Scalar>
struct Tensor3 {
  Index time = 0;
  Index freq = 0;
  Index channels = 0;
  RowMatrix<Scalar> data;

  Tensor3() = default;
  Tensor3(Index t, Index f, Index c)
      : time(t), freq(f), channels(c), data(RowMatrix<Scalar>::Zero(t, f * c)) {}

  Scalar& operator()(Index t, Index f, Index c) { return data(t, f * channels + c); }
  Scalar operator()(Index t, Index f, Index c) const {
    return data(t, f * channels + c);
  }

  Index slice_width() const { return freq * channels; }

  static Tensor3 from_features(const RowMatrix<Scalar>& frames) {
    Tensor3 out;
    out.time = frames.rows();
    out.freq = frames.cols();
    out.channels = 1;
    out.data = frames;
    return out;
  }
};

using Tensor3f = Tensor3<float>;
using RowMatrixf = RowMatrix<float>;
using RowVectorf = RowVector<float>;
using Vectorf = Vector<float>;
using Sequencef = Sequence<float>;

}  // namespace kws
