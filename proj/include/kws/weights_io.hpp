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

// Single-file weight container:
//
//   offset 0   "WKWD"                       4 bytes
//   offset 4   format_version  u32 LE       currently 1
//   offset 8   header_len      u32 LE
//   offset 12  header          header_len bytes of UTF-8 JSON:
//                {"config": <model config>,
//                 "tensors": [{"name", "shape", "offset"}, ...]}
//   then       payload         f32 LE, row-major, tensors in descriptor order;
//                              "offset" is the byte offset into the payload
//
// The file ends exactly where the last tensor ends.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "kws/arch.hpp"
#include "kws/model.hpp"

namespace kws {

inline constexpr std::uint32_t kWeightFormatVersion = 1;

struct LoadedWeights {
  ModelConfig config;
  WeightSet weights;
};

std::vector<std::uint8_t> serialize_weights(const ModelConfig& config, const WeightSet& weights);
LoadedWeights parse_weights(std::span<const std::uint8_t> bytes);

void save_weights(const ModelConfig& config, const WeightSet& weights,
                  const std::filesystem::path& path);
LoadedWeights load_weights(const std::filesystem::path& path);

// Convenience: load and bind into a ready-to-run model.
Model load_model(const std::filesystem::path& path);

}  // namespace kws
