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

#include <cstdint>

namespace kws {

// One window-level posterior. Offline sliding-window inference and both
// streaming strategies produce the same records for the same window.
struct StreamPosterior {
  std::int64_t step_index = 0;   // 1-based front-end step that completed the window
  std::int64_t first_frame = 0;  // 0-based input frames covered, inclusive
  std::int64_t last_frame = 0;
  float posterior = 0.0f;
  double emit_wall_ms = 0.0;     // wall clock at emission, ms since stream start
};

}  // namespace kws
