/*
 * Copyright 2026 The AQA Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string_view>

namespace aqa {

// Canonical order O < B < I is used for tie-breaking in decoding.
enum class IobLabel : uint8_t { kO = 0, kB = 1, kI = 2 };

inline constexpr int kNumIobLabels = 3;

constexpr char iob_char(IobLabel label) {
  switch (label) {
    case IobLabel::kO:
      return 'O';
    case IobLabel::kB:
      return 'B';
    case IobLabel::kI:
      return 'I';
  }
  return '?';
}

constexpr int index_of(IobLabel label) { return static_cast<int>(label); }

}  // namespace aqa
