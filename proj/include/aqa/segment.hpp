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

#include <cstddef>
#include <string>
#include <vector>

namespace aqa {

struct SegmentConfig {
  std::size_t max_len = 512;
  std::size_t overlap = 128;
};

// Full question plus one window of context tokens, [context_start,
// context_end) in the sample's context token space.
struct Segment {
  std::string sample_id;
  std::size_t segment_index = 0;
  std::size_t question_tokens = 0;
  std::size_t context_start = 0;
  std::size_t context_end = 0;

  std::size_t total_tokens() const {
    return question_tokens + context_end - context_start;
  }
  bool operator==(const Segment&) const = default;
};

// Windows of max_len - Q context tokens advancing by max_len - Q - overlap;
// the last window may be shorter. Throws PreconditionError when the question
// alone does not leave room for context and ConfigError when the stride
// would not advance.
std::vector<Segment> segment_sample(const std::string& sample_id,
                                    std::size_t context_tokens,
                                    std::size_t question_tokens,
                                    const SegmentConfig& config = {});

}  // namespace aqa
