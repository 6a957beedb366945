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

#include "aqa/segment.hpp"

#include <algorithm>

#include "aqa/error.hpp"

namespace aqa {

std::vector<Segment> segment_sample(const std::string& sample_id,
                                    std::size_t context_tokens,
                                    std::size_t question_tokens,
                                    const SegmentConfig& config) {
  if (question_tokens + 1 >= config.max_len) {
    throw PreconditionError("question of " + std::to_string(question_tokens) +
                            " tokens leaves no room for context (max_len " +
                            std::to_string(config.max_len) + ")");
  }
  const std::size_t window = config.max_len - question_tokens;
  if (config.overlap >= window) {
    throw ConfigError("overlap " + std::to_string(config.overlap) +
                      " must be smaller than the context window " +
                      std::to_string(window));
  }
  const std::size_t stride = window - config.overlap;
  std::vector<Segment> segments;
  std::size_t start = 0;
  while (true) {
    const std::size_t end = std::min(start + window, context_tokens);
    segments.push_back(
        {sample_id, segments.size(), question_tokens, start, end});
    if (end == context_tokens) break;
    start += stride;
  }
  return segments;
}

}  // namespace aqa
