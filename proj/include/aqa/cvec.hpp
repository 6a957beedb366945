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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace aqa {

inline constexpr std::size_t kMaxSegmentTokens = 512;

// Encoder output for one segment of one sample: a pooled sequence vector and
// one vector per token, with code-point offsets into the sample's context.
struct ContextVectorSet {
  std::string sample_id;
  uint32_t dim = 0;
  std::vector<float> pooled;                                // dim
  std::vector<std::pair<uint32_t, uint32_t>> token_offsets;  // T
  std::vector<float> token_vectors;                          // T x dim

  std::size_t num_tokens() const { return token_offsets.size(); }
  std::span<const float> token(std::size_t t) const {
    return {token_vectors.data() + t * dim, dim};
  }
  bool operator==(const ContextVectorSet&) const = default;
};

// Throws FormatError (offset 0) when an invariant does not hold.
void validate_context_vectors(const ContextVectorSet& set);

// Streaming reader for CVEC1 files:
//   magic "CVEC1\n", u32 D, u32 count, then per record
//   u16 id_len, id, u32 T, D x f32 pooled, T x (u32,u32) offsets,
//   T x D x f32 token vectors. Little-endian throughout.
class CvecReader {
 public:
  explicit CvecReader(const std::filesystem::path& path);

  uint32_t dim() const { return dim_; }
  uint32_t sample_count() const { return count_; }

  // Next record, or nullopt after the last one. Throws FormatError carrying
  // the byte offset of the failing field.
  std::optional<ContextVectorSet> next();

 private:
  void read_bytes(void* dst, std::size_t n, const char* what);
  uint32_t read_u32(const char* what);

  std::ifstream in_;
  std::size_t offset_ = 0;
  uint32_t dim_ = 0;
  uint32_t count_ = 0;
  uint32_t read_ = 0;
};

std::vector<ContextVectorSet> read_context_vectors(
    const std::filesystem::path& path);

void write_context_vectors(const std::filesystem::path& path, uint32_t dim,
                           std::span<const ContextVectorSet> sets);

// All segments of every sample, keyed by sample id, in file order.
class CvecIndex {
 public:
  CvecIndex() = default;
  void add(ContextVectorSet set);
  void load(const std::filesystem::path& path);

  const std::vector<ContextVectorSet>* find(const std::string& id) const;
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return by_id_.size(); }

 private:
  std::size_t dim_ = 0;
  std::map<std::string, std::vector<ContextVectorSet>> by_id_;
};

}  // namespace aqa
