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

#include "aqa/cvec.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "aqa/error.hpp"

namespace aqa {

namespace {

constexpr char kMagic[] = {'C', 'V', 'E', 'C', '1', '\n'};

static_assert(std::endian::native == std::endian::little,
              "CVEC I/O assumes a little-endian host");

class ByteWriter {
 public:
  explicit ByteWriter(const std::filesystem::path& path)
      : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot write " + path.string());
  }
  void bytes(const void* data, std::size_t n) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  }
  template <typename T>
  void scalar(T value) {
    bytes(&value, sizeof(T));
  }
  void floats(std::span<const float> values) {
    bytes(values.data(), values.size_bytes());
  }
  void finish() {
    out_.flush();
    if (!out_) throw Error("write failed");
  }

 private:
  std::ofstream out_;
};

}  // namespace

void validate_context_vectors(const ContextVectorSet& set) {
  const std::size_t t = set.num_tokens();
  if (set.pooled.size() != set.dim) {
    throw FormatError("pooled vector length differs from D");
  }
  if (set.token_vectors.size() != t * set.dim) {
    throw FormatError("token matrix is not T x D");
  }
  if (t > kMaxSegmentTokens) {
    throw FormatError("segment has " + std::to_string(t) + " tokens (max " +
                      std::to_string(kMaxSegmentTokens) + ")");
  }
  for (std::size_t i = 0; i < t; ++i) {
    const auto [start, end] = set.token_offsets[i];
    if (start >= end) throw FormatError("empty token offset range");
    if (i > 0 && start < set.token_offsets[i - 1].second) {
      throw FormatError("token offsets not strictly increasing");
    }
  }
  for (float v : set.pooled) {
    if (!std::isfinite(v)) throw FormatError("non-finite pooled value");
  }
  for (float v : set.token_vectors) {
    if (!std::isfinite(v)) throw FormatError("non-finite token vector value");
  }
}

CvecReader::CvecReader(const std::filesystem::path& path)
    : in_(path, std::ios::binary) {
  if (!in_) throw PreconditionError("cannot read " + path.string());
  char magic[sizeof(kMagic)];
  in_.read(magic, sizeof(magic));
  if (in_.gcount() != sizeof(magic) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw FormatError(0, "bad CVEC magic");
  }
  offset_ = sizeof(kMagic);
  dim_ = read_u32("dimension");
  count_ = read_u32("sample count");
  if (dim_ == 0) throw FormatError(sizeof(kMagic), "dimension must be > 0");
}

void CvecReader::read_bytes(void* dst, std::size_t n, const char* what) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) {
    throw FormatError(offset_, std::string("truncated record: ") + what);
  }
  offset_ += n;
}

uint32_t CvecReader::read_u32(const char* what) {
  uint32_t value;
  read_bytes(&value, sizeof(value), what);
  return value;
}

std::optional<ContextVectorSet> CvecReader::next() {
  if (read_ == count_) return std::nullopt;
  const std::size_t record_offset = offset_;
  ContextVectorSet set;
  set.dim = dim_;
  uint16_t id_len;
  read_bytes(&id_len, sizeof(id_len), "id length");
  set.sample_id.resize(id_len);
  read_bytes(set.sample_id.data(), id_len, "id");
  const std::size_t t_offset = offset_;
  const uint32_t t = read_u32("token count");
  if (t > kMaxSegmentTokens) {
    throw FormatError(t_offset, "segment has " + std::to_string(t) +
                                    " tokens (max 512)");
  }
  set.pooled.resize(dim_);
  read_bytes(set.pooled.data(), dim_ * sizeof(float), "pooled vector");
  std::vector<uint32_t> raw_offsets(2 * static_cast<std::size_t>(t));
  read_bytes(raw_offsets.data(), raw_offsets.size() * sizeof(uint32_t),
             "offsets");
  set.token_offsets.resize(t);
  for (uint32_t i = 0; i < t; ++i) {
    set.token_offsets[i] = {raw_offsets[2 * i], raw_offsets[2 * i + 1]};
  }
  set.token_vectors.resize(static_cast<std::size_t>(t) * dim_);
  read_bytes(set.token_vectors.data(), set.token_vectors.size() * sizeof(float),
             "token vectors");
  try {
    validate_context_vectors(set);
  } catch (const FormatError& e) {
    throw FormatError(record_offset, e.what());
  }
  ++read_;
  return set;
}

std::vector<ContextVectorSet> read_context_vectors(
    const std::filesystem::path& path) {
  CvecReader reader(path);
  std::vector<ContextVectorSet> sets;
  while (auto set = reader.next()) sets.push_back(std::move(*set));
  return sets;
}

void write_context_vectors(const std::filesystem::path& path, uint32_t dim,
                           std::span<const ContextVectorSet> sets) {
  ByteWriter out(path);
  out.bytes(kMagic, sizeof(kMagic));
  out.scalar<uint32_t>(dim);
  out.scalar<uint32_t>(static_cast<uint32_t>(sets.size()));
  for (const ContextVectorSet& set : sets) {
    if (set.dim != dim) throw ShapeError("record dimension differs from D");
    validate_context_vectors(set);
    if (set.sample_id.size() > UINT16_MAX) throw ShapeError("sample id too long");
    out.scalar<uint16_t>(static_cast<uint16_t>(set.sample_id.size()));
    out.bytes(set.sample_id.data(), set.sample_id.size());
    out.scalar<uint32_t>(static_cast<uint32_t>(set.num_tokens()));
    out.floats(set.pooled);
    for (const auto& [start, end] : set.token_offsets) {
      out.scalar<uint32_t>(start);
      out.scalar<uint32_t>(end);
    }
    out.floats(set.token_vectors);
  }
  out.finish();
}

void CvecIndex::add(ContextVectorSet set) {
  if (dim_ == 0) dim_ = set.dim;
  if (set.dim != dim_) throw ShapeError("mixed context vector dimensions");
  by_id_[set.sample_id].push_back(std::move(set));
}

void CvecIndex::load(const std::filesystem::path& path) {
  CvecReader reader(path);
  while (auto set = reader.next()) add(std::move(*set));
}

const std::vector<ContextVectorSet>* CvecIndex::find(
    const std::string& id) const {
  const auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &it->second;
}

}  // namespace aqa
