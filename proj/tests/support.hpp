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

// Shared fixtures and independent oracles for the unit and acceptance tests.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "aqa/corpus.hpp"
#include "aqa/cvec.hpp"
#include "aqa/decode.hpp"
#include "aqa/iob.hpp"
#include "aqa/matrix.hpp"
#include "aqa/neural.hpp"
#include "aqa/tagger.hpp"

namespace aqa::testing {

std::filesystem::path data_dir();

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_bytes(const std::filesystem::path& path);

struct BpeFiles {
  std::filesystem::path vocab, merges, emb;
};

// Small subword model: single letters a-z, a few merges, 4-dim rows.
BpeFiles write_tiny_bpe(const std::filesystem::path& dir);

// ---------------------------------------------------------------- oracles

// Best legal sequence over all 3^T candidates; ties by lexicographic order
// with O < B < I.
Decoded exhaustive_decode(const Matrix<double>& logprobs,
                          const LegalityConfig& rules);

Matrix<double> random_logprobs(std::size_t t, std::mt19937_64& rng);

// Random label sequence; `p_o`, `p_b` control the label mix.
std::vector<IobLabel> random_labels(std::size_t t, std::mt19937_64& rng,
                                    double p_o = 0.5, double p_b = 0.25);

struct GradCase {
  std::string name;
  ScalarFunction fn;
  std::vector<double> params;
};

GradCase dense_grad_case(uint64_t seed);
GradCase bilstm_grad_case(uint64_t seed, bool train_mode);
GradCase cross_entropy_grad_case(uint64_t seed);
GradCase classifier_grad_case(uint64_t seed);
GradCase tagger_grad_case(uint64_t seed);

// ------------------------------------------------------------ synthetic data

struct SyntheticTagging {
  std::vector<ContextVectorSet> sets;
  std::vector<std::vector<IobLabel>> labels;
  std::vector<TaggedSegment> segments() const;
};

// One answer token per sequence; its first coordinate is drawn from
// [1.5, 2.5], every other coordinate from [-1, 1].
SyntheticTagging argmax_tagging(std::size_t n, std::size_t t, std::size_t d,
                                uint64_t seed);

// One B,I pair per sequence of length t; answer tokens carry a small
// positive shift `signal` on their first coordinate.
SyntheticTagging sparse_span_tagging(std::size_t n, std::size_t t,
                                     std::size_t d, double signal,
                                     uint64_t seed);

// Two Gaussian blobs in 2-D separated by `margin` along a random direction.
struct SyntheticPoints {
  std::vector<std::vector<float>> x;
  std::vector<int> y;
};
SyntheticPoints separable_points(std::size_t n, double margin, uint64_t seed);

// Corpus of word contexts plus aligned CVEC records. Answerable samples
// carry a one- or two-word answer whose token vectors are marked on the
// first coordinate; the question shares words with the context only when
// the sample is answerable.
struct SyntheticCorpus {
  std::vector<QASample> samples;
  std::vector<ContextVectorSet> vectors;
};
SyntheticCorpus synthetic_corpus(std::size_t n, Language language,
                                 std::size_t dim, uint64_t seed);

std::string to_jsonl(const std::vector<QASample>& samples);

// Runs every CLI subcommand twice on generated inputs and compares the
// produced files byte for byte. Returns (subcommand, identical) pairs.
struct ReproResult {
  std::string command;
  bool ran = false;
  bool identical = false;
  std::string detail;
};
std::vector<ReproResult> cli_reproducibility(const std::filesystem::path& dir);

}  // namespace aqa::testing
