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

#include "aqa/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "aqa/error.hpp"
#include "aqa/evaluate.hpp"
#include "aqa/log.hpp"

namespace aqa {

namespace {

constexpr std::size_t kGradShards = 4;

template <typename T>
void zero(BasicTaggerModel<T>& model) {
  for (auto& p : model.parameters()) std::fill(p.values.begin(), p.values.end(), T(0));
}

Matrix<double> to_double(const Matrix<float>& m) {
  Matrix<double> out(m.rows(), m.cols());
  std::copy(m.values().begin(), m.values().end(), out.values().begin());
  return out;
}

std::vector<int> label_indices(std::span<const IobLabel> labels) {
  std::vector<int> out(labels.size());
  std::transform(labels.begin(), labels.end(), out.begin(),
                 [](IobLabel l) { return index_of(l); });
  return out;
}

}  // namespace

template <typename T>
std::vector<ParamView<T>> BasicTaggerModel<T>::parameters() {
  std::vector<ParamView<T>> out;
  bridge.append_params("bridge", out);
  decoder.append_params("decoder", out);
  head.append_params("head", out);
  return out;
}

template <typename T>
BasicTaggerModel<T> BasicTaggerModel<T>::zeros_like() const {
  BasicTaggerModel<T> out;
  out.bridge = DenseLayer<T>(bridge.in_dim(), bridge.out_dim());
  out.decoder = BiLstm<T>(decoder.input_dim, decoder.hidden,
                          decoder.num_layers, decoder.dropout);
  out.head = DenseLayer<T>(head.in_dim(), head.out_dim());
  return out;
}

template <typename T>
BasicTaggerModel<T> build_tagger(std::size_t input_dim,
                                 const TaggerConfig& config) {
  if (input_dim == 0) throw PreconditionError("tagger input_dim must be >= 1");
  BasicTaggerModel<T> model;
  model.decoder =
      BiLstm<T>(input_dim, config.hidden, config.layers, config.dropout);
  model.bridge =
      DenseLayer<T>(input_dim, model.decoder.num_states() * config.hidden);
  model.head = DenseLayer<T>(2 * config.hidden, kNumIobLabels);
  std::mt19937_64 rng(config.seed);
  xavier_init(model.bridge, rng);
  init_bilstm(model.decoder, rng);
  xavier_init(model.head, rng);
  return model;
}

template <typename T>
Matrix<T> tagger_logits(const BasicTaggerModel<T>& model,
                        const ContextVectorSet& vectors, Mode mode,
                        std::mt19937_64* rng, TaggerCache<T>* cache) {
  const std::size_t d = model.input_dim();
  if (vectors.dim != d) {
    throw ShapeError("context vectors have D=" + std::to_string(vectors.dim) +
                     ", tagger expects " + std::to_string(d));
  }
  TaggerCache<T> local;
  TaggerCache<T>& c = cache ? *cache : local;
  c.pooled.assign(vectors.pooled.begin(), vectors.pooled.end());
  const std::vector<T> bridged = dense_forward<T>(model.bridge, c.pooled);
  const std::size_t h = model.hidden();
  c.h0 = Matrix<T>(model.decoder.num_states(), h);
  std::copy(bridged.begin(), bridged.end(), c.h0.data());
  const Matrix<T> c0(model.decoder.num_states(), h);
  Matrix<T> inputs(vectors.num_tokens(), d);
  std::copy(vectors.token_vectors.begin(), vectors.token_vectors.end(),
            inputs.data());
  c.lstm_out = bilstm_forward(model.decoder, inputs, c.h0, c0, mode, rng,
                              &c.lstm);
  return dense_forward(model.head, c.lstm_out);
}

template <typename T>
Matrix<T> tagger_forward(const BasicTaggerModel<T>& model,
                         const ContextVectorSet& vectors) {
  Matrix<T> out = tagger_logits(model, vectors, Mode::kEval, nullptr);
  log_softmax_rows(out);
  return out;
}

template <typename T>
void tagger_backward(const BasicTaggerModel<T>& model,
                     const TaggerCache<T>& cache, const Matrix<T>& d_logits,
                     BasicTaggerModel<T>& grads) {
  const Matrix<T> d_lstm =
      dense_backward(model.head, cache.lstm_out, d_logits, grads.head);
  const BiLstmGrads<T> g =
      bilstm_backward(model.decoder, cache.lstm, d_lstm, grads.decoder);
  dense_backward<T>(model.bridge, cache.pooled, g.h0.values(), grads.bridge);
}

nlohmann::json TaggerHistory::to_json() const {
  nlohmann::json records = nlohmann::json::array();
  for (const TaggerEpoch& e : epochs) {
    records.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"val_token_f1", e.val_token_f1},
                       {"val_degenerate_fraction", e.val_degenerate_fraction}});
  }
  return {{"epochs", records}};
}

bool is_degenerate_prefix(std::span<const IobLabel> labels) {
  if (labels.size() < 2 || labels.front() != IobLabel::kB) return false;
  return std::all_of(labels.begin() + 1, labels.end(),
                     [](IobLabel l) { return l == IobLabel::kO; });
}

TaggerEvaluation evaluate_tagger(const TaggerModel& model,
                                 std::span<const TaggedSegment> segments,
                                 std::size_t beam, const LegalityConfig& rules) {
  TaggerEvaluation out;
  out.predictions.resize(segments.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Matrix<double> logprobs =
        to_double(tagger_forward(model, *segments[i].vectors));
    out.predictions[i] = decode(logprobs, beam, rules).labels;
  }
  ConfusionMatrix3 total;
  std::size_t degenerate = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const ConfusionMatrix3 m = confusion(segments[i].labels, out.predictions[i]);
    for (int g = 0; g < kNumIobLabels; ++g) {
      for (int p = 0; p < kNumIobLabels; ++p) total.counts[g][p] += m.counts[g][p];
    }
    degenerate += is_degenerate_prefix(out.predictions[i]);
  }
  out.token_f1 = token_f1(total).macro;
  out.degenerate_fraction =
      segments.empty() ? 0.0
                       : static_cast<double>(degenerate) /
                             static_cast<double>(segments.size());
  return out;
}

TaggerTrainResult train_tagger(const TaggerModel& initial,
                               std::span<const TaggedSegment> train,
                               std::span<const TaggedSegment> val,
                               const TaggerConfig& config) {
  if (train.empty()) throw PreconditionError("empty tagger training set");
  if (config.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  for (const TaggedSegment& s : train) {
    if (s.vectors == nullptr || s.labels.size() != s.vectors->num_tokens()) {
      throw ShapeError("gold labels do not align with segment tokens");
    }
  }
  TaggerTrainResult result{initial, {}};
  TaggerModel& model = result.model;
  AdamState<float> adam;
  adam.config = config.adam;
  const std::size_t batches =
      (train.size() + config.batch_size - 1) / config.batch_size;
  const LrSchedule schedule{config.lr_start, config.lr_end,
                            batches * config.epochs};
  std::mt19937_64 shuffle_rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TaggerModel total = model.zeros_like();
  std::vector<TaggerModel> shard_grads(kGradShards, total);
  std::vector<double> shard_loss(kGradShards), shard_weight(kGradShards);
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0, epoch_weight = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t b0 = b * config.batch_size;
      const std::size_t b1 = std::min(order.size(), b0 + config.batch_size);
      const std::size_t per_shard = (b1 - b0 + kGradShards - 1) / kGradShards;
#pragma omp parallel for schedule(static)
      for (std::size_t s = 0; s < kGradShards; ++s) {
        zero(shard_grads[s]);
        shard_loss[s] = shard_weight[s] = 0;
        const std::size_t lo = std::min(b1, b0 + s * per_shard);
        const std::size_t hi = std::min(b1, lo + per_shard);
        for (std::size_t pos = lo; pos < hi; ++pos) {
          const TaggedSegment& seg = train[order[pos]];
          std::seed_seq seq{config.seed, uint64_t(epoch), uint64_t(pos)};
          std::mt19937_64 rng(seq);
          TaggerCache<float> cache;
          const Matrix<float> logits =
              tagger_logits(model, *seg.vectors, Mode::kTrain, &rng, &cache);
          const std::vector<int> targets = label_indices(seg.labels);
          const CrossEntropy<float> ce = weighted_nll_sum<float>(
              logits, targets, config.class_weights, &shard_weight[s]);
          shard_loss[s] += ce.loss;
          tagger_backward(model, cache, ce.dlogits, shard_grads[s]);
        }
      }
      zero(total);
      double batch_loss = 0, batch_weight = 0;
      auto total_params = total.parameters();
      for (std::size_t s = 0; s < kGradShards; ++s) {
        auto shard_params = shard_grads[s].parameters();
        for (std::size_t k = 0; k < total_params.size(); ++k) {
          auto dst = total_params[k].values;
          auto src = shard_params[k].values;
          for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        }
        batch_loss += shard_loss[s];
        batch_weight += shard_weight[s];
      }
      if (!std::isfinite(batch_loss)) {
        throw NumericError("non-finite tagger loss at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(b));
      }
      epoch_loss += batch_loss;
      epoch_weight += batch_weight;
      if (batch_weight <= 0) continue;
      const float scale = static_cast<float>(1.0 / batch_weight);
      auto params = model.parameters();
      std::vector<std::span<float>> p_spans;
      std::vector<std::span<const float>> g_spans;
      for (std::size_t k = 0; k < params.size(); ++k) {
        for (float& g : total_params[k].values) g *= scale;
        p_spans.push_back(params[k].values);
        g_spans.push_back(total_params[k].values);
      }
      adam_step<float>(p_spans, g_spans, adam, lr_at(schedule, step));
      ++step;
    }
    TaggerEpoch record;
    record.epoch = epoch;
    record.train_loss = epoch_weight > 0 ? epoch_loss / epoch_weight : 0.0;
    if (!val.empty()) {
      const TaggerEvaluation eval =
          evaluate_tagger(model, val, config.eval_beam, config.eval_rules);
      record.val_token_f1 = eval.token_f1;
      record.val_degenerate_fraction = eval.degenerate_fraction;
    }
    logger().debug("tagger epoch {} loss {:.6f} val_f1 {:.4f} degenerate {:.3f}",
                   epoch, record.train_loss, record.val_token_f1,
                   record.val_degenerate_fraction);
    result.history.epochs.push_back(record);
  }
  return result;
}

std::vector<Token> segment_tokens(const ContextVectorSet& vectors,
                                  std::u32string_view context) {
  std::vector<Token> tokens;
  tokens.reserve(vectors.num_tokens());
  for (const auto& [start, end] : vectors.token_offsets) {
    if (end > context.size()) {
      throw ShapeError("token offset beyond the context of '" +
                       vectors.sample_id + "'");
    }
    tokens.push_back(
        {unicode::encode(context.substr(start, end - start)), start, end});
  }
  return tokens;
}

std::vector<std::vector<IobLabel>> gold_segment_labels(
    const QASample& sample, std::span<const ContextVectorSet> segments) {
  const std::u32string context = unicode::decode(sample.context_text);
  std::vector<std::vector<IobLabel>> out;
  bool covered = false;
  for (const ContextVectorSet& vectors : segments) {
    const std::vector<Token> tokens = segment_tokens(vectors, context);
    const bool touches =
        sample.answer &&
        std::any_of(tokens.begin(), tokens.end(), [&](const Token& t) {
          return t.char_start < sample.answer->end() &&
                 t.char_end > sample.answer->start;
        });
    if (touches) {
      out.push_back(derive_gold_iob(sample, tokens));
      covered = true;
    } else {
      out.emplace_back(tokens.size(), IobLabel::kO);
    }
  }
  if (sample.answer && !covered) {
    throw ValidationError(sample.id, "answer not covered by any segment");
  }
  return out;
}

nlohmann::json Prediction::to_json() const {
  nlohmann::json labels = nlohmann::json::array();
  for (const auto& seq : labels_per_segment) {
    std::string s;
    for (IobLabel l : seq) s.push_back(iob_char(l));
    labels.push_back(s);
  }
  nlohmann::json out = {{"id", id},
                        {"answerable", span.has_value()},
                        {"labels_per_segment", labels}};
  if (span) {
    out["answer_text"] = span->text;
    out["char_start"] = span->char_start;
    out["char_end"] = span->char_end;
    out["score"] = span->score;
  } else {
    out["answer_text"] = "";
    out["char_start"] = nullptr;
    out["char_end"] = nullptr;
    out["score"] = nullptr;
  }
  return out;
}

Prediction combine_segments(const std::string& id,
                            std::span<const SegmentDecoding> segments,
                            std::u32string_view context) {
  Prediction prediction;
  prediction.id = id;
  std::map<std::pair<std::size_t, std::size_t>, AnswerSpan> unique;
  for (const SegmentDecoding& seg : segments) {
    prediction.labels_per_segment.push_back(seg.labels);
    for (AnswerSpan& span : extract_spans(seg.labels, seg.logprobs, seg.tokens,
                                          context, seg.question_tokens)) {
      const auto key = std::pair{span.char_start, span.char_end};
      auto it = unique.find(key);
      if (it == unique.end()) {
        unique.emplace(key, std::move(span));
      } else if (span.score > it->second.score) {
        it->second = std::move(span);
      }
    }
  }
  for (auto& [key, span] : unique) {
    if (!prediction.span || span.score > prediction.span->score) {
      prediction.span = span;
    }
  }
  return prediction;
}

Prediction answer(const QASample& sample, const TaggerModel& model,
                  std::span<const ContextVectorSet> segments, std::size_t beam,
                  const LegalityConfig& rules, std::size_t question_tokens) {
  const std::u32string context = unicode::decode(sample.context_text);
  std::vector<SegmentDecoding> decoded;
  for (const ContextVectorSet& vectors : segments) {
    SegmentDecoding seg;
    seg.logprobs = to_double(tagger_forward(model, vectors));
    seg.labels = decode(seg.logprobs, beam, rules).labels;
    seg.tokens = segment_tokens(vectors, context);
    seg.question_tokens = question_tokens;
    decoded.push_back(std::move(seg));
  }
  return combine_segments(sample.id, decoded, context);
}

#define AQA_INSTANTIATE(T)                                                     \
  template struct BasicTaggerModel<T>;                                         \
  template BasicTaggerModel<T> build_tagger<T>(std::size_t,                    \
                                               const TaggerConfig&);           \
  template Matrix<T> tagger_logits<T>(const BasicTaggerModel<T>&,              \
                                      const ContextVectorSet&, Mode,           \
                                      std::mt19937_64*, TaggerCache<T>*);      \
  template Matrix<T> tagger_forward<T>(const BasicTaggerModel<T>&,             \
                                       const ContextVectorSet&);               \
  template void tagger_backward<T>(const BasicTaggerModel<T>&,                 \
                                   const TaggerCache<T>&, const Matrix<T>&,    \
                                   BasicTaggerModel<T>&);

AQA_INSTANTIATE(float)
AQA_INSTANTIATE(double)

#undef AQA_INSTANTIATE

}  // namespace aqa
