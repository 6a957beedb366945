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

#include "aqa/cli.hpp"

#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "aqa/answerability.hpp"
#include "aqa/checkpoint.hpp"
#include "aqa/corpus.hpp"
#include "aqa/cvec.hpp"
#include "aqa/decode.hpp"
#include "aqa/error.hpp"
#include "aqa/evaluate.hpp"
#include "aqa/features.hpp"
#include "aqa/interpret.hpp"
#include "aqa/log.hpp"
#include "aqa/report.hpp"
#include "aqa/tagger.hpp"
#include "aqa/tokenization.hpp"

namespace aqa::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

struct Options {
  std::string data;
  std::string val;
  std::string lang = "en";
  std::string features = "bow";
  std::string cvec;
  std::string val_cvec;
  std::string bpe_vocab, bpe_merges, bpe_emb;
  std::string out;
  std::string model;
  std::string history;
  std::string summary;
  std::string histogram;
  std::string split = "train";
  std::string format = "csv";
  uint64_t seed = 0;
  int threads = 0;
  std::size_t beam_k = 1;
  std::string constraints = "none";
  double threshold = 0.5;
  // Answerability training.
  std::size_t epochs = 0;  // 0 = module default
  std::size_t batch_size = 0;
  double lr = 0;
  std::size_t patience = 0;
  std::size_t vocab_size = kDefaultBowSize;
  // Tagger training.
  std::size_t hidden = 300;
  std::size_t layers = 2;
  double lr_end = 1e-5;
  // Attribution.
  std::size_t steps = kDefaultIgSteps;
  std::size_t top_n = 10;
  std::size_t per_class = 5;
  // Cross-lingual report.
  std::string answerability;
  std::string tagger;
  std::string train_lang = "en";
  std::vector<std::string> eval_langs;
  std::vector<std::string> eval_data;
  std::vector<std::string> eval_cvec;
  std::size_t n = 200;
  // Perplexity.
  std::vector<std::string> nll;
};

// Bad user input that the library itself would not catch.
class UsageError : public Error {
 public:
  using Error::Error;
};

void emit(const std::string& path, const std::string& content,
          std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("cannot write " + path);
  file << content;
}

std::string jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const json& row : rows) out += row.dump() + "\n";
  return out;
}

Language language_of(const std::string& name) {
  const auto lang = parse_language(name);
  if (!lang) throw UsageError("unknown language '" + name + "'");
  return *lang;
}

std::vector<QASample> load(const std::string& path, Language lang) {
  if (path.empty()) throw UsageError("--data is required");
  return load_dataset(path, {lang});
}

// Seeded holdout of ~10% for validation; both parts keep input order.
std::pair<std::vector<QASample>, std::vector<QASample>> holdout(
    const std::vector<QASample>& samples, uint64_t seed) {
  if (samples.size() < 2) {
    throw ValidationError("", "need at least two samples to hold out validation");
  }
  const std::size_t n_val = std::max<std::size_t>(1, samples.size() / 10);
  const std::vector<std::size_t> picked =
      draw_samples(samples.size(), n_val, seed);
  std::vector<char> is_val(samples.size(), 0);
  for (std::size_t i : picked) is_val[i] = 1;
  std::pair<std::vector<QASample>, std::vector<QASample>> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    (is_val[i] ? out.second : out.first).push_back(samples[i]);
  }
  return out;
}

struct Resources {
  std::optional<SubwordModel> bpe;
  std::unique_ptr<CvecIndex> cvec;

  const SubwordModel* bpe_ptr() const { return bpe ? &*bpe : nullptr; }
};

Resources load_resources(const Options& o, FeatureSet set) {
  Resources r;
  if (uses_embed(set)) {
    if (o.bpe_vocab.empty() || o.bpe_merges.empty() || o.bpe_emb.empty()) {
      throw UsageError(
          "--bpe-vocab, --bpe-merges and --bpe-emb are required for this "
          "feature set");
    }
    r.bpe = load_subword_model(o.bpe_vocab, o.bpe_merges, o.bpe_emb);
  }
  if (set == FeatureSet::kCvec || !o.cvec.empty()) {
    if (o.cvec.empty()) throw UsageError("--cvec is required");
    r.cvec = std::make_unique<CvecIndex>();
    r.cvec->load(o.cvec);
    if (!o.val_cvec.empty()) r.cvec->load(o.val_cvec);
  }
  return r;
}

FeatureSet feature_set_of(const std::string& name) {
  const auto set = parse_feature_set(name);
  if (!set) throw UsageError("unknown feature set '" + name + "'");
  return *set;
}

LabeledFeatures featurize_all(const Featurizer& f,
                              const std::vector<QASample>& samples) {
  std::vector<FeatureVector> rows(samples.size());
  std::vector<int> labels(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    rows[i] = f(samples[i]);
    labels[i] = samples[i].answerable() ? 1 : 0;
  }
  return stack_features(rows, labels);
}

struct LoadedClassifier {
  AnswerabilityModel model;
  FeatureSet set = FeatureSet::kBow;
  Vocabulary vocab;
  json meta;
};

LoadedClassifier load_classifier(const std::string& path) {
  if (path.empty()) throw UsageError("--model is required");
  const Checkpoint ck = read_checkpoint(path);
  if (ck.meta.value("kind", "") != "answerability") {
    throw UsageError(path + " is not an answerability checkpoint");
  }
  LoadedClassifier out;
  out.meta = ck.meta;
  out.set = feature_set_of(ck.meta.at("features").get<std::string>());
  out.vocab = Vocabulary::from_tokens(
      ck.meta.at("vocab").get<std::vector<std::string>>(),
      ck.meta.at("vocab_max_size").get<std::size_t>());
  out.model = build_classifier<float>(ck.meta.at("input_dim"), 0,
                                      ck.meta.at("hidden1"),
                                      ck.meta.at("hidden2"));
  const auto params = out.model.parameters();
  load_params(ck, params);
  return out;
}

Featurizer featurizer_for(const LoadedClassifier& c, const Resources& r) {
  Featurizer f(c.set, c.vocab, r.bpe_ptr(), r.cvec.get(),
               c.meta.value("cvec_dim", std::size_t{0}));
  if (f.dim() != c.model.input_dim()) {
    throw UsageError("feature dimension " + std::to_string(f.dim()) +
                     " does not match the checkpoint (" +
                     std::to_string(c.model.input_dim()) + ")");
  }
  return f;
}

// ---------------------------------------------------------------- commands

int cmd_ingest(const Options& o, std::ostream& out) {
  const Language lang = language_of(o.lang);
  std::vector<json> rows;
  for (const QASample& s : load(o.data, lang)) {
    const std::vector<Token> tokens = word_tokenize(s.context_text, lang);
    std::string iob;
    for (IobLabel l : derive_gold_iob(s, tokens)) iob.push_back(iob_char(l));
    json row = {{"id", s.id},
                {"language", language_tag(s.language)},
                {"answerable", s.answerable()},
                {"question_tokens", word_tokenize(s.question_text, lang).size()},
                {"context_tokens", tokens.size()},
                {"gold_iob", iob}};
    if (s.answer) {
      row["answer_start"] = s.answer->start;
      row["answer_end"] = s.answer->end();
    }
    rows.push_back(std::move(row));
  }
  emit(o.out, jsonl(rows), out);
  return kExitOk;
}

int cmd_stats(const Options& o, std::ostream& out) {
  const Language lang = language_of(o.lang);
  const Split split = o.split == "validation" ? Split::kValidation : Split::kTrain;
  const std::vector<QASample> samples = load(o.data, lang);
  emit(o.out, stats_to_json(token_position_stats(samples, lang, split)) + "\n",
       out);
  return kExitOk;
}

int cmd_train_answerability(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("--out is required");
  const Language lang = language_of(o.lang);
  const FeatureSet set = feature_set_of(o.features);
  std::vector<QASample> train, val;
  if (o.val.empty()) {
    std::tie(train, val) = holdout(load(o.data, lang), o.seed);
  } else {
    train = load(o.data, lang);
    val = load(o.val, lang);
  }
  const Resources res = load_resources(o, set);
  Vocabulary vocab = uses_bow(set) ? fit_bow_vocab(train, o.vocab_size)
                                   : Vocabulary(o.vocab_size);
  const Featurizer f(set, vocab, res.bpe_ptr(), res.cvec.get());
  const LabeledFeatures tr = featurize_all(f, train);
  const LabeledFeatures va = featurize_all(f, val);

  TrainConfig config;
  config.seed = o.seed;
  if (o.epochs) config.max_epochs = o.epochs;
  if (o.batch_size) config.batch_size = o.batch_size;
  if (o.lr > 0) config.lr = o.lr;
  if (o.patience) config.patience = o.patience;
  const AnswerabilityModel init = build_classifier<float>(f.dim(), o.seed);
  ClassifierTrainResult result = train_classifier(init, tr, va, config);

  const json history = result.history.to_json();
  json meta = {{"kind", "answerability"},
               {"features", feature_set_name(set)},
               {"language", language_tag(lang)},
               {"input_dim", f.dim()},
               {"hidden1", result.model.layer1.out_dim()},
               {"hidden2", result.model.layer2.out_dim()},
               {"dropout", result.model.dropout},
               {"vocab", f.vocab().tokens()},
               {"vocab_max_size", f.vocab().max_size()},
               {"cvec_dim", set == FeatureSet::kCvec ? res.cvec->dim() : 0},
               {"bpe_dim", res.bpe ? res.bpe->dim : 0},
               {"seed", o.seed},
               {"batch_size", config.batch_size},
               {"lr", config.lr},
               {"max_epochs", config.max_epochs},
               {"patience", config.patience},
               {"history", history}};
  const auto params = result.model.parameters();
  write_checkpoint(o.out, meta, params);
  const std::string history_path =
      o.history.empty() ? o.out + ".history.json" : o.history;
  emit(history_path, history.dump(2) + "\n", out);
  const EpochRecord& best = result.history.epochs.at(result.history.best_epoch - 1);
  out << json({{"checkpoint", fs::path(o.out).filename().string()},
               {"train_samples", tr.size()},
               {"val_samples", va.size()},
               {"best_epoch", result.history.best_epoch},
               {"val_accuracy", best.val_accuracy},
               {"stopped_early", result.history.stopped_early}})
             .dump()
      << "\n";
  return kExitOk;
}

struct Scored {
  std::vector<QASample> samples;
  std::vector<double> proba;
};

Scored score_dataset(const LoadedClassifier& c, const Resources& res,
                     const Options& o) {
  const Featurizer f = featurizer_for(c, res);
  Scored s;
  s.samples = load(o.data, language_of(o.lang));
  s.proba.resize(s.samples.size());
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    s.proba[i] = predict_proba(c.model, f(s.samples[i]));
  }
  return s;
}

int cmd_eval_answerability(const Options& o, std::ostream& out) {
  const LoadedClassifier c = load_classifier(o.model);
  const Resources res = load_resources(o, c.set);
  const Scored s = score_dataset(c, res, o);
  if (s.samples.empty()) throw ValidationError("", "no samples to evaluate");
  std::vector<int> pred, gold;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < s.samples.size(); ++i) {
    const int p = classify(s.proba[i], o.threshold) == Verdict::kAnswerable;
    const int g = s.samples[i].answerable();
    pred.push_back(p);
    gold.push_back(g);
    (p ? (g ? tp : fp) : (g ? fn : tn))++;
  }
  const double positives = std::accumulate(gold.begin(), gold.end(), 0.0);
  const double majority =
      std::max(positives, gold.size() - positives) / gold.size();
  const json report = {{"n", s.samples.size()},
                       {"threshold", o.threshold},
                       {"accuracy", accuracy(pred, gold)},
                       {"majority_baseline", majority},
                       {"tp", tp},
                       {"fp", fp},
                       {"tn", tn},
                       {"fn", fn}};
  emit(o.out, report.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_pr_curve(const Options& o, std::ostream& out) {
  const LoadedClassifier c = load_classifier(o.model);
  const Resources res = load_resources(o, c.set);
  const Scored s = score_dataset(c, res, o);
  std::vector<int> gold;
  for (const QASample& q : s.samples) gold.push_back(q.answerable());
  const PrCurve curve = pr_curve(s.proba, gold);
  if (o.format == "json") {
    emit(o.out, curve.to_json().dump(2) + "\n", out);
  } else {
    emit(o.out, curve.to_csv(), out);
  }
  return kExitOk;
}

struct TaggerData {
  std::vector<QASample> samples;
  std::vector<const std::vector<ContextVectorSet>*> segments;  // per sample
};

TaggerData tagger_data(std::vector<QASample> samples, const CvecIndex& index) {
  TaggerData d;
  for (QASample& s : samples) {
    const auto* segs = index.find(s.id);
    if (segs == nullptr) {
      logger().warn("no context vectors for sample '{}'; skipped", s.id);
      continue;
    }
    d.samples.push_back(std::move(s));
    d.segments.push_back(segs);
  }
  return d;
}

std::vector<TaggedSegment> tagged_segments(const TaggerData& d) {
  std::vector<TaggedSegment> out;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    const auto labels = gold_segment_labels(d.samples[i], *d.segments[i]);
    for (std::size_t j = 0; j < labels.size(); ++j) {
      out.push_back({&(*d.segments[i])[j], labels[j]});
    }
  }
  return out;
}

TaggerConfig tagger_config(const Options& o) {
  TaggerConfig config;
  config.hidden = o.hidden;
  config.layers = o.layers;
  config.seed = o.seed;
  if (o.epochs) config.epochs = o.epochs;
  if (o.batch_size) config.batch_size = o.batch_size;
  if (o.lr > 0) config.lr_start = o.lr;
  config.lr_end = o.lr_end;
  config.eval_beam = o.beam_k;
  config.eval_rules = LegalityConfig::parse(o.constraints);
  return config;
}

TaggerModel load_tagger(const std::string& path) {
  if (path.empty()) throw UsageError("tagger checkpoint is required");
  const Checkpoint ck = read_checkpoint(path);
  if (ck.meta.value("kind", "") != "tagger") {
    throw UsageError(path + " is not a tagger checkpoint");
  }
  TaggerConfig config;
  config.hidden = ck.meta.at("hidden");
  config.layers = ck.meta.at("layers");
  config.dropout = ck.meta.at("dropout");
  TaggerModel model = build_tagger<float>(ck.meta.at("input_dim"), config);
  const auto params = model.parameters();
  load_params(ck, params);
  return model;
}

std::unique_ptr<CvecIndex> load_cvec(const Options& o) {
  if (o.cvec.empty()) throw UsageError("--cvec is required");
  auto index = std::make_unique<CvecIndex>();
  index->load(o.cvec);
  if (!o.val_cvec.empty()) index->load(o.val_cvec);
  return index;
}

int cmd_train_tagger(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("--out is required");
  const Language lang = language_of(o.lang);
  const auto index = load_cvec(o);
  std::vector<QASample> train, val;
  if (o.val.empty()) {
    std::tie(train, val) = holdout(load(o.data, lang), o.seed);
  } else {
    train = load(o.data, lang);
    val = load(o.val, lang);
  }
  const TaggerData train_data = tagger_data(std::move(train), *index);
  const TaggerData val_data = tagger_data(std::move(val), *index);
  const std::vector<TaggedSegment> train_segs = tagged_segments(train_data);
  const std::vector<TaggedSegment> val_segs = tagged_segments(val_data);
  const TaggerConfig config = tagger_config(o);
  const TaggerModel init = build_tagger<float>(index->dim(), config);
  TaggerTrainResult result = train_tagger(init, train_segs, val_segs, config);

  const json history = result.history.to_json();
  json meta = {{"kind", "tagger"},
               {"language", language_tag(lang)},
               {"input_dim", index->dim()},
               {"hidden", config.hidden},
               {"layers", config.layers},
               {"dropout", config.dropout},
               {"class_weights", config.class_weights},
               {"epochs", config.epochs},
               {"batch_size", config.batch_size},
               {"lr_start", config.lr_start},
               {"lr_end", config.lr_end},
               {"seed", o.seed},
               {"history", history}};
  const auto params = result.model.parameters();
  write_checkpoint(o.out, meta, params);
  const std::string history_path =
      o.history.empty() ? o.out + ".history.json" : o.history;
  emit(history_path, history.dump(2) + "\n", out);
  const TaggerEpoch& last = result.history.epochs.back();
  out << json({{"checkpoint", fs::path(o.out).filename().string()},
               {"train_segments", train_segs.size()},
               {"val_segments", val_segs.size()},
               {"epochs", result.history.epochs.size()},
               {"val_token_f1", last.val_token_f1},
               {"val_degenerate_fraction", last.val_degenerate_fraction}})
             .dump()
      << "\n";
  return kExitOk;
}

std::vector<Prediction> predict_all(const TaggerModel& model,
                                    const TaggerData& d, const Options& o) {
  const LegalityConfig rules = LegalityConfig::parse(o.constraints);
  std::vector<Prediction> out(d.samples.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    out[i] = answer(d.samples[i], model, *d.segments[i], o.beam_k, rules);
  }
  return out;
}

int cmd_eval_tagger(const Options& o, std::ostream& out) {
  const Language lang = language_of(o.lang);
  const TaggerModel model = load_tagger(o.model);
  const auto index = load_cvec(o);
  const TaggerData d = tagger_data(load(o.data, lang), *index);
  const std::vector<TaggedSegment> segs = tagged_segments(d);
  const LegalityConfig rules = LegalityConfig::parse(o.constraints);
  const TaggerEvaluation eval = evaluate_tagger(model, segs, o.beam_k, rules);
  ConfusionMatrix3 total;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const ConfusionMatrix3 m = confusion(segs[i].labels, eval.predictions[i]);
    for (int g = 0; g < kNumIobLabels; ++g) {
      for (int p = 0; p < kNumIobLabels; ++p) total.counts[g][p] += m.counts[g][p];
    }
  }
  const std::vector<Prediction> predictions = predict_all(model, d, o);
  double f1 = 0, exact = 0;
  for (std::size_t i = 0; i < d.samples.size(); ++i) {
    std::optional<std::string> pred, gold;
    if (predictions[i].span) pred = predictions[i].span->text;
    if (d.samples[i].answer) gold = d.samples[i].answer->text;
    const SquadScore s = squad_v2(pred, gold, lang);
    f1 += s.f1;
    exact += s.exact;
  }
  const double n = std::max<std::size_t>(1, d.samples.size());
  const json report = {{"samples", d.samples.size()},
                       {"segments", segs.size()},
                       {"beam_k", o.beam_k},
                       {"constraints", rules.to_string()},
                       {"token_f1", token_f1(total).to_json()},
                       {"confusion", total.to_json()},
                       {"degenerate_fraction", eval.degenerate_fraction},
                       {"squad_f1", f1 / n},
                       {"squad_exact", exact / n}};
  emit(o.out, report.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  const TaggerModel model = load_tagger(o.model);
  const auto index = load_cvec(o);
  const TaggerData d = tagger_data(load(o.data, language_of(o.lang)), *index);
  std::vector<json> rows;
  for (const Prediction& p : predict_all(model, d, o)) rows.push_back(p.to_json());
  emit(o.out, jsonl(rows), out);
  return kExitOk;
}

int cmd_ig(const Options& o, std::ostream& out) {
  const LoadedClassifier c = load_classifier(o.model);
  const Resources res = load_resources(o, c.set);
  const Featurizer f = featurizer_for(c, res);
  const std::vector<QASample> samples = load(o.data, language_of(o.lang));
  const ScalarFunction fn = classifier_function(c.model);
  const FeatureNamer namer = [&f](std::size_t i) { return f.feature_name(i); };
  std::vector<json> rows;
  json summary = json::object();
  for (int cls : {1, 0}) {
    const char* name = cls ? "answerable" : "unanswerable";
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].answerable() == bool(cls)) members.push_back(i);
    }
    if (members.empty()) {
      logger().warn("no {} samples; class skipped", name);
      continue;
    }
    std::vector<std::vector<double>> attributions;
    for (std::size_t k : draw_samples(members.size(), o.per_class, o.seed)) {
      const QASample& sample = samples[members[k]];
      const FeatureVector fv = f(sample);
      const std::vector<double> x(fv.values.begin(), fv.values.end());
      const std::vector<double> baseline(x.size(), 0.0);
      Attribution a = integrated_gradients(fn, x, baseline, o.steps);
      json top = json::array();
      const std::vector<std::vector<double>> one{a.values};
      for (const RankedFeature& r : salient_features(one, namer, o.top_n)) {
        top.push_back({{"name", r.name}, {"value", r.value}});
      }
      rows.push_back({{"id", sample.id},
                      {"class", name},
                      {"completeness_gap", a.completeness_gap},
                      {"top_features", top}});
      attributions.push_back(std::move(a.values));
    }
    json ranked = json::array();
    for (const RankedFeature& r : salient_features(attributions, namer, o.top_n)) {
      ranked.push_back({{"name", r.name}, {"value", r.value}});
    }
    summary[name] = ranked;
  }
  emit(o.out, jsonl(rows), out);
  if (!o.summary.empty()) emit(o.summary, summary.dump(2) + "\n", out);
  return kExitOk;
}

int cmd_attack(const Options& o, std::ostream& out) {
  const LoadedClassifier c = load_classifier(o.model);
  if (c.set == FeatureSet::kCvec) {
    throw UsageError("attack re-featurizes text and cannot use cvec features");
  }
  const Resources res = load_resources(o, c.set);
  const Featurizer f = featurizer_for(c, res);
  std::vector<QASample> chosen;
  for (QASample& s : load(o.data, language_of(o.lang))) {
    if (s.answerable() && predict_proba(c.model, f(s)) >= 0.5) {
      chosen.push_back(std::move(s));
    }
  }
  const AttackReport report =
      attack_report(c.model, std::cref(f), chosen, default_substitution());
  emit(o.out, report.to_json().dump(2) + "\n", out);
  if (!o.histogram.empty()) emit(o.histogram, report.histogram_csv(), out);
  return kExitOk;
}

int cmd_crosslingual(const Options& o, std::ostream& out) {
  if (o.eval_langs.empty() || o.eval_langs.size() != o.eval_data.size() ||
      o.eval_langs.size() != o.eval_cvec.size()) {
    throw UsageError(
        "--eval-lang, --eval-data and --eval-cvec must be given the same "
        "number of times");
  }
  const Language train = language_of(o.train_lang);
  const LoadedClassifier classifier = load_classifier(o.answerability);
  const TaggerModel tagger = load_tagger(o.tagger);
  const LegalityConfig rules = LegalityConfig::parse(o.constraints);
  std::vector<std::unique_ptr<Resources>> resources;
  std::vector<std::unique_ptr<Featurizer>> featurizers;
  std::vector<EvalLanguage> evals;
  for (std::size_t i = 0; i < o.eval_langs.size(); ++i) {
    Options lo = o;
    lo.cvec = o.eval_cvec[i];
    lo.val_cvec.clear();
    auto res = std::make_unique<Resources>(load_resources(lo, FeatureSet::kCvec));
    auto f = std::make_unique<Featurizer>(featurizer_for(classifier, *res));
    const Language lang = language_of(o.eval_langs[i]);
    EvalLanguage e;
    e.language = lang;
    e.samples = load(o.eval_data[i], lang);
    const CvecIndex* index = res->cvec.get();
    const Featurizer* fz = f.get();
    e.predict = [&, index, fz](const QASample& s) {
      SamplePrediction p;
      p.answerable =
          classify(predict_proba(classifier.model, (*fz)(s)), o.threshold) ==
          Verdict::kAnswerable;
      const auto* segs = index->find(s.id);
      if (p.answerable && segs != nullptr) {
        const Prediction pred = answer(s, tagger, *segs, o.beam_k, rules);
        if (pred.span) p.answer_text = pred.span->text;
      }
      return p;
    };
    evals.push_back(std::move(e));
    resources.push_back(std::move(res));
    featurizers.push_back(std::move(f));
  }
  const CrosslingualReport report =
      crosslingual_report(train, evals, o.n, o.seed);
  out << report.to_text();
  if (!o.out.empty()) emit(o.out, report.to_json().dump(2) + "\n", out);
  return kExitOk;
}

// ------------------------------------------------------------ flag wiring

void add_data(CLI::App* s, Options& o) {
  s->add_option("--data", o.data, "JSONL corpus")->check(CLI::ExistingFile);
  s->add_option("--lang", o.lang, "en | fi | ja");
  s->add_option("--out", o.out, "Output path (stdout when omitted)");
  s->add_option("--seed", o.seed, "Seed for every random choice");
}

void add_features(CLI::App* s, Options& o) {
  s->add_option("--features", o.features, "bow | overlap | embed | combo | cvec");
  s->add_option("--cvec", o.cvec, "Context vector file")->check(CLI::ExistingFile);
  s->add_option("--bpe-vocab", o.bpe_vocab)->check(CLI::ExistingFile);
  s->add_option("--bpe-merges", o.bpe_merges)->check(CLI::ExistingFile);
  s->add_option("--bpe-emb", o.bpe_emb)->check(CLI::ExistingFile);
}

void add_model(CLI::App* s, Options& o) {
  s->add_option("--model", o.model, "Checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
}

void add_decoding(CLI::App* s, Options& o) {
  s->add_option("--beam-k", o.beam_k, "Beam width")->check(CLI::PositiveNumber);
  s->add_option("--constraints", o.constraints, "Subset of a,b,c or none");
}

void add_training(CLI::App* s, Options& o) {
  s->add_option("--val", o.val, "Validation JSONL (default: seeded 10% holdout)")
      ->check(CLI::ExistingFile);
  s->add_option("--epochs", o.epochs);
  s->add_option("--batch-size", o.batch_size);
  s->add_option("--lr", o.lr);
  s->add_option("--history", o.history, "History JSON (default: <out>.history.json)");
}

int cmd_perplexity(const Options& o, std::ostream& out) {
  std::vector<NllRecord> records;
  for (const std::string& path : o.nll) {
    std::vector<NllRecord> part = load_nll_jsonl(path);
    records.insert(records.end(), std::make_move_iterator(part.begin()),
                   std::make_move_iterator(part.end()));
  }
  json rows = json::array();
  for (const PerplexityRow& row : perplexity_by_target(records)) {
    rows.push_back({{"target", row.target},
                    {"texts", row.texts},
                    {"tokens", row.tokens},
                    {"perplexity", row.ppl}});
  }
  emit(o.out, json{{"targets", rows}}.dump(2) + "\n", out);
  return kExitOk;
}

int dispatch(const CLI::App& app, const Options& o, std::ostream& out) {
  using Handler = int (*)(const Options&, std::ostream&);
  static const std::pair<const char*, Handler> kCommands[] = {
      {"ingest", cmd_ingest},
      {"stats", cmd_stats},
      {"train-answerability", cmd_train_answerability},
      {"eval-answerability", cmd_eval_answerability},
      {"pr-curve", cmd_pr_curve},
      {"train-tagger", cmd_train_tagger},
      {"eval-tagger", cmd_eval_tagger},
      {"predict", cmd_predict},
      {"ig", cmd_ig},
      {"attack", cmd_attack},
      {"crosslingual", cmd_crosslingual},
      {"perplexity", cmd_perplexity},
  };
  for (const auto& [name, handler] : kCommands) {
    if (app.got_subcommand(name)) return handler(o, out);
  }
  throw UsageError("no subcommand given");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  Options o;
  CLI::App app{"Answerability and answer extraction toolkit", "aqa"};
  app.require_subcommand(1);
  app.add_option("--threads", o.threads, "Worker threads (0 = OpenMP default)");

  auto* ingest = app.add_subcommand("ingest", "Validate a corpus and emit gold IOB labels");
  add_data(ingest, o);
  auto* stats = app.add_subcommand("stats", "First/last token statistics");
  add_data(stats, o);
  stats->add_option("--split", o.split, "train | validation")
      ->check(CLI::IsMember({"train", "validation"}));

  auto* ta = app.add_subcommand("train-answerability", "Train the answerability classifier");
  add_data(ta, o);
  add_features(ta, o);
  add_training(ta, o);
  ta->add_option("--patience", o.patience);
  ta->add_option("--vocab-size", o.vocab_size);

  auto* ea = app.add_subcommand("eval-answerability", "Accuracy at a threshold");
  add_data(ea, o);
  add_features(ea, o);
  add_model(ea, o);
  ea->add_option("--threshold", o.threshold)->check(CLI::Range(0.0, 1.0));

  auto* pr = app.add_subcommand("pr-curve", "Precision-recall curve");
  add_data(pr, o);
  add_features(pr, o);
  add_model(pr, o);
  pr->add_option("--format", o.format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* tt = app.add_subcommand("train-tagger", "Train the IOB span tagger");
  add_data(tt, o);
  add_training(tt, o);
  add_decoding(tt, o);
  tt->add_option("--cvec", o.cvec, "Context vectors")->check(CLI::ExistingFile);
  tt->add_option("--val-cvec", o.val_cvec)->check(CLI::ExistingFile);
  tt->add_option("--hidden", o.hidden)->check(CLI::PositiveNumber);
  tt->add_option("--layers", o.layers)->check(CLI::PositiveNumber);
  tt->add_option("--lr-end", o.lr_end);

  for (auto [name, help] : {std::pair{"eval-tagger", "Token F1 and answer scores"},
                            std::pair{"predict", "Predictions JSONL"}}) {
    auto* s = app.add_subcommand(name, help);
    add_data(s, o);
    add_model(s, o);
    add_decoding(s, o);
    s->add_option("--cvec", o.cvec, "Context vectors")->check(CLI::ExistingFile);
  }

  auto* ig = app.add_subcommand("ig", "Integrated gradients attributions");
  add_data(ig, o);
  add_features(ig, o);
  add_model(ig, o);
  ig->add_option("--steps", o.steps)->check(CLI::PositiveNumber);
  ig->add_option("--top-n", o.top_n);
  ig->add_option("--per-class", o.per_class);
  ig->add_option("--summary", o.summary, "Per-class salience JSON");

  auto* at = app.add_subcommand("attack", "Punctuation substitution attack");
  add_data(at, o);
  add_features(at, o);
  add_model(at, o);
  at->add_option("--histogram", o.histogram, "Confidence histogram CSV");

  auto* xl = app.add_subcommand("crosslingual", "Zero-shot cross-lingual report");
  xl->add_option("--answerability", o.answerability)->required()->check(CLI::ExistingFile);
  xl->add_option("--tagger", o.tagger)->required()->check(CLI::ExistingFile);
  xl->add_option("--train-lang", o.train_lang);
  xl->add_option("--eval-lang", o.eval_langs)->required();
  xl->add_option("--eval-data", o.eval_data)->required()->check(CLI::ExistingFile);
  xl->add_option("--eval-cvec", o.eval_cvec)->required()->check(CLI::ExistingFile);
  xl->add_option("-n", o.n, "Samples per language");
  xl->add_option("--seed", o.seed);
  xl->add_option("--out", o.out, "Report JSON");
  xl->add_option("--threshold", o.threshold)->check(CLI::Range(0.0, 1.0));
  add_decoding(xl, o);

  auto* pp = app.add_subcommand("perplexity", "Pooled perplexity from exported NLL JSONL");
  pp->add_option("--nll", o.nll, "NLL JSONL (repeatable)")->required()->check(CLI::ExistingFile);
  pp->add_option("--out", o.out, "Report JSON");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitValidation;
  }

  if (o.threads > 0) omp_set_num_threads(o.threads);
  try {
    return dispatch(app, o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ParseError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ConfigError& e) {
    err << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace aqa::cli
