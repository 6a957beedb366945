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

// Acceptance harness: one PASS/FAIL line per criterion, exit code 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <spdlog/fmt/fmt.h>

#include "aqa/answerability.hpp"
#include "aqa/corpus.hpp"
#include "aqa/decode.hpp"
#include "aqa/evaluate.hpp"
#include "aqa/interpret.hpp"
#include "aqa/log.hpp"
#include "aqa/segment.hpp"
#include "aqa/tagger.hpp"
#include "aqa/unicode.hpp"
#include "support.hpp"

namespace {

using namespace aqa;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

struct Criterion {
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

Outcome gradients() {
  Outcome o;
  std::vector<testing::GradCase> cases = {
      testing::dense_grad_case(1), testing::bilstm_grad_case(2, false),
      testing::bilstm_grad_case(3, true), testing::cross_entropy_grad_case(4),
      testing::classifier_grad_case(5), testing::tagger_grad_case(6)};
  double worst = 0;
  for (const auto& c : cases) {
    const double err = grad_check(c.fn, c.params, 1e-5).max_rel_error;
    worst = std::max(worst, err);
    o.require(err < 1e-5, fmt::format("{} rel error {:.3g}", c.name, err));
  }
  if (o.pass) o.detail = fmt::format("{} cases, max rel error {:.3g}", cases.size(), worst);
  return o;
}

std::vector<IobLabel> argmax_labels(const Matrix<double>& lp) {
  std::vector<IobLabel> out;
  for (std::size_t t = 0; t < lp.rows(); ++t) {
    int best = 0;
    for (int c = 1; c < 3; ++c) {
      if (lp(t, c) > lp(t, best)) best = c;
    }
    out.push_back(static_cast<IobLabel>(best));
  }
  return out;
}

Outcome decoding_oracle() {
  Outcome o;
  std::mt19937_64 rng(20260101);
  const LegalityConfig all{true, true, true};
  constexpr int kTrials = 1000;
  int matched = 0, exceeded = 0, argmax_ok = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t t = 1 + trial % 8;
    const auto lp = testing::random_logprobs(t, rng);
    const Decoded beam = decode(lp, 3, all);
    const Decoded best = testing::exhaustive_decode(lp, all);
    if (beam.score > best.score + 1e-12) ++exceeded;
    if (beam.labels == best.labels) ++matched;
    bool free_ok = true;
    for (std::size_t k : {1, 3}) free_ok &= decode(lp, k).labels == argmax_labels(lp);
    argmax_ok += free_ok;
  }
  o.require(exceeded == 0, fmt::format("{} beams exceed the exhaustive best", exceeded));
  o.require(matched >= kTrials * 95 / 100, fmt::format("k=3 matched {}/{}", matched, kTrials));
  o.require(argmax_ok == kTrials, fmt::format("argmax equality {}/{}", argmax_ok, kTrials));
  if (o.pass) {
    o.detail = fmt::format("k=3 matched {}/{}, argmax {}/{}", matched, kTrials, argmax_ok, kTrials);
  }
  return o;
}

Outcome span_algebra() {
  Outcome o;
  std::mt19937_64 rng(7);
  std::size_t spans = 0, bad = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t t = 1 + trial % 24;
    const auto labels = testing::random_labels(t, rng);
    const auto lp = testing::random_logprobs(t, rng);
    std::vector<Token> toks;
    for (std::size_t i = 0; i < t; ++i) toks.push_back({"w", 2 * i, 2 * i + 1});
    const std::u32string ctx(2 * t, U'w');
    for (const AnswerSpan& s : extract_spans(labels, lp, toks, ctx)) {
      ++spans;
      bool ok = labels[s.token_start] == IobLabel::kB && s.token_start <= s.token_end;
      for (std::size_t i = s.token_start; i <= s.token_end; ++i) ok &= labels[i] != IobLabel::kO;
      bad += !ok;
    }
  }
  o.require(bad == 0, fmt::format("{} of {} spans violate the span rules", bad, spans));

  const auto corpus = testing::synthetic_corpus(300, Language::kEn, 2, 99);
  std::size_t answerable = 0, recovered = 0;
  for (const QASample& s : corpus.samples) {
    if (!s.answerable()) continue;
    ++answerable;
    const auto toks = word_tokenize(s.context_text, s.language);
    const auto gold = derive_gold_iob(s, toks);
    const Matrix<double> lp(toks.size(), 3, -1.0);
    const auto found = extract_spans(gold, lp, toks, unicode::decode(s.context_text));
    recovered += found.size() == 1 && found[0].char_start == s.answer->start &&
                 found[0].char_end == s.answer->end();
  }
  o.require(recovered == answerable,
            fmt::format("gold round trip {}/{}", recovered, answerable));
  if (o.pass) {
    o.detail = fmt::format("{} spans checked, gold round trip {}/{}", spans, recovered, answerable);
  }
  return o;
}

Outcome segmenting() {
  Outcome o;
  const auto worked = segment_sample("w", 1000, 12);
  o.require(worked.size() == 3 && worked[0].context_end == 500 &&
                worked[1].context_start == 372 && worked[1].context_end == 872 &&
                worked[2].context_start == 744 && worked[2].context_end == 1000,
            "worked example");
  std::mt19937_64 rng(5);
  // Q up to 383 keeps the context window (512 - Q) above the overlap.
  std::uniform_int_distribution<std::size_t> ctx(0, 6000), q(1, 383);
  std::size_t failures = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t c = ctx(rng), qn = q(rng);
    const auto segs = segment_sample("r", c, qn);
    std::vector<char> seen(c, 0);
    bool ok = segs.back().context_end == c;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      ok &= segs[i].total_tokens() <= kMaxSegmentTokens;
      for (std::size_t t = segs[i].context_start; t < segs[i].context_end; ++t) seen[t] = 1;
      if (i + 1 < segs.size()) ok &= segs[i].context_end - segs[i + 1].context_start == 128;
    }
    for (char v : seen) ok &= v == 1;
    failures += !ok;
  }
  o.require(failures == 0, fmt::format("{} random segmentations fail", failures));
  if (o.pass) o.detail = "worked example and 2000 random cases";
  return o;
}

Outcome metric_goldens() {
  Outcome o;
  const double ap =
      pr_curve(std::vector{0.9, 0.8, 0.3}, std::vector{1, 0, 1}).average_precision;
  o.require(std::abs(ap - 5.0 / 6) <= 1e-6, fmt::format("AP {}", ap));
  const SquadScore sq = squad_v2(std::string("in Helsinki"), std::string("Helsinki"),
                                 Language::kEn);
  o.require(std::abs(sq.f1 - 0.6667) <= 1e-4 && sq.exact == 0.0,
            fmt::format("squad f1 {} exact {}", sq.f1, sq.exact));
  using L = IobLabel;
  const double macro =
      token_f1(std::vector{L::kO, L::kO, L::kB, L::kI}, std::vector(4, L::kO)).macro;
  o.require(std::abs(macro - 0.2222) <= 1e-4, fmt::format("macro F1 {}", macro));
  const double ppl = perplexity(std::vector(50, std::log(10.0)));
  o.require(std::abs(ppl - 10.0) <= 1e-9, fmt::format("perplexity {}", ppl));
  if (o.pass) {
    o.detail = fmt::format("AP {:.6f}, F1 {:.4f}, macro {:.4f}, PPL {:.9f}", ap, sq.f1, macro, ppl);
  }
  return o;
}

Outcome integrated_gradients_check() {
  Outcome o;
  const std::vector<double> w = {0.5, -1.25, 2.0, 0.75}, x = {1.0, 3.0, -0.5, 2.0},
                            zero4(4, 0.0);
  const ScalarFunction linear = [&](std::span<const double> p, std::span<double> g) {
    double f = 0.1;
    for (std::size_t i = 0; i < w.size(); ++i) {
      f += w[i] * p[i];
      g[i] = w[i];
    }
    return f;
  };
  const Attribution lin = integrated_gradients(linear, x, zero4, kDefaultIgSteps);
  double lin_err = 0;
  for (std::size_t i = 0; i < 4; ++i) lin_err = std::max(lin_err, std::abs(lin.values[i] - w[i] * x[i]));
  o.require(lin_err <= 1e-9, fmt::format("linear error {:.3g}", lin_err));

  const auto model = build_classifier<double>(100, 17);
  const ScalarFunction f = classifier_function(model);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 2);
  double worst_ratio = 0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> in(100);
    for (double& v : in) v = u(rng);
    const Attribution a = integrated_gradients(f, in, std::vector<double>(100, 0.0), 256);
    const double delta = std::abs(a.f_input - a.f_baseline);
    const double limit = std::max(1e-6, 0.01 * delta);
    worst_ratio = std::max(worst_ratio, a.completeness_gap / std::max(delta, 1e-12));
    o.require(a.completeness_gap <= limit,
              fmt::format("completeness gap {:.3g} vs |dF| {:.3g}", a.completeness_gap, delta));
  }

  // Identity-mapping attack on samples the model calls answerable.
  const auto corpus = testing::synthetic_corpus(40, Language::kEn, 2, 8);
  const Vocabulary vocab = fit_bow_vocab(corpus.samples);
  auto clf = build_classifier<float>(vocab.size(), 2, 8, 4);
  clf.layer3.bias[0] = 10.0f;
  const SampleFeaturizer bow = [&](const QASample& s) {
    return bow_vector(s.question_text, s.context_text, s.language, vocab);
  };
  std::vector<QASample> accepted;
  for (const QASample& s : corpus.samples) {
    if (s.answerable() && predict_proba(clf, bow(s)) >= 0.5) accepted.push_back(s);
  }
  const AttackReport r = attack_report(clf, bow, accepted, {});
  o.require(!accepted.empty() && r.before == r.after && r.flip_count == 0,
            "identity attack changed confidences");
  if (o.pass) {
    o.detail = fmt::format("linear error {:.3g}, worst gap/|dF| {:.4f}, identity attack n={}",
                           lin_err, worst_ratio, accepted.size());
  }
  return o;
}

Outcome training_smoke() {
  Outcome o;
  // Answerability: separable points.
  {
    const auto pts = testing::separable_points(200, 1.0, 11);
    LabeledFeatures train, val;
    train.x = Matrix<float>(160, 2);
    val.x = Matrix<float>(40, 2);
    for (std::size_t i = 0; i < 200; ++i) {
      auto& dst = i < 160 ? train : val;
      std::copy(pts.x[i].begin(), pts.x[i].end(), dst.x.row(i < 160 ? i : i - 160).begin());
      dst.y.push_back(pts.y[i]);
    }
    TrainConfig config;
    config.batch_size = 32;
    config.seed = 3;
    const auto res = train_classifier(build_classifier<float>(2, 3), train, val, config);
    const double acc = accuracy_of(res.model, val);
    o.require(acc >= 0.95 && res.history.epochs.size() <= 20,
              fmt::format("separable val accuracy {:.3f}", acc));
    config.lr = 0;
    const auto frozen = train_classifier(build_classifier<float>(2, 3), train, val, config);
    o.require(frozen.history.epochs.size() == 6 && frozen.history.stopped_early,
              fmt::format("lr=0 ran {} epochs", frozen.history.epochs.size()));
    o.detail = fmt::format("classifier acc {:.3f}, lr=0 epochs {}", acc,
                           frozen.history.epochs.size());
  }
  // Tagger: answer token carries the maximal first coordinate.
  {
    const auto data = testing::argmax_tagging(200, 20, 8, 42);
    const auto segs = data.segments();
    const std::span<const TaggedSegment> train(segs.data(), 160), val(segs.data() + 160, 40);
    TaggerConfig config;
    config.hidden = 32;
    config.epochs = 30;
    config.seed = 1;
    const auto res = train_tagger(build_tagger<float>(8, config), train, val, config);
    double best = 0;
    for (const auto& e : res.history.epochs) best = std::max(best, e.val_token_f1);
    const double f1 = evaluate_tagger(res.model, val, 1, {}).token_f1;
    o.require(f1 >= 0.9, fmt::format("tagger val macro F1 {:.3f}", f1));
    o.detail += fmt::format(", tagger F1 {:.3f}", f1);
  }
  // Unweighted ablation on 99%-O sequences.
  {
    const auto data = testing::sparse_span_tagging(300, 200, 8, 2.0, 43);
    const auto segs = data.segments();
    const std::span<const TaggedSegment> train(segs.data(), 240), val(segs.data() + 240, 60);
    TaggerConfig config;
    config.hidden = 16;
    config.epochs = 15;
    config.seed = 1;
    config.class_weights = {1.0, 1.0, 1.0};
    auto non_o = [](const TaggerEvaluation& e) {
      std::size_t n = 0;
      for (const auto& p : e.predictions) {
        for (IobLabel l : p) n += l != IobLabel::kO;
      }
      return n;
    };
    const auto res = train_tagger(build_tagger<float>(8, config), train, val, config);
    const auto eval = evaluate_tagger(res.model, val, 1, {});
    o.require(eval.token_f1 <= 0.35, fmt::format("ablation macro F1 {:.3f}", eval.token_f1));
    // Same data and budget with the down-weighted O class, for contrast.
    config.class_weights = {0.01, 1.0, 1.0};
    const auto weighted = train_tagger(build_tagger<float>(8, config), train, val, config);
    const auto w_eval = evaluate_tagger(weighted.model, val, 1, {});
    o.require(non_o(w_eval) > 0 && w_eval.token_f1 > eval.token_f1,
              fmt::format("weighted contrast F1 {:.3f} does not beat the ablation",
                          w_eval.token_f1));
    o.detail += fmt::format(
        ", ablation F1 {:.3f} ({} non-O predictions) vs weighted F1 {:.3f} ({} non-O)",
        eval.token_f1, non_o(eval), w_eval.token_f1, non_o(w_eval));
  }
  return o;
}

Outcome reproducibility() {
  Outcome o;
  testing::TempDir dir;
  const auto results = testing::cli_reproducibility(dir.path());
  for (const auto& r : results) {
    o.require(r.ran && r.identical, r.command + ": " + r.detail);
  }
  if (o.pass) o.detail = fmt::format("{} subcommands byte-identical", results.size());
  return o;
}

}  // namespace

int main() {
  aqa::logger().set_level(spdlog::level::warn);
  const std::vector<Criterion> criteria = {
      {"gradients", 30, gradients},
      {"decoding-oracle", 60, decoding_oracle},
      {"span-algebra", 60, span_algebra},
      {"segmenting", 60, segmenting},
      {"metric-goldens", 10, metric_goldens},
      {"integrated-gradients", 120, integrated_gradients_check},
      {"training-smoke", 300, training_smoke},
      {"cli-reproducibility", 600, reproducibility},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (secs > c.budget_s) {
      o.require(false, fmt::format("runtime {:.1f}s over budget {:.0f}s", secs, c.budget_s));
    }
    failed += !o.pass;
    std::printf("%s %-22s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.name.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
