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

#include "support.hpp"

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "aqa/answerability.hpp"
#include "aqa/cli.hpp"
#include "aqa/lstm.hpp"
#include "aqa/tokenization.hpp"

namespace aqa::testing {

namespace fs = std::filesystem;

fs::path data_dir() { return fs::path(AQA_TEST_DATA_DIR); }

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("aqa_test_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

BpeFiles write_tiny_bpe(const fs::path& dir) {
  std::vector<std::string> vocab = {"<unk>"};
  for (char c = 'a'; c <= 'z'; ++c) vocab.emplace_back(1, c);
  for (char c = '0'; c <= '9'; ++c) vocab.emplace_back(1, c);
  const std::vector<std::pair<std::string, std::string>> merges = {
      {"w", "1"}, {"w", "2"}, {"t", "h"}, {"th", "e"}, {"a", "b"}, {"ab", "c"}};
  for (const auto& [l, r] : merges) vocab.push_back(l + r);
  BpeFiles files{dir / "bpe.vocab", dir / "bpe.merges", dir / "bpe.emb"};
  std::string v, m = "#version: test\n", e;
  for (const std::string& t : vocab) v += t + "\n";
  for (const auto& [l, r] : merges) m += l + " " + r + "\n";
  e = std::to_string(vocab.size()) + " 4\n";
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    std::ostringstream row;
    row << vocab[i];
    for (int j = 0; j < 4; ++j) {
      row << " " << std::sin(0.37 * double(i + 1) * double(j + 1));
    }
    e += row.str() + "\n";
  }
  write_text(files.vocab, v);
  write_text(files.merges, m);
  write_text(files.emb, e);
  return files;
}

// ---------------------------------------------------------------- oracles

Decoded exhaustive_decode(const Matrix<double>& logprobs,
                          const LegalityConfig& rules) {
  const std::size_t t = logprobs.rows();
  std::size_t total = 1;
  for (std::size_t i = 0; i < t; ++i) total *= 3;
  Decoded best;
  bool found = false;
  std::vector<IobLabel> labels(t);
  // Enumerating in lexicographic order and replacing only on a strictly
  // better score keeps the lexicographically smallest among ties.
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t rest = code;
    for (std::size_t i = t; i-- > 0;) {
      labels[i] = static_cast<IobLabel>(rest % 3);
      rest /= 3;
    }
    if (!is_legal(labels, rules)) continue;
    double score = 0;
    for (std::size_t i = 0; i < t; ++i) score += logprobs(i, index_of(labels[i]));
    if (!found || score > best.score) {
      best = {labels, score};
      found = true;
    }
  }
  return best;
}

Matrix<double> random_logprobs(std::size_t t, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 2.0);
  Matrix<double> m(t, kNumIobLabels);
  for (double& v : m.values()) v = dist(rng);
  log_softmax_rows(m);
  return m;
}

std::vector<IobLabel> random_labels(std::size_t t, std::mt19937_64& rng,
                                    double p_o, double p_b) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<IobLabel> out(t);
  for (IobLabel& l : out) {
    const double r = u(rng);
    l = r < p_o ? IobLabel::kO : (r < p_o + p_b ? IobLabel::kB : IobLabel::kI);
  }
  return out;
}

namespace {

std::vector<double> uniform(std::size_t n, std::mt19937_64& rng, double lo = -1,
                            double hi = 1) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

std::size_t total_size(const std::vector<ParamView<double>>& views) {
  std::size_t n = 0;
  for (const auto& v : views) n += v.values.size();
  return n;
}

// Copies flat[offset...] into the views and returns the new offset.
std::size_t scatter(std::span<const double> flat, std::size_t offset,
                    const std::vector<ParamView<double>>& views) {
  for (const auto& v : views) {
    std::copy_n(flat.begin() + offset, v.values.size(), v.values.begin());
    offset += v.values.size();
  }
  return offset;
}

std::size_t gather(std::span<double> flat, std::size_t offset,
                   const std::vector<ParamView<double>>& views) {
  for (const auto& v : views) {
    std::copy(v.values.begin(), v.values.end(), flat.begin() + offset);
    offset += v.values.size();
  }
  return offset;
}

}  // namespace

GradCase dense_grad_case(uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t in = 3, out = 5;
  const std::vector<double> c = uniform(out, rng);
  GradCase g{"dense", {}, uniform(in * out + out + in, rng)};
  g.fn = [=](std::span<const double> p, std::span<double> grad) {
    DenseLayer<double> layer(in, out), d(in, out);
    std::vector<ParamView<double>> views, dviews;
    layer.append_params("l", views);
    d.append_params("l", dviews);
    std::size_t k = scatter(p, 0, views);
    std::vector<double> x(p.begin() + k, p.end());
    const std::vector<double> y = dense_forward<double>(layer, x);
    double loss = 0;
    std::vector<double> dy(out);
    for (std::size_t i = 0; i < out; ++i) {
      loss += c[i] * y[i] + 0.5 * y[i] * y[i];
      dy[i] = c[i] + y[i];
    }
    const std::vector<double> dx = dense_backward<double>(layer, x, dy, d);
    k = gather(grad, 0, dviews);
    std::copy(dx.begin(), dx.end(), grad.begin() + k);
    return loss;
  };
  return g;
}

GradCase bilstm_grad_case(uint64_t seed, bool train_mode) {
  std::mt19937_64 rng(seed);
  const std::size_t t = 4, d = 3, h = 2, layers = 2;
  BiLstm<double> shape(d, h, layers, train_mode ? 0.3 : 0.1);
  std::vector<ParamView<double>> views;
  shape.append_params("lstm", views);
  const std::size_t n_params = total_size(views);
  const std::size_t n_states = 2 * layers * h;
  const std::vector<double> c = uniform(t * 2 * h, rng);
  GradCase g{train_mode ? "bilstm-train" : "bilstm",
             {},
             uniform(n_params + t * d + 2 * n_states, rng, -0.8, 0.8)};
  g.fn = [=](std::span<const double> p, std::span<double> grad) {
    BiLstm<double> model(d, h, layers, shape.dropout);
    BiLstm<double> dmodel(d, h, layers, shape.dropout);
    std::vector<ParamView<double>> v, dv;
    model.append_params("lstm", v);
    dmodel.append_params("lstm", dv);
    std::size_t k = scatter(p, 0, v);
    Matrix<double> inputs(t, d), h0(2 * layers, h), c0(2 * layers, h);
    for (Matrix<double>* m : {&inputs, &h0, &c0}) {
      std::copy_n(p.begin() + k, m->size(), m->data());
      k += m->size();
    }
    std::mt19937_64 mask_rng(seed + 1);
    BiLstmCache<double> cache;
    const Mode mode = train_mode ? Mode::kTrain : Mode::kEval;
    const Matrix<double> out =
        bilstm_forward(model, inputs, h0, c0, mode, &mask_rng, &cache);
    double loss = 0;
    Matrix<double> dout(out.rows(), out.cols());
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double y = out.values()[i];
      loss += c[i] * y + 0.5 * y * y;
      dout.values()[i] = c[i] + y;
    }
    const BiLstmGrads<double> gr = bilstm_backward(model, cache, dout, dmodel);
    k = gather(grad, 0, dv);
    for (const Matrix<double>* m : {&gr.inputs, &gr.h0, &gr.c0}) {
      std::copy(m->values().begin(), m->values().end(), grad.begin() + k);
      k += m->size();
    }
    return loss;
  };
  return g;
}

GradCase cross_entropy_grad_case(uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t t = 5;
  std::vector<int> targets(t);
  std::uniform_int_distribution<int> label(0, 2);
  for (int& y : targets) y = label(rng);
  const std::vector<double> weights = {0.01, 1.0, 1.0};
  GradCase g{"weighted-cross-entropy", {}, uniform(t * 3, rng, -3, 3)};
  g.fn = [=](std::span<const double> p, std::span<double> grad) {
    Matrix<double> logits(t, 3);
    std::copy(p.begin(), p.end(), logits.data());
    const CrossEntropy<double> ce =
        weighted_cross_entropy<double>(logits, targets, weights);
    std::copy(ce.dlogits.values().begin(), ce.dlogits.values().end(),
              grad.begin());
    return ce.loss;
  };
  return g;
}

GradCase classifier_grad_case(uint64_t seed) {
  const std::size_t in = 4, rows = 3;
  std::mt19937_64 rng(seed);
  auto proto = std::make_shared<BasicAnswerabilityModel<double>>(
      build_classifier<double>(in, seed));
  Matrix<double> x(rows, in);
  for (double& v : x.values()) v = std::uniform_real_distribution<double>(-1, 1)(rng);
  const std::vector<int> y = {1, 0, 1};
  GradCase g{"classifier", {}, {}};
  {
    auto views = proto->parameters();
    g.params.resize(total_size(views));
    gather(g.params, 0, views);
  }
  g.fn = [=](std::span<const double> p, std::span<double> grad) {
    BasicAnswerabilityModel<double> model = *proto;
    BasicAnswerabilityModel<double> d = model.zeros_like();
    scatter(p, 0, model.parameters());
    const std::vector<std::size_t> idx = {0, 1, 2};
    std::mt19937_64 mask_rng(seed + 1);
    const double loss = bce_loss_and_grad<double>(model, x, y, idx, Mode::kTrain,
                                                  mask_rng, d);
    gather(grad, 0, d.parameters());
    return loss;
  };
  return g;
}

GradCase tagger_grad_case(uint64_t seed) {
  const std::size_t t = 4, d = 3;
  TaggerConfig config;
  config.hidden = 2;
  config.dropout = 0.2;
  config.seed = seed;
  auto proto = std::make_shared<BasicTaggerModel<double>>(
      build_tagger<double>(d, config));
  std::mt19937_64 rng(seed);
  ContextVectorSet set;
  set.sample_id = "g";
  set.dim = d;
  for (double v : uniform(d, rng)) set.pooled.push_back(float(v));
  for (std::size_t i = 0; i < t; ++i) set.token_offsets.push_back({2 * i, 2 * i + 1});
  for (double v : uniform(t * d, rng)) set.token_vectors.push_back(float(v));
  const std::vector<int> targets = {0, 1, 2, 0};
  const std::vector<double> weights = {0.01, 1.0, 1.0};
  GradCase g{"tagger", {}, {}};
  {
    auto views = proto->parameters();
    g.params.resize(total_size(views));
    gather(g.params, 0, views);
  }
  g.fn = [=](std::span<const double> p, std::span<double> grad) {
    BasicTaggerModel<double> model = *proto;
    BasicTaggerModel<double> dm = model.zeros_like();
    scatter(p, 0, model.parameters());
    std::mt19937_64 mask_rng(seed + 1);
    TaggerCache<double> cache;
    const Matrix<double> logits =
        tagger_logits(model, set, Mode::kTrain, &mask_rng, &cache);
    const CrossEntropy<double> ce =
        weighted_cross_entropy<double>(logits, targets, weights);
    tagger_backward(model, cache, ce.dlogits, dm);
    gather(grad, 0, dm.parameters());
    return ce.loss;
  };
  return g;
}

// ------------------------------------------------------------ synthetic data

std::vector<TaggedSegment> SyntheticTagging::segments() const {
  std::vector<TaggedSegment> out;
  for (std::size_t i = 0; i < sets.size(); ++i) out.push_back({&sets[i], labels[i]});
  return out;
}

namespace {

ContextVectorSet random_set(const std::string& id, std::size_t t, std::size_t d,
                            std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  ContextVectorSet s;
  s.sample_id = id;
  s.dim = static_cast<uint32_t>(d);
  s.pooled.resize(d);
  for (float& v : s.pooled) v = u(rng);
  for (std::size_t i = 0; i < t; ++i) {
    s.token_offsets.push_back({uint32_t(2 * i), uint32_t(2 * i + 1)});
  }
  s.token_vectors.resize(t * d);
  for (float& v : s.token_vectors) v = u(rng);
  return s;
}

}  // namespace

SyntheticTagging argmax_tagging(std::size_t n, std::size_t t, std::size_t d,
                                uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pos(0, t - 1);
  std::uniform_real_distribution<float> high(1.5f, 2.5f);
  SyntheticTagging out;
  for (std::size_t i = 0; i < n; ++i) {
    ContextVectorSet s = random_set("s" + std::to_string(i), t, d, rng);
    const std::size_t a = pos(rng);
    s.token_vectors[a * d] = high(rng);
    std::vector<IobLabel> labels(t, IobLabel::kO);
    labels[a] = IobLabel::kB;
    out.sets.push_back(std::move(s));
    out.labels.push_back(std::move(labels));
  }
  return out;
}

SyntheticTagging sparse_span_tagging(std::size_t n, std::size_t t,
                                     std::size_t d, double signal,
                                     uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pos(0, t - 2);
  SyntheticTagging out;
  for (std::size_t i = 0; i < n; ++i) {
    ContextVectorSet s = random_set("s" + std::to_string(i), t, d, rng);
    const std::size_t a = pos(rng);
    s.token_vectors[a * d] += float(signal);
    s.token_vectors[(a + 1) * d] += float(signal);
    std::vector<IobLabel> labels(t, IobLabel::kO);
    labels[a] = IobLabel::kB;
    labels[a + 1] = IobLabel::kI;
    out.sets.push_back(std::move(s));
    out.labels.push_back(std::move(labels));
  }
  return out;
}

SyntheticPoints separable_points(std::size_t n, double margin, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  const double angle = std::uniform_real_distribution<double>(0, 6.283185307)(rng);
  const double ux = std::cos(angle), uy = std::sin(angle);
  SyntheticPoints out;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = coin(rng);
    const double along =
        (label ? 1.0 : -1.0) * (margin / 2 + std::abs(normal(rng)));
    const double across = normal(rng);
    out.x.push_back({float(along * ux - across * uy), float(along * uy + across * ux)});
    out.y.push_back(label);
  }
  return out;
}

SyntheticCorpus synthetic_corpus(std::size_t n, Language language,
                                 std::size_t dim, uint64_t seed) {
  static const char* kWords[] = {
      "river", "stone", "lake",  "city",   "north", "forest", "island",
      "king",  "war",   "year",  "bridge", "tower", "market", "church",
      "field", "road",  "ship",  "harbor", "hill",  "valley"};
  static const char* kQuestion[] = {"when", "where", "who", "what", "how"};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> word(0, std::size(kWords) - 1);
  std::uniform_int_distribution<std::size_t> qword(0, std::size(kQuestion) - 1);
  std::uniform_int_distribution<std::size_t> length(10, 18);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f), high(1.5f, 2.5f);
  SyntheticCorpus out;
  const std::string tag(language_tag(language));
  for (std::size_t i = 0; i < n; ++i) {
    QASample s;
    s.id = tag + "-" + std::to_string(i);
    s.language = language;
    const bool answerable = i % 2 == 0;
    std::vector<std::string> words(length(rng));
    for (std::string& w : words) w = kWords[word(rng)];
    std::string context;
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (std::size_t k = 0; k < words.size(); ++k) {
      if (k) context += (k % 5 == 0) ? ". " : (k % 3 == 0 ? ", " : " ");
      spans.push_back({context.size(), context.size() + words[k].size()});
      context += words[k];
    }
    context += ".";
    s.context_text = context;
    std::string question = kQuestion[qword(rng)];
    if (answerable) {
      const std::size_t a = std::uniform_int_distribution<std::size_t>(
          1, words.size() - 3)(rng);
      const std::size_t len = (i % 3 == 0) ? 2 : 1;
      question += " " + words[a - 1] + " " + words[a + len];
      const std::size_t start = spans[a].first;
      const std::size_t end = spans[a + len - 1].second;
      s.answer = Answer{context.substr(start, end - start), start, end - start};
    } else {
      question += " is the " + std::string(kQuestion[qword(rng)]) + " of it";
    }
    s.question_text = question + "?";
    out.samples.push_back(s);

    const std::vector<Token> tokens = word_tokenize(s.context_text, language);
    std::vector<ContextVectorSet> segs;
    const bool split = i % 5 == 0 && tokens.size() > 6;
    const std::size_t cut = tokens.size() * 6 / 10;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    if (split) {
      ranges = {{0, cut}, {tokens.size() - cut, tokens.size()}};
    } else {
      ranges = {{0, tokens.size()}};
    }
    for (const auto& [lo, hi] : ranges) {
      ContextVectorSet set;
      set.sample_id = s.id;
      set.dim = static_cast<uint32_t>(dim);
      set.pooled.resize(dim);
      for (float& v : set.pooled) v = u(rng);
      set.pooled[0] = (answerable ? 1.5f : -1.5f) + 0.5f * u(rng);
      for (std::size_t k = lo; k < hi; ++k) {
        set.token_offsets.push_back(
            {uint32_t(tokens[k].char_start), uint32_t(tokens[k].char_end)});
        const bool in_answer = s.answer && tokens[k].char_start < s.answer->end() &&
                               tokens[k].char_end > s.answer->start;
        for (std::size_t j = 0; j < dim; ++j) {
          set.token_vectors.push_back(j == 0 && in_answer ? high(rng) : u(rng));
        }
      }
      out.vectors.push_back(std::move(set));
    }
  }
  return out;
}

std::string to_jsonl(const std::vector<QASample>& samples) {
  std::string out;
  for (const QASample& s : samples) {
    nlohmann::json annotations = nlohmann::json::array();
    if (s.answer) {
      annotations.push_back(
          {{"answer_text", s.answer->text}, {"answer_start", s.answer->start}});
    } else {
      annotations.push_back({{"answer_text", ""}, {"answer_start", -1}});
    }
    out += nlohmann::json({{"id", s.id},
                           {"language", std::string(language_tag(s.language))},
                           {"question_text", s.question_text},
                           {"document_plaintext", s.context_text},
                           {"annotations", annotations}})
               .dump() +
           "\n";
  }
  return out;
}

// ------------------------------------------------------------ CLI harness

namespace {

struct CliRun {
  int code = -1;
  std::string out, err;
};

CliRun run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

}  // namespace

std::vector<ReproResult> cli_reproducibility(const fs::path& dir) {
  const SyntheticCorpus en = synthetic_corpus(120, Language::kEn, 6, 11);
  const SyntheticCorpus fi = synthetic_corpus(40, Language::kFi, 6, 12);
  const fs::path en_data = dir / "en.jsonl", fi_data = dir / "fi.jsonl";
  const fs::path en_cvec = dir / "en.cvec", fi_cvec = dir / "fi.cvec";
  write_text(en_data, to_jsonl(en.samples));
  write_text(fi_data, to_jsonl(fi.samples));
  write_context_vectors(en_cvec, 6, en.vectors);
  write_context_vectors(fi_cvec, 6, fi.vectors);
  const BpeFiles bpe = write_tiny_bpe(dir);
  const std::vector<std::string> bpe_flags = {
      "--bpe-vocab", bpe.vocab.string(), "--bpe-merges", bpe.merges.string(),
      "--bpe-emb", bpe.emb.string()};

  // Each command writes into run<k>/; `outputs` lists the files compared.
  struct Command {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> outputs;
  };
  auto with_bpe = [&](std::vector<std::string> a) {
    a.insert(a.end(), bpe_flags.begin(), bpe_flags.end());
    return a;
  };
  const std::string d = en_data.string();
  const std::vector<Command> commands = {
      {"ingest", {"ingest", "--data", d, "--lang", "en", "--out", "@/ingest.jsonl"},
       {"ingest.jsonl"}},
      {"stats", {"stats", "--data", d, "--lang", "en", "--out", "@/stats.json"},
       {"stats.json"}},
      {"train-answerability",
       with_bpe({"train-answerability", "--data", d, "--lang", "en", "--features",
                 "combo", "--seed", "7", "--epochs", "4", "--batch-size", "32",
                 "--out", "@/clf.ckpt"}),
       {"clf.ckpt", "clf.ckpt.history.json"}},
      {"train-answerability-cvec",
       {"train-answerability", "--data", d, "--lang", "en", "--features", "cvec",
        "--cvec", en_cvec.string(), "--seed", "7", "--epochs", "4",
        "--batch-size", "32", "--out", "@/clf_cvec.ckpt"},
       {"clf_cvec.ckpt", "clf_cvec.ckpt.history.json"}},
      {"eval-answerability",
       with_bpe({"eval-answerability", "--model", "@/clf.ckpt", "--data", d,
                 "--lang", "en", "--features", "combo", "--out", "@/eval.json"}),
       {"eval.json"}},
      {"pr-curve",
       with_bpe({"pr-curve", "--model", "@/clf.ckpt", "--data", d, "--lang", "en",
                 "--features", "combo", "--out", "@/pr.csv"}),
       {"pr.csv"}},
      {"train-tagger",
       {"train-tagger", "--data", d, "--lang", "en", "--cvec", en_cvec.string(),
        "--hidden", "6", "--epochs", "2", "--seed", "7", "--out", "@/tagger.ckpt"},
       {"tagger.ckpt", "tagger.ckpt.history.json"}},
      {"eval-tagger",
       {"eval-tagger", "--model", "@/tagger.ckpt", "--data", d, "--lang", "en",
        "--cvec", en_cvec.string(), "--beam-k", "3", "--constraints", "a,b",
        "--out", "@/eval_tagger.json"},
       {"eval_tagger.json"}},
      {"predict",
       {"predict", "--model", "@/tagger.ckpt", "--data", d, "--lang", "en",
        "--cvec", en_cvec.string(), "--beam-k", "2", "--out",
        "@/predictions.jsonl"},
       {"predictions.jsonl"}},
      {"ig",
       with_bpe({"ig", "--model", "@/clf.ckpt", "--data", d, "--lang", "en",
                 "--features", "combo", "--steps", "32", "--seed", "3", "--out",
                 "@/ig.jsonl", "--summary", "@/ig_summary.json"}),
       {"ig.jsonl", "ig_summary.json"}},
      {"attack",
       with_bpe({"attack", "--model", "@/clf.ckpt", "--data", d, "--lang", "en",
                 "--features", "combo", "--out", "@/attack.json", "--histogram",
                 "@/attack.csv"}),
       {"attack.json", "attack.csv"}},
      {"crosslingual",
       {"crosslingual", "--answerability", "@/clf_cvec.ckpt", "--tagger",
        "@/tagger.ckpt", "--train-lang", "en", "--eval-lang", "en",
        "--eval-data", d, "--eval-cvec", en_cvec.string(), "--eval-lang", "fi",
        "--eval-data", fi_data.string(), "--eval-cvec", fi_cvec.string(), "-n",
        "30", "--seed", "5", "--out", "@/crosslingual.json"},
       {"crosslingual.json"}},
  };

  std::vector<ReproResult> results;
  std::vector<std::vector<std::string>> captured(2);
  for (int k = 0; k < 2; ++k) fs::create_directories(dir / ("run" + std::to_string(k)));
  for (const Command& c : commands) {
    ReproResult r{c.name, true, true, ""};
    std::string stdout_first;
    for (int k = 0; k < 2; ++k) {
      const std::string run_dir = (dir / ("run" + std::to_string(k))).string();
      std::vector<std::string> args;
      for (std::string a : c.args) {
        if (a.rfind("@/", 0) == 0) a = run_dir + a.substr(1);
        args.push_back(a);
      }
      const CliRun res = run_cli(args);
      if (res.code != 0) {
        r.ran = false;
        r.identical = false;
        r.detail = "exit " + std::to_string(res.code) + ": " + res.err;
        break;
      }
      // Paths of the two runs differ only in the run directory.
      std::string normalized = res.out;
      for (std::size_t pos; (pos = normalized.find(run_dir)) != std::string::npos;) {
        normalized.replace(pos, run_dir.size(), "@");
      }
      if (k == 0) {
        stdout_first = normalized;
      } else if (normalized != stdout_first) {
        r.identical = false;
        r.detail = "stdout differs";
      }
    }
    if (r.ran) {
      for (const std::string& file : c.outputs) {
        const std::string a = read_bytes(dir / "run0" / file);
        const std::string b = read_bytes(dir / "run1" / file);
        if (a.empty() || a != b) {
          r.identical = false;
          r.detail += (a.empty() ? " missing " : " differs ") + file;
        }
      }
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace aqa::testing
