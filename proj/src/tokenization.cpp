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

#include "aqa/tokenization.hpp"

#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_set>

#include "aqa/error.hpp"

namespace aqa {

namespace {

void push_token(std::vector<Token>& out, std::u32string_view text,
                std::size_t start, std::size_t end) {
  out.push_back(Token{unicode::encode(text.substr(start, end - start)), start,
                      end});
}

std::vector<Token> whitespace_chunks(std::u32string_view text) {
  std::vector<Token> chunks;
  std::size_t i = 0;
  while (i < text.size()) {
    if (unicode::is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < text.size() && !unicode::is_space(text[j])) ++j;
    push_token(chunks, text, i, j);
    i = j;
  }
  return chunks;
}

}  // namespace

std::vector<Token> word_tokenize(std::u32string_view text, Language language) {
  std::vector<Token> tokens;
  const std::size_t n = text.size();
  if (language == Language::kJa) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!unicode::is_space(text[i])) push_token(tokens, text, i, i + 1);
    }
    return tokens;
  }
  std::size_t i = 0;
  while (i < n) {
    if (unicode::is_space(text[i])) {
      ++i;
      continue;
    }
    const bool punct = unicode::is_punct(text[i]);
    std::size_t j = i + 1;
    while (j < n && !unicode::is_space(text[j]) &&
           unicode::is_punct(text[j]) == punct) {
      ++j;
    }
    push_token(tokens, text, i, j);
    i = j;
  }
  return tokens;
}

std::vector<Token> word_tokenize(std::string_view utf8, Language language) {
  return word_tokenize(unicode::decode(utf8), language);
}

std::string normalize_token(std::string_view utf8, Language language) {
  if (language == Language::kJa) return std::string(utf8);
  return unicode::fold(utf8);
}

void validate_subword_model(const SubwordModel& model) {
  const std::size_t v = model.vocab_size();
  if (model.vocab.size() != v) {
    throw FormatError("subword vocabulary contains duplicate tokens");
  }
  if (model.embeddings.size() != v * model.dim) {
    throw FormatError("embedding table has " +
                      std::to_string(model.embeddings.size()) +
                      " values, expected " + std::to_string(v) + " x " +
                      std::to_string(model.dim));
  }
  if (v > 0 && (model.unk_id < 0 || static_cast<std::size_t>(model.unk_id) >= v)) {
    throw FormatError("unk id out of range");
  }
  for (std::size_t rank = 0; rank < model.merges.size(); ++rank) {
    const auto& [left, right] = model.merges[rank];
    for (const std::string* symbol : {&left, &right}) {
      if (!model.vocab.contains(*symbol)) {
        throw FormatError(rank + 1, "merge references unknown symbol '" +
                                        *symbol + "'");
      }
    }
    if (!model.vocab.contains(left + right)) {
      throw FormatError(rank + 1, "merge result '" + left + right +
                                      "' is not in the vocabulary");
    }
  }
}

SubwordModel load_subword_model(const std::filesystem::path& vocab_path,
                                const std::filesystem::path& merges_path,
                                const std::filesystem::path& embeddings_path) {
  SubwordModel model;
  std::ifstream vocab_in(vocab_path);
  if (!vocab_in) throw FormatError("cannot open vocab " + vocab_path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(vocab_in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) throw FormatError(line_no, "empty vocabulary entry");
    const auto id = static_cast<int32_t>(model.id_to_token.size());
    if (!model.vocab.emplace(line, id).second) {
      throw FormatError(line_no, "duplicate vocabulary entry '" + line + "'");
    }
    model.id_to_token.push_back(line);
  }
  const auto unk = model.vocab.find("<unk>");
  model.unk_id = unk == model.vocab.end() ? 0 : unk->second;

  std::ifstream merges_in(merges_path);
  if (!merges_in) throw FormatError("cannot open merges " + merges_path.string());
  line_no = 0;
  while (std::getline(merges_in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::istringstream fields(line);
    std::string left, right, extra;
    if (!(fields >> left >> right) || (fields >> extra)) {
      throw FormatError(line_no, "merge line must be 'left right'");
    }
    model.merge_rank.emplace(std::pair{left, right}, model.merges.size());
    model.merges.emplace_back(std::move(left), std::move(right));
  }

  std::ifstream emb_in(embeddings_path);
  if (!emb_in) {
    throw FormatError("cannot open embeddings " + embeddings_path.string());
  }
  std::size_t declared_rows = 0;
  if (!std::getline(emb_in, line)) throw FormatError(1, "missing V E header");
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> declared_rows >> model.dim) || (header >> extra) ||
        model.dim == 0) {
      throw FormatError(1, "malformed V E header");
    }
  }
  if (declared_rows != model.vocab_size()) {
    throw FormatError(1, "header declares " + std::to_string(declared_rows) +
                             " rows but the vocabulary has " +
                             std::to_string(model.vocab_size()));
  }
  model.embeddings.assign(declared_rows * model.dim, 0.0f);
  std::vector<bool> seen(declared_rows, false);
  std::size_t rows = 0;
  line_no = 1;
  while (std::getline(emb_in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++rows;
    if (rows > declared_rows) {
      throw FormatError(line_no, "more embedding rows than declared (" +
                                     std::to_string(declared_rows) + ")");
    }
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    const auto it = model.vocab.find(token);
    if (it == model.vocab.end()) {
      throw FormatError(line_no, "embedding for unknown token '" + token + "'");
    }
    if (seen[it->second]) {
      throw FormatError(line_no, "duplicate embedding for '" + token + "'");
    }
    seen[it->second] = true;
    float* row = model.embeddings.data() + it->second * model.dim;
    std::size_t k = 0;
    float value;
    while (fields >> value) {
      if (k == model.dim) break;
      row[k++] = value;
    }
    if (k != model.dim || !fields.eof()) {
      throw FormatError(line_no, "embedding row length differs from E=" +
                                     std::to_string(model.dim));
    }
  }
  if (rows != declared_rows) {
    throw FormatError(line_no, "header declares " +
                                   std::to_string(declared_rows) +
                                   " rows, file has " + std::to_string(rows));
  }
  validate_subword_model(model);
  return model;
}

std::vector<std::string> apply_merges(std::u32string_view word,
                                      const SubwordModel& model) {
  std::vector<std::string> symbols;
  symbols.reserve(word.size());
  for (char32_t c : word) symbols.push_back(unicode::encode(c));
  while (symbols.size() > 1) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      const auto it = model.merge_rank.find({symbols[i], symbols[i + 1]});
      if (it != model.merge_rank.end() && it->second < best) best = it->second;
    }
    if (best == std::numeric_limits<std::size_t>::max()) break;
    const auto& [left, right] = model.merges[best];
    std::vector<std::string> merged;
    merged.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      if (i + 1 < symbols.size() && symbols[i] == left &&
          symbols[i + 1] == right) {
        merged.push_back(left + right);
        ++i;
      } else {
        merged.push_back(std::move(symbols[i]));
      }
    }
    symbols = std::move(merged);
  }
  return symbols;
}

std::vector<int32_t> subword_tokenize(std::string_view utf8,
                                      const SubwordModel& model,
                                      Language language) {
  std::vector<int32_t> ids;
  const std::u32string text = unicode::decode(utf8);
  // Japanese words are whole whitespace-free runs here so that merges can
  // span characters; the per-character word tokens are for labeling only.
  const std::vector<Token> words = language == Language::kJa
                                       ? whitespace_chunks(text)
                                       : word_tokenize(text, language);
  for (const Token& token : words) {
    std::u32string word =
        text.substr(token.char_start, token.char_end - token.char_start);
    if (language != Language::kJa) word = unicode::fold(word);
    for (const std::string& symbol : apply_merges(word, model)) {
      const auto it = model.vocab.find(symbol);
      ids.push_back(it == model.vocab.end() ? model.unk_id : it->second);
    }
  }
  // Whitespace-only input still yields one symbol.
  if (ids.empty() && !utf8.empty()) ids.push_back(model.unk_id);
  return ids;
}

}  // namespace aqa
