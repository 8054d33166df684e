// Copyright 2026 The latte Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Readers and writers for the external data the pipeline consumes:
//
//   * GloVe-style text embedding tables ("token v1 v2 ... vd" per line)
//   * LTMX token-embedding dumps (binary, little-endian, see write_dump)
//   * STS pair files ("score<TAB>sentence_a<TAB>sentence_b")
//   * raw sentence corpora, one sentence per line

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "latte/binary_io.hpp"
#include "latte/tensor.hpp"

namespace latte {

/// Static word -> vector map. Vectors are stored as 32-bit floats.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw ConfigError("embedding dimension must be positive");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  std::size_t duplicates() const noexcept { return duplicates_; }

  /// Inserts or overwrites; returns false when the token already existed.
  bool insert(const std::string& token, std::span<const float> vec) {
    if (token.empty()) throw FormatError("empty token in embedding table");
    if (vec.size() != dim_) {
      throw FormatError(detail::concat("vector for '", token, "' has length ", vec.size(),
                                       ", expected ", dim_));
    }
    auto [it, fresh] = index_.try_emplace(token, tokens_.size());
    if (fresh) {
      tokens_.push_back(token);
      data_.insert(data_.end(), vec.begin(), vec.end());
    } else {
      ++duplicates_;
      std::copy(vec.begin(), vec.end(), data_.begin() + it->second * dim_);
    }
    return fresh;
  }

  std::optional<std::size_t> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::span<const float> vector(std::size_t id) const { return {data_.data() + id * dim_, dim_}; }
  const std::string& token(std::size_t id) const { return tokens_[id]; }

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> tokens_;
  std::vector<float> data_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t duplicates_ = 0;
};

/// One sentence as K token-embedding rows, optionally with the token strings.
struct TokenMatrix {
  Tensor2 rows;
  std::vector<std::string> tokens;

  std::size_t length() const noexcept { return rows.rows(); }
  std::size_t dim() const noexcept { return rows.cols(); }

  void validate() const {
    if (rows.rows() == 0 || rows.cols() == 0) throw DataError("token matrix must have K >= 1 rows");
    if (!tokens.empty() && tokens.size() != rows.rows()) {
      throw DataError("token list length does not match row count");
    }
    if (!all_finite(rows)) throw DataError("token matrix contains NaN or Inf");
  }

  friend bool operator==(const TokenMatrix&, const TokenMatrix&) = default;
};

struct ScoredPair {
  std::string sentence_a;
  std::string sentence_b;
  double gold = 0.0;
};

struct Corpus {
  std::vector<std::string> sentences;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return value;
}

}  // namespace detail

struct GloveOptions {
  /// When set, only tokens whose lowercased form is in this set are kept.
  const std::unordered_set<std::string>* keep = nullptr;
  /// Treat surplus leading fields as part of a token containing spaces
  /// (a few GloVe releases have such entries). Off by default.
  bool join_spaced_tokens = false;
};

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Parses a GloVe-style text table. The dimension comes from the first line and
/// every later line must match it. Duplicate tokens: the last occurrence wins.
inline EmbeddingTable parse_glove_text(std::istream& in, const GloveOptions& options = {}) {
  EmbeddingTable table;
  std::size_t dim = 0;
  std::string line;
  std::size_t line_no = 0;
  std::vector<float> vec;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    while (!view.empty() && (view.back() == '\r' || view.back() == ' ')) view.remove_suffix(1);
    if (view.empty()) continue;
    auto fields = detail::split(view, ' ');
    if (dim == 0) {
      if (fields.size() < 2) {
        throw FormatError(detail::concat("line ", line_no, ": expected token and vector"));
      }
      dim = fields.size() - 1;
      table = EmbeddingTable(dim);
    }
    std::string token;
    if (fields.size() != dim + 1) {
      if (!options.join_spaced_tokens || fields.size() < dim + 1) {
        throw FormatError(detail::concat("line ", line_no, ": dimension mismatch, got ",
                                         fields.size() - 1, " components, expected ", dim));
      }
      const std::size_t extra = fields.size() - dim;
      const char* begin = fields.front().data();
      const char* end = fields[extra - 1].data() + fields[extra - 1].size();
      token.assign(begin, end);
      fields.erase(fields.begin(), fields.begin() + static_cast<std::ptrdiff_t>(extra - 1));
    } else {
      token.assign(fields[0]);
    }
    if (options.keep != nullptr && options.keep->count(lowercase(token)) == 0) continue;
    vec.clear();
    for (std::size_t i = 1; i < fields.size(); ++i) {
      auto v = detail::parse_number<float>(fields[i]);
      if (!v || !std::isfinite(*v)) {
        throw FormatError(detail::concat("line ", line_no, ": non-numeric component '",
                                         fields[i], "'"));
      }
      vec.push_back(*v);
    }
    if (!table.insert(token, vec)) {
      log(LogLevel::warn, "duplicate embedding token '", token, "' at line ", line_no,
          "; keeping the last occurrence");
    }
  }
  if (dim == 0) throw FormatError("embedding file contains no vectors");
  return table;
}

/// Lowercased whitespace tokens with ASCII punctuation stripped from both ends.
/// Tokens that are pure punctuation vanish.
inline std::vector<std::string> static_tokens(std::string_view sentence) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  const auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  while (i < sentence.size()) {
    while (i < sentence.size() && is_space(sentence[i])) ++i;
    std::size_t j = i;
    while (j < sentence.size() && !is_space(sentence[j])) ++j;
    std::string_view word = sentence.substr(i, j - i);
    while (!word.empty() && is_punct(word.front())) word.remove_prefix(1);
    while (!word.empty() && is_punct(word.back())) word.remove_suffix(1);
    if (!word.empty()) out.push_back(lowercase(word));
    i = j;
  }
  return out;
}

/// Looks up each static token; out-of-vocabulary tokens are dropped and counted.
inline TokenMatrix tokenize_static(std::string_view sentence, const EmbeddingTable& table,
                                   std::size_t* oov_count = nullptr) {
  if (table.empty()) throw ConfigError("embedding table is empty");
  std::vector<std::size_t> ids;
  TokenMatrix out;
  for (auto& tok : static_tokens(sentence)) {
    if (auto id = table.find(tok)) {
      ids.push_back(*id);
      out.tokens.push_back(std::move(tok));
    } else if (oov_count != nullptr) {
      ++*oov_count;
    }
  }
  if (ids.empty()) throw DataError("empty sentence after OOV filtering");
  out.rows = Tensor2(ids.size(), table.dim());
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const auto vec = table.vector(ids[k]);
    std::copy(vec.begin(), vec.end(), out.rows.row(k).begin());
  }
  return out;
}

// ---------------------------------------------------------------------------
// LTMX dump format:
//   "LTMX" | u32 version=1 | u32 d | u32 N |
//   N x ( u32 K | K*d f32 row-major | u32 token-block length | UTF-8 bytes )
// The token block holds K newline-separated strings, or is empty.

inline constexpr std::uint32_t kDumpVersion = 1;
inline constexpr std::string_view kDumpMagic = "LTMX";

inline std::uint64_t write_dump(std::span<const TokenMatrix> sentences, std::ostream& out) {
  const std::size_t d = sentences.empty() ? 0 : sentences.front().dim();
  for (const auto& s : sentences) {
    s.validate();
    if (s.dim() != d) throw ShapeError("write_dump: sentences have differing dimensions");
  }
  std::uint64_t bytes = 0;
  out.write(kDumpMagic.data(), 4);
  binary::write_u32(out, kDumpVersion);
  binary::write_u32(out, binary::checked_u32(d, "dimension"));
  binary::write_u32(out, binary::checked_u32(sentences.size(), "sentence count"));
  bytes += 16;
  std::vector<char> buffer;
  for (const auto& s : sentences) {
    binary::write_u32(out, binary::checked_u32(s.length(), "token count"));
    buffer.resize(s.rows.size() * 4);
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(s.rows[i]));
      for (int b = 0; b < 4; ++b) buffer[i * 4 + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    std::string block;
    for (std::size_t k = 0; k < s.tokens.size(); ++k) {
      if (s.tokens[k].find('\n') != std::string::npos) {
        throw FormatError("token strings may not contain newlines");
      }
      if (k > 0) block += '\n';
      block += s.tokens[k];
    }
    binary::write_u32(out, binary::checked_u32(block.size(), "token block"));
    binary::write_bytes(out, block);
    bytes += 4 + buffer.size() + 4 + block.size();
  }
  if (!out) throw FormatError("write_dump: output stream failed");
  return bytes;
}

inline std::vector<TokenMatrix> read_dump(std::istream& in) {
  const std::string magic = binary::read_string(in, 4, "magic");
  if (magic != kDumpMagic) throw FormatError("bad magic: not an LTMX dump");
  const auto version = binary::read_u32(in, "version");
  if (version != kDumpVersion) {
    throw FormatError(detail::concat("unsupported LTMX version ", version));
  }
  const std::size_t d = binary::read_u32(in, "dimension");
  const std::size_t n = binary::read_u32(in, "sentence count");
  if (d == 0 && n > 0) throw FormatError("LTMX dump with zero dimension");
  std::vector<TokenMatrix> out;
  out.reserve(n);
  std::vector<unsigned char> buffer;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t k = binary::read_u32(in, "token count");
    if (k == 0) throw FormatError(detail::concat("sentence ", s, " has K=0"));
    buffer.resize(k * d * 4);
    binary::read_exact(in, reinterpret_cast<char*>(buffer.data()), buffer.size(), "rows");
    TokenMatrix tm;
    tm.rows = Tensor2(k, d);
    for (std::size_t i = 0; i < k * d; ++i) {
      const std::uint32_t bits = static_cast<std::uint32_t>(buffer[4 * i]) |
                                 (static_cast<std::uint32_t>(buffer[4 * i + 1]) << 8) |
                                 (static_cast<std::uint32_t>(buffer[4 * i + 2]) << 16) |
                                 (static_cast<std::uint32_t>(buffer[4 * i + 3]) << 24);
      tm.rows[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    const std::size_t block_len = binary::read_u32(in, "token block length");
    const std::string block = binary::read_string(in, block_len, "token block");
    if (block_len > 0) {
      for (auto piece : detail::split(block, '\n')) tm.tokens.emplace_back(piece);
      if (tm.tokens.size() != k) {
        throw FormatError(detail::concat("sentence ", s, ": token block has ", tm.tokens.size(),
                                         " strings for K=", k));
      }
    }
    if (!all_finite(tm.rows)) throw FormatError(detail::concat("sentence ", s, ": non-finite"));
    out.push_back(std::move(tm));
  }
  return out;
}

// ---------------------------------------------------------------------------

/// Parses "score<TAB>a<TAB>b" lines. The STS-benchmark distribution layout
/// (genre, file, year, id, score, a, b[, extra...]) is accepted too.
inline std::vector<ScoredPair> parse_sts_tsv(std::istream& in) {
  std::vector<ScoredPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    if (detail::trim(view).empty()) continue;
    const auto fields = detail::split(view, '\t');
    std::size_t score_col = 0;
    if (fields.size() == 3) {
      score_col = 0;
    } else if (fields.size() >= 7) {
      score_col = 4;
    } else {
      throw FormatError(detail::concat("line ", line_no, ": expected 3 tab-separated fields, got ",
                                       fields.size()));
    }
    const auto score = detail::parse_number<double>(detail::trim(fields[score_col]));
    if (!score || !std::isfinite(*score)) {
      throw FormatError(detail::concat("line ", line_no, ": unparsable score '",
                                       fields[score_col], "'"));
    }
    ScoredPair pair{std::string(detail::trim(fields[score_col + 1])),
                    std::string(detail::trim(fields[score_col + 2])), *score};
    if (pair.sentence_a.empty() || pair.sentence_b.empty()) {
      throw FormatError(detail::concat("line ", line_no, ": empty sentence"));
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

/// One sentence per line; blank lines are skipped.
inline Corpus read_corpus(std::istream& in) {
  Corpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    const auto trimmed = detail::trim(line);
    if (!trimmed.empty()) corpus.sentences.emplace_back(trimmed);
  }
  if (corpus.sentences.empty()) throw DataError("corpus is empty");
  return corpus;
}

}  // namespace latte
