#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tug/error.hpp"
#include "tug/text.hpp"

namespace tug::embeddings {

inline constexpr std::size_t kDefaultDim = 384;

using Vector = std::vector<double>;

inline double dot(std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

inline double norm(std::span<const double> u) { return std::sqrt(dot(u, u)); }

/// Cosine similarity clamped to [-1, 1]. Throws zero_vector if either norm is 0.
inline double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::dimension_mismatch, "cosine: vectors differ in dimension");
  }
  const double nu = norm(u);
  const double nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw Error(ErrorCode::zero_vector, "cosine: zero-length vector");
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

inline void normalize_in_place(Vector& v) {
  const double n = norm(v);
  if (n == 0.0) throw Error(ErrorCode::zero_vector, "normalize: zero-length vector");
  for (double& x : v) x /= n;
}

/// Immutable-after-load word → vector table. Rows are stored contiguously in
/// insertion order so serialization is stable.
class EmbeddingTable {
 public:
  explicit EmbeddingTable(std::size_t dim = kDefaultDim) : dim_(dim) {
    if (dim == 0) throw Error(ErrorCode::invalid_argument, "embedding dimension must be positive");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return words_.size(); }
  const std::vector<std::string>& words() const noexcept { return words_; }

  bool contains(std::string_view word) const { return index_.count(std::string(word)) != 0; }

  /// Inserts or replaces. Components must be finite and match dim().
  void set(const std::string& word, std::span<const double> values) {
    if (values.size() != dim_) {
      throw Error(ErrorCode::dimension_mismatch,
                  "vector for '" + word + "' has " + std::to_string(values.size()) +
                      " components, table dimension is " + std::to_string(dim_));
    }
    for (double x : values) {
      if (!std::isfinite(x)) throw Error(ErrorCode::invalid_argument, "non-finite component for '" + word + "'");
    }
    auto it = index_.find(word);
    if (it != index_.end()) {
      std::copy(values.begin(), values.end(), data_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
      return;
    }
    index_.emplace(word, words_.size());
    words_.push_back(word);
    data_.insert(data_.end(), values.begin(), values.end());
  }

  std::span<const double> at(std::string_view word) const {
    auto it = index_.find(std::string(word));
    if (it == index_.end()) throw Error(ErrorCode::missing_embedding, "no embedding for '" + std::string(word) + "'");
    return {data_.data() + it->second * dim_, dim_};
  }

  bool operator==(const EmbeddingTable& o) const {
    return dim_ == o.dim_ && words_ == o.words_ && data_ == o.data_;
  }

 private:
  std::size_t dim_;
  std::vector<std::string> words_;
  std::vector<double> data_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Throws missing_embedding listing every absent word.
inline void require_words(const EmbeddingTable& table, std::span<const std::string> words) {
  std::vector<std::string> missing;
  for (const auto& w : words) {
    if (!table.contains(w)) missing.push_back(w);
  }
  if (!missing.empty()) {
    throw Error(ErrorCode::missing_embedding, "missing embeddings: " + text::join(missing, ", "));
  }
}

/// Componentwise mean. Words are summed in sorted order so the result does not
/// depend on the order they were given in.
inline Vector mean_vector(std::span<const std::string> words, const EmbeddingTable& table) {
  require_words(table, words);
  if (words.empty()) throw Error(ErrorCode::invalid_argument, "mean of an empty word list");
  std::vector<std::string> sorted(words.begin(), words.end());
  std::sort(sorted.begin(), sorted.end());
  Vector out(table.dim(), 0.0);
  for (const auto& w : sorted) {
    auto v = table.at(w);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
  }
  for (double& x : out) x /= static_cast<double>(sorted.size());
  return out;
}

struct KeywordSplit {
  std::string keyword;
  std::vector<std::string> remaining;
};

/// The word nearest (by cosine) to the mean of all given words becomes the
/// keyword; exact ties go to the lexicographically smaller word.
inline KeywordSplit centroid_keyword(std::span<const std::string> words, const EmbeddingTable& table) {
  if (words.empty()) throw Error(ErrorCode::invalid_argument, "centroid_keyword: no words");
  require_words(table, words);
  Vector centroid(table.dim(), 0.0);
  for (const auto& w : words) {
    auto v = table.at(w);
    for (std::size_t i = 0; i < centroid.size(); ++i) centroid[i] += v[i];
  }
  for (double& x : centroid) x /= static_cast<double>(words.size());

  std::size_t best = 0;
  double best_sim = cosine(table.at(words[0]), centroid);
  for (std::size_t i = 1; i < words.size(); ++i) {
    const double sim = cosine(table.at(words[i]), centroid);
    if (sim > best_sim || (sim == best_sim && words[i] < words[best])) {
      best = i;
      best_sim = sim;
    }
  }
  KeywordSplit out;
  out.keyword = words[best];
  out.remaining.reserve(words.size() - 1);
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i != best) out.remaining.push_back(words[i]);
  }
  return out;
}

/// Round-level vector: mean of {theme token if the table has it, keyword,
/// every selected word}.
inline Vector embed_round(const std::string& theme, const std::string& keyword,
                          std::span<const std::string> selections, const EmbeddingTable& table) {
  std::vector<std::string> parts;
  parts.reserve(selections.size() + 2);
  if (table.contains(theme)) parts.push_back(theme);
  parts.push_back(keyword);
  parts.insert(parts.end(), selections.begin(), selections.end());
  return mean_vector(parts, table);
}

// File format: "dim N" header, then "word<TAB>c1 c2 ... cN" per line.

inline std::string format_double(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline void write_table(const EmbeddingTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path + " for writing");
  out << "dim " << table.dim() << '\n';
  for (const auto& w : table.words()) {
    out << w << '\t';
    auto v = table.at(w);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out << ' ';
      out << format_double(v[i]);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path);
}

inline EmbeddingTable read_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open embedding table " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("dim ", 0) != 0) {
    throw Error(ErrorCode::parse_error, path + ":1: expected 'dim N' header");
  }
  std::size_t dim = 0;
  {
    auto rest = std::string_view(line).substr(4);
    auto res = std::from_chars(rest.data(), rest.data() + rest.size(), dim);
    if (res.ec != std::errc() || dim == 0) throw Error(ErrorCode::parse_error, path + ":1: bad dimension");
  }
  EmbeddingTable table(dim);
  std::size_t line_no = 1;
  Vector values;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorCode::parse_error, path + ":" + std::to_string(line_no) + ": missing tab separator");
    }
    values.clear();
    const char* p = line.data() + tab + 1;
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      double x = 0.0;
      auto res = std::from_chars(p, end, x);
      if (res.ec != std::errc()) {
        throw Error(ErrorCode::parse_error, path + ":" + std::to_string(line_no) + ": bad number");
      }
      values.push_back(x);
      p = res.ptr;
    }
    try {
      table.set(line.substr(0, tab), values);
    } catch (const Error& e) {
      throw Error(ErrorCode::parse_error, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return table;
}

}  // namespace tug::embeddings
