#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "tug/embeddings.hpp"
#include "tug/error.hpp"
#include "tug/random.hpp"
#include "tug/text.hpp"

namespace tug::lexicon {

inline constexpr int kMinDifficulty = 1;
inline constexpr int kMaxDifficulty = 6;
inline constexpr int kDefaultMaxRating = 3;
inline constexpr std::size_t kMatrixSize = 20;
inline constexpr std::size_t kSampleSize = kMatrixSize + 1;
inline constexpr int kMinQuota = 3;
inline constexpr int kMaxQuota = 5;
inline constexpr std::size_t kSmallThemeWarning = 50;

struct WordEntry {
  std::string word;
  std::string theme;
  std::string subcategory;
  int difficulty = 1;

  bool operator==(const WordEntry&) const = default;
};

struct Subcategory {
  std::string name;
  std::vector<std::string> words;

  bool operator==(const Subcategory&) const = default;
};

struct Theme {
  std::string name;
  std::vector<Subcategory> subcategories;

  /// All words across subcategories, in file order.
  std::vector<std::string> words() const {
    std::vector<std::string> out;
    for (const auto& sub : subcategories) out.insert(out.end(), sub.words.begin(), sub.words.end());
    return out;
  }

  std::size_t size() const {
    std::size_t n = 0;
    for (const auto& sub : subcategories) n += sub.words.size();
    return n;
  }

  bool operator==(const Theme&) const = default;
};

/// Parses `theme<TAB>subcategory<TAB>word<TAB>difficulty` records. Blank lines
/// and lines starting with '#' are skipped.
inline std::vector<WordEntry> parse_entries(std::istream& in, const std::string& source = "<input>") {
  std::vector<WordEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::parse_error, source + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty() || line[0] == '#') continue;
    auto fields = text::split(line, '\t');
    if (fields.size() != 4) fail("expected 4 tab-separated fields, got " + std::to_string(fields.size()));
    WordEntry e;
    e.theme = text::trim(fields[0]);
    e.subcategory = text::trim(fields[1]);
    e.word = text::normalize_word(fields[2]);
    if (e.theme.empty()) fail("empty theme");
    if (e.subcategory.empty()) fail("empty subcategory");
    if (e.word.empty()) fail("empty word");
    const auto rating = text::trim(fields[3]);
    auto res = std::from_chars(rating.data(), rating.data() + rating.size(), e.difficulty);
    if (res.ec != std::errc() || res.ptr != rating.data() + rating.size()) fail("difficulty is not an integer");
    if (e.difficulty < kMinDifficulty || e.difficulty > kMaxDifficulty) fail("difficulty must be in 1..6");
    entries.push_back(std::move(e));
  }
  return entries;
}

inline std::vector<WordEntry> read_entries(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open lexicon " + path);
  return parse_entries(in, path);
}

inline void write_entries(const std::vector<WordEntry>& entries, std::ostream& out) {
  for (const auto& e : entries) {
    out << e.theme << '\t' << e.subcategory << '\t' << e.word << '\t' << e.difficulty << '\n';
  }
}

/// Keeps entries rated at most `max_rating`, preserving order.
inline std::vector<WordEntry> filter_by_difficulty(const std::vector<WordEntry>& entries,
                                                   int max_rating = kDefaultMaxRating) {
  std::vector<WordEntry> out;
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
               [&](const WordEntry& e) { return e.difficulty <= max_rating; });
  return out;
}

/// Groups entries into themes in first-appearance order. A word may recur
/// across themes but only once within a theme.
inline std::vector<Theme> build_themes(const std::vector<WordEntry>& entries) {
  std::vector<Theme> themes;
  std::unordered_map<std::string, std::size_t> theme_index;
  std::vector<std::unordered_set<std::string>> seen;
  for (const auto& e : entries) {
    auto [it, inserted] = theme_index.emplace(e.theme, themes.size());
    if (inserted) {
      themes.push_back(Theme{e.theme, {}});
      seen.emplace_back();
    }
    Theme& theme = themes[it->second];
    if (!seen[it->second].insert(e.word).second) {
      throw Error(ErrorCode::duplicate_word, "word '" + e.word + "' appears twice in theme '" + e.theme + "'");
    }
    auto sub = std::find_if(theme.subcategories.begin(), theme.subcategories.end(),
                            [&](const Subcategory& s) { return s.name == e.subcategory; });
    if (sub == theme.subcategories.end()) {
      theme.subcategories.push_back(Subcategory{e.subcategory, {}});
      sub = std::prev(theme.subcategories.end());
    }
    sub->words.push_back(e.word);
  }
  return themes;
}

inline std::vector<Theme> load_lexicon(const std::string& path) { return build_themes(read_entries(path)); }

/// Loads and keeps only words rated at most `max_rating`.
inline std::vector<Theme> load_lexicon(const std::string& path, int max_rating) {
  return build_themes(filter_by_difficulty(read_entries(path), max_rating));
}

inline std::vector<std::string> lexicon_warnings(const std::vector<Theme>& themes) {
  std::vector<std::string> warnings;
  for (const auto& t : themes) {
    if (t.size() < kSmallThemeWarning) {
      warnings.push_back("theme '" + t.name + "' has only " + std::to_string(t.size()) + " words");
    }
  }
  return warnings;
}

struct RoundSpec {
  std::string theme;
  std::string keyword;
  std::vector<std::string> matrix;
  int quota = kMinQuota;

  bool operator==(const RoundSpec&) const = default;
};

inline bool valid_quota(int quota) { return quota >= kMinQuota && quota <= kMaxQuota; }

inline void validate(const RoundSpec& spec) {
  if (spec.matrix.size() != kMatrixSize) {
    throw Error(ErrorCode::schema_violation, "round matrix must hold exactly 20 words");
  }
  std::set<std::string> distinct(spec.matrix.begin(), spec.matrix.end());
  if (distinct.size() != kMatrixSize) throw Error(ErrorCode::schema_violation, "round matrix words must be distinct");
  if (distinct.count(spec.keyword)) throw Error(ErrorCode::schema_violation, "keyword must not appear in the matrix");
  if (!valid_quota(spec.quota)) throw Error(ErrorCode::schema_violation, "quota must be 3, 4 or 5");
}

/// Samples 21 distinct words from the theme, makes the centroid-nearest one the
/// keyword and the other 20 the matrix, and draws the quota uniformly from {3,4,5}.
inline RoundSpec build_round_spec(const Theme& theme, const embeddings::EmbeddingTable& table, Rng& rng) {
  auto pool = theme.words();
  if (pool.size() < kSampleSize) {
    throw Error(ErrorCode::insufficient_words, "theme '" + theme.name + "' has " + std::to_string(pool.size()) +
                                                   " words, a round needs " + std::to_string(kSampleSize));
  }
  embeddings::require_words(table, pool);
  for (std::size_t i = 0; i < kSampleSize; ++i) {
    const auto j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(kSampleSize);
  auto split = embeddings::centroid_keyword(pool, table);
  RoundSpec spec;
  spec.theme = theme.name;
  spec.keyword = std::move(split.keyword);
  spec.matrix = std::move(split.remaining);
  spec.quota = kMinQuota + static_cast<int>(rng.below(kMaxQuota - kMinQuota + 1));
  return spec;
}

/// Per-player view of the matrix; a deterministic permutation for a given seed.
inline std::vector<std::string> shuffle_for_player(const RoundSpec& spec, std::uint64_t player_seed) {
  auto order = spec.matrix;
  Rng rng(player_seed);
  rng.shuffle(order.begin(), order.end());
  return order;
}

}  // namespace tug::lexicon
