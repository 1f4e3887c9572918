#pragma once

#include <array>
#include <fstream>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tug/error.hpp"
#include "tug/text.hpp"

namespace tug::assessments {

inline constexpr std::size_t kUrcsItems = 12;
inline constexpr int kUrcsMin = 1;
inline constexpr int kUrcsMax = 7;
inline constexpr std::size_t kBfiItems = 10;
inline constexpr int kBfiMin = 1;
inline constexpr int kBfiMax = 5;

namespace detail {
template <std::size_t N>
std::array<int, N> checked_items(std::span<const int> items, int lo, int hi, std::string_view what) {
  if (items.size() != N) {
    throw Error(ErrorCode::out_of_range, std::string(what) + " needs exactly " + std::to_string(N) + " items, got " +
                                             std::to_string(items.size()));
  }
  std::array<int, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if (items[i] < lo || items[i] > hi) {
      throw Error(ErrorCode::out_of_range, std::string(what) + " item " + std::to_string(i + 1) + " must be in " +
                                               std::to_string(lo) + ".." + std::to_string(hi));
    }
    out[i] = items[i];
  }
  return out;
}
}  // namespace detail

/// Unidimensional Relationship Closeness Scale: 12 items on a 1..7 scale.
class URCSResponse {
 public:
  explicit URCSResponse(std::span<const int> items)
      : items_(detail::checked_items<kUrcsItems>(items, kUrcsMin, kUrcsMax, "URCS")) {}
  const std::array<int, kUrcsItems>& items() const noexcept { return items_; }

 private:
  std::array<int, kUrcsItems> items_;
};

/// Closeness normalized to [0, 1]: (mean - 1) / 6.
inline double score_urcs(const URCSResponse& resp) {
  const int sum = std::accumulate(resp.items().begin(), resp.items().end(), 0);
  const double mean = static_cast<double>(sum) / static_cast<double>(kUrcsItems);
  return (mean - kUrcsMin) / static_cast<double>(kUrcsMax - kUrcsMin);
}

/// Pair label: mean of the partners' URCS scores that are available.
inline double pair_label(std::span<const URCSResponse> responses) {
  if (responses.empty()) throw Error(ErrorCode::invalid_argument, "no URCS responses for this pair");
  double s = 0.0;
  for (const auto& r : responses) s += score_urcs(r);
  return s / static_cast<double>(responses.size());
}

enum class Trait { extraversion, agreeableness, conscientiousness, neuroticism, openness };
inline constexpr std::size_t kTraitCount = 5;

inline std::string_view to_string(Trait t) {
  switch (t) {
    case Trait::extraversion: return "extraversion";
    case Trait::agreeableness: return "agreeableness";
    case Trait::conscientiousness: return "conscientiousness";
    case Trait::neuroticism: return "neuroticism";
    case Trait::openness: return "openness";
  }
  return "unknown";
}

inline Trait parse_trait(std::string_view s) {
  for (std::size_t i = 0; i < kTraitCount; ++i) {
    if (to_string(static_cast<Trait>(i)) == s) return static_cast<Trait>(i);
  }
  throw Error(ErrorCode::malformed_keying, "unknown trait '" + std::string(s) + "'");
}

struct KeyedItem {
  Trait trait = Trait::extraversion;
  bool reversed = false;
};

/// Item-to-trait assignment; every trait must own exactly two items.
class BfiKeying {
 public:
  explicit BfiKeying(std::span<const KeyedItem> items) {
    if (items.size() != kBfiItems) {
      throw Error(ErrorCode::malformed_keying, "BFI keying must cover exactly 10 items");
    }
    std::array<int, kTraitCount> counts{};
    for (std::size_t i = 0; i < kBfiItems; ++i) {
      items_[i] = items[i];
      ++counts[static_cast<std::size_t>(items[i].trait)];
    }
    for (std::size_t t = 0; t < kTraitCount; ++t) {
      if (counts[t] != 2) {
        throw Error(ErrorCode::malformed_keying, "trait " + std::string(to_string(static_cast<Trait>(t))) + " has " +
                                                     std::to_string(counts[t]) + " items, expected 2");
      }
    }
  }

  const std::array<KeyedItem, kBfiItems>& items() const noexcept { return items_; }

 private:
  std::array<KeyedItem, kBfiItems> items_{};
};

/// Standard BFI-10 keying: items 1, 3, 4, 5 and 7 are reverse-scored.
inline BfiKeying standard_bfi10_keying() {
  const std::array<KeyedItem, kBfiItems> items{{
      {Trait::extraversion, true},
      {Trait::agreeableness, false},
      {Trait::conscientiousness, true},
      {Trait::neuroticism, true},
      {Trait::openness, true},
      {Trait::extraversion, false},
      {Trait::agreeableness, true},
      {Trait::conscientiousness, false},
      {Trait::neuroticism, false},
      {Trait::openness, false},
  }};
  return BfiKeying(items);
}

/// Reads `item<TAB>trait<TAB>reversed` lines (item is 1-based, reversed is 0/1).
inline BfiKeying load_bfi_keying(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open BFI keying " + path);
  std::array<KeyedItem, kBfiItems> items{};
  std::array<bool, kBfiItems> seen{};
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    if (text::trim(line).empty() || line[0] == '#') continue;
    auto f = text::split(line, '\t');
    if (f.size() != 3) throw Error(ErrorCode::malformed_keying, "keying line needs 3 fields: " + line);
    const int item = std::stoi(f[0]);
    if (item < 1 || item > static_cast<int>(kBfiItems) || seen[static_cast<std::size_t>(item - 1)]) {
      throw Error(ErrorCode::malformed_keying, "bad or repeated item number in: " + line);
    }
    seen[static_cast<std::size_t>(item - 1)] = true;
    items[static_cast<std::size_t>(item - 1)] = KeyedItem{parse_trait(text::trim(f[1])), text::trim(f[2]) == "1"};
    ++count;
  }
  if (count != kBfiItems) throw Error(ErrorCode::malformed_keying, "keying must list all 10 items");
  return BfiKeying(items);
}

class BFIResponse {
 public:
  explicit BFIResponse(std::span<const int> items)
      : items_(detail::checked_items<kBfiItems>(items, kBfiMin, kBfiMax, "BFI")) {}
  const std::array<int, kBfiItems>& items() const noexcept { return items_; }

 private:
  std::array<int, kBfiItems> items_;
};

struct TraitScores {
  std::array<double, kTraitCount> values{};
  double operator[](Trait t) const { return values[static_cast<std::size_t>(t)]; }
};

/// Reverse-keyed items map v -> 6 - v; each trait is the mean of its two items.
inline TraitScores score_bfi(const BFIResponse& resp, const BfiKeying& keying) {
  TraitScores out;
  for (std::size_t i = 0; i < kBfiItems; ++i) {
    const auto& k = keying.items()[i];
    const int v = resp.items()[i];
    out.values[static_cast<std::size_t>(k.trait)] += k.reversed ? (kBfiMax + kBfiMin - v) : v;
  }
  for (double& v : out.values) v /= 2.0;
  return out;
}

}  // namespace tug::assessments
