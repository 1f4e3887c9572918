#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tug/embeddings.hpp"
#include "tug/lexicon.hpp"
#include "tug/random.hpp"

namespace tug::embeddings {

struct SyntheticTableOptions {
  std::size_t dim = kDefaultDim;
  double noise_scale = 0.35;         // weight of the per-word unit noise direction
  double subcategory_weight = 1.0;   // weight of the shared per-subcategory direction
};

inline Vector random_unit_vector(std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Vector v(dim);
  for (double& x : v) x = rng.normal();
  normalize_in_place(v);
  return v;
}

/// Deterministic stand-in for a sentence encoder. Each theme gets a unit anchor,
/// each subcategory a unit direction, each word a unit noise direction:
///   v(word) = normalize(anchor + subcategory_weight * dir + noise_scale * noise)
/// Words shared across themes keep the vector of their first occurrence. Theme
/// names are included as words (their vector is the anchor).
inline EmbeddingTable synthetic_table(const std::vector<lexicon::Theme>& themes, std::uint64_t seed,
                                      const SyntheticTableOptions& opts = {}) {
  EmbeddingTable table(opts.dim);
  for (const auto& theme : themes) {
    const Vector anchor = random_unit_vector(opts.dim, derive_seed(seed, "theme:" + theme.name));
    if (!table.contains(theme.name)) table.set(theme.name, anchor);
    for (const auto& sub : theme.subcategories) {
      const Vector dir = random_unit_vector(opts.dim, derive_seed(seed, "sub:" + theme.name + "/" + sub.name));
      for (const auto& word : sub.words) {
        if (table.contains(word)) continue;
        const Vector noise = random_unit_vector(opts.dim, derive_seed(seed, "word:" + word));
        Vector v(opts.dim);
        for (std::size_t i = 0; i < opts.dim; ++i) {
          v[i] = anchor[i] + opts.subcategory_weight * dir[i] + opts.noise_scale * noise[i];
        }
        normalize_in_place(v);
        table.set(word, v);
      }
    }
  }
  return table;
}

}  // namespace tug::embeddings
