#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tug/datastore.hpp"
#include "tug/embeddings.hpp"
#include "tug/error.hpp"
#include "tug/lexicon.hpp"
#include "tug/llm.hpp"
#include "tug/random.hpp"
#include "tug/scoring.hpp"

namespace tug::simgen {

inline constexpr double kMinTemperature = 0.05;
inline constexpr double kMaxTemperature = 5.0;
inline constexpr int kBuckets = 5;
inline constexpr std::size_t kRoundsPerSession = scoring::kRoundsPerSession;

struct AgentParams {
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

/// Picks `quota` words one at a time without replacement, each draw from a
/// softmax over cosine(word, keyword) / temperature among the remaining words.
inline std::vector<std::string> simulate_agent_selection(const lexicon::RoundSpec& spec,
                                                         const embeddings::EmbeddingTable& table,
                                                         const AgentParams& params) {
  if (!(params.temperature >= kMinTemperature && params.temperature <= kMaxTemperature)) {
    throw Error(ErrorCode::invalid_argument, "agent temperature must be in [0.05, 5.0]");
  }
  if (!lexicon::valid_quota(spec.quota) || static_cast<std::size_t>(spec.quota) > spec.matrix.size()) {
    throw Error(ErrorCode::quota_violation, "quota must be 3, 4 or 5 and fit the matrix");
  }
  embeddings::require_words(table, spec.matrix);
  const auto kw = table.at(spec.keyword);
  std::vector<std::string> remaining = spec.matrix;
  std::vector<double> logits;
  logits.reserve(remaining.size());
  for (const auto& w : remaining) logits.push_back(embeddings::cosine(table.at(w), kw) / params.temperature);

  Rng rng(params.seed);
  std::vector<std::string> chosen;
  std::vector<double> weights(remaining.size());
  for (int k = 0; k < spec.quota; ++k) {
    const double top = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    weights.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) sum += weights[i] = std::exp(logits[i] - top);
    double u = rng.uniform() * sum;
    std::size_t pick = logits.size() - 1;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) {
        pick = i;
        break;
      }
    }
    chosen.push_back(remaining[pick]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    logits.erase(logits.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

enum class Scorer { llm, oracle };

inline std::string_view to_string(Scorer s) { return s == Scorer::llm ? "llm" : "oracle"; }

inline Scorer parse_scorer(std::string_view s) {
  if (s == "llm") return Scorer::llm;
  if (s == "oracle") return Scorer::oracle;
  throw Error(ErrorCode::invalid_argument, "scorer must be 'llm' or 'oracle'");
}

/// Offline judge. Both selection means are centered on the mean of the round's
/// 20-word matrix, so the score reflects which part of the matrix each player
/// leaned toward: (cos(mean(A) - m, mean(B) - m) + 1) / 2.
inline double score_round_oracle(const lexicon::RoundSpec& spec, const std::vector<std::string>& sel_a,
                                 const std::vector<std::string>& sel_b, const embeddings::EmbeddingTable& table) {
  if (std::set<std::string>(sel_a.begin(), sel_a.end()) == std::set<std::string>(sel_b.begin(), sel_b.end())) {
    embeddings::require_words(table, sel_a);
    return 1.0;
  }
  const auto center = embeddings::mean_vector(spec.matrix, table);
  auto a = embeddings::mean_vector(sel_a, table);
  auto b = embeddings::mean_vector(sel_b, table);
  for (std::size_t i = 0; i < center.size(); ++i) {
    a[i] -= center[i];
    b[i] -= center[i];
  }
  // a selection whose mean sits on the matrix mean has no direction
  double scale = 0.0;
  for (const auto& w : spec.matrix) scale = std::max(scale, embeddings::norm(table.at(w)));
  const double tiny = 1e-12 * scale;
  if (embeddings::norm(a) <= tiny || embeddings::norm(b) <= tiny) return 0.5;
  return (embeddings::cosine(a, b) + 1.0) / 2.0;
}

struct ScoredRound {
  std::uint64_t round_id = 0;
  lexicon::RoundSpec spec;
  std::vector<std::string> sel_a;
  std::vector<std::string> sel_b;
  double score = 0.0;
  Scorer scorer = Scorer::oracle;
  double temperature_a = 0.0;
  double temperature_b = 0.0;

  bool operator==(const ScoredRound&) const = default;
};

struct SimulationConfig {
  double min_temperature = kMinTemperature;
  double max_temperature = kMaxTemperature;
};

/// Log-uniform draw; both agents draw independently so compatible (low/low),
/// diffuse (high/high) and mismatched pairs all occur.
inline double draw_temperature(Rng& rng, const SimulationConfig& cfg) {
  return std::exp(rng.uniform(std::log(cfg.min_temperature), std::log(cfg.max_temperature)));
}

/// Round `index` of the stream seeded by `seed`; independent of every other
/// index, so streams can be extended or split without changing earlier rounds.
inline ScoredRound simulate_round(const std::vector<lexicon::Theme>& themes, const embeddings::EmbeddingTable& table,
                                  std::uint64_t seed, std::uint64_t index, const SimulationConfig& cfg = {}) {
  std::vector<const lexicon::Theme*> playable;
  for (const auto& t : themes) {
    if (t.size() >= lexicon::kSampleSize) playable.push_back(&t);
  }
  if (playable.empty()) throw Error(ErrorCode::insufficient_words, "no theme has at least 21 words");
  Rng rng(derive_seed(seed, index));
  const auto& theme = *playable[rng.below(playable.size())];
  ScoredRound r;
  r.round_id = index;
  r.spec = lexicon::build_round_spec(theme, table, rng);
  r.temperature_a = draw_temperature(rng, cfg);
  r.temperature_b = draw_temperature(rng, cfg);
  r.sel_a = simulate_agent_selection(r.spec, table, {r.temperature_a, rng.next()});
  r.sel_b = simulate_agent_selection(r.spec, table, {r.temperature_b, rng.next()});
  r.score = score_round_oracle(r.spec, r.sel_a, r.sel_b, table);
  r.scorer = Scorer::oracle;
  return r;
}

inline std::vector<ScoredRound> simulate_rounds(const std::vector<lexicon::Theme>& themes,
                                                const embeddings::EmbeddingTable& table, std::size_t n,
                                                std::uint64_t seed, const SimulationConfig& cfg = {}) {
  std::vector<ScoredRound> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(simulate_round(themes, table, seed, i, cfg));
  return out;
}

/// Replaces oracle scores with judge scores; rounds the judge could not score
/// are dropped.
inline std::vector<ScoredRound> rescore_with_llm(std::vector<ScoredRound> rounds, llm::Transport& transport,
                                                 int concurrency = 4, const llm::RetryPolicy& retry = {}) {
  std::vector<llm::RoundToJudge> requests;
  requests.reserve(rounds.size());
  for (const auto& r : rounds) requests.push_back({r.spec.theme, r.spec.keyword, r.sel_a, r.sel_b});
  auto scores = llm::score_rounds_llm(requests, transport, concurrency, retry);
  std::vector<ScoredRound> out;
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    if (!scores[i]) continue;
    rounds[i].score = *scores[i];
    rounds[i].scorer = Scorer::llm;
    out.push_back(std::move(rounds[i]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Session assembly

inline int bucket_of(double score) {
  return std::clamp(static_cast<int>(std::floor(score * kBuckets)), 0, kBuckets - 1);
}

inline std::string bucket_label(int b) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "[%.1f, %.1f%s", b / static_cast<double>(kBuckets),
                (b + 1) / static_cast<double>(kBuckets), b == kBuckets - 1 ? "]" : ")");
  return buf;
}

/// Rounds each bucket must supply for `n_pairs` sessions cycling over buckets.
inline std::array<std::size_t, kBuckets> rounds_needed(std::size_t n_pairs) {
  std::array<std::size_t, kBuckets> need{};
  for (std::size_t i = 0; i < n_pairs; ++i) need[i % kBuckets] += kRoundsPerSession;
  return need;
}

struct SyntheticSession {
  std::string pair_id;
  std::vector<ScoredRound> rounds;
  double session_score = 0.0;
};

/// Partitions rounds into 5 equal-width score buckets over [0, 1]. Session i
/// takes 10 rounds, without replacement, from bucket i mod 5; its score is the
/// mean of its round scores.
inline std::vector<SyntheticSession> assemble_sessions(const std::vector<ScoredRound>& rounds, std::size_t n_pairs,
                                                       std::uint64_t seed) {
  std::array<std::vector<std::size_t>, kBuckets> buckets;
  for (std::size_t i = 0; i < rounds.size(); ++i) {
    if (!(rounds[i].score >= 0.0 && rounds[i].score <= 1.0)) {
      throw Error(ErrorCode::invalid_argument, "round score outside [0,1]");
    }
    buckets[static_cast<std::size_t>(bucket_of(rounds[i].score))].push_back(i);
  }
  const auto need = rounds_needed(n_pairs);
  for (int b = 0; b < kBuckets; ++b) {
    if (buckets[static_cast<std::size_t>(b)].size() < need[static_cast<std::size_t>(b)]) {
      throw Error(ErrorCode::insufficient_rounds,
                  "bucket " + bucket_label(b) + " has " + std::to_string(buckets[static_cast<std::size_t>(b)].size()) +
                      " rounds, " + std::to_string(need[static_cast<std::size_t>(b)]) + " needed");
    }
  }
  Rng rng(seed);
  for (auto& bucket : buckets) rng.shuffle(bucket.begin(), bucket.end());

  std::array<std::size_t, kBuckets> cursor{};
  std::vector<SyntheticSession> sessions;
  sessions.reserve(n_pairs);
  const std::size_t width = std::max<std::size_t>(4, std::to_string(n_pairs).size());
  for (std::size_t i = 0; i < n_pairs; ++i) {
    const auto b = i % kBuckets;
    SyntheticSession s;
    auto digits = std::to_string(i + 1);
    s.pair_id = "pair-" + std::string(width - std::min(digits.size(), width), '0') + digits;
    double sum = 0.0;
    for (std::size_t k = 0; k < kRoundsPerSession; ++k) {
      const auto& r = rounds[buckets[b][cursor[b]++]];
      sum += r.score;
      s.rounds.push_back(r);
    }
    s.session_score = sum / static_cast<double>(kRoundsPerSession);
    sessions.push_back(std::move(s));
  }
  return sessions;
}

/// Simulates rounds (oracle-scored) until every bucket can feed `n_pairs`
/// sessions, or throws insufficient_rounds once `max_rounds` is reached.
inline std::vector<ScoredRound> simulate_for_assembly(const std::vector<lexicon::Theme>& themes,
                                                      const embeddings::EmbeddingTable& table, std::size_t n_pairs,
                                                      std::uint64_t seed, std::size_t max_rounds,
                                                      const SimulationConfig& cfg = {}) {
  const auto need = rounds_needed(n_pairs);
  std::array<std::size_t, kBuckets> have{};
  std::vector<ScoredRound> out;
  auto satisfied = [&] {
    for (int b = 0; b < kBuckets; ++b) {
      if (have[static_cast<std::size_t>(b)] < need[static_cast<std::size_t>(b)]) return false;
    }
    return true;
  };
  for (std::uint64_t i = 0; !satisfied(); ++i) {
    if (out.size() >= max_rounds) {
      throw Error(ErrorCode::insufficient_rounds,
                  "simulated " + std::to_string(max_rounds) + " rounds without filling every score bucket");
    }
    out.push_back(simulate_round(themes, table, seed, i, cfg));
    ++have[static_cast<std::size_t>(bucket_of(out.back().score))];
  }
  return out;
}

inline datastore::LabeledPair to_labeled_pair(const SyntheticSession& s) {
  datastore::LabeledPair p;
  p.pair_id = s.pair_id;
  p.label = s.session_score;
  p.label_source = s.rounds.empty() || s.rounds.front().scorer == Scorer::oracle ? datastore::LabelSource::oracle
                                                                                 : datastore::LabelSource::llm;
  for (const auto& r : s.rounds) {
    p.rounds.push_back(datastore::PairRound{r.spec.theme, r.spec.keyword, r.spec.quota, r.sel_a, r.sel_b});
  }
  return p;
}

/// Session log form of a synthetic session (players are synthetic ids), so the
/// export path can consume simulated play like real play.
inline datastore::SessionLogRecord to_session_log(const SyntheticSession& s) {
  datastore::SessionLogRecord rec;
  rec.session_id = s.pair_id;
  rec.players = {s.pair_id + "-a", s.pair_id + "-b"};
  int streak = 0;
  std::vector<scoring::RoundScore> scores;
  for (std::size_t i = 0; i < s.rounds.size(); ++i) {
    const auto& r = s.rounds[i];
    const std::set<std::string> a(r.sel_a.begin(), r.sel_a.end());
    const std::set<std::string> b(r.sel_b.begin(), r.sel_b.end());
    auto score = scoring::score_round(a, b, r.spec.quota, streak);
    streak = score.streak_len_after;
    datastore::RoundLog log;
    log.round_no = static_cast<int>(i) + 1;
    log.theme = r.spec.theme;
    log.keyword = r.spec.keyword;
    log.quota = r.spec.quota;
    log.matrix = r.spec.matrix;
    log.sel_a = r.sel_a;
    log.sel_b = r.sel_b;
    log.matched.assign(score.matched_words.begin(), score.matched_words.end());
    log.wcmr_num = score.wcmr.num;
    log.points = score.points;
    log.streak = score.streak_len_after;
    log.bonus = score.bonus_awarded;
    log.score = r.score;
    log.scorer = std::string(to_string(r.scorer));
    rec.rounds.push_back(std::move(log));
    scores.push_back(std::move(score));
  }
  rec.total = scoring::session_total(scores);
  rec.completed = s.rounds.size() == kRoundsPerSession;
  return rec;
}

// Scored-round file: one JSON object per line.

inline nlohmann::json to_json(const ScoredRound& r) {
  return nlohmann::json{{"v", datastore::kSchemaVersion},
                        {"round_id", r.round_id},
                        {"theme", r.spec.theme},
                        {"keyword", r.spec.keyword},
                        {"matrix", r.spec.matrix},
                        {"quota", r.spec.quota},
                        {"sel_a", r.sel_a},
                        {"sel_b", r.sel_b},
                        {"score", r.score},
                        {"scorer", to_string(r.scorer)},
                        {"temperature_a", r.temperature_a},
                        {"temperature_b", r.temperature_b}};
}

inline ScoredRound scored_round_from_json(const nlohmann::json& j) {
  using datastore::detail::field;
  datastore::detail::check_version(j);
  ScoredRound r;
  r.round_id = field<std::uint64_t>(j, "round_id");
  r.spec.theme = field<std::string>(j, "theme");
  r.spec.keyword = field<std::string>(j, "keyword");
  r.spec.matrix = field<std::vector<std::string>>(j, "matrix");
  r.spec.quota = field<int>(j, "quota");
  r.sel_a = field<std::vector<std::string>>(j, "sel_a");
  r.sel_b = field<std::vector<std::string>>(j, "sel_b");
  r.score = field<double>(j, "score");
  r.scorer = parse_scorer(field<std::string>(j, "scorer"));
  r.temperature_a = field<double>(j, "temperature_a");
  r.temperature_b = field<double>(j, "temperature_b");
  lexicon::validate(r.spec);
  if (r.sel_a.size() != static_cast<std::size_t>(r.spec.quota) || r.sel_b.size() != static_cast<std::size_t>(r.spec.quota)) {
    throw Error(ErrorCode::schema_violation, "selection size differs from quota");
  }
  if (!(r.score >= 0.0 && r.score <= 1.0)) throw Error(ErrorCode::schema_violation, "score outside [0,1]");
  return r;
}

inline void write_rounds(const std::vector<ScoredRound>& rounds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path + " for writing");
  for (const auto& r : rounds) out << to_json(r).dump() << '\n';
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path);
}

inline std::vector<ScoredRound> read_rounds(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::io_error, "rounds file not found: " + path);
  std::vector<ScoredRound> out;
  std::size_t n = 0;
  for (const auto& line : datastore::read_lines(path)) {
    ++n;
    try {
      out.push_back(scored_round_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::parse_error, path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace tug::simgen
