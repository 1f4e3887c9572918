#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tug/assessments.hpp"
#include "tug/error.hpp"
#include "tug/scoring.hpp"
#include "tug/session.hpp"

namespace tug::datastore {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Session logs

struct RoundLog {
  int round_no = 0;
  std::string theme;
  std::string keyword;
  int quota = 0;
  std::vector<std::string> matrix;
  std::vector<std::string> sel_a;  // players[0]
  std::vector<std::string> sel_b;  // players[1]
  std::vector<std::string> matched;
  int wcmr_num = 0;
  int points = 0;
  int streak = 0;
  int bonus = 0;
  std::optional<std::string> shared_a;
  std::optional<std::string> shared_b;
  // Synthetic rounds carry the judge's score.
  std::optional<double> score;
  std::optional<std::string> scorer;

  bool operator==(const RoundLog&) const = default;
};

struct SessionLogRecord {
  std::string session_id;
  std::array<std::string, 2> players;
  std::vector<RoundLog> rounds;
  int total = 0;
  bool completed = false;
  std::optional<std::string> abandon_reason;
  std::int64_t started_at_ms = 0;
  std::int64_t ended_at_ms = 0;

  bool operator==(const SessionLogRecord&) const = default;
};

namespace detail {
inline json opt(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(ErrorCode::schema_violation, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::schema_violation, std::string("bad field '") + key + "': " + e.what());
  }
}

inline std::optional<std::string> opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return field<std::string>(j, key);
}

inline void check_version(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::schema_violation, "record is not an object");
  if (field<int>(j, "v") != kSchemaVersion) throw Error(ErrorCode::schema_violation, "unsupported schema version");
}

inline void check_keys(const json& j, const std::set<std::string>& allowed, const char* what) {
  for (const auto& [k, _] : j.items()) {
    if (!allowed.count(k)) throw Error(ErrorCode::schema_violation, std::string("unknown field '") + k + "' in " + what);
  }
}
}  // namespace detail

// Field whitelists. Nothing here identifies a person: player ids are random
// tokens minted at login and aliases never enter the logs.
inline const std::set<std::string> kSessionFields = {"v",     "type",      "session_id",     "players",
                                                     "rounds", "total",    "completed",      "abandon_reason",
                                                     "started_at_ms", "ended_at_ms"};
inline const std::set<std::string> kRoundFields = {"round_no", "theme",  "keyword",  "quota",    "matrix",
                                                   "sel_a",    "sel_b",  "matched",  "wcmr",     "points",
                                                   "streak",   "bonus",  "shared_a", "shared_b", "score",
                                                   "scorer"};
inline const std::set<std::string> kFeedbackFields = {"v", "type", "player_id", "ratings", "comment", "at_ms"};
inline const std::set<std::string> kQuestionnaireFields = {"v",     "type",  "player_id", "session_id",
                                                           "kind",  "items", "at_ms"};

inline json to_json(const RoundLog& r) {
  json j = {{"round_no", r.round_no}, {"theme", r.theme},     {"keyword", r.keyword}, {"quota", r.quota},
            {"matrix", r.matrix},     {"sel_a", r.sel_a},     {"sel_b", r.sel_b},     {"matched", r.matched},
            {"wcmr", json::array({r.wcmr_num, r.quota})},     {"points", r.points},   {"streak", r.streak},
            {"bonus", r.bonus},       {"shared_a", detail::opt(r.shared_a)},          {"shared_b", detail::opt(r.shared_b)}};
  if (r.score) j["score"] = *r.score;
  if (r.scorer) j["scorer"] = *r.scorer;
  return j;
}

inline RoundLog round_from_json(const json& j) {
  detail::check_keys(j, kRoundFields, "round");
  RoundLog r;
  r.round_no = detail::field<int>(j, "round_no");
  r.theme = detail::field<std::string>(j, "theme");
  r.keyword = detail::field<std::string>(j, "keyword");
  r.quota = detail::field<int>(j, "quota");
  r.matrix = detail::field<std::vector<std::string>>(j, "matrix");
  r.sel_a = detail::field<std::vector<std::string>>(j, "sel_a");
  r.sel_b = detail::field<std::vector<std::string>>(j, "sel_b");
  r.matched = detail::field<std::vector<std::string>>(j, "matched");
  auto w = detail::field<std::vector<int>>(j, "wcmr");
  if (w.size() != 2 || w[1] != r.quota) throw Error(ErrorCode::schema_violation, "wcmr must be [matched, quota]");
  r.wcmr_num = w[0];
  r.points = detail::field<int>(j, "points");
  r.streak = detail::field<int>(j, "streak");
  r.bonus = detail::field<int>(j, "bonus");
  r.shared_a = detail::opt_string(j, "shared_a");
  r.shared_b = detail::opt_string(j, "shared_b");
  if (j.contains("score")) r.score = detail::field<double>(j, "score");
  r.scorer = detail::opt_string(j, "scorer");
  return r;
}

/// Structural checks; does not replay scores (see replay_check).
inline void validate(const SessionLogRecord& rec) {
  if (rec.session_id.empty()) throw Error(ErrorCode::schema_violation, "empty session_id");
  if (rec.players[0].empty() || rec.players[1].empty() || rec.players[0] == rec.players[1]) {
    throw Error(ErrorCode::schema_violation, "a session has exactly two distinct players");
  }
  if (rec.rounds.size() > scoring::kRoundsPerSession) {
    throw Error(ErrorCode::schema_violation, "session has " + std::to_string(rec.rounds.size()) + " rounds, max 10");
  }
  if (rec.completed && rec.rounds.size() != scoring::kRoundsPerSession) {
    throw Error(ErrorCode::schema_violation, "completed session must have exactly 10 rounds");
  }
  if (rec.completed && rec.abandon_reason) throw Error(ErrorCode::schema_violation, "completed session has abandon reason");
  for (std::size_t i = 0; i < rec.rounds.size(); ++i) {
    const auto& r = rec.rounds[i];
    if (r.round_no != static_cast<int>(i) + 1) throw Error(ErrorCode::schema_violation, "round numbers must run 1..n");
    if (!lexicon::valid_quota(r.quota)) throw Error(ErrorCode::schema_violation, "quota must be 3, 4 or 5");
    if (r.sel_a.size() != static_cast<std::size_t>(r.quota) || r.sel_b.size() != static_cast<std::size_t>(r.quota)) {
      throw Error(ErrorCode::schema_violation, "selection size differs from quota in round " + std::to_string(r.round_no));
    }
    if (r.score && !(*r.score >= 0.0 && *r.score <= 1.0)) {
      throw Error(ErrorCode::schema_violation, "round score outside [0,1]");
    }
  }
}

inline json to_json(const SessionLogRecord& rec) {
  json rounds = json::array();
  for (const auto& r : rec.rounds) rounds.push_back(to_json(r));
  return json{{"v", kSchemaVersion},
              {"type", "session"},
              {"session_id", rec.session_id},
              {"players", rec.players},
              {"rounds", rounds},
              {"total", rec.total},
              {"completed", rec.completed},
              {"abandon_reason", detail::opt(rec.abandon_reason)},
              {"started_at_ms", rec.started_at_ms},
              {"ended_at_ms", rec.ended_at_ms}};
}

inline SessionLogRecord session_from_json(const json& j) {
  detail::check_version(j);
  detail::check_keys(j, kSessionFields, "session");
  SessionLogRecord rec;
  rec.session_id = detail::field<std::string>(j, "session_id");
  auto players = detail::field<std::vector<std::string>>(j, "players");
  if (players.size() != 2) throw Error(ErrorCode::schema_violation, "players must hold two ids");
  rec.players = {players[0], players[1]};
  for (const auto& r : detail::field<json>(j, "rounds")) rec.rounds.push_back(round_from_json(r));
  rec.total = detail::field<int>(j, "total");
  rec.completed = detail::field<bool>(j, "completed");
  rec.abandon_reason = detail::opt_string(j, "abandon_reason");
  rec.started_at_ms = detail::field<std::int64_t>(j, "started_at_ms");
  rec.ended_at_ms = detail::field<std::int64_t>(j, "ended_at_ms");
  validate(rec);
  return rec;
}

inline SessionLogRecord make_session_log(const session::Session& s, std::int64_t started_at_ms,
                                         std::int64_t ended_at_ms) {
  SessionLogRecord rec;
  rec.session_id = s.id();
  rec.players = s.players();
  for (const auto& r : s.rounds()) {
    RoundLog log;
    log.round_no = r.round_no;
    log.theme = r.spec.theme;
    log.keyword = r.spec.keyword;
    log.quota = r.spec.quota;
    log.matrix = r.spec.matrix;
    const auto& a = r.selections.at(rec.players[0]);
    const auto& b = r.selections.at(rec.players[1]);
    log.sel_a.assign(a.begin(), a.end());
    log.sel_b.assign(b.begin(), b.end());
    log.matched.assign(r.score.matched_words.begin(), r.score.matched_words.end());
    log.wcmr_num = r.score.wcmr.num;
    log.points = r.score.points;
    log.streak = r.score.streak_len_after;
    log.bonus = r.score.bonus_awarded;
    if (auto it = r.shared.find(rec.players[0]); it != r.shared.end()) log.shared_a = it->second;
    if (auto it = r.shared.find(rec.players[1]); it != r.shared.end()) log.shared_b = it->second;
    rec.rounds.push_back(std::move(log));
  }
  rec.total = s.total();
  rec.completed = s.state() == session::State::Completed;
  if (auto reason = s.abandon_reason()) rec.abandon_reason = std::string(session::to_string(*reason));
  rec.started_at_ms = started_at_ms;
  rec.ended_at_ms = ended_at_ms;
  return rec;
}

/// Recomputes every round from the raw selections and returns the session
/// total. Throws schema_violation if any stored value disagrees.
inline int replay_check(const SessionLogRecord& rec) {
  std::vector<scoring::RoundScore> scores;
  int streak = 0;
  for (const auto& r : rec.rounds) {
    std::set<std::string> a(r.sel_a.begin(), r.sel_a.end());
    std::set<std::string> b(r.sel_b.begin(), r.sel_b.end());
    auto s = scoring::score_round(a, b, r.quota, streak);
    streak = s.streak_len_after;
    const std::set<std::string> stored_matched(r.matched.begin(), r.matched.end());
    if (s.matched_words != stored_matched || s.wcmr.num != r.wcmr_num || s.points != r.points ||
        s.bonus_awarded != r.bonus || s.streak_len_after != r.streak) {
      throw Error(ErrorCode::schema_violation,
                  "session " + rec.session_id + " round " + std::to_string(r.round_no) + " does not replay");
    }
    scores.push_back(std::move(s));
  }
  const int total = scoring::session_total(scores);
  if (total != rec.total) {
    throw Error(ErrorCode::schema_violation, "session " + rec.session_id + " total " + std::to_string(rec.total) +
                                                 " does not match replayed " + std::to_string(total));
  }
  return total;
}

// ---------------------------------------------------------------------------
// Feedback and questionnaires

struct FeedbackRecord {
  std::string player_id;
  int ui_clarity = 0;
  int fairness = 0;
  int flow = 0;
  std::optional<std::string> comment;
  std::int64_t at_ms = 0;

  bool operator==(const FeedbackRecord&) const = default;
};

inline void validate(const FeedbackRecord& f) {
  if (f.player_id.empty()) throw Error(ErrorCode::schema_violation, "feedback without player id");
  for (int r : {f.ui_clarity, f.fairness, f.flow}) {
    if (r < 1 || r > 5) throw Error(ErrorCode::out_of_range, "feedback ratings must be in 1..5");
  }
}

inline json to_json(const FeedbackRecord& f) {
  return json{{"v", kSchemaVersion},
              {"type", "feedback"},
              {"player_id", f.player_id},
              {"ratings", {{"ui_clarity", f.ui_clarity}, {"fairness", f.fairness}, {"flow", f.flow}}},
              {"comment", detail::opt(f.comment)},
              {"at_ms", f.at_ms}};
}

inline FeedbackRecord feedback_from_json(const json& j) {
  detail::check_version(j);
  detail::check_keys(j, kFeedbackFields, "feedback");
  FeedbackRecord f;
  f.player_id = detail::field<std::string>(j, "player_id");
  const auto ratings = detail::field<json>(j, "ratings");
  f.ui_clarity = detail::field<int>(ratings, "ui_clarity");
  f.fairness = detail::field<int>(ratings, "fairness");
  f.flow = detail::field<int>(ratings, "flow");
  f.comment = detail::opt_string(j, "comment");
  f.at_ms = detail::field<std::int64_t>(j, "at_ms");
  validate(f);
  return f;
}

enum class QuestionnaireKind { urcs, bfi };

struct QuestionnaireRecord {
  std::string player_id;
  std::string session_id;
  QuestionnaireKind kind = QuestionnaireKind::urcs;
  std::vector<int> items;
  std::int64_t at_ms = 0;

  bool operator==(const QuestionnaireRecord&) const = default;
};

inline std::string_view to_string(QuestionnaireKind k) { return k == QuestionnaireKind::urcs ? "urcs" : "bfi"; }

inline QuestionnaireKind parse_questionnaire_kind(std::string_view s) {
  if (s == "urcs") return QuestionnaireKind::urcs;
  if (s == "bfi") return QuestionnaireKind::bfi;
  throw Error(ErrorCode::schema_violation, "questionnaire kind must be 'urcs' or 'bfi'");
}

inline void validate(const QuestionnaireRecord& q) {
  if (q.player_id.empty() || q.session_id.empty()) {
    throw Error(ErrorCode::schema_violation, "questionnaire needs player and session ids");
  }
  if (q.kind == QuestionnaireKind::urcs) {
    (void)assessments::URCSResponse(q.items);
  } else {
    (void)assessments::BFIResponse(q.items);
  }
}

inline json to_json(const QuestionnaireRecord& q) {
  return json{{"v", kSchemaVersion},       {"type", "questionnaire"},        {"player_id", q.player_id},
              {"session_id", q.session_id}, {"kind", to_string(q.kind)},     {"items", q.items},
              {"at_ms", q.at_ms}};
}

inline QuestionnaireRecord questionnaire_from_json(const json& j) {
  detail::check_version(j);
  detail::check_keys(j, kQuestionnaireFields, "questionnaire");
  QuestionnaireRecord q;
  q.player_id = detail::field<std::string>(j, "player_id");
  q.session_id = detail::field<std::string>(j, "session_id");
  q.kind = parse_questionnaire_kind(detail::field<std::string>(j, "kind"));
  q.items = detail::field<std::vector<int>>(j, "items");
  q.at_ms = detail::field<std::int64_t>(j, "at_ms");
  validate(q);
  return q;
}

// ---------------------------------------------------------------------------
// Append-only log directory: one JSON object per line, one file per record type.

inline constexpr const char* kSessionsFile = "sessions.jsonl";
inline constexpr const char* kFeedbackFile = "feedback.jsonl";
inline constexpr const char* kQuestionnairesFile = "questionnaires.jsonl";

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path, std::ios::binary);
  if (!in) return lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

class LogStore {
 public:
  explicit LogStore(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot create log dir " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path& dir() const noexcept { return dir_; }

  /// Each append returns the byte offset the record starts at.
  std::uint64_t append(const SessionLogRecord& rec) {
    validate(rec);
    return append_line(kSessionsFile, to_json(rec).dump());
  }
  std::uint64_t append(const FeedbackRecord& rec) {
    validate(rec);
    return append_line(kFeedbackFile, to_json(rec).dump());
  }
  std::uint64_t append(const QuestionnaireRecord& rec) {
    validate(rec);
    return append_line(kQuestionnairesFile, to_json(rec).dump());
  }

  std::vector<SessionLogRecord> sessions() const { return parse_all(kSessionsFile, session_from_json); }
  std::vector<FeedbackRecord> feedback() const { return parse_all(kFeedbackFile, feedback_from_json); }
  std::vector<QuestionnaireRecord> questionnaires() const {
    return parse_all(kQuestionnairesFile, questionnaire_from_json);
  }

 private:
  std::uint64_t append_line(const char* file, const std::string& line) {
    std::lock_guard lock(mutex_);
    const auto path = dir_ / file;
    std::error_code ec;
    const std::uint64_t offset = std::filesystem::exists(path, ec) ? std::filesystem::file_size(path, ec) : 0;
    std::ofstream out(path, std::ios::binary | std::ios::app);
    out << line << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::io_error, "append failed for " + path.string());
    return offset;
  }

  template <typename F>
  auto parse_all(const char* file, F parse) const -> std::vector<decltype(parse(json{}))> {
    std::vector<decltype(parse(json{}))> out;
    std::size_t n = 0;
    for (const auto& line : read_lines(dir_ / file)) {
      ++n;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string(file) + ":" + std::to_string(n) + ": " + e.what());
      }
      out.push_back(parse(j));
    }
    return out;
  }

  std::filesystem::path dir_;
  std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Training dataset

enum class LabelSource { urcs, llm, oracle };

inline std::string_view to_string(LabelSource s) {
  switch (s) {
    case LabelSource::urcs: return "urcs";
    case LabelSource::llm: return "llm";
    case LabelSource::oracle: return "oracle";
  }
  return "unknown";
}

inline LabelSource parse_label_source(std::string_view s) {
  if (s == "urcs") return LabelSource::urcs;
  if (s == "llm") return LabelSource::llm;
  if (s == "oracle") return LabelSource::oracle;
  throw Error(ErrorCode::invalid_argument, "label source must be urcs, llm or oracle");
}

struct PairRound {
  std::string theme;
  std::string keyword;
  int quota = 0;
  std::vector<std::string> sel_a;
  std::vector<std::string> sel_b;

  bool operator==(const PairRound&) const = default;
};

struct LabeledPair {
  std::string pair_id;
  std::vector<PairRound> rounds;
  double label = 0.0;
  LabelSource label_source = LabelSource::oracle;

  bool operator==(const LabeledPair&) const = default;
};

inline void validate(const LabeledPair& p) {
  if (p.rounds.size() != scoring::kRoundsPerSession) {
    throw Error(ErrorCode::schema_violation, "pair " + p.pair_id + " must have exactly 10 rounds");
  }
  if (!(p.label >= 0.0 && p.label <= 1.0)) throw Error(ErrorCode::schema_violation, "label outside [0,1]");
}

inline json to_json(const LabeledPair& p) {
  json rounds = json::array();
  for (const auto& r : p.rounds) {
    rounds.push_back({{"theme", r.theme}, {"keyword", r.keyword}, {"quota", r.quota}, {"sel_a", r.sel_a},
                      {"sel_b", r.sel_b}});
  }
  return json{{"v", kSchemaVersion},
              {"pair_id", p.pair_id},
              {"label", p.label},
              {"label_source", to_string(p.label_source)},
              {"rounds", rounds}};
}

inline LabeledPair pair_from_json(const json& j) {
  detail::check_version(j);
  LabeledPair p;
  p.pair_id = detail::field<std::string>(j, "pair_id");
  p.label = detail::field<double>(j, "label");
  p.label_source = parse_label_source(detail::field<std::string>(j, "label_source"));
  for (const auto& r : detail::field<json>(j, "rounds")) {
    PairRound pr;
    pr.theme = detail::field<std::string>(r, "theme");
    pr.keyword = detail::field<std::string>(r, "keyword");
    pr.quota = detail::field<int>(r, "quota");
    pr.sel_a = detail::field<std::vector<std::string>>(r, "sel_a");
    pr.sel_b = detail::field<std::vector<std::string>>(r, "sel_b");
    p.rounds.push_back(std::move(pr));
  }
  validate(p);
  return p;
}

inline void write_dataset(const std::vector<LabeledPair>& pairs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot open " + path + " for writing");
  for (const auto& p : pairs) {
    validate(p);
    out << to_json(p).dump() << '\n';
  }
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path);
}

inline std::vector<LabeledPair> read_dataset(const std::string& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::io_error, "dataset not found: " + path);
  std::vector<LabeledPair> out;
  std::size_t n = 0;
  for (const auto& line : read_lines(path)) {
    ++n;
    try {
      out.push_back(pair_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::parse_error, path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

/// Exports completed sessions as labeled pairs. Under `urcs` the label is the
/// mean of the partners' URCS scores; under `llm`/`oracle` it is the mean of
/// the per-round judge scores. Sessions without a usable label are skipped and
/// reported through `warnings`.
inline std::vector<LabeledPair> export_training_set(const LogStore& store, LabelSource policy,
                                                    std::vector<std::string>* warnings = nullptr) {
  auto warn = [&](const std::string& w) {
    if (warnings) warnings->push_back(w);
  };
  std::map<std::string, std::vector<assessments::URCSResponse>> urcs;
  if (policy == LabelSource::urcs) {
    for (const auto& q : store.questionnaires()) {
      if (q.kind == QuestionnaireKind::urcs) urcs[q.session_id].emplace_back(q.items);
    }
  }
  std::vector<LabeledPair> out;
  for (const auto& rec : store.sessions()) {
    if (!rec.completed) continue;
    replay_check(rec);
    LabeledPair p;
    p.pair_id = rec.session_id;
    p.label_source = policy;
    for (const auto& r : rec.rounds) p.rounds.push_back(PairRound{r.theme, r.keyword, r.quota, r.sel_a, r.sel_b});
    if (policy == LabelSource::urcs) {
      auto it = urcs.find(rec.session_id);
      if (it == urcs.end()) {
        warn("session " + rec.session_id + " has no URCS questionnaire; skipped");
        continue;
      }
      p.label = assessments::pair_label(it->second);
    } else {
      double sum = 0.0;
      bool ok = true;
      for (const auto& r : rec.rounds) {
        if (!r.score || r.scorer != to_string(policy)) {
          ok = false;
          break;
        }
        sum += *r.score;
      }
      if (!ok) {
        warn("session " + rec.session_id + " lacks " + std::string(to_string(policy)) + " round scores; skipped");
        continue;
      }
      p.label = sum / static_cast<double>(rec.rounds.size());
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace tug::datastore
