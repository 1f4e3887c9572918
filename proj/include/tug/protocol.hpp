#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tug/error.hpp"
#include "tug/scoring.hpp"
#include "tug/session.hpp"

// Wire protocol: one JSON object per text frame, always carrying `type` and `v`.
namespace tug::protocol {

using json = nlohmann::json;

inline constexpr int kVersion = 1;
inline constexpr std::size_t kMaxFrameBytes = 64 * 1024;

// Client -> server

struct JoinQueue {
  std::optional<std::string> alias;
};
struct JoinTag {
  std::string tag;
  std::optional<std::string> alias;
};
struct SubmitSelection {
  std::string session_id;
  int round_no = 0;
  std::vector<std::string> words;
};
struct ShareWord {
  std::string session_id;
  int round_no = 0;
  std::optional<std::string> word;
};
struct Feedback {
  int ui_clarity = 0;
  int fairness = 0;
  int flow = 0;
  std::optional<std::string> comment;
};
struct Questionnaire {
  std::string kind;  // "urcs" | "bfi"
  std::string session_id;
  std::vector<int> items;
};
struct LeaderboardRequest {
  int n = 10;
};

using ClientMessage =
    std::variant<JoinQueue, JoinTag, SubmitSelection, ShareWord, Feedback, Questionnaire, LeaderboardRequest>;

namespace detail {

[[noreturn]] inline void bad(const std::string& why) { throw Error(ErrorCode::bad_message, why); }

template <class T>
T get(const json& j, const char* key) {
  if (!j.contains(key)) bad(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    bad(std::string("field '") + key + "' has the wrong type");
  }
}

inline std::optional<std::string> get_opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) bad(std::string("field '") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline ClientMessage parse_client(const std::string& frame) {
  using detail::bad;
  using detail::get;
  if (frame.size() > kMaxFrameBytes) bad("frame too large");
  auto j = json::parse(frame, nullptr, false);
  if (j.is_discarded() || !j.is_object()) bad("frame is not a JSON object");
  if (!j.contains("v") || !j["v"].is_number_integer() || j["v"].get<int>() != kVersion) bad("unsupported protocol version");
  const auto type = get<std::string>(j, "type");
  if (type == "join_queue") return JoinQueue{detail::get_opt_string(j, "alias")};
  if (type == "join_tag") return JoinTag{get<std::string>(j, "tag"), detail::get_opt_string(j, "alias")};
  if (type == "submit_selection") {
    return SubmitSelection{get<std::string>(j, "session_id"), get<int>(j, "round_no"),
                           get<std::vector<std::string>>(j, "words")};
  }
  if (type == "share_word") {
    return ShareWord{get<std::string>(j, "session_id"), get<int>(j, "round_no"), detail::get_opt_string(j, "word")};
  }
  if (type == "feedback") {
    const auto r = get<json>(j, "ratings");
    if (!r.is_object()) bad("ratings must be an object");
    return Feedback{get<int>(r, "ui_clarity"), get<int>(r, "fairness"), get<int>(r, "flow"),
                    detail::get_opt_string(j, "comment")};
  }
  if (type == "questionnaire") {
    return Questionnaire{get<std::string>(j, "kind"), get<std::string>(j, "session_id"), get<std::vector<int>>(j, "items")};
  }
  if (type == "leaderboard") return LeaderboardRequest{j.contains("n") ? get<int>(j, "n") : 10};
  bad("unknown message type '" + type + "'");
}

inline json envelope(const char* type) { return json{{"type", type}, {"v", kVersion}}; }

inline std::string encode(const ClientMessage& m) {
  json j;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, JoinQueue>) {
          j = envelope("join_queue");
          if (x.alias) j["alias"] = *x.alias;
        } else if constexpr (std::is_same_v<T, JoinTag>) {
          j = envelope("join_tag");
          j["tag"] = x.tag;
          if (x.alias) j["alias"] = *x.alias;
        } else if constexpr (std::is_same_v<T, SubmitSelection>) {
          j = envelope("submit_selection");
          j["session_id"] = x.session_id;
          j["round_no"] = x.round_no;
          j["words"] = x.words;
        } else if constexpr (std::is_same_v<T, ShareWord>) {
          j = envelope("share_word");
          j["session_id"] = x.session_id;
          j["round_no"] = x.round_no;
          j["word"] = x.word ? json(*x.word) : json(nullptr);
        } else if constexpr (std::is_same_v<T, Feedback>) {
          j = envelope("feedback");
          j["ratings"] = {{"ui_clarity", x.ui_clarity}, {"fairness", x.fairness}, {"flow", x.flow}};
          if (x.comment) j["comment"] = *x.comment;
        } else if constexpr (std::is_same_v<T, Questionnaire>) {
          j = envelope("questionnaire");
          j["kind"] = x.kind;
          j["session_id"] = x.session_id;
          j["items"] = x.items;
        } else {
          j = envelope("leaderboard");
          j["n"] = x.n;
        }
      },
      m);
  return j.dump();
}

// Server -> client

struct LeaderboardRow {
  std::string alias;
  int best_session_total = 0;
  std::string session_id;
  std::int64_t completed_at = 0;  // ms since epoch
};

inline std::string paired(const std::string& session_id, const std::string& partner_alias) {
  auto j = envelope("paired");
  j["session_id"] = session_id;
  j["partner_alias"] = partner_alias;
  return j.dump();
}

inline std::string round_started(const session::RoundStarted& e) {
  auto j = envelope("round_started");
  j["round_no"] = e.round_no;
  j["theme"] = e.theme;
  j["keyword"] = e.keyword;
  j["matrix"] = e.matrix;
  j["quota"] = e.quota;
  return j.dump();
}

inline std::string round_result(const session::RoundResult& e) {
  auto j = envelope("round_result");
  j["round_no"] = e.round_no;
  j["matched"] = std::vector<std::string>(e.matched.begin(), e.matched.end());
  j["wcmr"] = e.wcmr.value();
  j["points"] = e.points;
  j["streak"] = e.streak;
  j["bonus"] = e.bonus;
  j["total"] = e.total;
  return j.dump();
}

inline std::string word_shared(const std::string& word) {
  auto j = envelope("word_shared");
  j["word"] = word;
  return j.dump();
}

inline std::string session_completed(int total, std::optional<int> rank) {
  auto j = envelope("session_completed");
  j["total"] = total;
  if (rank) j["leaderboard_rank"] = *rank;
  return j.dump();
}

inline std::string session_abandoned(session::AbandonReason reason) {
  auto j = envelope("session_abandoned");
  j["reason"] = std::string(session::to_string(reason));
  return j.dump();
}

inline std::string error(ErrorCode code, const std::string& message) {
  auto j = envelope("error");
  j["code"] = std::string(to_string(code));
  j["message"] = message;
  return j.dump();
}

inline json to_json(const LeaderboardRow& r) {
  return {{"alias", r.alias},
          {"best_session_total", r.best_session_total},
          {"session_id", r.session_id},
          {"completed_at", r.completed_at}};
}

inline std::string leaderboard(const std::vector<LeaderboardRow>& rows) {
  auto j = envelope("leaderboard");
  j["entries"] = json::array();
  for (const auto& r : rows) j["entries"].push_back(to_json(r));
  return j.dump();
}

/// Parses a server frame back into JSON after checking the envelope.
inline json parse_server(const std::string& frame) {
  auto j = json::parse(frame, nullptr, false);
  if (j.is_discarded() || !j.is_object()) detail::bad("frame is not a JSON object");
  if (!j.contains("type") || !j["type"].is_string()) detail::bad("frame has no type");
  if (!j.contains("v") || j["v"] != kVersion) detail::bad("unsupported protocol version");
  return j;
}

}  // namespace tug::protocol
