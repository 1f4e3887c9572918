#pragma once

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tug/error.hpp"

namespace tug::llm {

inline constexpr const char* kPromptVersion = "round_scoring_v1";

// Few-shot judge header. Must stay byte-identical to
// data/prompts/round_scoring_v1.txt.
inline constexpr std::string_view kRoundScoringPrompt = R"PROMPT(Two players were shown the same keyword and asked to select a few words that they associate most strongly with that keyword. Based on how similarly they interpret and relate to the keyword, rate their compatibility on a scale from 0.0 to 1.0, where:

- 1.0 = Their choices reflect very similar thinking or emotional framing — as if they share a mental model or perspective.
- 0.0 = Their choices suggest very different associations or understandings — little overlap in thought or tone.
- Values in between reflect partial similarity or moderate overlap in their thinking.

Avoid over-rewarding exact word matches. Instead, consider the underlying concepts, emotional tone, or shared associations reflected in the chosen words.
Example 1
Keyword: "adventure"
Player 1 Choices: ["explore", "voyage", "map", "treasure"]
Player 2 Choices: ["sail", "pirate", "treasure", "ruins"]
Score: 0.82
Why: Both players imagine a classic treasure hunt scenario — shared metaphor, even with different words.
Example 2
Keyword: "freedom"
Player 1 Choices: ["liberty", "wilderness", "unbound"]
Player 2 Choices: ["justice", "equality", "dignity"]
Score: 0.55
Why: Both relate to freedom but from different angles — one personal/spatial, the other political/social.
Example 3
Keyword: "technology"
Player 1 Choices: ["robot", "AI", "automation"]
Player 2 Choices: ["nature", "soul", "intuition"]
Score: 0.10
Why: These choices reflect very different worldviews — one mechanistic, the other humanistic.

Now evaluate the following:
)PROMPT";

struct RoundToJudge {
  std::string theme;
  std::string keyword;
  std::vector<std::string> sel_a;
  std::vector<std::string> sel_b;
};

namespace detail {
inline std::string quoted_list(const std::vector<std::string>& words) {
  std::string out = "[";
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ", ";
    out += '"' + words[i] + '"';
  }
  return out + "]";
}
}  // namespace detail

/// The fixed header followed by the round, laid out like the worked examples.
inline std::string build_prompt(const RoundToJudge& r) {
  std::string p(kRoundScoringPrompt);
  p += "Theme: " + r.theme + "\n";
  p += "Keyword: \"" + r.keyword + "\"\n";
  p += "Player 1 Choices: " + detail::quoted_list(r.sel_a) + "\n";
  p += "Player 2 Choices: " + detail::quoted_list(r.sel_b) + "\n";
  p += "Score:";
  return p;
}

/// First decimal number in the reply, clamped to [0, 1].
inline double parse_score(const std::string& reply) {
  static const std::regex number(R"([-+]?(\d+(\.\d*)?|\.\d+))");
  std::smatch m;
  if (!std::regex_search(reply, m, number)) {
    throw Error(ErrorCode::unparseable_reply, "no number in judge reply: " + reply.substr(0, 80));
  }
  const double v = std::stod(m.str());
  return std::clamp(v, 0.0, 1.0);
}

/// Sends a prompt, returns the raw text reply. Throws transport_error.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

struct HttpConfig {
  std::string endpoint;  // e.g. http://localhost:8080/v1/complete
  std::string model;
  std::string api_key;
  int timeout_seconds = 30;
};

/// POSTs `{"model": ..., "prompt": ...}`. Accepts either a JSON object with a
/// `text` (or `reply`) field or a plain-text body.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(HttpConfig cfg) : cfg_(std::move(cfg)) {
    static const std::regex url(R"((https?://[^/]+)(/.*)?)");
    std::smatch m;
    if (!std::regex_match(cfg_.endpoint, m, url)) {
      throw Error(ErrorCode::invalid_argument, "LLM endpoint must look like http://host[:port]/path");
    }
    base_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
  }

  std::string complete(const std::string& prompt) override {
    httplib::Client client(base_);
    client.set_connection_timeout(cfg_.timeout_seconds);
    client.set_read_timeout(cfg_.timeout_seconds);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    const nlohmann::json body = {{"model", cfg_.model}, {"prompt", prompt}};
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::transport_error, "LLM request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw Error(ErrorCode::transport_error, "LLM endpoint returned HTTP " + std::to_string(res->status));
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_object()) {
      for (const char* key : {"text", "reply"}) {
        if (parsed.contains(key) && parsed[key].is_string()) return parsed[key].get<std::string>();
      }
    }
    return res->body;
  }

 private:
  HttpConfig cfg_;
  std::string base_;
  std::string path_;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
};

/// Judges one round. Transport failures are retried with exponential backoff;
/// an unparseable reply is not retried.
inline double score_round_llm(const RoundToJudge& round, Transport& transport, const RetryPolicy& retry = {}) {
  const auto prompt = build_prompt(round);
  auto backoff = retry.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return parse_score(transport.complete(prompt));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::transport_error || attempt >= retry.attempts) {
        if (e.code() == ErrorCode::transport_error) {
          throw Error(ErrorCode::transport_error,
                      "giving up after " + std::to_string(attempt) + " attempts: " + e.what());
        }
        throw;
      }
    }
    std::this_thread::sleep_for(backoff);
    backoff *= 2;
  }
}

/// Scores many rounds with at most `concurrency` requests in flight. Rounds
/// whose reply cannot be parsed, or whose transport keeps failing, come back
/// as nullopt.
inline std::vector<std::optional<double>> score_rounds_llm(std::span<const RoundToJudge> rounds, Transport& transport,
                                                           int concurrency = 4, const RetryPolicy& retry = {}) {
  std::vector<std::optional<double>> out(rounds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < rounds.size(); i = next++) {
      try {
        out[i] = score_round_llm(rounds[i], transport, retry);
      } catch (const Error&) {
        out[i] = std::nullopt;
      }
    }
  };
  const int n = std::max(1, std::min<int>(concurrency, static_cast<int>(rounds.size())));
  std::vector<std::thread> pool;
  for (int i = 0; i < n; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace tug::llm
