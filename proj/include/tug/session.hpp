#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tug/embeddings.hpp"
#include "tug/error.hpp"
#include "tug/lexicon.hpp"
#include "tug/random.hpp"
#include "tug/scoring.hpp"

namespace tug::session {

using PlayerId = std::string;
using SessionId = std::string;

inline constexpr int kRounds = static_cast<int>(scoring::kRoundsPerSession);

enum class State { AwaitingSelections, RevealResult, ShareWord, Completed, Abandoned };
enum class AbandonReason { disconnect, timeout };

inline std::string_view to_string(State s) {
  switch (s) {
    case State::AwaitingSelections: return "awaiting_selections";
    case State::RevealResult: return "reveal_result";
    case State::ShareWord: return "share_word";
    case State::Completed: return "completed";
    case State::Abandoned: return "abandoned";
  }
  return "unknown";
}

inline std::string_view to_string(AbandonReason r) { return r == AbandonReason::disconnect ? "disconnect" : "timeout"; }

/// Themes (already difficulty-filtered) and the table used to pick keywords.
/// Shared read-only by every live session.
struct GameContent {
  std::vector<lexicon::Theme> themes;
  embeddings::EmbeddingTable table;

  /// Themes with enough words to build a round.
  std::vector<std::size_t> playable_themes() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < themes.size(); ++i) {
      if (themes[i].size() >= lexicon::kSampleSize) out.push_back(i);
    }
    return out;
  }
};

struct RoundRecord {
  int round_no = 0;
  lexicon::RoundSpec spec;
  std::map<PlayerId, std::set<std::string>> selections;
  scoring::RoundScore score;
  // One entry per player who has responded to the share step; nullopt = skipped.
  std::map<PlayerId, std::optional<std::string>> shared;

  bool operator==(const RoundRecord&) const = default;
};

// Domain events. RoundStarted is per player (each sees their own matrix order);
// the others go to both players unless noted.
struct RoundStarted {
  PlayerId player;
  int round_no = 0;
  std::string theme;
  std::string keyword;
  std::vector<std::string> matrix;
  int quota = 0;
};
struct RoundResult {
  int round_no = 0;
  std::set<std::string> matched;
  scoring::Fraction wcmr;
  int points = 0;
  int streak = 0;
  int bonus = 0;
  int total = 0;
};
struct WordShared {
  PlayerId from;
  PlayerId to;
  int round_no = 0;
  std::string word;
};
struct SessionCompleted {
  int total = 0;
};
struct SessionAbandoned {
  AbandonReason reason = AbandonReason::disconnect;
};

using Event = std::variant<RoundStarted, RoundResult, WordShared, SessionCompleted, SessionAbandoned>;

class Session {
 public:
  /// Creates the session and starts round 1. Ten distinct themes are drawn
  /// without replacement from the playable ones.
  static Session start(SessionId id, std::array<PlayerId, 2> players, std::shared_ptr<const GameContent> content,
                       std::uint64_t seed, std::vector<Event>* events = nullptr) {
    if (players[0] == players[1]) throw Error(ErrorCode::invalid_argument, "a session needs two distinct players");
    auto playable = content->playable_themes();
    if (playable.size() < static_cast<std::size_t>(kRounds)) {
      throw Error(ErrorCode::insufficient_words,
                  "need 10 themes with at least 21 words, have " + std::to_string(playable.size()));
    }
    Session s(std::move(id), std::move(players), std::move(content), seed);
    for (int i = 0; i < kRounds; ++i) {
      const auto j = static_cast<std::size_t>(i) + s.rng_.below(playable.size() - static_cast<std::size_t>(i));
      std::swap(playable[static_cast<std::size_t>(i)], playable[j]);
    }
    s.theme_order_.assign(playable.begin(), playable.begin() + kRounds);
    auto started = s.begin_round(1);
    if (events) events->insert(events->end(), started.begin(), started.end());
    return s;
  }

  std::vector<Event> submit_selection(const PlayerId& player, const std::vector<std::string>& words) {
    require_state({State::AwaitingSelections}, "submit_selection");
    const int idx = player_index(player);
    if (pending_[static_cast<std::size_t>(idx)]) {
      throw Error(ErrorCode::duplicate_submission, "selection already submitted for round " + std::to_string(current_round_));
    }
    std::set<std::string> chosen(words.begin(), words.end());
    if (chosen.size() != words.size() || chosen.size() != static_cast<std::size_t>(spec_.quota)) {
      throw Error(ErrorCode::wrong_quota, "select exactly " + std::to_string(spec_.quota) + " distinct words");
    }
    for (const auto& w : chosen) {
      if (std::find(spec_.matrix.begin(), spec_.matrix.end(), w) == spec_.matrix.end()) {
        throw Error(ErrorCode::word_not_in_matrix, "'" + w + "' is not in this round's matrix");
      }
    }
    pending_[static_cast<std::size_t>(idx)] = std::move(chosen);
    if (!pending_[0] || !pending_[1]) return {};

    RoundRecord rec;
    rec.round_no = current_round_;
    rec.spec = spec_;
    rec.score = scoring::score_round(*pending_[0], *pending_[1], spec_.quota, streak_);
    rec.selections[players_[0]] = std::move(*pending_[0]);
    rec.selections[players_[1]] = std::move(*pending_[1]);
    pending_ = {};
    streak_ = rec.score.streak_len_after;
    total_ += rec.score.points + rec.score.bonus_awarded;
    state_ = State::RevealResult;

    RoundResult result{rec.round_no, rec.score.matched_words, rec.score.wcmr, rec.score.points,
                       rec.score.streak_len_after, rec.score.bonus_awarded, total_};
    rounds_.push_back(std::move(rec));
    return {result};
  }

  /// `word` absent means the player skips sharing this round.
  std::vector<Event> share_word(const PlayerId& player, const std::optional<std::string>& word) {
    require_state({State::RevealResult, State::ShareWord}, "share_word");
    const int idx = player_index(player);
    RoundRecord& rec = rounds_.back();
    if (rec.shared.count(player)) {
      throw Error(ErrorCode::duplicate_submission, "share step already answered for round " + std::to_string(rec.round_no));
    }
    if (word) {
      const auto& sel = rec.selections.at(player);
      if (!sel.count(*word)) throw Error(ErrorCode::word_not_selected, "'" + *word + "' was not among your selections");
      if (rec.score.matched_words.count(*word)) {
        throw Error(ErrorCode::word_was_matched, "'" + *word + "' was matched; share an unmatched word");
      }
    }
    rec.shared[player] = word;
    std::vector<Event> events;
    if (word) events.push_back(WordShared{player, players_[static_cast<std::size_t>(1 - idx)], rec.round_no, *word});
    if (rec.shared.size() < 2) {
      state_ = State::ShareWord;
      return events;
    }
    if (current_round_ < kRounds) {
      auto started = begin_round(current_round_ + 1);
      events.insert(events.end(), started.begin(), started.end());
    } else {
      state_ = State::Completed;
      events.push_back(SessionCompleted{total_});
    }
    return events;
  }

  std::vector<Event> abandon(AbandonReason reason) {
    require_state({State::AwaitingSelections, State::RevealResult, State::ShareWord}, "abandon");
    state_ = State::Abandoned;
    abandon_reason_ = reason;
    pending_ = {};
    return {SessionAbandoned{reason}};
  }

  const SessionId& id() const noexcept { return id_; }
  const std::array<PlayerId, 2>& players() const noexcept { return players_; }
  State state() const noexcept { return state_; }
  int current_round() const noexcept { return current_round_; }
  const std::vector<RoundRecord>& rounds() const noexcept { return rounds_; }
  int streak() const noexcept { return streak_; }
  int total() const noexcept { return total_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::optional<AbandonReason> abandon_reason() const noexcept { return abandon_reason_; }
  const lexicon::RoundSpec& current_spec() const noexcept { return spec_; }
  bool finished() const noexcept { return state_ == State::Completed || state_ == State::Abandoned; }

  bool has_player(const PlayerId& p) const { return players_[0] == p || players_[1] == p; }

  const PlayerId& partner_of(const PlayerId& p) const { return players_[static_cast<std::size_t>(1 - player_index(p))]; }

  /// The shuffled matrix order this player sees in the current round.
  const std::vector<std::string>& view_of(const PlayerId& p) const {
    return views_[static_cast<std::size_t>(player_index(p))];
  }

  bool has_submitted(const PlayerId& p) const { return pending_[static_cast<std::size_t>(player_index(p))].has_value(); }

  bool operator==(const Session& o) const {
    return id_ == o.id_ && players_ == o.players_ && seed_ == o.seed_ && state_ == o.state_ &&
           current_round_ == o.current_round_ && rounds_ == o.rounds_ && streak_ == o.streak_ &&
           total_ == o.total_ && spec_ == o.spec_ && views_ == o.views_ && pending_ == o.pending_ &&
           theme_order_ == o.theme_order_ && abandon_reason_ == o.abandon_reason_;
  }

 private:
  Session(SessionId id, std::array<PlayerId, 2> players, std::shared_ptr<const GameContent> content,
          std::uint64_t seed)
      : id_(std::move(id)), players_(std::move(players)), content_(std::move(content)), seed_(seed), rng_(seed) {}

  int player_index(const PlayerId& p) const {
    if (players_[0] == p) return 0;
    if (players_[1] == p) return 1;
    throw Error(ErrorCode::not_in_session, "player is not part of session " + id_);
  }

  void require_state(std::initializer_list<State> allowed, std::string_view op) const {
    if (std::find(allowed.begin(), allowed.end(), state_) == allowed.end()) {
      throw Error(ErrorCode::wrong_state,
                  std::string(op) + " not allowed in state " + std::string(to_string(state_)));
    }
  }

  std::vector<Event> begin_round(int round_no) {
    const auto& theme = content_->themes[theme_order_[static_cast<std::size_t>(round_no - 1)]];
    Rng round_rng(derive_seed(seed_, static_cast<std::uint64_t>(round_no)));
    spec_ = lexicon::build_round_spec(theme, content_->table, round_rng);
    for (std::size_t i = 0; i < 2; ++i) {
      views_[i] = lexicon::shuffle_for_player(spec_, round_rng.next());
    }
    current_round_ = round_no;
    state_ = State::AwaitingSelections;
    std::vector<Event> events;
    for (std::size_t i = 0; i < 2; ++i) {
      events.push_back(RoundStarted{players_[i], round_no, spec_.theme, spec_.keyword, views_[i], spec_.quota});
    }
    return events;
  }

  SessionId id_;
  std::array<PlayerId, 2> players_;
  std::shared_ptr<const GameContent> content_;
  std::uint64_t seed_;
  Rng rng_;
  std::vector<std::size_t> theme_order_;
  State state_ = State::AwaitingSelections;
  int current_round_ = 0;
  lexicon::RoundSpec spec_;
  std::array<std::vector<std::string>, 2> views_;
  std::array<std::optional<std::set<std::string>>, 2> pending_;
  std::vector<RoundRecord> rounds_;
  int streak_ = 0;
  int total_ = 0;
  std::optional<AbandonReason> abandon_reason_;
};

}  // namespace tug::session
