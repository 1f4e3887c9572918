#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <shared_mutex>
#include <string>
#include <variant>
#include <vector>

#include "tug/datastore.hpp"
#include "tug/error.hpp"
#include "tug/protocol.hpp"
#include "tug/random.hpp"
#include "tug/session.hpp"

namespace tug::lobby {

using session::PlayerId;
using session::SessionId;

inline constexpr std::size_t kMaxTagLength = 64;

struct LobbyConfig {
  std::int64_t selection_timeout_ms = 120'000;
  std::int64_t share_timeout_ms = 60'000;
  std::int64_t queue_eviction_ms = 600'000;
  std::optional<std::uint64_t> seed;  // unset: seeded from std::random_device
};

/// A frame addressed to one player.
struct Outgoing {
  PlayerId to;
  std::string frame;
};
using Outbox = std::vector<Outgoing>;

struct LeaderboardEntry {
  PlayerId player;
  std::string alias;
  int best_session_total = 0;
  SessionId session_id;
  std::int64_t completed_at = 0;
};

inline std::string hex_token(Rng& rng) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (int half = 0; half < 2; ++half) {
    auto x = rng.next();
    for (int i = 0; i < 16; ++i, x >>= 4) out.push_back(digits[x & 0xF]);
  }
  return out;
}

/// Best completed session per player; ties go to the earlier completion.
class Leaderboard {
 public:
  void record(const PlayerId& player, const std::string& alias, int total, const SessionId& session,
              std::int64_t completed_at) {
    std::unique_lock lock(mutex_);
    auto it = best_.find(player);
    if (it == best_.end() || total > it->second.best_session_total) {
      best_[player] = LeaderboardEntry{player, alias, total, session, completed_at};
    }
  }

  std::vector<LeaderboardEntry> top(std::size_t n) const {
    if (n < 1) throw Error(ErrorCode::invalid_argument, "leaderboard size must be at least 1");
    auto all = sorted();
    if (all.size() > n) all.resize(n);
    return all;
  }

  /// 1-based competition rank of the player's entry, if any. Partners in
  /// one session share a rank.
  std::optional<int> rank_of(const PlayerId& player) const {
    std::shared_lock lock(mutex_);
    auto it = best_.find(player);
    if (it == best_.end()) return std::nullopt;
    const auto& me = it->second;
    int ahead = 0;
    for (const auto& [_, e] : best_) {
      if (e.best_session_total > me.best_session_total ||
          (e.best_session_total == me.best_session_total && e.completed_at < me.completed_at)) {
        ++ahead;
      }
    }
    return ahead + 1;
  }

  bool contains_session(const SessionId& id) const {
    std::shared_lock lock(mutex_);
    return std::any_of(best_.begin(), best_.end(), [&](const auto& kv) { return kv.second.session_id == id; });
  }

 private:
  std::vector<LeaderboardEntry> sorted() const {
    std::vector<LeaderboardEntry> all;
    {
      std::shared_lock lock(mutex_);
      for (const auto& [_, e] : best_) all.push_back(e);
    }
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      if (a.best_session_total != b.best_session_total) return a.best_session_total > b.best_session_total;
      if (a.completed_at != b.completed_at) return a.completed_at < b.completed_at;
      if (a.session_id != b.session_id) return a.session_id < b.session_id;
      return a.player < b.player;
    });
    return all;
  }

  mutable std::shared_mutex mutex_;
  std::map<PlayerId, LeaderboardEntry> best_;
};

/// Matchmaking and live-session registry. Every public call is thread safe.
/// Lock order: a session's mutex may be held while taking the lobby mutex,
/// never the reverse.
class Lobby {
 public:
  Lobby(std::shared_ptr<const session::GameContent> content, LobbyConfig cfg = {},
        datastore::LogStore* store = nullptr)
      : content_(std::move(content)), cfg_(cfg), store_(store), rng_(initial_seed(cfg)) {}

  /// Mints an anonymous player token for a new connection.
  PlayerId connect(const std::string& alias = "player") {
    std::lock_guard lock(mutex_);
    PlayerId id;
    do {
      id = hex_token(rng_);
    } while (players_.count(id));
    players_[id].alias = alias.empty() ? "player" : alias;
    return id;
  }

  Outbox disconnect(const PlayerId& player, std::int64_t now) {
    std::shared_ptr<Live> live;
    {
      std::lock_guard lock(mutex_);
      auto it = players_.find(player);
      if (it == players_.end()) return {};
      remove_waiter(player, it->second);
      if (it->second.session) live = sessions_.at(*it->second.session);
    }
    Outbox out;
    if (live) {
      std::lock_guard slock(live->mutex);
      if (!live->session.finished()) finish(*live, live->session.abandon(session::AbandonReason::disconnect), now, out);
    }
    std::lock_guard lock(mutex_);
    players_.erase(player);
    return out;
  }

  Outbox join_queue(const PlayerId& player, std::int64_t now, const std::optional<std::string>& alias = std::nullopt) {
    std::lock_guard lock(mutex_);
    auto& info = require_player(player);
    if (alias && !alias->empty()) info.alias = *alias;
    require_idle(info);
    while (!queue_.empty() && !players_.count(queue_.front())) queue_.pop_front();
    if (queue_.empty()) {
      queue_.push_back(player);
      info.queued = true;
      info.waiting_since = now;
      return {};
    }
    const PlayerId first = queue_.front();
    queue_.pop_front();
    players_[first].queued = false;
    return pair_up(first, player, now);
  }

  Outbox join_tag(const PlayerId& player, const std::string& tag, std::int64_t now,
                  const std::optional<std::string>& alias = std::nullopt) {
    if (tag.empty() || tag.size() > kMaxTagLength) {
      throw Error(ErrorCode::invalid_tag, "tag must be 1 to 64 characters");
    }
    std::lock_guard lock(mutex_);
    auto& info = require_player(player);
    if (alias && !alias->empty()) info.alias = *alias;
    if (info.tag && *info.tag == tag) throw Error(ErrorCode::tag_occupied_by_self, "you are already waiting on tag '" + tag + "'");
    require_idle(info);
    auto it = tags_.find(tag);
    if (it == tags_.end()) {
      tags_[tag] = player;
      info.tag = tag;
      info.waiting_since = now;
      return {};
    }
    const PlayerId first = it->second;
    tags_.erase(it);
    players_[first].tag.reset();
    return pair_up(first, player, now);
  }

  Outbox submit_selection(const PlayerId& player, const SessionId& sid, int round_no,
                          const std::vector<std::string>& words, std::int64_t now) {
    auto live = session_for(player, sid);
    std::lock_guard slock(live->mutex);
    if (live->session.finished()) throw Error(ErrorCode::wrong_state, "session has ended");
    if (round_no != live->session.current_round()) {
      throw Error(ErrorCode::wrong_round, "round " + std::to_string(round_no) + " is not the current round");
    }
    Outbox out;
    auto events = live->session.submit_selection(player, words);
    if (!events.empty()) live->phase_started = now;
    dispatch(*live, events, now, out);
    return out;
  }

  Outbox share_word(const PlayerId& player, const SessionId& sid, int round_no,
                    const std::optional<std::string>& word, std::int64_t now) {
    auto live = session_for(player, sid);
    std::lock_guard slock(live->mutex);
    if (live->session.finished()) throw Error(ErrorCode::wrong_state, "session has ended");
    if (live->session.rounds().empty() || round_no != live->session.rounds().back().round_no) {
      throw Error(ErrorCode::wrong_round, "round " + std::to_string(round_no) + " is not awaiting a share");
    }
    Outbox out;
    const int before = live->session.current_round();
    auto events = live->session.share_word(player, word);
    if (live->session.current_round() != before) live->phase_started = now;
    dispatch(*live, events, now, out);
    return out;
  }

  void submit_feedback(const PlayerId& player, int ui_clarity, int fairness, int flow,
                       const std::optional<std::string>& comment, std::int64_t now) {
    {
      std::lock_guard lock(mutex_);
      require_player(player);
    }
    datastore::FeedbackRecord rec{player, ui_clarity, fairness, flow, comment, now};
    datastore::validate(rec);
    if (store_) store_->append(rec);
    std::lock_guard lock(mutex_);
    feedback_.push_back(std::move(rec));
  }

  /// Questionnaires are accepted for sessions the player took part in.
  void submit_questionnaire(const PlayerId& player, const std::string& kind, const SessionId& sid,
                            const std::vector<int>& items, std::int64_t now) {
    {
      std::lock_guard lock(mutex_);
      auto& info = require_player(player);
      if (!info.history.count(sid) && info.session != sid) {
        throw Error(ErrorCode::unknown_session, "you did not play session " + sid);
      }
    }
    datastore::QuestionnaireRecord rec{player, sid, datastore::parse_questionnaire_kind(kind), items, now};
    datastore::validate(rec);
    if (store_) store_->append(rec);
    std::lock_guard lock(mutex_);
    questionnaires_.push_back(std::move(rec));
  }

  std::vector<LeaderboardEntry> leaderboard_top(std::size_t n) const { return leaderboard_.top(n); }

  std::string leaderboard_frame(std::size_t n) const {
    std::vector<protocol::LeaderboardRow> rows;
    for (const auto& e : leaderboard_.top(n)) rows.push_back({e.alias, e.best_session_total, e.session_id, e.completed_at});
    return protocol::leaderboard(rows);
  }

  /// Enforces phase timeouts and evicts stale waiters.
  Outbox tick(std::int64_t now) {
    std::vector<std::shared_ptr<Live>> live;
    Outbox out;
    {
      std::lock_guard lock(mutex_);
      for (const auto& [_, s] : sessions_) live.push_back(s);
      auto stale = [&](const PlayerId& p) { return now - players_[p].waiting_since >= cfg_.queue_eviction_ms; };
      for (auto it = queue_.begin(); it != queue_.end();) {
        if (players_.count(*it) && stale(*it)) {
          players_[*it].queued = false;
          out.push_back({*it, protocol::error(ErrorCode::queue_timeout, "no partner found; removed from the queue")});
          it = queue_.erase(it);
        } else {
          ++it;
        }
      }
      for (auto it = tags_.begin(); it != tags_.end();) {
        if (stale(it->second)) {
          players_[it->second].tag.reset();
          out.push_back({it->second, protocol::error(ErrorCode::queue_timeout, "no partner joined tag '" + it->first + "'")});
          it = tags_.erase(it);
        } else {
          ++it;
        }
      }
    }
    for (auto& l : live) {
      std::lock_guard slock(l->mutex);
      if (l->session.finished()) continue;
      const auto limit = l->session.state() == session::State::AwaitingSelections ? cfg_.selection_timeout_ms
                                                                                   : cfg_.share_timeout_ms;
      if (now - l->phase_started >= limit) finish(*l, l->session.abandon(session::AbandonReason::timeout), now, out);
    }
    return out;
  }

  /// Parses and applies one client frame. Failures become an error frame for
  /// the sender and never change state.
  Outbox handle(const PlayerId& player, const std::string& frame, std::int64_t now) {
    try {
      auto msg = protocol::parse_client(frame);
      return std::visit(
          [&](const auto& m) -> Outbox {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, protocol::JoinQueue>) {
              return join_queue(player, now, m.alias);
            } else if constexpr (std::is_same_v<T, protocol::JoinTag>) {
              return join_tag(player, m.tag, now, m.alias);
            } else if constexpr (std::is_same_v<T, protocol::SubmitSelection>) {
              return submit_selection(player, m.session_id, m.round_no, m.words, now);
            } else if constexpr (std::is_same_v<T, protocol::ShareWord>) {
              return share_word(player, m.session_id, m.round_no, m.word, now);
            } else if constexpr (std::is_same_v<T, protocol::Feedback>) {
              submit_feedback(player, m.ui_clarity, m.fairness, m.flow, m.comment, now);
              return {};
            } else if constexpr (std::is_same_v<T, protocol::Questionnaire>) {
              submit_questionnaire(player, m.kind, m.session_id, m.items, now);
              return {};
            } else {
              return {{player, leaderboard_frame(static_cast<std::size_t>(std::max(1, m.n)))}};
            }
          },
          msg);
    } catch (const Error& e) {
      return {{player, protocol::error(e.code(), e.what())}};
    }
  }

  // Introspection, mainly for tests and shutdown draining.

  std::size_t live_sessions() const {
    std::vector<std::shared_ptr<Live>> all;
    {
      std::lock_guard lock(mutex_);
      for (const auto& [_, s] : sessions_) all.push_back(s);
    }
    std::size_t n = 0;
    for (auto& l : all) {
      std::lock_guard slock(l->mutex);
      n += l->session.finished() ? 0 : 1;
    }
    return n;
  }

  std::size_t sessions_created() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
  }

  std::size_t queue_size() const {
    std::lock_guard lock(mutex_);
    return queue_.size();
  }

  std::size_t parked_tags() const {
    std::lock_guard lock(mutex_);
    return tags_.size();
  }

  std::optional<SessionId> session_of(const PlayerId& p) const {
    std::lock_guard lock(mutex_);
    auto it = players_.find(p);
    return it == players_.end() ? std::nullopt : it->second.session;
  }

  bool is_waiting(const PlayerId& p) const {
    std::lock_guard lock(mutex_);
    auto it = players_.find(p);
    return it != players_.end() && (it->second.queued || it->second.tag);
  }

  /// Snapshot copy of a session, if it exists.
  std::optional<session::Session> session_snapshot(const SessionId& id) const {
    std::shared_ptr<Live> live;
    {
      std::lock_guard lock(mutex_);
      auto it = sessions_.find(id);
      if (it == sessions_.end()) return std::nullopt;
      live = it->second;
    }
    std::lock_guard slock(live->mutex);
    return live->session;
  }

  std::vector<SessionId> session_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<SessionId> out;
    for (const auto& [id, _] : sessions_) out.push_back(id);
    return out;
  }

  std::vector<datastore::FeedbackRecord> feedback() const {
    std::lock_guard lock(mutex_);
    return feedback_;
  }

  std::vector<datastore::QuestionnaireRecord> questionnaires() const {
    std::lock_guard lock(mutex_);
    return questionnaires_;
  }

  const Leaderboard& leaderboard() const noexcept { return leaderboard_; }

 private:
  struct PlayerInfo {
    std::string alias = "player";
    bool queued = false;
    std::optional<std::string> tag;
    std::optional<SessionId> session;
    std::int64_t waiting_since = 0;
    std::set<SessionId> history;
  };

  struct Live {
    explicit Live(session::Session s) : session(std::move(s)) {}
    std::mutex mutex;
    session::Session session;
    std::int64_t started_at = 0;
    std::int64_t phase_started = 0;
    std::array<std::string, 2> aliases;
  };

  static std::uint64_t initial_seed(const LobbyConfig& cfg) {
    if (cfg.seed) return *cfg.seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }

  PlayerInfo& require_player(const PlayerId& p) {
    auto it = players_.find(p);
    if (it == players_.end()) throw Error(ErrorCode::unknown_player, "unknown player token");
    return it->second;
  }

  static void require_idle(const PlayerInfo& info) {
    if (info.session) throw Error(ErrorCode::already_in_session, "you are already in a session");
    if (info.queued || info.tag) throw Error(ErrorCode::already_queued, "you are already waiting for a partner");
  }

  void remove_waiter(const PlayerId& p, PlayerInfo& info) {
    if (info.queued) {
      queue_.erase(std::remove(queue_.begin(), queue_.end(), p), queue_.end());
      info.queued = false;
    }
    if (info.tag) {
      auto it = tags_.find(*info.tag);
      if (it != tags_.end() && it->second == p) tags_.erase(it);
      info.tag.reset();
    }
  }

  // Caller holds mutex_.
  Outbox pair_up(const PlayerId& a, const PlayerId& b, std::int64_t now) {
    SessionId sid;
    do {
      sid = "s-" + hex_token(rng_);
    } while (sessions_.count(sid));
    std::vector<session::Event> events;
    auto s = session::Session::start(sid, {a, b}, content_, rng_.next(), &events);
    auto live = std::make_shared<Live>(std::move(s));
    live->started_at = now;
    live->phase_started = now;
    live->aliases = {players_[a].alias, players_[b].alias};
    sessions_[sid] = live;
    players_[a].session = sid;
    players_[b].session = sid;
    Outbox out;
    out.push_back({a, protocol::paired(sid, live->aliases[1])});
    out.push_back({b, protocol::paired(sid, live->aliases[0])});
    for (const auto& e : events) {
      const auto& rs = std::get<session::RoundStarted>(e);
      out.push_back({rs.player, protocol::round_started(rs)});
    }
    return out;
  }

  std::shared_ptr<Live> session_for(const PlayerId& player, const SessionId& sid) {
    std::lock_guard lock(mutex_);
    auto& info = require_player(player);
    auto it = sessions_.find(sid);
    if (it == sessions_.end()) throw Error(ErrorCode::unknown_session, "no session " + sid);
    if (info.session != sid) throw Error(ErrorCode::not_in_session, "you are not playing session " + sid);
    return it->second;
  }

  // Caller holds live.mutex.
  void dispatch(Live& live, const std::vector<session::Event>& events, std::int64_t now, Outbox& out) {
    const auto& ps = live.session.players();
    for (const auto& e : events) {
      if (const auto* rs = std::get_if<session::RoundStarted>(&e)) {
        out.push_back({rs->player, protocol::round_started(*rs)});
      } else if (const auto* rr = std::get_if<session::RoundResult>(&e)) {
        const auto frame = protocol::round_result(*rr);
        out.push_back({ps[0], frame});
        out.push_back({ps[1], frame});
      } else if (const auto* ws = std::get_if<session::WordShared>(&e)) {
        out.push_back({ws->to, protocol::word_shared(ws->word)});
      } else {
        finish(live, {e}, now, out);
      }
    }
  }

  // Caller holds live.mutex; handles SessionCompleted / SessionAbandoned.
  void finish(Live& live, const std::vector<session::Event>& events, std::int64_t now, Outbox& out) {
    const auto& s = live.session;
    const auto& ps = s.players();
    if (s.state() == session::State::Completed) {
      for (std::size_t i = 0; i < 2; ++i) leaderboard_.record(ps[i], live.aliases[i], s.total(), s.id(), now);
    }
    if (store_) store_->append(datastore::make_session_log(s, live.started_at, now));
    for (const auto& e : events) {
      if (const auto* done = std::get_if<session::SessionCompleted>(&e)) {
        for (const auto& p : ps) out.push_back({p, protocol::session_completed(done->total, leaderboard_.rank_of(p))});
      } else if (const auto* ab = std::get_if<session::SessionAbandoned>(&e)) {
        for (const auto& p : ps) out.push_back({p, protocol::session_abandoned(ab->reason)});
      }
    }
    std::lock_guard lock(mutex_);
    for (const auto& p : ps) {
      auto it = players_.find(p);
      if (it == players_.end()) continue;
      if (it->second.session == s.id()) it->second.session.reset();
      it->second.history.insert(s.id());
    }
  }

  std::shared_ptr<const session::GameContent> content_;
  LobbyConfig cfg_;
  datastore::LogStore* store_;
  mutable std::mutex mutex_;
  Rng rng_;
  std::map<PlayerId, PlayerInfo> players_;
  std::deque<PlayerId> queue_;
  std::map<std::string, PlayerId> tags_;
  std::map<SessionId, std::shared_ptr<Live>> sessions_;
  Leaderboard leaderboard_;
  std::vector<datastore::FeedbackRecord> feedback_;
  std::vector<datastore::QuestionnaireRecord> questionnaires_;
};

}  // namespace tug::lobby
