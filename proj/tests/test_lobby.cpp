#include <set>
#include <thread>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tug/lobby.hpp"
#include "tug/protocol.hpp"

using namespace tug;
using namespace tug::lobby;
using nlohmann::json;

namespace {

LobbyConfig seeded(std::uint64_t seed = 1) {
  LobbyConfig cfg;
  cfg.seed = seed;
  return cfg;
}

std::vector<json> frames_for(const Outbox& out, const PlayerId& p) {
  std::vector<json> v;
  for (const auto& o : out) {
    if (o.to == p) v.push_back(protocol::parse_server(o.frame));
  }
  return v;
}

std::vector<std::string> types(const std::vector<json>& frames) {
  std::vector<std::string> t;
  for (const auto& f : frames) t.push_back(f["type"]);
  return t;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::invalid_argument;
}

// Plays the rest of a session with both players choosing the first `quota`
// canonical words, i.e. a full match every round.
Outbox play_out(Lobby& lob, const SessionId& sid, std::int64_t now) {
  Outbox all;
  for (;;) {
    auto s = lob.session_snapshot(sid);
    if (!s || s->finished()) break;
    const auto& spec = s->current_spec();
    const std::vector<std::string> w(spec.matrix.begin(), spec.matrix.begin() + spec.quota);
    const auto round = s->current_round();
    for (const auto& p : s->players()) {
      auto o = lob.submit_selection(p, sid, round, w, now);
      all.insert(all.end(), o.begin(), o.end());
    }
    for (const auto& p : s->players()) {
      auto o = lob.share_word(p, sid, round, std::nullopt, now);
      all.insert(all.end(), o.begin(), o.end());
    }
  }
  return all;
}

}  // namespace

TEST(Queue, FirstWaitsSecondPairs) {
  Lobby lob(fixtures::shipped_content(), seeded());
  const auto a = lob.connect("ann"), b = lob.connect("ben");
  EXPECT_NE(a, b);
  EXPECT_EQ(a.size(), 32u);  // 128-bit token
  EXPECT_TRUE(lob.join_queue(a, 0).empty());
  EXPECT_TRUE(lob.is_waiting(a));
  EXPECT_EQ(lob.queue_size(), 1u);
  const auto out = lob.join_queue(b, 1);
  EXPECT_EQ(types(frames_for(out, a)), (std::vector<std::string>{"paired", "round_started"}));
  EXPECT_EQ(types(frames_for(out, b)), (std::vector<std::string>{"paired", "round_started"}));
  EXPECT_EQ(frames_for(out, a)[0]["partner_alias"], "ben");
  EXPECT_EQ(frames_for(out, b)[0]["partner_alias"], "ann");
  EXPECT_EQ(frames_for(out, a)[1]["matrix"].size(), 20u);
  EXPECT_EQ(lob.queue_size(), 0u);
  EXPECT_EQ(lob.live_sessions(), 1u);
  EXPECT_EQ(lob.session_of(a), lob.session_of(b));
}

TEST(Queue, DoubleJoinRejected) {
  Lobby lob(fixtures::shipped_content(), seeded());
  const auto a = lob.connect(), b = lob.connect();
  lob.join_queue(a, 0);
  EXPECT_EQ(code_of([&] { lob.join_queue(a, 0); }), ErrorCode::already_queued);
  EXPECT_EQ(code_of([&] { lob.join_tag(a, "t", 0); }), ErrorCode::already_queued);
  lob.join_queue(b, 0);
  EXPECT_EQ(code_of([&] { lob.join_queue(a, 0); }), ErrorCode::already_in_session);
  EXPECT_EQ(code_of([&] { lob.join_queue("nobody", 0); }), ErrorCode::unknown_player);
}

TEST(Queue, IsFifo) {
  Lobby lob(fixtures::shipped_content(), seeded());
  std::vector<PlayerId> p;
  for (int i = 0; i < 4; ++i) p.push_back(lob.connect());
  lob.join_queue(p[0], 0);
  lob.join_queue(p[1], 0);
  lob.join_queue(p[2], 0);
  lob.join_queue(p[3], 0);
  EXPECT_EQ(lob.session_of(p[0]), lob.session_of(p[1]));
  EXPECT_EQ(lob.session_of(p[2]), lob.session_of(p[3]));
  EXPECT_NE(lob.session_of(p[0]), lob.session_of(p[2]));
}

TEST(Tags, SameTagPairsDifferentTagsWait) {
  Lobby lob(fixtures::shipped_content(), seeded());
  const auto a = lob.connect(), b = lob.connect(), c = lob.connect(), d = lob.connect();
  EXPECT_TRUE(lob.join_tag(a, "x", 0).empty());
  EXPECT_TRUE(lob.join_tag(b, "y", 0).empty());
  EXPECT_EQ(lob.parked_tags(), 2u);
  EXPECT_EQ(code_of([&] { lob.join_tag(a, "x", 0); }), ErrorCode::tag_occupied_by_self);
  lob.join_tag(c, "pizza", 0);
  EXPECT_FALSE(lob.join_tag(d, "pizza", 0).empty());
  EXPECT_EQ(lob.session_of(c), lob.session_of(d));
  EXPECT_FALSE(lob.session_of(a));
  // the consumed tag can be parked again
  const auto e = lob.connect();
  EXPECT_TRUE(lob.join_tag(e, "pizza", 0).empty());
  EXPECT_EQ(code_of([&] { lob.join_tag(e, "", 0); }), ErrorCode::invalid_tag);
  EXPECT_EQ(code_of([&] { lob.join_tag(lob.connect(), std::string(65, 't'), 0); }), ErrorCode::invalid_tag);
}

TEST(Tags, NeverMixWithQueue) {
  Lobby lob(fixtures::shipped_content(), seeded());
  const auto a = lob.connect(), b = lob.connect();
  lob.join_queue(a, 0);
  lob.join_tag(b, "t", 0);
  EXPECT_EQ(lob.sessions_created(), 0u);
}

TEST(Leaderboard, OrderingAndBestSession) {
  Leaderboard lb;
  EXPECT_TRUE(lb.top(10).empty());
  lb.record("p1", "one", 300, "s1", 10);
  lb.record("p2", "two", 500, "s2", 20);
  auto top = lb.top(10);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].best_session_total, 500);
  EXPECT_EQ(top[1].best_session_total, 300);

  lb.record("p3", "three", 200, "s3", 30);
  lb.record("p3", "three", 350, "s4", 40);
  lb.record("p3", "three", 100, "s5", 50);
  top = lb.top(10);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[1].player, "p3");
  EXPECT_EQ(top[1].best_session_total, 350);
  EXPECT_EQ(top[1].session_id, "s4");
  EXPECT_EQ(lb.top(1).size(), 1u);
  EXPECT_THROW(lb.top(0), Error);
}

TEST(Leaderboard, TiesGoToEarlierCompletion) {
  Leaderboard lb;
  lb.record("late", "l", 400, "s1", 99);
  lb.record("early", "e", 400, "s2", 5);
  EXPECT_EQ(lb.top(2)[0].player, "early");
  EXPECT_EQ(lb.rank_of("late"), 2);
  EXPECT_FALSE(lb.rank_of("ghost"));
  lb.record("p1", "a", 500, "s3", 50);
  lb.record("p2", "b", 500, "s3", 50);
  EXPECT_EQ(lb.rank_of("p1"), 1);
  EXPECT_EQ(lb.rank_of("p2"), 1);
  EXPECT_EQ(lb.rank_of("early"), 3);
  EXPECT_EQ(lb.top(4)[0].player, "p1");
}

TEST(Leaderboard, RankMatchesFirstEqualPositionInOrder) {
  Rng rng(12);
  Leaderboard lb;
  for (int i = 0; i < 200; ++i) {
    lb.record("p" + std::to_string(rng.below(60)), "x", static_cast<int>(rng.below(8)) * 50, "s" + std::to_string(i),
              static_cast<std::int64_t>(rng.below(5)));
  }
  const auto all = lb.top(1000);
  for (std::size_t i = 0; i < all.size(); ++i) {
    std::size_t first = i;
    while (first > 0 && all[first - 1].best_session_total == all[i].best_session_total &&
           all[first - 1].completed_at == all[i].completed_at) {
      --first;
    }
    EXPECT_EQ(lb.rank_of(all[i].player), static_cast<int>(first + 1));
  }
}

TEST(Lobby, FullSessionReachesLeaderboard) {
  fixtures::TempDir dir;
  datastore::LogStore store(dir.path());
  Lobby lob(fixtures::shipped_content(), seeded(3), &store);
  const auto a = lob.connect("ann"), b = lob.connect("ben");
  lob.join_queue(a, 0);
  lob.join_queue(b, 0);
  const auto sid = *lob.session_of(a);
  const auto out = play_out(lob, sid, 1000);
  const auto fa = frames_for(out, a);
  ASSERT_EQ(fa.back()["type"], "session_completed");
  const int total = fa.back()["total"];
  EXPECT_EQ(fa.back()["leaderboard_rank"], 1);
  EXPECT_EQ(frames_for(out, b).back()["leaderboard_rank"], 1);
  const auto top = lob.leaderboard_top(10);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].best_session_total, total);
  EXPECT_TRUE(lob.leaderboard().contains_session(sid));
  EXPECT_FALSE(lob.session_of(a));
  EXPECT_EQ(lob.live_sessions(), 0u);

  const auto logs = store.sessions();
  ASSERT_EQ(logs.size(), 1u);
  EXPECT_TRUE(logs[0].completed);
  EXPECT_EQ(datastore::replay_check(logs[0]), total);

  const auto board = protocol::parse_server(lob.leaderboard_frame(5));
  EXPECT_EQ(board["entries"].size(), 2u);
  const std::set<std::string> aliases{board["entries"][0]["alias"], board["entries"][1]["alias"]};
  EXPECT_EQ(aliases, (std::set<std::string>{"ann", "ben"}));

  // players may queue again after finishing
  EXPECT_TRUE(lob.join_queue(a, 2000).empty());
}

TEST(Lobby, DisconnectAbandonsAndSkipsLeaderboard) {
  fixtures::TempDir dir;
  datastore::LogStore store(dir.path());
  Lobby lob(fixtures::shipped_content(), seeded(4), &store);
  const auto a = lob.connect(), b = lob.connect();
  lob.join_queue(a, 0);
  lob.join_queue(b, 0);
  const auto sid = *lob.session_of(a);
  const auto out = lob.disconnect(a, 5);
  const auto fb = frames_for(out, b);
  ASSERT_EQ(fb.size(), 1u);
  EXPECT_EQ(fb[0]["type"], "session_abandoned");
  EXPECT_EQ(fb[0]["reason"], "disconnect");
  EXPECT_FALSE(lob.leaderboard().contains_session(sid));
  EXPECT_TRUE(lob.leaderboard_top(10).empty());
  ASSERT_EQ(store.sessions().size(), 1u);
  EXPECT_FALSE(store.sessions()[0].completed);
  EXPECT_EQ(code_of([&] { lob.submit_selection(b, sid, 1, {}, 6); }), ErrorCode::not_in_session);
}

TEST(Lobby, DisconnectWhileWaitingLeavesQueue) {
  Lobby lob(fixtures::shipped_content(), seeded());
  const auto a = lob.connect(), b = lob.connect(), c = lob.connect();
  lob.join_queue(a, 0);
  lob.join_tag(c, "t", 0);
  lob.disconnect(a, 1);
  lob.disconnect(c, 1);
  EXPECT_EQ(lob.queue_size(), 0u);
  EXPECT_EQ(lob.parked_tags(), 0u);
  EXPECT_TRUE(lob.join_queue(b, 2).empty());
}

TEST(Lobby, TimeoutsAbandonIdleSessions) {
  LobbyConfig cfg = seeded(5);
  cfg.selection_timeout_ms = 100;
  cfg.share_timeout_ms = 50;
  Lobby lob(fixtures::shipped_content(), cfg);
  const auto a = lob.connect(), b = lob.connect();
  lob.join_queue(a, 0);
  lob.join_queue(b, 0);
  EXPECT_TRUE(lob.tick(99).empty());
  const auto out = lob.tick(100);
  EXPECT_EQ(types(frames_for(out, a)), (std::vector<std::string>{"session_abandoned"}));
  EXPECT_EQ(frames_for(out, a)[0]["reason"], "timeout");
  EXPECT_EQ(lob.live_sessions(), 0u);
}

TEST(Lobby, StaleWaitersEvicted) {
  LobbyConfig cfg = seeded();
  cfg.queue_eviction_ms = 1000;
  Lobby lob(fixtures::shipped_content(), cfg);
  const auto a = lob.connect(), b = lob.connect();
  lob.join_queue(a, 0);
  lob.join_tag(b, "lonely", 500);
  EXPECT_TRUE(lob.tick(999).empty());
  auto out = lob.tick(1000);
  ASSERT_EQ(frames_for(out, a).size(), 1u);
  EXPECT_EQ(frames_for(out, a)[0]["code"], "queue_timeout");
  EXPECT_EQ(lob.queue_size(), 0u);
  EXPECT_EQ(lob.parked_tags(), 1u);
  out = lob.tick(1500);
  EXPECT_EQ(frames_for(out, b)[0]["code"], "queue_timeout");
  EXPECT_EQ(lob.parked_tags(), 0u);
}

TEST(Lobby, WrongRoundAndSession) {
  Lobby lob(fixtures::shipped_content(), seeded(6));
  const auto a = lob.connect(), b = lob.connect(), c = lob.connect();
  lob.join_queue(a, 0);
  lob.join_queue(b, 0);
  const auto sid = *lob.session_of(a);
  const auto spec = lob.session_snapshot(sid)->current_spec();
  const std::vector<std::string> w(spec.matrix.begin(), spec.matrix.begin() + spec.quota);
  EXPECT_EQ(code_of([&] { lob.submit_selection(a, sid, 2, w, 1); }), ErrorCode::wrong_round);
  EXPECT_EQ(code_of([&] { lob.submit_selection(a, "s-none", 1, w, 1); }), ErrorCode::unknown_session);
  EXPECT_EQ(code_of([&] { lob.submit_selection(c, sid, 1, w, 1); }), ErrorCode::not_in_session);
  EXPECT_EQ(code_of([&] { lob.share_word(a, sid, 1, std::nullopt, 1); }), ErrorCode::wrong_round);
}

TEST(Feedback, ValidatedAndStored) {
  fixtures::TempDir dir;
  datastore::LogStore store(dir.path());
  Lobby lob(fixtures::shipped_content(), seeded(), &store);
  const auto a = lob.connect();
  lob.submit_feedback(a, 5, 5, 5, std::nullopt, 1);
  EXPECT_EQ(code_of([&] { lob.submit_feedback(a, 6, 5, 5, std::nullopt, 1); }), ErrorCode::out_of_range);
  lob.submit_feedback(a, 2, 3, 4, std::string(500, 'c'), 2);
  ASSERT_EQ(store.feedback().size(), 2u);
  EXPECT_EQ(store.feedback()[1].comment->size(), 500u);
  EXPECT_FALSE(store.feedback()[0].comment);
  EXPECT_EQ(lob.feedback().size(), 2u);
}

TEST(Questionnaire, OnlyForOwnSessions) {
  Lobby lob(fixtures::shipped_content(), seeded(8));
  const auto a = lob.connect(), b = lob.connect(), c = lob.connect();
  lob.join_queue(a, 0);
  lob.join_queue(b, 0);
  const auto sid = *lob.session_of(a);
  play_out(lob, sid, 10);
  lob.submit_questionnaire(a, "urcs", sid, std::vector<int>(12, 4), 20);
  EXPECT_EQ(code_of([&] { lob.submit_questionnaire(c, "urcs", sid, std::vector<int>(12, 4), 20); }),
            ErrorCode::unknown_session);
  EXPECT_EQ(code_of([&] { lob.submit_questionnaire(b, "mood", sid, std::vector<int>(12, 4), 20); }),
            ErrorCode::schema_violation);
  EXPECT_EQ(code_of([&] { lob.submit_questionnaire(b, "bfi", sid, std::vector<int>(10, 9), 20); }),
            ErrorCode::out_of_range);
  EXPECT_EQ(lob.questionnaires().size(), 1u);
}

TEST(Lobby, ConcurrentJoinStormPairsExclusively) {
  for (int n : {2, 37, 200}) {
    Lobby lob(fixtures::shipped_content(), seeded(static_cast<std::uint64_t>(n)));
    std::vector<PlayerId> ids;
    for (int i = 0; i < n; ++i) ids.push_back(lob.connect());
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
      threads.emplace_back([&, t] {
        for (int i = t; i < n; i += 8) lob.join_queue(ids[static_cast<std::size_t>(i)], 0);
      });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(lob.sessions_created(), static_cast<std::size_t>(n / 2));
    EXPECT_EQ(lob.queue_size(), static_cast<std::size_t>(n % 2));
    std::set<PlayerId> seen;
    for (const auto& sid : lob.session_ids()) {
      const auto snap = lob.session_snapshot(sid);
      ASSERT_TRUE(snap);
      for (const auto& p : snap->players()) {
        EXPECT_TRUE(seen.insert(p).second) << p;
        EXPECT_FALSE(lob.is_waiting(p));
      }
    }
  }
}

TEST(Protocol, RoundTripsClientMessages) {
  using namespace protocol;
  const std::vector<ClientMessage> msgs = {
      JoinQueue{"ann"},
      JoinTag{"pizza", std::nullopt},
      SubmitSelection{"s-1", 3, {"a", "b", "c"}},
      ShareWord{"s-1", 3, std::nullopt},
      ShareWord{"s-1", 3, "b"},
      Feedback{5, 4, 3, "nice"},
      Questionnaire{"urcs", "s-1", std::vector<int>(12, 4)},
      LeaderboardRequest{5},
  };
  for (const auto& m : msgs) {
    const auto frame = encode(m);
    EXPECT_EQ(frame.find('\n'), std::string::npos);
    const auto j = json::parse(frame);
    EXPECT_EQ(j["v"], 1);
    EXPECT_EQ(encode(parse_client(frame)), frame);
  }
}

TEST(Protocol, RejectsMalformedFrames) {
  using namespace protocol;
  for (const std::string bad :
       {"", "[]", "not json", R"({"type":"join_queue"})", R"({"type":"join_queue","v":2})",
        R"({"type":"warp","v":1})", R"({"type":"join_tag","v":1})", R"({"type":"submit_selection","v":1,"session_id":"s","round_no":"one","words":[]})",
        R"({"type":"feedback","v":1,"ratings":5})"}) {
    try {
      parse_client(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::bad_message) << bad;
    }
  }
  EXPECT_THROW(parse_client(std::string(kMaxFrameBytes + 1, ' ')), Error);
}

TEST(Protocol, HandleTurnsErrorsIntoFrames) {
  Lobby lob(fixtures::shipped_content(), seeded());
  const auto a = lob.connect();
  auto out = lob.handle(a, "garbage", 0);
  ASSERT_EQ(out.size(), 1u);
  auto j = protocol::parse_server(out[0].frame);
  EXPECT_EQ(j["type"], "error");
  EXPECT_EQ(j["code"], "bad_message");
  out = lob.handle(a, protocol::encode(protocol::JoinQueue{}), 0);
  EXPECT_TRUE(out.empty());
  out = lob.handle(a, protocol::encode(protocol::JoinQueue{}), 0);
  EXPECT_EQ(protocol::parse_server(out[0].frame)["code"], "already_queued");
  out = lob.handle(a, protocol::encode(protocol::LeaderboardRequest{3}), 0);
  EXPECT_EQ(protocol::parse_server(out[0].frame)["type"], "leaderboard");
}
