// Acceptance gate: one PASS/FAIL line per primary criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include "support.hpp"
#include "tug/assessments.hpp"
#include "tug/cli.hpp"
#include "tug/datastore.hpp"
#include "tug/metrics.hpp"
#include "tug/model.hpp"
#include "tug/protocol.hpp"
#include "tug/scoring.hpp"
#include "tug/session.hpp"
#include "tug/simgen.hpp"

using namespace tug;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

// 1 ------------------------------------------------------------------------

Outcome scoring_algebra() {
  Outcome o;
  for (int quota = 3; quota <= 5; ++quota) {
    for (int k = 0; k <= quota; ++k) {
      const int pts = scoring::round_points({k, quota}, quota);
      o.require(pts == 10 * k, "round_points(" + std::to_string(k) + "/" + std::to_string(quota) + ") = " +
                                   std::to_string(pts));
      // through the full round path as well
      std::set<std::string> a, b;
      for (int i = 0; i < quota; ++i) a.insert("w" + std::to_string(i));
      for (int i = 0; i < quota; ++i) b.insert("w" + std::to_string(i < k ? i : 100 + i));
      const auto s = scoring::score_round(a, b, quota, 0);
      o.require(s.points == 10 * k && s.matched_words.size() == static_cast<std::size_t>(k),
                "score_round disagrees at k=" + std::to_string(k));
    }
  }
  // quota 4, half the words matched
  const auto worked = scoring::score_round({"a", "b", "c", "d"}, {"a", "b", "x", "y"}, 4, 0);
  o.require(worked.wcmr == scoring::Fraction{2, 4} && worked.points == 20, "quota 4 at 50% did not give 20 points");
  if (o.ok) o.detail = "15 (quota, k) cases; quota 4 at 50% -> 20";
  return o;
}

// 2 ------------------------------------------------------------------------

int expected_bonus(unsigned pattern) {
  int total = 0, run = 0;
  for (int r = 0; r < 10; ++r) {
    run = (pattern >> r) & 1u ? run + 1 : 0;
    if (run == 3) total += 50;
    if (run == 5) total += 150;
  }
  return total;
}

Outcome streak_bonuses() {
  Outcome o;
  const std::set<std::string> a = {"a", "b", "c", "d", "e"};
  const std::set<std::string> hit = {"a", "b", "c", "x", "y"};   // 3/5 = 60%
  const std::set<std::string> miss = {"a", "b", "v", "x", "y"};  // 2/5
  for (unsigned pattern = 0; pattern < 1024; ++pattern) {
    std::vector<scoring::RoundScore> rounds;
    int streak = 0, bonus = 0;
    for (int r = 0; r < 10; ++r) {
      auto s = scoring::score_round(a, (pattern >> r) & 1u ? hit : miss, 5, streak);
      streak = s.streak_len_after;
      bonus += s.bonus_awarded;
      rounds.push_back(s);
    }
    int points = 0;
    for (const auto& s : rounds) points += s.points;
    o.require(bonus == expected_bonus(pattern), "pattern " + std::to_string(pattern) + " banked " +
                                                    std::to_string(bonus) + ", expected " +
                                                    std::to_string(expected_bonus(pattern)));
    o.require(scoring::session_total(rounds) == points + bonus, "session_total mismatch");
    if (pattern == 1023) o.require(bonus == 200, "all-qualifying session banked " + std::to_string(bonus));
  }
  if (o.ok) o.detail = "1024 patterns; all-qualifying session banks 200";
  return o;
}

// 3 ------------------------------------------------------------------------

bool legal_transition(session::State from, session::State to) {
  using S = session::State;
  if (from == to) return from == S::AwaitingSelections || from == S::ShareWord;
  switch (from) {
    case S::AwaitingSelections: return to == S::RevealResult || to == S::Abandoned;
    case S::RevealResult: return to == S::ShareWord || to == S::Abandoned;
    case S::ShareWord: return to == S::AwaitingSelections || to == S::Completed || to == S::Abandoned;
    default: return false;
  }
}

Outcome session_fuzz() {
  Outcome o;
  const auto content = fixtures::shipped_content();
  constexpr int kSequences = 10000;
  Rng rng(2024);
  std::size_t events = 0, rejected = 0, completed = 0, replayed = 0;
  for (int n = 0; n < kSequences && o.ok; ++n) {
    const std::array<std::string, 2> players = {"p" + std::to_string(n) + "a", "p" + std::to_string(n) + "b"};
    auto s = session::Session::start("s" + std::to_string(n), players, content, rng.next());
    // mostly-legal play so that many sessions run to completion; some sequences are pure noise
    const double legal_bias = n % 10 == 0 ? 0.2 : 0.9;
    for (int step = 0; step < 120 && !s.finished(); ++step) {
      const auto before = s;
      const auto& who = rng.uniform() < 0.97 ? players[rng.below(2)] : std::string("intruder");
      const double roll = rng.uniform();
      bool legal_attempt = rng.uniform() < legal_bias;
      try {
        ++events;
        if (roll < 0.005) {
          s.abandon(rng.below(2) ? session::AbandonReason::timeout : session::AbandonReason::disconnect);
        } else if (roll < 0.55) {
          const auto& spec = s.current_spec();
          std::vector<std::string> words;
          if (legal_attempt) {
            auto view = s.has_player(who) ? s.view_of(who) : spec.matrix;
            rng.shuffle(view.begin(), view.end());
            words.assign(view.begin(), view.begin() + spec.quota);
          } else {
            const int count = static_cast<int>(rng.below(7));
            for (int i = 0; i < count; ++i) {
              words.push_back(rng.below(4) ? spec.matrix[rng.below(spec.matrix.size())] : "not-a-word");
            }
          }
          s.submit_selection(who, words);
        } else {
          std::optional<std::string> word;
          if (!s.rounds().empty() && rng.below(2)) {
            const auto& last = s.rounds().back();
            auto it = last.selections.find(who);
            if (it != last.selections.end() && !it->second.empty()) {
              auto pick = it->second.begin();
              std::advance(pick, static_cast<long>(rng.below(it->second.size())));
              word = *pick;
            } else {
              word = "not-a-word";
            }
          }
          s.share_word(who, word);
        }
        o.require(legal_transition(before.state(), s.state()) || before == s,
                  "illegal transition " + std::string(to_string(before.state())) + " -> " +
                      std::string(to_string(s.state())));
        o.require(s.current_round() >= before.current_round(), "round number went backwards");
      } catch (const Error&) {
        ++rejected;
        o.require(before == s, "rejected event mutated the session");
      }
    }
    if (s.state() == session::State::Completed) {
      ++completed;
      const auto log = datastore::make_session_log(s, 0, 1);
      try {
        const int total = datastore::replay_check(log);
        o.require(total == s.total(), "replayed total differs");
        ++replayed;
      } catch (const Error& e) {
        o.require(false, std::string("replay failed: ") + e.what());
      }
    }
  }
  o.require(completed > 0, "no session completed");
  if (o.ok) {
    o.detail = std::to_string(kSequences) + " sequences, " + std::to_string(events) + " events (" +
               std::to_string(rejected) + " rejected), " + std::to_string(replayed) + " completed sessions replayed";
  }
  return o;
}

// 4 ------------------------------------------------------------------------

Outcome matchmaking() {
  Outcome o;
  constexpr int kClients = 200;
  constexpr int kQueueClients = 101;
  constexpr int kTagClients = kClients - kQueueClients;
  lobby::LobbyConfig cfg;
  cfg.seed = 99;
  lobby::Lobby lob(fixtures::shipped_content(), cfg);
  fixtures::Router router;

  std::vector<lobby::PlayerId> ids(kClients);
  for (int i = 0; i < kClients; ++i) ids[static_cast<std::size_t>(i)] = lob.connect("c" + std::to_string(i));
  std::map<lobby::PlayerId, int> index_of;
  for (int i = 0; i < kClients; ++i) index_of[ids[static_cast<std::size_t>(i)]] = i;

  std::mutex m;
  std::vector<std::string> failures;
  std::map<lobby::PlayerId, int> paired_count;
  auto fail = [&](const std::string& why) {
    std::lock_guard lock(m);
    failures.push_back(why);
  };

  auto client = [&](int i) {
    const auto& me = ids[static_cast<std::size_t>(i)];
    const bool queue_mode = i < kQueueClients;
    std::string join = queue_mode ? protocol::encode(protocol::JoinQueue{})
                                  : protocol::encode(protocol::JoinTag{"t" + std::to_string((i - kQueueClients) / 2), {}});
    router.deliver(lob.handle(me, join, 0));
    std::string sid;
    for (;;) {
      auto frame = router.next(me, std::chrono::seconds(20));
      if (!frame) return;  // lone waiter, released at the end
      const auto j = protocol::parse_server(*frame);
      const auto type = j["type"].get<std::string>();
      if (type == "paired") {
        sid = j["session_id"];
        std::lock_guard lock(m);
        ++paired_count[me];
      } else if (type == "round_started") {
        const int round = j["round_no"];
        // in every third session one side walks away mid-game
        if (round == 4 && std::hash<std::string>{}(sid) % 3 == 0 && i % 2 == 0) {
          router.deliver(lob.disconnect(me, round));
          return;
        }
        const auto matrix = j["matrix"].get<std::vector<std::string>>();
        const int quota = j["quota"];
        protocol::SubmitSelection msg{sid, round, {matrix.begin(), matrix.begin() + quota}};
        router.deliver(lob.handle(me, protocol::encode(msg), round));
      } else if (type == "round_result") {
        router.deliver(lob.handle(me, protocol::encode(protocol::ShareWord{sid, j["round_no"], std::nullopt}), 0));
      } else if (type == "session_completed" || type == "session_abandoned") {
        return;
      } else if (type == "error") {
        const auto code = j["code"].get<std::string>();
        // a partner's disconnect can race with our own move
        if (code != "not_in_session" && code != "wrong_state" && code != "unknown_player") {
          fail("client " + std::to_string(i) + " got error " + code + ": " + j["message"].get<std::string>());
        }
      }
    }
  };

  std::vector<std::thread> threads;
  for (int i = 0; i < kClients; ++i) threads.emplace_back(client, i);
  const auto deadline = Clock::now() + std::chrono::seconds(25);
  while (Clock::now() < deadline) {
    if (lob.sessions_created() == 99 && lob.live_sessions() == 0) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  router.close();
  for (auto& t : threads) t.join();

  for (const auto& f : failures) o.require(false, f);
  const auto sids = lob.session_ids();
  o.require(sids.size() == kQueueClients / 2 + kTagClients / 2,
            "created " + std::to_string(sids.size()) + " sessions, expected 99");
  int queue_sessions = 0, tag_sessions = 0, abandoned = 0, done = 0;
  std::set<lobby::PlayerId> seen;
  for (const auto& sid : sids) {
    const auto s = lob.session_snapshot(sid);
    if (!s) {
      o.require(false, "missing snapshot for " + sid);
      continue;
    }
    const int a = index_of.at(s->players()[0]);
    const int b = index_of.at(s->players()[1]);
    for (const auto& p : s->players()) o.require(seen.insert(p).second, "player in two sessions");
    if (a < kQueueClients && b < kQueueClients) {
      ++queue_sessions;
    } else if (a >= kQueueClients && b >= kQueueClients) {
      ++tag_sessions;
      o.require((a - kQueueClients) / 2 == (b - kQueueClients) / 2, "tag session paired different tags");
    } else {
      o.require(false, "session mixes queue and tag players");
    }
    o.require(s->finished(), "session " + sid + " still live");
    const bool listed = lob.leaderboard().contains_session(sid);
    if (s->state() == session::State::Abandoned) {
      ++abandoned;
      o.require(!listed, "abandoned session " + sid + " is on the leaderboard");
    } else if (s->state() == session::State::Completed) {
      ++done;
      o.require(listed, "completed session " + sid + " missing from the leaderboard");
    }
  }
  for (const auto& [p, n] : paired_count) o.require(n == 1, "player paired more than once");
  o.require(queue_sessions == kQueueClients / 2, "queue sessions: " + std::to_string(queue_sessions));
  o.require(tag_sessions == kTagClients / 2, "tag sessions: " + std::to_string(tag_sessions));
  o.require(abandoned > 0 && done > 0, "expected both completed and abandoned sessions");
  o.require(lob.queue_size() == 1 && lob.parked_tags() == 1, "expected one lone waiter per mode");
  if (o.ok) {
    o.detail = std::to_string(kClients) + " clients: " + std::to_string(queue_sessions) + " queue + " +
               std::to_string(tag_sessions) + " tag sessions, " + std::to_string(done) + " completed, " +
               std::to_string(abandoned) + " abandoned";
  }
  return o;
}

// 5 ------------------------------------------------------------------------

std::filesystem::path g_pipeline_dir;  // reused by criterion 8

Outcome pipeline_determinism(const std::filesystem::path& root) {
  Outcome o;
  config::Config cfg;
  cfg.seed = 31337;
  const std::vector<double> thresholds = {0.75, 0.80};
  std::ostringstream quiet;
  const auto dir_a = root / "run-a";
  const auto dir_b = root / "run-b";
  cli::detail::run_pipeline(cfg, 400, dir_a, 200000, false, thresholds, quiet);
  cli::detail::run_pipeline(cfg, 400, dir_b, 200000, false, thresholds, quiet);
  g_pipeline_dir = dir_a;

  for (const char* f : {"dataset.jsonl", "embeddings.tsv", "rounds.jsonl", "logs/sessions.jsonl"}) {
    o.require(fixtures::read_file(dir_a / f) == fixtures::read_file(dir_b / f), std::string(f) + " differs between runs");
  }
  const auto dataset = datastore::read_dataset((dir_a / "dataset.jsonl").string());
  const auto table = embeddings::read_table((dir_a / "embeddings.tsv").string());
  datastore::LogStore store(dir_a / "logs");
  const auto logs = store.sessions();
  o.require(dataset.size() == 400, "dataset has " + std::to_string(dataset.size()) + " pairs");
  o.require(logs.size() == 400, "log has " + std::to_string(logs.size()) + " sessions");
  std::map<std::string, double> label;
  std::size_t rounds = 0;
  for (const auto& p : dataset) {
    label[p.pair_id] = p.label;
    rounds += p.rounds.size();
  }
  o.require(rounds == 4000, "dataset has " + std::to_string(rounds) + " rounds");
  double worst = 0.0;
  for (const auto& rec : logs) {
    o.require(rec.rounds.size() == 10, rec.session_id + " does not have 10 rounds");
    double sum = 0.0;
    for (const auto& r : rec.rounds) {
      lexicon::RoundSpec spec{r.theme, r.keyword, r.matrix, r.quota};
      const double again = simgen::score_round_oracle(spec, r.sel_a, r.sel_b, table);
      o.require(r.score.has_value(), "round without a stored score");
      if (r.score) worst = std::max(worst, std::abs(again - *r.score));
      sum += again;
    }
    const auto it = label.find(rec.session_id);
    o.require(it != label.end(), rec.session_id + " missing from the dataset");
    if (it != label.end()) worst = std::max(worst, std::abs(it->second - sum / 10.0));
    datastore::replay_check(rec);
  }
  o.require(worst <= 1e-12, "recomputed scores differ by " + std::to_string(worst));
  if (o.ok) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "400 sessions / %zu rounds, byte-identical reruns, max score deviation %.1e", rounds,
                  worst);
    o.detail = buf;
  }
  return o;
}

// 6 ------------------------------------------------------------------------

Outcome gradient_correctness() {
  Outcome o;
  Rng rng(5);
  std::vector<model::PairFeatures> batch(4);
  for (auto& p : batch) {
    p.x1.resize(384);
    p.x2.resize(384);
    for (auto& x : p.x1) x = rng.normal() * 0.2;
    for (auto& x : p.x2) x = rng.normal() * 0.2;
    p.y = rng.uniform();
  }
  const auto params = model::init_params(11);
  const auto check = model::gradient_check(params, batch, 1e-5, 400);
  o.require(check.samples >= 200, "too few samples");
  o.require(check.max_relative_error < 1e-4, "max relative error " + std::to_string(check.max_relative_error));
  char buf[120];
  std::snprintf(buf, sizeof buf, "%zu parameters, max relative error %.2e", check.samples, check.max_relative_error);
  if (o.ok) o.detail = buf;
  return o;
}

// 7 ------------------------------------------------------------------------

Outcome overfit_sanity() {
  Outcome o;
  const auto content = fixtures::shipped_content(3);
  const auto rounds = simgen::simulate_for_assembly(content->themes, content->table, 50, 77, 100000);
  const auto sessions = simgen::assemble_sessions(rounds, 50, 78);
  std::vector<datastore::LabeledPair> pairs;
  for (const auto& s : sessions) pairs.push_back(simgen::to_labeled_pair(s));
  const auto feats = model::build_features(pairs, content->table);
  model::TrainConfig cfg;
  cfg.seed = 4;
  cfg.max_epochs = 500;
  std::size_t reached = 0;
  const auto result = model::fit_all(feats, cfg, {}, [&](const model::EpochStats& e) {
    if (!reached && e.train_mse < 0.01) reached = e.epoch;
    return reached && e.epoch >= 10;
  });
  const auto& ep = result.report.epochs;
  o.require(ep.size() >= 10, "stopped before epoch 10");
  o.require(reached > 0, "training MSE still " + std::to_string(ep.back().train_mse) + " after " +
                             std::to_string(ep.size()) + " epochs");
  int rises = 0;
  for (std::size_t i = 1; i < std::min<std::size_t>(10, ep.size()); ++i) {
    if (ep[i].train_loss > ep[i - 1].train_loss) ++rises;
  }
  o.require(rises <= 2, std::to_string(rises) + " non-improving epochs among the first 10");
  char buf[160];
  std::snprintf(buf, sizeof buf, "50 pairs: MSE < 0.01 at epoch %zu (%.4f at epoch %zu), %d rises in epochs 1-10",
                reached, ep.back().train_mse, ep.size(), rises);
  if (o.ok) o.detail = buf;
  return o;
}

// 8 ------------------------------------------------------------------------

Outcome generalization() {
  Outcome o;
  if (g_pipeline_dir.empty()) {
    o.require(false, "pipeline output from criterion 5 not available");
    return o;
  }
  const auto dataset = datastore::read_dataset((g_pipeline_dir / "dataset.jsonl").string());
  const auto table = embeddings::read_table((g_pipeline_dir / "embeddings.tsv").string());
  const auto feats = model::build_features(dataset, table);
  model::TrainConfig cfg;
  cfg.seed = 31337;
  const auto result = model::train(feats, cfg);
  const auto& val = result.report.val_indices;
  std::vector<double> preds, labels;
  for (auto i : val) {
    preds.push_back(model::predict(result.params, feats[i].x1, feats[i].x2).y_hat);
    labels.push_back(feats[i].y);
  }
  const auto m = metrics::regression_metrics(preds, labels);
  o.require(val.size() == 80, "validation split has " + std::to_string(val.size()) + " pairs");
  o.require(m.pearson && *m.pearson >= 0.5, "held-out Pearson " + (m.pearson ? std::to_string(*m.pearson) : "n/a"));
  char buf[160];
  std::snprintf(buf, sizeof buf, "320/80 split: held-out Pearson %.3f, MAE %.3f (best epoch %zu of %zu)",
                m.pearson.value_or(NAN), m.mae, result.report.best_epoch, result.report.epochs.size());
  if (o.ok) o.detail = buf;
  return o;
}

// 9 ------------------------------------------------------------------------

Outcome metrics_oracle() {
  Outcome o;
  Rng rng(909);
  const std::vector<double> thresholds = {0.75, 0.80};
  for (int inst = 0; inst < 1000 && o.ok; ++inst) {
    const std::size_t n = 2 + rng.below(19);
    std::vector<double> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      // coarse grids make ties and exact-threshold hits common
      p[i] = inst % 4 == 0 ? std::round(rng.uniform() * 20) / 20 : rng.uniform();
      y[i] = inst % 4 == 0 ? std::round(rng.uniform() * 20) / 20 : rng.uniform();
    }
    if (inst % 50 == 0) std::fill(p.begin(), p.end(), 0.8);  // zero-variance case

    // regression, textbook sums
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, ae = 0, se = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sx += p[i];
      sy += y[i];
      sxx += p[i] * p[i];
      syy += y[i] * y[i];
      sxy += p[i] * y[i];
      ae += std::abs(p[i] - y[i]);
      se += (p[i] - y[i]) * (p[i] - y[i]);
    }
    const double dn = static_cast<double>(n);
    const double vx = dn * sxx - sx * sx, vy = dn * syy - sy * sy;
    const auto got = metrics::regression_metrics(p, y);
    o.require(std::abs(got.mae - ae / dn) < 1e-9, "MAE mismatch");
    o.require(std::abs(got.rmse - std::sqrt(se / dn)) < 1e-9, "RMSE mismatch");
    const bool degenerate = std::all_of(p.begin(), p.end(), [&](double v) { return v == p[0]; }) ||
                            std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
    if (degenerate) {
      o.require(!got.pearson, "Pearson defined for a constant vector");
    } else {
      const double r = (dn * sxy - sx * sy) / std::sqrt(vx * vy);
      o.require(got.pearson && std::abs(*got.pearson - r) < 1e-9, "Pearson mismatch");
    }

    // classification by direct counting at each threshold, labels at 0.75
    const auto sweep = metrics::threshold_sweep(p, y, thresholds);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      long tp = 0, fp = 0, tn = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool pp = !(p[i] < thresholds[t]);
        const bool ll = !(y[i] < 0.75);
        tp += pp && ll;
        fp += pp && !ll;
        fn += !pp && ll;
        tn += !pp && !ll;
      }
      const auto& c = sweep[t];
      o.require(c.confusion == metrics::Confusion{tp, fp, tn, fn}, "confusion mismatch");
      o.require(std::abs(c.accuracy - static_cast<double>(tp + tn) / dn) < 1e-9, "accuracy mismatch");
      auto same = [](const std::optional<double>& a, long num, long den) {
        return den == 0 ? !a.has_value() : a && std::abs(*a - static_cast<double>(num) / static_cast<double>(den)) < 1e-9;
      };
      o.require(same(c.precision, tp, tp + fp), "precision mismatch");
      o.require(same(c.recall, tp, tp + fn), "recall mismatch");
      o.require(same(c.f1, 2 * tp, 2 * tp + fp + fn), "F1 mismatch");
    }
    const auto r75 = sweep[0].recall, r80 = sweep[1].recall;
    o.require(r75.has_value() == r80.has_value() && (!r75 || *r80 <= *r75), "recall(0.80) > recall(0.75)");
  }
  if (o.ok) o.detail = "1000 instances agree to 1e-9; recall(0.80) <= recall(0.75) throughout";
  return o;
}

// 10 -----------------------------------------------------------------------

Outcome questionnaires() {
  Outcome o;
  using namespace assessments;
  const std::vector<int> sevens(12, 7), ones(12, 1);
  o.require(score_urcs(URCSResponse(sevens)) == 1.0, "URCS all-7 is not 1.0");
  o.require(score_urcs(URCSResponse(ones)) == 0.0, "URCS all-1 is not 0.0");
  const auto keying = load_bfi_keying(fixtures::data_path("bfi10_keying.tsv"));
  const std::vector<int> mid(10, 3);
  const auto m = score_bfi(BFIResponse(mid), keying);
  for (double v : m.values) o.require(v == 3.0, "midpoint response gave a trait other than 3.0");
  // items 1,3,4,5,7 reversed: E=(6-a1+a6)/2, A=(a2+6-a7)/2, C=(6-a3+a8)/2, N=(6-a4+a9)/2, O=(6-a5+a10)/2
  const std::vector<int> r1 = {5, 4, 2, 1, 3, 2, 1, 5, 4, 4};
  const auto s1 = score_bfi(BFIResponse(r1), keying);
  o.require(s1[Trait::extraversion] == 1.5, "extraversion fixture");
  o.require(s1[Trait::agreeableness] == 4.5, "agreeableness fixture");
  o.require(s1[Trait::conscientiousness] == 4.5, "conscientiousness fixture");
  o.require(s1[Trait::neuroticism] == 4.5, "neuroticism fixture");
  o.require(s1[Trait::openness] == 3.5, "openness fixture");
  const std::vector<int> r2 = {1, 5, 5, 5, 1, 5, 1, 1, 1, 5};
  const auto s2 = score_bfi(BFIResponse(r2), keying);
  o.require(s2[Trait::extraversion] == 5.0 && s2[Trait::agreeableness] == 5.0 && s2[Trait::conscientiousness] == 1.0 &&
                s2[Trait::neuroticism] == 1.0 && s2[Trait::openness] == 5.0,
            "extreme fixture");
  const std::vector<int> urcs_mixed = {1, 2, 3, 4, 5, 6, 7, 7, 6, 5, 4, 3};  // mean 53/12
  o.require(std::abs(score_urcs(URCSResponse(urcs_mixed)) - (53.0 / 12.0 - 1.0) / 6.0) < 1e-15, "URCS mixed fixture");
  if (o.ok) o.detail = "URCS bounds, BFI midpoint and reverse-keyed fixtures";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  fixtures::TempDir scratch("tug-acceptance");

  const std::vector<Criterion> criteria = {
      {1, "scoring algebra", 1, scoring_algebra},
      {2, "streak bonuses", 1, streak_bonuses},
      {3, "session state machine fuzz + replay", 30, session_fuzz},
      {4, "matchmaking safety under concurrency", 30, matchmaking},
      {5, "synthetic pipeline determinism and scale", 120, [&] { return pipeline_determinism(scratch.path()); }},
      {6, "gradient correctness", 30, gradient_correctness},
      {7, "overfit sanity", 120, overfit_sanity},
      {8, "generalization on synthetic data", 300, generalization},
      {9, "metrics oracle equivalence", 10, metrics_oracle},
      {10, "questionnaire scoring", 1, questionnaires},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id) && !(c.id == 5 && only.count(8))) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (o.ok && secs >= c.budget_s) {
      o.ok = false;
      char buf[96];
      std::snprintf(buf, sizeof buf, "took %.2fs, budget %.0fs", secs, c.budget_s);
      o.detail = buf;
    }
    if (!o.ok) ++failed;
    std::printf("%s [%2d] %-42s %7.2fs  %s\n", o.ok ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
