#pragma once

#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tug/error.hpp"

namespace tug::scoring {

inline constexpr int kStreakThresholdNum = 3;  // WCMR >= 3/5
inline constexpr int kStreakThresholdDen = 5;
inline constexpr int kShortStreak = 3;
inline constexpr int kShortStreakBonus = 50;
inline constexpr int kLongStreak = 5;
inline constexpr int kLongStreakBonus = 150;
inline constexpr std::size_t kRoundsPerSession = 10;

/// Exact k/q match rate. Comparisons never go through floating point.
struct Fraction {
  int num = 0;
  int den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  friend bool operator==(const Fraction& a, const Fraction& b) {
    return static_cast<long long>(a.num) * b.den == static_cast<long long>(b.num) * a.den;
  }
};

struct RoundScore {
  std::set<std::string> matched_words;
  Fraction wcmr;
  int points = 0;
  int streak_len_after = 0;
  int bonus_awarded = 0;

  bool operator==(const RoundScore& o) const {
    return matched_words == o.matched_words && wcmr == o.wcmr && points == o.points &&
           streak_len_after == o.streak_len_after && bonus_awarded == o.bonus_awarded;
  }
};

struct MatchResult {
  std::set<std::string> matched;
  Fraction wcmr;
};

inline MatchResult compute_wcmr(const std::set<std::string>& sel_a, const std::set<std::string>& sel_b, int quota) {
  if (quota <= 0) throw Error(ErrorCode::quota_violation, "quota must be positive");
  if (sel_a.size() != static_cast<std::size_t>(quota) || sel_b.size() != static_cast<std::size_t>(quota)) {
    throw Error(ErrorCode::quota_violation, "each selection must contain exactly " + std::to_string(quota) + " words");
  }
  MatchResult r;
  std::set_intersection(sel_a.begin(), sel_a.end(), sel_b.begin(), sel_b.end(),
                        std::inserter(r.matched, r.matched.end()));
  r.wcmr = Fraction{static_cast<int>(r.matched.size()), quota};
  return r;
}

inline int round_factor(int quota) { return 10 * quota; }

/// wcmr × round factor, rounded half-up to the nearest 10. For wcmr = k/quota
/// this is exactly 10k.
inline int round_points(Fraction wcmr, int quota) {
  if (wcmr.den <= 0 || wcmr.num < 0) throw Error(ErrorCode::invalid_argument, "wcmr must be a non-negative fraction");
  // value in tens = quota * num / den; floor(x + 1/2) in integer arithmetic
  const long long tens = (2LL * quota * wcmr.num + wcmr.den) / (2LL * wcmr.den);
  return static_cast<int>(10 * tens);
}

inline bool meets_streak_threshold(Fraction wcmr) {
  return static_cast<long long>(wcmr.num) * kStreakThresholdDen >=
         static_cast<long long>(kStreakThresholdNum) * wcmr.den;
}

struct StreakUpdate {
  int streak = 0;
  int bonus = 0;
};

/// Milestones fire once per streak, at exactly 3 and exactly 5 qualifying rounds.
inline StreakUpdate update_streak(int prev_streak, Fraction wcmr) {
  if (prev_streak < 0) throw Error(ErrorCode::invalid_argument, "streak cannot be negative");
  StreakUpdate u;
  u.streak = meets_streak_threshold(wcmr) ? prev_streak + 1 : 0;
  if (u.streak == kShortStreak) u.bonus = kShortStreakBonus;
  if (u.streak == kLongStreak) u.bonus = kLongStreakBonus;
  return u;
}

/// Full scoring of one round given both selections and the running streak.
inline RoundScore score_round(const std::set<std::string>& sel_a, const std::set<std::string>& sel_b, int quota,
                              int prev_streak) {
  auto m = compute_wcmr(sel_a, sel_b, quota);
  RoundScore s;
  s.points = round_points(m.wcmr, quota);
  auto streak = update_streak(prev_streak, m.wcmr);
  s.matched_words = std::move(m.matched);
  s.wcmr = m.wcmr;
  s.streak_len_after = streak.streak;
  s.bonus_awarded = streak.bonus;
  return s;
}

inline int session_total(std::span<const RoundScore> rounds) {
  if (rounds.size() > kRoundsPerSession) {
    throw Error(ErrorCode::wrong_round_count, "a session has at most 10 rounds");
  }
  return std::accumulate(rounds.begin(), rounds.end(), 0,
                         [](int acc, const RoundScore& r) { return acc + r.points + r.bonus_awarded; });
}

}  // namespace tug::scoring
