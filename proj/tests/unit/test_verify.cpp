#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tw/detect/event.hpp"
#include "tw/error.hpp"
#include "tw/verify/qlearning.hpp"

using namespace tw;
using namespace tw::verify;

namespace {

detect::AnomalyEvent event_with(double ratio, std::optional<double> wind = {}, std::optional<double> rain = {}) {
  detect::AnomalyEvent e;
  e.threshold = 1.0;
  e.error = ratio;
  e.context.wind = wind;
  e.context.rain = rain;
  return e;
}

}  // namespace

TEST(Rubric, PointsMapToSeverity) {
  EXPECT_EQ(severity_of(event_with(1.1)), Severity::Low);
  EXPECT_EQ(severity_of(event_with(1.6)), Severity::Low);
  EXPECT_EQ(severity_of(event_with(1.6, 20.0)), Severity::Medium);
  EXPECT_EQ(severity_of(event_with(3.5)), Severity::Medium);
  EXPECT_EQ(severity_of(event_with(3.5, 1.0, 0.2)), Severity::High);
  EXPECT_EQ(severity_of(event_with(1.1, 20.0, 1.0)), Severity::Medium);
}

TEST(QTable, SingleUpdateFromZeroIsAlphaTimesReward) {
  QHyper h;
  const QTable t0 = make_qtable(h);
  const QTable t1 = apply_feedback(t0, Severity::High, Action::Confirm, Verdict::Agree, h);
  EXPECT_EQ(t1.at(Severity::High, Action::Confirm), h.alpha * h.rewards.confirm_agree);
  EXPECT_EQ(t1.visits[2][0], 1);
  EXPECT_EQ(t1.epsilon, h.epsilon * h.epsilon_decay);
  const QTable t2 = apply_feedback(t0, Severity::Low, Action::Confirm, Verdict::Disagree, h);
  EXPECT_EQ(t2.at(Severity::Low, Action::Confirm), -0.1);
  const QTable t3 = apply_feedback(t0, Severity::Medium, Action::RequestInfo, Verdict::Agree, h);
  EXPECT_EQ(t3.at(Severity::Medium, Action::RequestInfo), h.alpha * h.rewards.request_info);
  // Only one cell moves.
  int changed = 0;
  for (int s = 0; s < kStates; ++s) {
    for (int a = 0; a < kActions; ++a) changed += t1.q[s][a] != t0.q[s][a];
  }
  EXPECT_EQ(changed, 1);
}

TEST(QTable, RepeatedAgreeApproachesOne) {
  QHyper h;
  QTable t = make_qtable(h);
  for (int i = 0; i < 500; ++i) t = apply_feedback(t, Severity::High, Action::Confirm, Verdict::Agree, h);
  EXPECT_LE(std::abs(t.at(Severity::High, Action::Confirm) - 1.0), std::pow(1.0 - h.alpha, 500) + 1e-9);
  EXPECT_DOUBLE_EQ(t.epsilon, h.epsilon_floor);
}

TEST(QTable, GreedyTieBreakAndExclusion) {
  QTable t;
  EXPECT_EQ(t.greedy(Severity::Low), Action::Confirm);
  t.q[0][2] = 0.5;
  EXPECT_EQ(t.greedy(Severity::Low), Action::RequestInfo);
  EXPECT_EQ(t.greedy(Severity::Low, false), Action::Confirm);
}

TEST(QTable, ChooseActionExploresAtRateEpsilon) {
  QTable t;
  t.q[1][1] = 1.0;
  t.epsilon = 0.3;
  std::mt19937_64 rng(4);
  int non_greedy = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) non_greedy += choose_action(t, Severity::Medium, rng) != Action::Reject;
  // A random pick hits the greedy action a third of the time.
  EXPECT_NEAR(static_cast<double>(non_greedy) / n, 0.3 * 2.0 / 3.0, 0.02);
  t.epsilon = 1.0;
  for (int i = 0; i < 200; ++i) EXPECT_NE(choose_action(t, Severity::Medium, rng, false), Action::RequestInfo);
}

TEST(QTable, RewardsAndStatusAfter) {
  EXPECT_EQ(reward_of(Action::Confirm, Verdict::Agree), 1.0);
  EXPECT_EQ(reward_of(Action::Confirm, Verdict::Disagree), -1.0);
  EXPECT_EQ(reward_of(Action::Reject, Verdict::Agree), 1.0);
  EXPECT_EQ(reward_of(Action::RequestInfo, Verdict::Disagree), -0.1);
  EXPECT_EQ(status_after(Action::Confirm, Verdict::Agree), detect::EventStatus::Confirmed);
  EXPECT_EQ(status_after(Action::Confirm, Verdict::Disagree), detect::EventStatus::Rejected);
  EXPECT_EQ(status_after(Action::Reject, Verdict::Agree), detect::EventStatus::Rejected);
  EXPECT_EQ(status_after(Action::Reject, Verdict::Disagree), detect::EventStatus::Confirmed);
  EXPECT_EQ(status_after(Action::RequestInfo, Verdict::Agree), detect::EventStatus::InfoRequested);
}

TEST(QTable, OracleConvergence) {
  // Oracle: Low -> Reject, Medium -> RequestInfo, High -> Confirm. The
  // operator agrees only with the oracle's action.
  const Action oracle[3] = {Action::Reject, Action::RequestInfo, Action::Confirm};
  QHyper h;
  int matched_seeds = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> state(0, 2);
    QTable t = make_qtable(h);
    for (int ep = 0; ep < 500; ++ep) {
      const auto s = static_cast<Severity>(state(rng));
      const Action a = choose_action(t, s, rng);
      const Verdict v = a == oracle[static_cast<int>(s)] ? Verdict::Agree : Verdict::Disagree;
      t = apply_feedback(t, s, a, v, h);
    }
    bool all = true;
    for (int s = 0; s < 3; ++s) all = all && t.greedy(static_cast<Severity>(s)) == oracle[s];
    matched_seeds += all;
  }
  EXPECT_GE(matched_seeds, 9);
}

TEST(QTable, JsonRoundTripAndValidation) {
  QHyper h;
  QTable t = apply_feedback(make_qtable(h), Severity::Low, Action::Reject, Verdict::Agree, h);
  EXPECT_EQ(qtable_from_json(to_json(t)), t);
  const QHyper back = qhyper_from_json(to_json(h));
  EXPECT_EQ(back.alpha, h.alpha);
  EXPECT_EQ(back.rewards.request_info, h.rewards.request_info);
  QHyper bad;
  bad.alpha = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  EXPECT_THROW(qtable_from_json(nlohmann::ordered_json{{"q", 1}}), Error);
}
