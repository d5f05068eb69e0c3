#include "tw/verify/qlearning.hpp"

#include <algorithm>

#include "tw/error.hpp"

namespace tw::verify {

using nlohmann::ordered_json;

void QHyper::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(Errc::BadConfig, "alpha must lie in (0, 1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(Errc::BadConfig, "epsilon must lie in [0, 1]");
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw Error(Errc::BadConfig, "epsilon_decay must lie in (0, 1]");
  if (!(epsilon_floor >= 0.0 && epsilon_floor <= 1.0)) throw Error(Errc::BadConfig, "epsilon_floor must lie in [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(Errc::BadConfig, "gamma must lie in [0, 1]");
}

Action QTable::greedy(Severity s, bool allow_request_info) const {
  const auto& row = q[static_cast<std::size_t>(s)];
  const int n = allow_request_info ? kActions : kActions - 1;
  int best = 0;
  for (int a = 1; a < n; ++a)
    if (row[static_cast<std::size_t>(a)] > row[static_cast<std::size_t>(best)]) best = a;
  return static_cast<Action>(best);
}

QTable make_qtable(const QHyper& hyper) {
  hyper.validate();
  QTable t;
  t.epsilon = hyper.epsilon;
  return t;
}

Severity severity_of(const detect::AnomalyEvent& event, const SeverityRubric& rubric) {
  int points = 0;
  if (event.threshold > 0.0) {
    const double z = event.error / event.threshold;
    if (z >= rubric.z_high) {
      points += 2;
    } else if (z >= rubric.z_medium) {
      points += 1;
    }
  }
  if (event.context.wind && *event.context.wind > rubric.wind_cutoff) ++points;
  if (event.context.rain && *event.context.rain > 0.0) ++points;
  if (points <= 1) return Severity::Low;
  return points == 2 ? Severity::Medium : Severity::High;
}

Action choose_action(const QTable& table, Severity state, std::mt19937_64& rng, bool allow_request_info) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < table.epsilon) {
    std::uniform_int_distribution<int> pick(0, allow_request_info ? kActions - 1 : kActions - 2);
    return static_cast<Action>(pick(rng));
  }
  return table.greedy(state, allow_request_info);
}

double reward_of(Action action, Verdict verdict, const Rewards& r) {
  const bool agree = verdict == Verdict::Agree;
  switch (action) {
    case Action::Confirm: return agree ? r.confirm_agree : r.confirm_disagree;
    case Action::Reject: return agree ? r.reject_agree : r.reject_disagree;
    case Action::RequestInfo: return r.request_info;
  }
  return 0.0;
}

QTable apply_feedback(const QTable& table, Severity state, Action action, Verdict verdict, const QHyper& hyper) {
  QTable out = table;
  auto& cell = out.q[static_cast<std::size_t>(state)][static_cast<std::size_t>(action)];
  cell += hyper.alpha * (reward_of(action, verdict, hyper.rewards) - cell);
  ++out.visits[static_cast<std::size_t>(state)][static_cast<std::size_t>(action)];
  out.epsilon = std::max(hyper.epsilon_floor, out.epsilon * hyper.epsilon_decay);
  return out;
}

detect::EventStatus status_after(Action action, Verdict verdict) noexcept {
  using detect::EventStatus;
  switch (action) {
    case Action::Confirm: return verdict == Verdict::Agree ? EventStatus::Confirmed : EventStatus::Rejected;
    case Action::Reject: return verdict == Verdict::Agree ? EventStatus::Rejected : EventStatus::Confirmed;
    case Action::RequestInfo: return EventStatus::InfoRequested;
  }
  return EventStatus::Pending;
}

ordered_json to_json(const QTable& t) {
  return {{"version", 1}, {"q", t.q}, {"visits", t.visits}, {"epsilon", t.epsilon}};
}

QTable qtable_from_json(const ordered_json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw Error(Errc::BadFormat, "unsupported q-table version");
    QTable t;
    t.q = j.at("q").get<decltype(t.q)>();
    t.visits = j.at("visits").get<decltype(t.visits)>();
    t.epsilon = j.at("epsilon").get<double>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadFormat, std::string("malformed q-table: ") + e.what());
  }
}

ordered_json to_json(const QHyper& h) {
  return {{"alpha", h.alpha},
          {"gamma", h.gamma},
          {"epsilon", h.epsilon},
          {"epsilon_decay", h.epsilon_decay},
          {"epsilon_floor", h.epsilon_floor},
          {"rewards",
           {{"confirm_agree", h.rewards.confirm_agree},
            {"confirm_disagree", h.rewards.confirm_disagree},
            {"reject_agree", h.rewards.reject_agree},
            {"reject_disagree", h.rewards.reject_disagree},
            {"request_info", h.rewards.request_info}}}};
}

QHyper qhyper_from_json(const ordered_json& j) {
  QHyper h;
  h.alpha = j.value("alpha", h.alpha);
  h.gamma = j.value("gamma", h.gamma);
  h.epsilon = j.value("epsilon", h.epsilon);
  h.epsilon_decay = j.value("epsilon_decay", h.epsilon_decay);
  h.epsilon_floor = j.value("epsilon_floor", h.epsilon_floor);
  if (j.contains("rewards")) {
    const auto& r = j["rewards"];
    h.rewards.confirm_agree = r.value("confirm_agree", h.rewards.confirm_agree);
    h.rewards.confirm_disagree = r.value("confirm_disagree", h.rewards.confirm_disagree);
    h.rewards.reject_agree = r.value("reject_agree", h.rewards.reject_agree);
    h.rewards.reject_disagree = r.value("reject_disagree", h.rewards.reject_disagree);
    h.rewards.request_info = r.value("request_info", h.rewards.request_info);
  }
  h.validate();
  return h;
}

}  // namespace tw::verify
