#pragma once

#include <array>
#include <cstdint>
#include <random>

#include <nlohmann/json.hpp>

#include "tw/detect/event.hpp"
#include "tw/verify/types.hpp"

namespace tw::verify {

struct Rewards {
  double confirm_agree = 1.0;
  double confirm_disagree = -1.0;
  double reject_agree = 1.0;
  double reject_disagree = -1.0;
  double request_info = -0.1;
};

struct QHyper {
  double alpha = 0.1;
  /// Kept for multi-step chains; each verification is terminal, so unused.
  double gamma = 0.9;
  double epsilon = 0.1;
  double epsilon_decay = 0.995;
  double epsilon_floor = 0.01;
  Rewards rewards;

  /// Throws Error(BadConfig).
  void validate() const;
};

struct QTable {
  std::array<std::array<double, kActions>, kStates> q{};
  std::array<std::array<std::int64_t, kActions>, kStates> visits{};
  /// Current exploration rate; decays with every feedback.
  double epsilon = 0.1;

  double at(Severity s, Action a) const { return q[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)]; }
  /// Argmax over the allowed actions; ties go to the lowest action index.
  Action greedy(Severity s, bool allow_request_info = true) const;
  bool operator==(const QTable&) const = default;
};

QTable make_qtable(const QHyper& hyper);

struct SeverityRubric {
  double z_high = 3.0;
  double z_medium = 1.5;
  /// Wind readings above this add a point.
  double wind_cutoff = 12.0;
};

/// Points: 2 for error/threshold >= z_high, 1 for >= z_medium; +1 for wind
/// above the cutoff; +1 for rain > 0. At most 1 point is Low, 2 Medium, 3+
/// High.
Severity severity_of(const detect::AnomalyEvent& event, const SeverityRubric& rubric = {});

/// With probability epsilon a uniformly random allowed action, else the
/// greedy one.
Action choose_action(const QTable& table, Severity state, std::mt19937_64& rng, bool allow_request_info = true);

double reward_of(Action action, Verdict verdict, const Rewards& rewards = {});

/// Q(s,a) += alpha * (r - Q(s,a)); visit count +1; epsilon decays toward its
/// floor. The returned table differs from `table` in that one cell only.
QTable apply_feedback(const QTable& table, Severity state, Action action, Verdict verdict, const QHyper& hyper);

/// Event status implied by the operator's verdict on the proposed action.
detect::EventStatus status_after(Action action, Verdict verdict) noexcept;

nlohmann::ordered_json to_json(const QTable& t);
/// Throws Error(BadFormat).
QTable qtable_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json to_json(const QHyper& h);
QHyper qhyper_from_json(const nlohmann::ordered_json& j);

}  // namespace tw::verify
