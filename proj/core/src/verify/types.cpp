#include "tw/verify/types.hpp"

namespace tw::verify {

std::string_view to_string(Severity s) noexcept {
  switch (s) {
    case Severity::Low: return "low";
    case Severity::Medium: return "medium";
    case Severity::High: return "high";
  }
  return "low";
}

std::string_view to_string(Action a) noexcept {
  switch (a) {
    case Action::Confirm: return "confirm";
    case Action::Reject: return "reject";
    case Action::RequestInfo: return "request-info";
  }
  return "confirm";
}

std::string_view to_string(Verdict v) noexcept { return v == Verdict::Agree ? "agree" : "disagree"; }

std::optional<Severity> parse_severity(std::string_view s) noexcept {
  if (s == "low" || s == "Low") return Severity::Low;
  if (s == "medium" || s == "Medium") return Severity::Medium;
  if (s == "high" || s == "High") return Severity::High;
  return std::nullopt;
}

std::optional<Action> parse_action(std::string_view s) noexcept {
  if (s == "confirm" || s == "Confirm") return Action::Confirm;
  if (s == "reject" || s == "Reject") return Action::Reject;
  if (s == "request-info" || s == "RequestInfo") return Action::RequestInfo;
  return std::nullopt;
}

std::optional<Verdict> parse_verdict(std::string_view s) noexcept {
  if (s == "agree" || s == "Agree") return Verdict::Agree;
  if (s == "disagree" || s == "Disagree") return Verdict::Disagree;
  return std::nullopt;
}

}  // namespace tw::verify
