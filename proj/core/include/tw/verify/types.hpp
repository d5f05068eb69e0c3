#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace tw::verify {

enum class Severity { Low = 0, Medium = 1, High = 2 };
/// Index order doubles as the argmax tie-break order.
enum class Action { Confirm = 0, Reject = 1, RequestInfo = 2 };
enum class Verdict { Agree, Disagree };

inline constexpr int kStates = 3;
inline constexpr int kActions = 3;

std::string_view to_string(Severity s) noexcept;
std::string_view to_string(Action a) noexcept;
std::string_view to_string(Verdict v) noexcept;
std::optional<Severity> parse_severity(std::string_view s) noexcept;
std::optional<Action> parse_action(std::string_view s) noexcept;
std::optional<Verdict> parse_verdict(std::string_view s) noexcept;

struct FeedbackSignal {
  Verdict verdict = Verdict::Agree;
  std::string note;
  std::string operator_id;
};

}  // namespace tw::verify
