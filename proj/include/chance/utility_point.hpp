#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include "chance/choice_model.hpp"

namespace chance {

enum class EstimationMethod { mle, bayes, adjusted };

inline std::string_view to_string(EstimationMethod m) {
  switch (m) {
    case EstimationMethod::mle: return "mle";
    case EstimationMethod::bayes: return "bayes";
    case EstimationMethod::adjusted: return "adjusted";
  }
  return "mle";
}

inline EstimationMethod parse_method(std::string_view s) {
  if (s == "mle") return EstimationMethod::mle;
  if (s == "bayes") return EstimationMethod::bayes;
  if (s == "adjusted") return EstimationMethod::adjusted;
  throw std::invalid_argument("unknown estimation method: " + std::string(s));
}

// End-point gambles pay 1 or 0; adjacent gambles pay previously elicited
// utilities of neighbouring sure values.
enum class GambleKind { end_point, adjacent };

inline std::string_view to_string(GambleKind k) { return k == GambleKind::end_point ? "end_point" : "adjacent"; }

inline GambleKind parse_gamble_kind(std::string_view s) {
  if (s == "end_point") return GambleKind::end_point;
  if (s == "adjacent") return GambleKind::adjacent;
  throw std::invalid_argument("unknown gamble kind: " + std::string(s));
}

// One elicited utility U(c). For end-point points with method mle/bayes,
// u == utility_from_omega(c, omega). Adjacent points carry the offset fitted
// on the prize-normalized scale, so that identity does not apply to them.
struct UtilityPoint {
  double c = 0.5;
  double u = 0.5;
  Offset omega{0.0};
  RiskDisposition disposition = RiskDisposition::neutral;
  EstimationMethod method = EstimationMethod::mle;
  GambleKind basis = GambleKind::end_point;
  bool at_bound = false;
};

}  // namespace chance
