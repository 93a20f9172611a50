#pragma once

// Closed-form utilities of a survival probability (reliability) F̄ at a
// mission time x, the cost disutility of buying reliability, and
// expected-utility decision making over a finite action set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace chance {

struct ReliabilityContext {
  double fbar = 0.5;    // reliability at mission time x
  double x = 1.0;       // mission time
  double beta_u = 1.0;  // archetype exponent parameter; beta_u == x is risk neutral
  double delta = 0.1;   // disutility scale

  void validate() const {
    if (!(fbar >= 0.0 && fbar <= 1.0)) throw std::invalid_argument("ReliabilityContext: fbar outside [0,1]");
    if (!(x > 0.0)) throw std::invalid_argument("ReliabilityContext: x must be positive");
    if (!(beta_u > 0.0)) throw std::invalid_argument("ReliabilityContext: beta_u must be positive");
    if (!(delta > 0.0)) throw std::invalid_argument("ReliabilityContext: delta must be positive");
  }
};

// F̄^(beta_u / x). Concave (above the diagonal) when beta_u < x.
inline double archetypal_utility(const ReliabilityContext& ctx) {
  ctx.validate();
  if (ctx.fbar == 0.0) return 0.0;
  return std::pow(ctx.fbar, ctx.beta_u / ctx.x);
}

struct Disutility {
  double value;
  bool saturated;  // fbar == 1: cost diverges, value is the limit 1
};

// 1 - exp(-delta F̄ / (1 - F̄)).
inline Disutility cost_disutility(const ReliabilityContext& ctx) {
  ctx.validate();
  if (ctx.fbar == 1.0) return {1.0, true};
  return {-std::expm1(-ctx.delta * ctx.fbar / (1.0 - ctx.fbar)), false};
}

struct OmnibusUtility {
  double value;  // may be negative
  bool saturated;
};

inline OmnibusUtility omnibus_utility(const ReliabilityContext& ctx) {
  const auto dis = cost_disutility(ctx);
  return {archetypal_utility(ctx) - dis.value, dis.saturated};
}

struct Outcome {
  double probability;
  double utility;
};

class DecisionProblem {
 public:
  explicit DecisionProblem(std::vector<std::vector<Outcome>> actions) : actions_(std::move(actions)) {
    if (actions_.empty()) throw std::invalid_argument("DecisionProblem: no actions");
    for (const auto& a : actions_) {
      if (a.empty()) throw std::invalid_argument("DecisionProblem: action without outcomes");
      double total = 0.0;
      for (const auto& o : a) {
        if (!(o.probability >= 0.0)) throw std::invalid_argument("DecisionProblem: negative probability");
        if (!(o.utility >= 0.0 && o.utility <= 1.0)) throw std::invalid_argument("DecisionProblem: utility outside [0,1]");
        total += o.probability;
      }
      if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("DecisionProblem: probabilities do not sum to 1");
    }
  }

  std::size_t size() const { return actions_.size(); }
  std::span<const Outcome> outcomes(std::size_t action) const { return actions_.at(action); }

 private:
  std::vector<std::vector<Outcome>> actions_;
};

inline double expected_utility(std::span<const Outcome> outcomes) {
  double s = 0.0;
  for (const auto& o : outcomes) s += o.probability * o.utility;
  return s;
}

inline double expected_utility(const DecisionProblem& problem, std::size_t action) {
  return expected_utility(problem.outcomes(action));
}

// Index of the action with maximal expected utility; ties go to the lowest index.
inline std::size_t best_action(const DecisionProblem& problem) {
  std::size_t best = 0;
  double best_eu = expected_utility(problem, 0);
  for (std::size_t a = 1; a < problem.size(); ++a)
    if (const double eu = expected_utility(problem, a); eu > best_eu) best = a, best_eu = eu;
  return best;
}

struct PriorNode {
  double theta;
  double weight;
};

// P(X >= x) = sum over nodes of F̄(x | theta) * weight, with weights summing to 1.
inline double survivability(const std::function<double(double)>& fbar_of_theta, std::span<const PriorNode> prior) {
  if (prior.empty()) throw std::invalid_argument("survivability: empty prior");
  double total = 0.0;
  for (const auto& n : prior) {
    if (!(n.weight >= 0.0)) throw std::invalid_argument("survivability: negative prior weight");
    total += n.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("survivability: prior weights are not normalized");
  double s = 0.0;
  for (const auto& n : prior) {
    const double f = fbar_of_theta(n.theta);
    if (!(f >= 0.0 && f <= 1.0)) throw std::domain_error("survivability: survival function left [0,1]");
    s += n.weight * f;
  }
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace chance
