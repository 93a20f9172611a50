#pragma once

// Probability-of-choice model for binary "sure c versus p-gamble" questions,
// and the closed-form indifference offset that turns a fitted model into a
// utility value.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chance {

// Inputs within this distance of 0 or 1 are treated as the boundary value.
inline constexpr double kBoundaryEps = 1e-12;

inline int sgn(double z) { return (z > 0.0) - (z < 0.0); }

inline bool near_zero(double v) { return std::abs(v) <= kBoundaryEps; }
inline bool near_one(double v) { return std::abs(v - 1.0) <= kBoundaryEps; }

// Discrimination / risk-attitude pair indexing the choice model.
//   alpha: larger means poorer discrimination between gambles.
//   beta:  < 1 risk prone, == 1 neutral, > 1 risk averse.
class ChoiceParams {
 public:
  ChoiceParams(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw std::invalid_argument("ChoiceParams: alpha must be positive, got " + std::to_string(alpha));
    if (!(beta > 0.0) || !std::isfinite(beta))
      throw std::invalid_argument("ChoiceParams: beta must be positive, got " + std::to_string(beta));
  }

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  friend bool operator==(const ChoiceParams&, const ChoiceParams&) = default;

 private:
  double alpha_;
  double beta_;
};

// A sure chance c offered against a gamble that wins with chance p.
class GamblePoint {
 public:
  GamblePoint(double c, double p) : c_(c), p_(p) {
    if (!(c >= 0.0 && c <= 1.0)) throw std::invalid_argument("GamblePoint: c outside [0,1]: " + std::to_string(c));
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("GamblePoint: p outside [0,1]: " + std::to_string(p));
  }

  double c() const { return c_; }
  double p() const { return p_; }
  bool interior() const { return !near_zero(c_) && !near_one(c_) && !near_zero(p_) && !near_one(p_); }

 private:
  double c_;
  double p_;
};

// Indifference offset omega = p - c at the 50% choice point.
class Offset {
 public:
  explicit Offset(double omega) : omega_(omega) {
    if (!(omega >= -1.0 && omega <= 1.0))
      throw std::invalid_argument("Offset: omega outside [-1,1]: " + std::to_string(omega));
  }
  double value() const { return omega_; }

 private:
  double omega_;
};

enum class RiskDisposition { prone, neutral, averse };

inline std::string_view to_string(RiskDisposition d) {
  switch (d) {
    case RiskDisposition::prone: return "prone";
    case RiskDisposition::neutral: return "neutral";
    case RiskDisposition::averse: return "averse";
  }
  return "neutral";
}

inline RiskDisposition parse_disposition(std::string_view s) {
  if (s == "prone") return RiskDisposition::prone;
  if (s == "neutral") return RiskDisposition::neutral;
  if (s == "averse") return RiskDisposition::averse;
  throw std::invalid_argument("unknown risk disposition: " + std::string(s));
}

// Signed-power core shared by the production model and the Bayes offset
// equation: ((1 + sgn(d)|d|^alpha) / 2)^beta.
inline double signed_power_prob(double d, double alpha, double beta) {
  const double base = 0.5 * (1.0 + sgn(d) * std::pow(std::abs(d), alpha));
  return std::pow(base, beta);
}

// Single-parameter linear model ((p - c + 1)/2)^beta. Interior points only.
inline double choice_prob_linear(double beta, const GamblePoint& g) {
  if (!(beta > 0.0)) throw std::invalid_argument("choice_prob_linear: beta must be positive");
  if (!g.interior())
    throw std::domain_error("choice_prob_linear: boundary gamble point; use choice_prob for boundaries");
  return std::pow((g.p() - g.c() + 1.0) / 2.0, beta);
}

// Two-parameter model (((p - c)^alpha + 1)/2)^beta. Kept because it is the
// natural extension of the linear model; it has no real value when p < c and
// alpha is not an integer, which is why choice_prob exists.
inline double choice_prob_penultimate(const ChoiceParams& params, const GamblePoint& g) {
  if (!g.interior())
    throw std::domain_error("choice_prob_penultimate: boundary gamble point; use choice_prob for boundaries");
  const double d = g.p() - g.c();
  const double a = params.alpha();
  double powered = 0.0;
  if (d >= 0.0) {
    powered = std::pow(d, a);
  } else if (a == std::floor(a)) {
    powered = std::pow(d, a);  // integral exponent of a negative base is real
  } else {
    throw std::domain_error("choice_prob_penultimate: (p - c) < 0 with non-integer alpha has no real value");
  }
  const double base = (powered + 1.0) / 2.0;
  if (base < 0.0) throw std::domain_error("choice_prob_penultimate: negative base for beta power");
  return std::pow(base, params.beta());
}

// Production choice model. Interior points use the signed-power form;
// boundary points follow rational choice: a sure 1 or a certain gamble
// settles the decision, and two identical certainties split evenly.
inline double choice_prob(const ChoiceParams& params, const GamblePoint& g) {
  const bool c0 = near_zero(g.c()), c1 = near_one(g.c());
  const bool p0 = near_zero(g.p()), p1 = near_one(g.p());
  if ((p0 && c0) || (p1 && c1)) return 0.5;
  if (p1) return 1.0;  // c < 1
  if (c1) return 0.0;  // p < 1
  if (p0) return 0.0;  // c > 0
  return signed_power_prob(g.p() - g.c(), params.alpha(), params.beta());
}

// Closed-form offset solving choice_prob(c, c + omega) = 1/2.
inline Offset solve_omega(const ChoiceParams& params) {
  const int s = sgn(params.beta() - 1.0);
  if (s == 0) return Offset(0.0);
  const double inner = s * (std::pow(2.0, 1.0 - 1.0 / params.beta()) - 1.0);
  double omega = s * std::pow(inner, 1.0 / params.alpha());
  // inner lies in (0,1); the clamp only absorbs last-ulp rounding.
  if (omega > 1.0) omega = 1.0;
  if (omega < -1.0) omega = -1.0;
  return Offset(omega);
}

// Utility of a sure c given its indifference offset, clamped to [0,1].
inline double utility_from_omega(double c, const Offset& omega) {
  if (!(c > 0.0 && c < 1.0)) throw std::invalid_argument("utility_from_omega: c must be interior");
  const double w = omega.value();
  if (w > 0.0) return std::min(1.0, c + w);
  if (w < 0.0) return std::max(0.0, c + w);
  return c;
}

inline RiskDisposition risk_disposition(const Offset& omega) {
  switch (sgn(omega.value())) {
    case -1: return RiskDisposition::prone;
    case 1: return RiskDisposition::averse;
    default: return RiskDisposition::neutral;
  }
}

}  // namespace chance
