#pragma once

// Fitting the choice model to binary answers collected at one sure value c:
// maximum likelihood, a gamma-prior posterior on a grid, and the Bayes
// indifference offset obtained by averaging the model over that posterior.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "chance/choice_model.hpp"
#include "chance/detail/nelder_mead.hpp"
#include "chance/utility_point.hpp"

namespace chance {

struct ChoiceObservation {
  double c;
  double p;
  int y;  // 1 = took the gamble

  ChoiceObservation(double c_, double p_, int y_) : c(c_), p(p_), y(y_) {
    if (!(c > 0.0 && c < 1.0) || near_zero(c) || near_one(c))
      throw std::invalid_argument("ChoiceObservation: c must be strictly inside (0,1), got " + std::to_string(c));
    if (!(p > 0.0 && p < 1.0) || near_zero(p) || near_one(p))
      throw std::invalid_argument("ChoiceObservation: p must be strictly inside (0,1), got " + std::to_string(p));
    if (y != 0 && y != 1) throw std::invalid_argument("ChoiceObservation: y must be 0 or 1");
  }
};

// Answers for a single sure value c.
class ChoiceDataset {
 public:
  ChoiceDataset(double c, std::vector<ChoiceObservation> obs) : c_(c), obs_(std::move(obs)) {
    if (obs_.empty()) throw std::invalid_argument("ChoiceDataset: no observations");
    for (const auto& o : obs_)
      if (o.c != c_) throw std::invalid_argument("ChoiceDataset: observation c differs from dataset c");
  }

  double c() const { return c_; }
  std::span<const ChoiceObservation> observations() const { return obs_; }
  std::size_t size() const { return obs_.size(); }

  ChoiceDataset concat(const ChoiceDataset& other) const {
    if (other.c_ != c_) throw std::invalid_argument("ChoiceDataset::concat: datasets have different c");
    auto all = obs_;
    all.insert(all.end(), other.obs_.begin(), other.obs_.end());
    return ChoiceDataset(c_, std::move(all));
  }

 private:
  double c_;
  std::vector<ChoiceObservation> obs_;
};

// Splits a flat list into per-c datasets, ordered by increasing c.
inline std::vector<ChoiceDataset> group_by_c(std::span<const ChoiceObservation> obs) {
  std::map<double, std::vector<ChoiceObservation>> by_c;
  for (const auto& o : obs) by_c[o.c].push_back(o);
  std::vector<ChoiceDataset> out;
  for (auto& [c, v] : by_c) out.emplace_back(c, std::move(v));
  return out;
}

// Gamma(shape, rate); rate is the reciprocal of the scale.
struct GammaPrior {
  double shape = 2.0;
  double rate = 2.0;

  GammaPrior() = default;
  GammaPrior(double shape_, double rate_) : shape(shape_), rate(rate_) {
    if (!(shape > 0.0) || !(rate > 0.0)) throw std::invalid_argument("GammaPrior: shape and rate must be positive");
  }

  double log_density(double x) const {
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
  }
  double mean() const { return shape / rate; }
};

struct FitBox {
  double alpha_lo = 0.05, alpha_hi = 20.0;
  double beta_lo = 0.05, beta_hi = 20.0;

  void validate() const {
    if (!(alpha_lo > 0.0 && alpha_lo < alpha_hi && beta_lo > 0.0 && beta_lo < beta_hi))
      throw std::invalid_argument("FitBox: bounds must satisfy 0 < lo < hi");
  }
};

struct FitResult {
  double alpha_hat = 1.0;
  double beta_hat = 1.0;
  double log_likelihood = 0.0;
  bool converged = false;
  bool at_bound = false;

  ChoiceParams params() const { return {alpha_hat, beta_hat}; }
};

namespace detail {

// Answers pooled by distinct p: the likelihood only depends on these counts.
struct Tally {
  double d;  // p - c
  double yes;
  double no;
};

inline std::vector<Tally> tally(const ChoiceDataset& data) {
  std::map<double, std::pair<double, double>> counts;
  for (const auto& o : data.observations()) {
    auto& [yes, no] = counts[o.p];
    (o.y == 1 ? yes : no) += 1.0;
  }
  std::vector<Tally> out;
  out.reserve(counts.size());
  for (const auto& [p, yn] : counts) out.push_back({p - data.c(), yn.first, yn.second});
  return out;
}

// log Pi and log(1 - Pi) for one distinct p.
struct LogProbs {
  double log_pi;
  double log_not_pi;
  double log_base;  // log of ((1 + sgn(d)|d|^alpha)/2)
};

inline LogProbs log_probs(double d, double alpha, double beta) {
  const double base = 0.5 * (1.0 + sgn(d) * std::pow(std::abs(d), alpha));
  const double log_base = std::log(base);
  const double log_pi = beta * log_base;
  const double log_not_pi = log_pi == -std::numeric_limits<double>::infinity() ? 0.0 : std::log(-std::expm1(log_pi));
  return {log_pi, log_not_pi, log_base};
}

inline double tally_log_likelihood(std::span<const Tally> t, double alpha, double beta) {
  double ll = 0.0;
  for (const auto& g : t) {
    const auto lp = log_probs(g.d, alpha, beta);
    if (g.yes > 0.0) ll += g.yes * lp.log_pi;
    if (g.no > 0.0) ll += g.no * lp.log_not_pi;
  }
  return ll;
}

inline std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) v[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

}  // namespace detail

// Bernoulli log-likelihood of the answers. Returns -inf when some answer has
// model probability exactly zero (for example an extreme beta underflowing).
inline double log_likelihood(const ChoiceParams& params, const ChoiceDataset& data) {
  const auto t = detail::tally(data);
  return detail::tally_log_likelihood(t, params.alpha(), params.beta());
}

struct LikelihoodGradient {
  double d_alpha;
  double d_beta;
};

// Analytic gradient of log_likelihood with respect to (alpha, beta).
inline LikelihoodGradient log_likelihood_gradient(const ChoiceParams& params, const ChoiceDataset& data) {
  const double alpha = params.alpha(), beta = params.beta();
  LikelihoodGradient g{0.0, 0.0};
  for (const auto& t : detail::tally(data)) {
    const auto lp = detail::log_probs(t.d, alpha, beta);
    // d log Pi / d theta
    const double dlp_dbeta = lp.log_base;
    double dlp_dalpha = 0.0;
    if (t.d != 0.0) {
      const double ad = std::abs(t.d);
      const double dbase = 0.5 * sgn(t.d) * std::pow(ad, alpha) * std::log(ad);
      dlp_dalpha = beta * dbase / std::exp(lp.log_base);
    }
    // d log(1 - Pi) / d theta = -(Pi / (1 - Pi)) d log Pi / d theta
    const double odds = std::exp(lp.log_pi - lp.log_not_pi);
    const double weight = t.yes - t.no * odds;
    g.d_alpha += weight * dlp_dalpha;
    g.d_beta += weight * dlp_dbeta;
  }
  return g;
}

// Maximum likelihood within `box`: a 16x16 log-spaced scan seeds a
// Nelder-Mead search in log-parameter space, restarted until it stops moving.
// Convergence is judged on the log parameters at 1e-8, i.e. relative 1e-8.
inline FitResult fit_mle(const ChoiceDataset& data, const FitBox& box = {},
                         std::optional<ChoiceParams> start = std::nullopt) {
  box.validate();
  const auto t = detail::tally(data);
  auto nll = [&](const std::vector<double>& x) { return -detail::tally_log_likelihood(t, std::exp(x[0]), std::exp(x[1])); };

  const std::vector<double> lo{std::log(box.alpha_lo), std::log(box.beta_lo)};
  const std::vector<double> hi{std::log(box.alpha_hi), std::log(box.beta_hi)};

  constexpr std::size_t kScan = 16;
  const auto as = detail::log_spaced(box.alpha_lo, box.alpha_hi, kScan);
  const auto bs = detail::log_spaced(box.beta_lo, box.beta_hi, kScan);
  std::vector<double> best{std::log(as[0]), std::log(bs[0])};
  double best_val = nll(best);
  for (double a : as)
    for (double b : bs) {
      std::vector<double> x{std::log(a), std::log(b)};
      const double v = nll(x);
      if (v < best_val) best_val = v, best = x;
    }
  if (start) {
    std::vector<double> x{std::clamp(std::log(start->alpha()), lo[0], hi[0]),
                          std::clamp(std::log(start->beta()), lo[1], hi[1])};
    if (const double v = nll(x); v < best_val) best_val = v, best = x;
  }

  std::vector<double> step{0.5 * (hi[0] - lo[0]) / (kScan - 1), 0.5 * (hi[1] - lo[1]) / (kScan - 1)};
  detail::SimplexResult res;
  res.x = best;
  res.value = best_val;
  bool converged = false;
  for (int restart = 0; restart < 6; ++restart) {
    auto next = detail::nelder_mead(nll, res.x, step, lo, hi);
    const bool moved = std::abs(next.x[0] - res.x[0]) > 1e-8 || std::abs(next.x[1] - res.x[1]) > 1e-8;
    if (next.value <= res.value) res = std::move(next);
    converged = res.converged;
    if (restart > 0 && !moved) break;
    step = {0.05, 0.05};
  }

  FitResult out;
  out.alpha_hat = std::exp(res.x[0]);
  out.beta_hat = std::exp(res.x[1]);
  out.log_likelihood = -res.value;
  out.converged = converged;
  constexpr double kEdge = 1e-6;
  out.at_bound = res.x[0] - lo[0] <= kEdge || hi[0] - res.x[0] <= kEdge || res.x[1] - lo[1] <= kEdge ||
                 hi[1] - res.x[1] <= kEdge;
  return out;
}

struct GridConfig {
  double alpha_min = 0.01, alpha_max = 20.0;
  double beta_min = 0.01, beta_max = 20.0;
  std::size_t alpha_nodes = 80, beta_nodes = 80;
};

// Discretized joint posterior over (alpha, beta); weights are row-major with
// alpha as the row index and sum to 1.
class PosteriorGrid {
 public:
  PosteriorGrid(std::vector<double> alpha_nodes, std::vector<double> beta_nodes, std::vector<double> weights)
      : alpha_(std::move(alpha_nodes)), beta_(std::move(beta_nodes)), w_(std::move(weights)) {
    if (alpha_.empty() || beta_.empty()) throw std::invalid_argument("PosteriorGrid: empty axis");
    if (w_.size() != alpha_.size() * beta_.size()) throw std::invalid_argument("PosteriorGrid: weight count mismatch");
    check_axis(alpha_, "alpha");
    check_axis(beta_, "beta");
    double total = 0.0;
    for (double w : w_) {
      if (!(w >= 0.0)) throw std::invalid_argument("PosteriorGrid: negative or NaN weight");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-6) throw std::invalid_argument("PosteriorGrid: weights do not sum to 1");
  }

  static PosteriorGrid point_mass(const ChoiceParams& at) { return {{at.alpha()}, {at.beta()}, {1.0}}; }

  const std::vector<double>& alpha_nodes() const { return alpha_; }
  const std::vector<double>& beta_nodes() const { return beta_; }
  const std::vector<double>& weights() const { return w_; }
  double weight(std::size_t ia, std::size_t ib) const { return w_[ia * beta_.size() + ib]; }

  double total() const {
    double s = 0.0;
    for (double w : w_) s += w;
    return s;
  }

  double mean_alpha() const {
    double s = 0.0;
    for (std::size_t i = 0; i < alpha_.size(); ++i)
      for (std::size_t j = 0; j < beta_.size(); ++j) s += weight(i, j) * alpha_[i];
    return s;
  }

  double mean_beta() const {
    double s = 0.0;
    for (std::size_t i = 0; i < alpha_.size(); ++i)
      for (std::size_t j = 0; j < beta_.size(); ++j) s += weight(i, j) * beta_[j];
    return s;
  }

  // Node carrying the largest weight.
  ChoiceParams mode() const {
    const auto k = static_cast<std::size_t>(std::max_element(w_.begin(), w_.end()) - w_.begin());
    return {alpha_[k / beta_.size()], beta_[k % beta_.size()]};
  }

 private:
  static void check_axis(const std::vector<double>& v, const char* name) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!(v[i] > 0.0)) throw std::invalid_argument(std::string("PosteriorGrid: non-positive ") + name + " node");
      if (i > 0 && !(v[i] > v[i - 1]))
        throw std::invalid_argument(std::string("PosteriorGrid: ") + name + " nodes not strictly increasing");
    }
  }

  std::vector<double> alpha_;
  std::vector<double> beta_;
  std::vector<double> w_;
};

// Posterior under independent gamma priors, evaluated on a log-spaced grid.
// Each node's mass is prior density x likelihood x node value per axis (the
// dx = x d(log x) volume of a log-spaced cell). Everything stays in log space
// until a max-shift right before normalization.
inline PosteriorGrid posterior_grid(const ChoiceDataset& data, const GammaPrior& prior_alpha = {},
                                    const GammaPrior& prior_beta = {}, const GridConfig& grid = {}) {
  if (!(grid.alpha_min > 0.0 && grid.alpha_min < grid.alpha_max && grid.beta_min > 0.0 &&
        grid.beta_min < grid.beta_max && grid.alpha_nodes >= 2 && grid.beta_nodes >= 2))
    throw std::invalid_argument("posterior_grid: invalid grid configuration");
  const auto t = detail::tally(data);
  auto as = detail::log_spaced(grid.alpha_min, grid.alpha_max, grid.alpha_nodes);
  auto bs = detail::log_spaced(grid.beta_min, grid.beta_max, grid.beta_nodes);

  std::vector<double> logw(as.size() * bs.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < as.size(); ++i) {
    const double la = prior_alpha.log_density(as[i]) + std::log(as[i]);
    for (std::size_t j = 0; j < bs.size(); ++j) {
      const double lb = prior_beta.log_density(bs[j]) + std::log(bs[j]);
      const double v = la + lb + detail::tally_log_likelihood(t, as[i], bs[j]);
      logw[i * bs.size() + j] = v;
      if (v > top) top = v;
    }
  }
  if (!std::isfinite(top)) throw std::domain_error("posterior_grid: likelihood vanishes on every grid node");

  double total = 0.0;
  for (double& v : logw) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : logw) v /= total;
  return {std::move(as), std::move(bs), std::move(logw)};
}

struct BisectionOptions {
  double tol = 1e-8;
  int max_iterations = 60;
};

// Bayes offset: the omega at which the posterior-averaged choice probability
// equals 1/2, found by bisection on [-1, 1].
inline Offset solve_omega_bayes(const PosteriorGrid& posterior, const BisectionOptions& opt = {}) {
  struct Node {
    double alpha, beta, w;
  };
  std::vector<Node> nodes;
  const auto& as = posterior.alpha_nodes();
  const auto& bs = posterior.beta_nodes();
  for (std::size_t i = 0; i < as.size(); ++i)
    for (std::size_t j = 0; j < bs.size(); ++j)
      if (const double w = posterior.weight(i, j); w > 0.0) nodes.push_back({as[i], bs[j], w});

  auto excess = [&](double omega) {
    double s = 0.0;
    for (const auto& n : nodes) s += n.w * (signed_power_prob(omega, n.alpha, n.beta) - 0.5);
    return s;
  };

  double lo = -1.0, hi = 1.0;
  const double f_lo = excess(lo), f_hi = excess(hi);
  if (sgn(f_lo) == sgn(f_hi)) throw std::logic_error("solve_omega_bayes: no sign change on [-1, 1]");
  if (f_lo == 0.0) return Offset(lo);
  if (f_hi == 0.0) return Offset(hi);
  const int s_lo = sgn(f_lo);
  for (int it = 0; it < opt.max_iterations && hi - lo > opt.tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double f = excess(mid);
    if (f == 0.0) return Offset(mid);
    (sgn(f) == s_lo ? lo : hi) = mid;
  }
  return Offset(0.5 * (lo + hi));
}

struct EstimationConfig {
  EstimationMethod method = EstimationMethod::mle;
  GammaPrior prior_alpha{};
  GammaPrior prior_beta{};
  FitBox box{};
  GridConfig grid{};
};

struct UtilityEstimate {
  UtilityPoint point;
  std::optional<FitResult> fit;    // MLE path
  std::optional<ChoiceParams> posterior_mean;  // Bayes path
};

// Offset for one dataset by the configured method, without mapping to a
// utility. Shared by the end-point and adjacent paths.
inline std::pair<Offset, UtilityEstimate> estimate_offset(const ChoiceDataset& data, const EstimationConfig& cfg) {
  UtilityEstimate est;
  est.point.c = data.c();
  est.point.method = cfg.method;
  if (cfg.method == EstimationMethod::mle) {
    const auto fit = fit_mle(data, cfg.box);
    est.fit = fit;
    est.point.at_bound = fit.at_bound;
    return {solve_omega(fit.params()), est};
  }
  if (cfg.method == EstimationMethod::bayes) {
    const auto post = posterior_grid(data, cfg.prior_alpha, cfg.prior_beta, cfg.grid);
    est.posterior_mean = ChoiceParams(post.mean_alpha(), post.mean_beta());
    return {solve_omega_bayes(post), est};
  }
  throw std::invalid_argument("estimate_offset: method must be mle or bayes");
}

// U(c) for one sure value from end-point answers.
inline UtilityEstimate estimate_utility(const ChoiceDataset& data, const EstimationConfig& cfg = {}) {
  auto [omega, est] = estimate_offset(data, cfg);
  est.point.omega = omega;
  est.point.u = utility_from_omega(data.c(), omega);
  est.point.disposition = risk_disposition(omega);
  est.point.basis = GambleKind::end_point;
  return est;
}

}  // namespace chance
