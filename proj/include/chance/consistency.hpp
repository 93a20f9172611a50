#pragma once

// Turning individually elicited utility points into a coherent curve:
// monotone repair by isotonic regression, and the triplet log-odds least
// squares fit for answers elicited against pairs of already-scaled outcomes.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "chance/utility_point.hpp"

namespace chance {

// Weighted pool-adjacent-violators: the non-decreasing sequence minimizing
// sum w_i (x_i - y_i)^2.
inline std::vector<double> isotonic_regression(std::span<const double> y, std::span<const double> w = {}) {
  if (!w.empty() && w.size() != y.size()) throw std::invalid_argument("isotonic_regression: weight count mismatch");
  struct Block {
    double mean, weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  blocks.reserve(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    if (!(wi > 0.0)) throw std::invalid_argument("isotonic_regression: weights must be positive");
    blocks.push_back({y[i], wi, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      const Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      const double wsum = a.weight + b.weight;
      a.mean = (a.weight * a.mean + b.weight * b.mean) / wsum;
      a.weight = wsum;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean);
  return out;
}

// Collapses points sharing a c into one point whose u is their mean.
// Returns the merged points and the number of originals behind each.
struct MergedPoints {
  std::vector<UtilityPoint> points;
  std::vector<double> weights;
};

inline MergedPoints merge_ties(std::vector<UtilityPoint> points) {
  std::stable_sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.c < b.c; });
  MergedPoints out;
  for (const auto& p : points) {
    if (!out.points.empty() && out.points.back().c == p.c) {
      auto& q = out.points.back();
      double& n = out.weights.back();
      q.u = (q.u * n + p.u) / (n + 1.0);
      n += 1.0;
      q.omega = Offset(std::clamp(q.u - q.c, -1.0, 1.0));
      q.disposition = risk_disposition(q.omega);
      q.method = EstimationMethod::adjusted;
    } else {
      out.points.push_back(p);
      out.weights.push_back(1.0);
    }
  }
  return out;
}

// Monotone (non-decreasing in c) least-squares projection of the u values.
// Points whose value moves are re-labelled as adjusted, with omega = u - c.
inline std::vector<UtilityPoint> isotonic_adjust(std::span<const UtilityPoint> points,
                                                 std::span<const double> weights = {}) {
  for (std::size_t i = 1; i < points.size(); ++i)
    if (!(points[i].c > points[i - 1].c))
      throw std::invalid_argument("isotonic_adjust: points must have strictly increasing c (merge ties first)");
  std::vector<double> u(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) u[i] = points[i].u;
  const auto fitted = isotonic_regression(u, weights);

  std::vector<UtilityPoint> out(points.begin(), points.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = std::clamp(fitted[i], 0.0, 1.0);
    if (v == out[i].u) continue;
    out[i].u = v;
    out[i].omega = Offset(std::clamp(v - out[i].c, -1.0, 1.0));
    out[i].disposition = risk_disposition(out[i].omega);
    out[i].method = EstimationMethod::adjusted;
  }
  return out;
}

// Sure c_m against a gamble paying U(c_k) with chance p, U(c_i) otherwise.
// Indices address the extended grid 0..n+1 where 0 is c=0 (U=0) and n+1 is
// c=1 (U=1); 1..n are the interior sure values.
struct TripletGamble {
  std::size_t i, m, k;
  double p;
};

struct TripletFit {
  std::vector<double> u;  // interior utilities U_1..U_n
  double objective = 0.0;
  int iterations = 0;
};

class TripletFitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline double log_sum_exp(std::span<const double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - top);
  return top + std::log(s);
}

}  // namespace detail

// Least-squares fit of interior utilities to triplet log-odds,
//   sum over triplets [logit(p) - log((U_m - U_i) / (U_k - U_m))]^2,
// with U_0 = 0 and U_{n+1} = 1. The n+1 gaps between consecutive utilities
// are a softmax of (0, z_1..z_n), so strict ordering holds for every z and
// each residual is logit(p) - [lse(z[i..m)) - lse(z[m..k))]. Solved with
// Levenberg-Marquardt on the analytic Jacobian, started from U(c) = c.
inline TripletFit nl_triplet_fit(std::span<const double> interior_c, std::span<const TripletGamble> triplets) {
  const std::size_t n = interior_c.size();
  if (n == 0) throw std::invalid_argument("nl_triplet_fit: no interior points");
  for (std::size_t j = 0; j < n; ++j) {
    if (!(interior_c[j] > 0.0 && interior_c[j] < 1.0)) throw std::invalid_argument("nl_triplet_fit: c must be interior");
    if (j > 0 && !(interior_c[j] > interior_c[j - 1]))
      throw std::invalid_argument("nl_triplet_fit: c must be strictly increasing");
  }
  std::set<std::size_t> covered;
  for (const auto& t : triplets) {
    if (!(t.i < t.m && t.m < t.k && t.k <= n + 1)) throw std::invalid_argument("nl_triplet_fit: triplet needs i < m < k <= n+1");
    if (!(t.p > 0.0 && t.p < 1.0)) throw std::invalid_argument("nl_triplet_fit: triplet p must be interior");
    covered.insert({t.i, t.m, t.k});
  }
  for (std::size_t j = 1; j <= n; ++j)
    if (!covered.contains(j))
      throw TripletFitError("nl_triplet_fit: under-determined, U at index " + std::to_string(j) + " appears in no triplet");

  const std::size_t T = triplets.size();
  // z has n+1 entries with z[0] pinned at 0; the free parameters are z[1..n].
  std::vector<double> z(n + 1, 0.0);
  {
    double prev = 0.0;
    std::vector<double> gaps(n + 1);
    for (std::size_t j = 0; j < n; ++j) gaps[j] = interior_c[j] - prev, prev = interior_c[j];
    gaps[n] = 1.0 - prev;
    for (std::size_t j = 1; j <= n; ++j) z[j] = std::log(gaps[j] / gaps[0]);
  }

  auto residuals = [&](const std::vector<double>& zz, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(static_cast<Eigen::Index>(T));
    if (J) J->setZero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < T; ++t) {
      const auto& g = triplets[t];
      const std::span<const double> lower(zz.data() + g.i, g.m - g.i);
      const std::span<const double> upper(zz.data() + g.m, g.k - g.m);
      const double l_lo = detail::log_sum_exp(lower), l_hi = detail::log_sum_exp(upper);
      r[static_cast<Eigen::Index>(t)] = std::log(g.p / (1.0 - g.p)) - (l_lo - l_hi);
      if (!J) continue;
      for (std::size_t s = g.i; s < g.m; ++s)
        if (s > 0) (*J)(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s - 1)) -= std::exp(zz[s] - l_lo);
      for (std::size_t s = g.m; s < g.k; ++s)
        if (s > 0) (*J)(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s - 1)) += std::exp(zz[s] - l_hi);
    }
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  residuals(z, r, &J);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  bool converged = false;
  int it = 0;
  constexpr int kMaxIterations = 500;
  for (; it < kMaxIterations; ++it) {
    const Eigen::VectorXd grad = J.transpose() * r;
    if (cost < 1e-30 || grad.lpNorm<Eigen::Infinity>() < 1e-13) {
      converged = true;
      break;
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    bool stepped = false;
    while (lambda < 1e12) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal().array() += lambda * (JtJ.diagonal().array() + 1e-12);
      const Eigen::VectorXd delta = A.ldlt().solve(-grad);
      std::vector<double> trial = z;
      for (std::size_t s = 0; s < n; ++s) trial[s + 1] += delta[static_cast<Eigen::Index>(s)];
      Eigen::VectorXd r_trial;
      residuals(trial, r_trial, nullptr);
      const double trial_cost = r_trial.squaredNorm();
      if (std::isfinite(trial_cost) && trial_cost <= cost) {
        const bool tiny = delta.lpNorm<Eigen::Infinity>() < 1e-14;
        z = std::move(trial);
        residuals(z, r, &J);
        cost = r.squaredNorm();
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (tiny) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) {
      converged = true;  // no descent direction left at machine precision
      break;
    }
    if (converged) break;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "nl_triplet_fit: no convergence after " << it << " iterations, residual sum of squares " << cost;
    throw TripletFitError(msg.str());
  }

  TripletFit out;
  out.iterations = it;
  out.objective = cost;
  const double total = detail::log_sum_exp(z);
  double acc = 0.0;
  out.u.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    acc += std::exp(z[j] - total);
    out.u[j] = acc;
  }
  return out;
}

// Interior triplet utilities as adjusted utility points.
inline std::vector<UtilityPoint> triplet_points(std::span<const double> interior_c, const TripletFit& fit) {
  std::vector<UtilityPoint> out;
  for (std::size_t j = 0; j < interior_c.size(); ++j) {
    UtilityPoint p;
    p.c = interior_c[j];
    p.u = fit.u[j];
    p.omega = Offset(std::clamp(p.u - p.c, -1.0, 1.0));
    p.disposition = risk_disposition(p.omega);
    p.method = EstimationMethod::adjusted;
    out.push_back(p);
  }
  return out;
}

}  // namespace chance
