#pragma once

// Synthetic decision makers that answer from the choice model with known
// parameters, and recovery experiments measuring how well the estimators get
// the indifference offset back.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "chance/choice_model.hpp"
#include "chance/estimation.hpp"
#include "chance/rng.hpp"

namespace chance {

struct SyntheticSubject {
  ChoiceParams params;
  std::uint64_t seed = 0;
};

// Every (c, p) pair `repeats` times, c-major.
inline std::vector<GamblePoint> grid_schedule(std::span<const double> c_grid, std::span<const double> p_grid,
                                              std::size_t repeats = 1) {
  std::vector<GamblePoint> out;
  for (double c : c_grid)
    for (double p : p_grid)
      for (std::size_t r = 0; r < repeats; ++r) out.emplace_back(c, p);
  return out;
}

// n_per_c questions per sure value, cycling through the p grid.
inline std::vector<GamblePoint> cyclic_schedule(std::span<const double> c_grid, std::span<const double> p_grid,
                                                std::size_t n_per_c) {
  if (p_grid.empty()) throw std::invalid_argument("cyclic_schedule: empty p grid");
  std::vector<GamblePoint> out;
  for (double c : c_grid)
    for (std::size_t k = 0; k < n_per_c; ++k) out.emplace_back(c, p_grid[k % p_grid.size()]);
  return out;
}

// One answer per schedule entry, in schedule order; y ~ Bernoulli(choice_prob).
inline std::vector<ChoiceObservation> simulate_observations(const SyntheticSubject& subject,
                                                            std::span<const GamblePoint> schedule) {
  Rng rng(subject.seed);
  std::vector<ChoiceObservation> out;
  out.reserve(schedule.size());
  for (const auto& g : schedule) {
    if (!g.interior()) throw std::invalid_argument("simulate_choices: schedule points must be interior");
    out.emplace_back(g.c(), g.p(), rng.bernoulli(choice_prob(subject.params, g)) ? 1 : 0);
  }
  return out;
}

inline std::vector<ChoiceDataset> simulate_choices(const SyntheticSubject& subject,
                                                   std::span<const GamblePoint> schedule) {
  const auto obs = simulate_observations(subject, schedule);
  return group_by_c(obs);
}

struct RecoveryRow {
  double c = 0.0;
  double true_omega = 0.0;
  double mean_omega = 0.0;
  double mean_abs_error = 0.0;
};

struct MethodRecovery {
  EstimationMethod method = EstimationMethod::mle;
  std::vector<RecoveryRow> rows;
  double mean_abs_error = 0.0;  // over all c and seeds
  std::size_t failures = 0;
};

struct RecoveryReport {
  ChoiceParams true_params{1.0, 1.0};
  double true_omega = 0.0;
  std::size_t n_per_c = 0;
  std::size_t n_seeds = 0;
  std::vector<MethodRecovery> methods;

  const MethodRecovery& for_method(EstimationMethod m) const {
    for (const auto& r : methods)
      if (r.method == m) return r;
    throw std::out_of_range("RecoveryReport: method not run");
  }
};

struct RecoveryOptions {
  std::vector<EstimationMethod> methods{EstimationMethod::mle, EstimationMethod::bayes};
  EstimationConfig estimation{};
  std::uint64_t base_seed = 0;
  unsigned threads = 0;  // 0: hardware concurrency
};

// For seeds base_seed .. base_seed + n_seeds - 1: simulate n_per_c answers at
// each c (p cycling over p_grid), estimate omega per c and method, and compare
// with the closed-form omega of the true parameters.
inline RecoveryReport recovery_experiment(const ChoiceParams& truth, std::span<const double> c_grid,
                                          std::span<const double> p_grid, std::size_t n_per_c, std::size_t n_seeds,
                                          const RecoveryOptions& opt = {}) {
  if (c_grid.empty() || n_per_c == 0 || n_seeds == 0) throw std::invalid_argument("recovery_experiment: empty design");
  const auto schedule = cyclic_schedule(c_grid, p_grid, n_per_c);
  const double truth_omega = solve_omega(truth).value();
  const std::size_t nm = opt.methods.size(), nc = c_grid.size();

  // estimates[seed][method][c]; NaN marks a failed estimate
  std::vector<double> est(n_seeds * nm * nc, std::nan(""));
  auto run_seed = [&](std::size_t s) {
    const auto data = simulate_choices({truth, opt.base_seed + s}, schedule);
    for (std::size_t m = 0; m < nm; ++m) {
      auto cfg = opt.estimation;
      cfg.method = opt.methods[m];
      for (std::size_t ci = 0; ci < nc; ++ci) {
        try {
          est[(s * nm + m) * nc + ci] = estimate_offset(data[ci], cfg).first.value();
        } catch (const std::exception&) {
        }
      }
    }
  };

  unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_seeds));
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t s = t; s < n_seeds; s += threads) run_seed(s);
      });
  }

  RecoveryReport rep{truth, truth_omega, n_per_c, n_seeds, {}};
  for (std::size_t m = 0; m < nm; ++m) {
    MethodRecovery mr;
    mr.method = opt.methods[m];
    double err_all = 0.0;
    std::size_t ok_all = 0;
    for (std::size_t ci = 0; ci < nc; ++ci) {
      RecoveryRow row;
      row.c = c_grid[ci];
      row.true_omega = truth_omega;
      std::size_t ok = 0;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const double w = est[(s * nm + m) * nc + ci];
        if (std::isnan(w)) {
          ++mr.failures;
          continue;
        }
        row.mean_omega += w;
        row.mean_abs_error += std::abs(w - truth_omega);
        ++ok;
      }
      if (ok > 0) row.mean_omega /= static_cast<double>(ok), err_all += row.mean_abs_error,
                  row.mean_abs_error /= static_cast<double>(ok);
      ok_all += ok;
      mr.rows.push_back(row);
    }
    mr.mean_abs_error = ok_all ? err_all / static_cast<double>(ok_all) : std::nan("");
    rep.methods.push_back(std::move(mr));
  }
  return rep;
}

}  // namespace chance
