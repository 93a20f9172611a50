#pragma once

// Command-line front end: fit, simulate, curves, replay. run_cli is the
// whole program minus main(), so tests drive it in-process.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "chance/delimited.hpp"
#include "chance/elicitation.hpp"
#include "chance/estimation.hpp"
#include "chance/session_io.hpp"
#include "chance/simulator.hpp"
#include "chance/utility_forms.hpp"

namespace chance::cli {

struct FitOptions {
  std::string data;
  std::string method = "mle";
  bool isotonic = false;
  double prior_shape = 2.0;
  double prior_rate = 2.0;
  std::string out;
  std::string posterior_dir;
};

struct SimulateOptions {
  double alpha = 1.0;
  double beta = 1.0;
  std::vector<double> c_grid;
  std::vector<double> p_grid;
  std::size_t n = 1;
  std::uint64_t seed = 0;
  std::string out;
};

struct CurvesOptions {
  std::string kind = "archetypal";
  double beta_u = 1.0;
  double x = 1.0;
  double delta = 0.1;
  double alpha = 1.0;
  double beta = 1.0;
  std::size_t steps = 100;
  std::vector<double> fbar;
  std::string out;
};

struct ReplayOptions {
  std::string session;
  std::string method = "mle";
  bool isotonic = false;
  std::string out;
  std::string answers_out;
};

namespace detail {

inline void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
    out.flush();
    return;
  }
  write_file_atomic(path, content);
}

inline EstimationConfig estimation_config(const std::string& method, double shape, double rate) {
  EstimationConfig cfg;
  cfg.method = parse_method(method);
  cfg.prior_alpha = GammaPrior(shape, rate);
  cfg.prior_beta = GammaPrior(shape, rate);
  return cfg;
}

}  // namespace detail

inline int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  std::ifstream in(o.data);
  if (!in) {
    err << "error: cannot open " << o.data << '\n';
    return 1;
  }
  std::vector<ChoiceObservation> obs;
  try {
    obs = read_dataset(in);
  } catch (const ParseError& e) {
    err << "error: " << o.data << ": " << e.what() << '\n';
    return 1;
  }
  const auto cfg = detail::estimation_config(o.method, o.prior_shape, o.prior_rate);
  std::vector<UtilityPoint> pts;
  for (const auto& data : group_by_c(obs)) {
    try {
      const auto est = estimate_utility(data, cfg);
      if (est.point.at_bound)
        err << "warning: c=" << format_number(data.c()) << ": likelihood maximum on the parameter box edge (alpha="
            << format_number(est.fit->alpha_hat) << ", beta=" << format_number(est.fit->beta_hat) << ")\n";
      pts.push_back(est.point);
      if (!o.posterior_dir.empty() && cfg.method == EstimationMethod::bayes) {
        std::ostringstream ps;
        write_posterior(ps, posterior_grid(data, cfg.prior_alpha, cfg.prior_beta, cfg.grid));
        std::filesystem::create_directories(o.posterior_dir);
        write_file_atomic(std::filesystem::path(o.posterior_dir) / ("posterior_c" + format_number(data.c()) + ".csv"),
                          ps.str());
      }
    } catch (const std::exception& e) {
      err << "error: estimation failed at c=" << format_number(data.c()) << ": " << e.what() << '\n';
      return 1;
    }
  }
  if (o.isotonic) pts = isotonic_adjust(pts);
  std::ostringstream os;
  write_curve(os, pts, CurveExtra::flag);
  detail::emit(o.out, os.str(), out);
  return 0;
}

inline int cmd_simulate(const SimulateOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const SyntheticSubject subject{ChoiceParams(o.alpha, o.beta), o.seed};
    const auto schedule = grid_schedule(o.c_grid, o.p_grid, o.n);
    const auto obs = simulate_observations(subject, schedule);
    std::ostringstream os;
    write_dataset(os, obs);
    detail::emit(o.out, os.str(), out);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

inline int cmd_curves(const CurvesOptions& o, std::ostream& out, std::ostream& err) {
  std::ostringstream os;
  try {
    if (o.kind == "choice") {
      const ChoiceParams params(o.alpha, o.beta);
      if (o.steps < 1) throw std::invalid_argument("--steps must be at least 1");
      os << "p_minus_c,probability\n";
      for (std::size_t i = 0; i <= o.steps; ++i) {
        const double d = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(o.steps);
        const double c = std::clamp((1.0 - d) / 2.0, 0.0, 1.0), p = std::clamp((1.0 + d) / 2.0, 0.0, 1.0);
        os << format_number(d) << ',' << format_number(choice_prob(params, GamblePoint(c, p))) << '\n';
      }
    } else if (o.kind == "archetypal" || o.kind == "omnibus") {
      std::vector<double> lattice = o.fbar;
      if (lattice.empty()) {
        if (o.steps < 1) throw std::invalid_argument("--steps must be at least 1");
        for (std::size_t i = 0; i <= o.steps; ++i)
          lattice.push_back(static_cast<double>(i) / static_cast<double>(o.steps));
      }
      const bool omnibus = o.kind == "omnibus";
      os << (omnibus ? "fbar,utility,disutility,omnibus\n" : "fbar,utility\n");
      for (double f : lattice) {
        const ReliabilityContext ctx{f, o.x, o.beta_u, o.delta};
        os << format_number(f) << ',' << format_number(archetypal_utility(ctx));
        if (omnibus) {
          const auto d = cost_disutility(ctx);
          os << ',' << format_number(d.value) << ',' << format_number(omnibus_utility(ctx).value);
        }
        os << '\n';
      }
    } else {
      throw std::invalid_argument("unknown curve kind: " + o.kind);
    }
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  detail::emit(o.out, os.str(), out);
  return 0;
}

inline int cmd_replay(const ReplayOptions& o, std::ostream& out, std::ostream& err) {
  try {
    const Session s = load_session(o.session);
    EstimationConfig cfg = s.config().bootstrap;
    cfg.method = parse_method(o.method);
    const auto u = s.compute_utilities(cfg, o.isotonic);
    std::vector<UtilityPoint> all = u.end_point;
    for (const auto& p : u.adjacent)
      if (p.basis == GambleKind::adjacent) all.push_back(p);
    std::ostringstream os;
    write_curve(os, all, CurveExtra::basis);
    if (!o.answers_out.empty()) {
      std::ostringstream as;
      write_dataset(as, s.answer_log(GambleKind::end_point));
      write_file_atomic(o.answers_out, as.str());
    }
    detail::emit(o.out, os.str(), out);
  } catch (const SchemaVersionError& e) {
    err << "error: version: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Utility-of-chance elicitation: fit, simulate, curves, replay", "chance"};
  app.require_subcommand(1);

  FitOptions fit;
  auto* f = app.add_subcommand("fit", "Fit per-c utilities from a c,p,y dataset");
  f->add_option("--data", fit.data, "Input dataset (c,p,y)")->required()->check(CLI::ExistingFile);
  f->add_option("--method", fit.method, "mle or bayes")->check(CLI::IsMember({"mle", "bayes"}));
  f->add_flag("--isotonic", fit.isotonic, "Apply monotone repair to the fitted curve");
  f->add_option("--prior-shape", fit.prior_shape, "Gamma prior shape for alpha and beta")->check(CLI::PositiveNumber);
  f->add_option("--prior-rate", fit.prior_rate, "Gamma prior rate for alpha and beta")->check(CLI::PositiveNumber);
  f->add_option("--posterior-dir", fit.posterior_dir, "Also write alpha,beta,weight posteriors here (bayes)");
  f->add_option("--out", fit.out, "Output curve (c,u,omega,disposition,method,flag)")->required();

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "Sample answers from a synthetic subject");
  s->add_option("--alpha", sim.alpha)->required()->check(CLI::PositiveNumber);
  s->add_option("--beta", sim.beta)->required()->check(CLI::PositiveNumber);
  s->add_option("--c-grid", sim.c_grid, "Comma-separated sure values")->required()->delimiter(',');
  s->add_option("--p-grid", sim.p_grid, "Comma-separated gamble chances")->required()->delimiter(',');
  s->add_option("--n", sim.n, "Answers per (c, p) pair")->check(CLI::PositiveNumber);
  s->add_option("--seed", sim.seed);
  s->add_option("--out", sim.out)->required();

  CurvesOptions cur;
  auto* c = app.add_subcommand("curves", "Emit utility-form or choice-probability curves");
  c->add_option("--kind", cur.kind)->required()->check(CLI::IsMember({"archetypal", "omnibus", "choice"}));
  c->add_option("--beta-u", cur.beta_u, "Archetype exponent parameter")->check(CLI::PositiveNumber);
  c->add_option("--x", cur.x, "Mission time")->check(CLI::PositiveNumber);
  c->add_option("--delta", cur.delta, "Cost disutility scale")->check(CLI::PositiveNumber);
  c->add_option("--alpha", cur.alpha)->check(CLI::PositiveNumber);
  c->add_option("--beta", cur.beta)->check(CLI::PositiveNumber);
  c->add_option("--steps", cur.steps, "Lattice intervals");
  c->add_option("--fbar", cur.fbar, "Explicit fbar lattice")->delimiter(',')->check(CLI::Range(0.0, 1.0));
  c->add_option("--out", cur.out, "Output file (default stdout)");

  ReplayOptions rep;
  auto* r = app.add_subcommand("replay", "Recompute estimates from a saved session");
  r->add_option("--session", rep.session)->required()->check(CLI::ExistingFile);
  r->add_option("--method", rep.method)->check(CLI::IsMember({"mle", "bayes"}));
  r->add_flag("--isotonic", rep.isotonic);
  r->add_option("--out", rep.out, "Output curve (default stdout)");
  r->add_option("--answers-out", rep.answers_out, "Also export end-point answers as c,p,y");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;  // --help is not an error
  }

  if (*f) return cmd_fit(fit, out, err);
  if (*s) return cmd_simulate(sim, out, err);
  if (*c) return cmd_curves(cur, out, err);
  return cmd_replay(rep, out, err);
}

}  // namespace chance::cli
