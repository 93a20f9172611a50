#pragma once

// Elicitation sessions: the schedule of binary gambles put to one decision
// maker, the answers received, and the utilities they imply.
//
// End-point gambles pay 1 with chance p, else 0. Adjacent gambles pay the
// utilities of neighbouring sure values, so they are built up from an anchor:
// the median c of the grid is first elicited with end-point gambles, then
// each remaining interval of the grid is bisected, and the midpoint's gambles
// pay the utilities of the interval ends (0 and 1 at the outer edges). An
// adjacent gamble is only offered once both prize utilities are estimated.
// If those estimates come out equal or inverted the block cannot be posed as
// adjacent gambles; it is put to the subject as end-point gambles instead
// (same ids and p values), and that c is then estimated like the anchor.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "chance/consistency.hpp"
#include "chance/estimation.hpp"
#include "chance/rng.hpp"
#include "chance/utility_point.hpp"

namespace chance {

enum class SessionMode { end_point, adjacent, mixed };

inline std::string_view to_string(SessionMode m) {
  switch (m) {
    case SessionMode::end_point: return "end_point";
    case SessionMode::adjacent: return "adjacent";
    case SessionMode::mixed: return "mixed";
  }
  return "end_point";
}

inline SessionMode parse_session_mode(std::string_view s) {
  if (s == "end_point") return SessionMode::end_point;
  if (s == "adjacent") return SessionMode::adjacent;
  if (s == "mixed") return SessionMode::mixed;
  throw std::invalid_argument("unknown session mode: " + std::string(s));
}

struct GambleSpec {
  std::string id;
  double c = 0.5;
  double p = 0.5;
  double prize_hi = 1.0;
  double prize_lo = 0.0;
  GambleKind kind = GambleKind::end_point;
};

struct AnsweredGamble {
  GambleSpec gamble;
  int y = 0;
  std::int64_t timestamp_ms = 0;  // informational only
};

class SessionError : public std::runtime_error {
 public:
  enum class Code { unknown_gamble, already_answered, not_available, invalid_answer, estimation_failed, replay_mismatch };

  SessionError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

struct SessionConfig {
  std::string id = "session";
  SessionMode mode = SessionMode::end_point;
  std::vector<double> c_grid;
  std::vector<std::vector<double>> end_point_p;  // one list per c
  std::vector<std::vector<double>> adjacent_p;   // one list per c
  std::uint64_t seed = 0;
  EstimationConfig bootstrap{};  // prices adjacent prizes while the session runs
};

// The grids used in the vehicle-reliability case study.
namespace case_study {
inline const std::vector<double> c_grid{0.5, 0.6, 0.7, 0.8, 0.9};
inline const std::vector<double> end_point_p{0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95};
inline const std::vector<double> adjacent_p{0.3, 0.4, 0.45, 0.5, 0.55, 0.6, 0.7};
}  // namespace case_study

inline std::vector<std::vector<double>> broadcast(std::size_t n, const std::vector<double>& grid) {
  return std::vector<std::vector<double>>(n, grid);
}

struct SessionUtilities {
  std::vector<UtilityPoint> end_point;
  std::vector<UtilityPoint> adjacent;  // includes the end-point anchor when present
  bool empty() const { return end_point.empty() && adjacent.empty(); }
};

struct StoredEstimates {
  EstimationMethod method = EstimationMethod::mle;
  bool isotonic = false;
  SessionUtilities utilities;
};

class Session {
 public:
  explicit Session(SessionConfig cfg) : cfg_(std::move(cfg)) {
    validate();
    plan_bootstrap();
    build_schedule();
  }

  const SessionConfig& config() const { return cfg_; }
  const std::string& id() const { return cfg_.id; }
  SessionMode mode() const { return cfg_.mode; }
  std::size_t total() const { return pending_.size() + answered_.size(); }
  std::size_t answered_count() const { return answered_.size(); }
  std::size_t pending_count() const { return pending_.size(); }
  bool complete() const { return pending_.empty(); }
  const std::vector<AnsweredGamble>& answered() const { return answered_; }
  const std::optional<StoredEstimates>& estimates() const { return estimates_; }
  void set_estimates(StoredEstimates e) { estimates_ = std::move(e); }

  // Pending gambles in presentation order; adjacent prizes are NaN until priced.
  std::vector<GambleSpec> pending() const {
    std::vector<GambleSpec> out;
    for (const auto& p : pending_) out.push_back(p.spec);
    return out;
  }

  // Index of the anchor c in the grid (lower median).
  std::size_t anchor_index() const { return anchor_; }

  // The first pending gamble that can be shown now, or nullopt when every
  // gamble has been answered. Does not remove it: record_choice does.
  std::optional<GambleSpec> next_gamble() {
    price_ready_blocks();
    for (const auto& p : pending_)
      if (p.priced) return p.spec;
    if (pending_.empty()) return std::nullopt;
    // Unreachable with the bootstrap order: the blocks a pending adjacent
    // gamble waits on are themselves pending and come first.
    throw std::logic_error("Session::next_gamble: pending gambles but none available");
  }

  void record_choice(std::string_view gamble_id, int y, std::optional<std::int64_t> timestamp_ms = std::nullopt) {
    if (y != 0 && y != 1) throw SessionError(SessionError::Code::invalid_answer, "answer must be 0 or 1");
    price_ready_blocks();
    auto it = std::find_if(pending_.begin(), pending_.end(), [&](const Pending& p) { return p.spec.id == gamble_id; });
    if (it == pending_.end()) {
      const bool seen = std::any_of(answered_.begin(), answered_.end(),
                                    [&](const AnsweredGamble& a) { return a.gamble.id == gamble_id; });
      if (seen) throw SessionError(SessionError::Code::already_answered, "gamble already answered: " + std::string(gamble_id));
      throw SessionError(SessionError::Code::unknown_gamble, "unknown gamble id: " + std::string(gamble_id));
    }
    if (!it->priced)
      throw SessionError(SessionError::Code::not_available,
                         "gamble not yet available (prize utilities pending): " + std::string(gamble_id));
    const auto ts = timestamp_ms ? *timestamp_ms
                                 : std::chrono::duration_cast<std::chrono::milliseconds>(
                                       std::chrono::system_clock::now().time_since_epoch())
                                       .count();
    answered_.push_back({it->spec, y, ts});
    pending_.erase(it);
  }

  // Utility of a grid index as used to price adjacent prizes, if known.
  std::optional<double> bootstrap_utility(std::size_t idx) const {
    if (auto it = bootstrap_u_.find(idx); it != bootstrap_u_.end()) return it->second;
    return std::nullopt;
  }

  // Per-c utilities by `cfg.method` from all answers so far. Adjacent points
  // are fitted on the prize-normalized sure value
  //   c~ = (c - c_lo) / (c_hi - c_lo),  p* = clamp(c~ + omega),
  //   U(c) = p* u_hi + (1 - p*) u_lo,
  // using the prizes the subject was actually shown.
  SessionUtilities compute_utilities(const EstimationConfig& cfg, bool isotonic = false) const {
    SessionUtilities out;
    for (std::size_t i = 0; i < n(); ++i) {
      const auto obs = observations(i, GambleKind::end_point);
      if (obs.empty()) continue;
      try {
        out.end_point.push_back(estimate_utility(ChoiceDataset(cfg_.c_grid[i], obs), cfg).point);
      } catch (const std::exception& e) {
        throw SessionError(SessionError::Code::estimation_failed,
                           "estimation failed at c=" + std::to_string(cfg_.c_grid[i]) + ": " + e.what());
      }
    }
    if (cfg_.mode != SessionMode::end_point) {
      for (std::size_t i = 0; i < n(); ++i) {
        if (i == anchor_ || fallback_.contains(i)) {
          for (const auto& p : out.end_point)
            if (p.c == cfg_.c_grid[i]) out.adjacent.push_back(p);
          continue;
        }
        try {
          if (auto p = adjacent_point(i, cfg)) out.adjacent.push_back(*p);
        } catch (const SessionError&) {
          throw;
        } catch (const std::exception& e) {
          throw SessionError(SessionError::Code::estimation_failed,
                             "estimation failed at c=" + std::to_string(cfg_.c_grid[i]) + ": " + e.what());
        }
      }
    }
    if (isotonic) {
      if (!out.end_point.empty()) out.end_point = isotonic_adjust(out.end_point);
      if (!out.adjacent.empty()) out.adjacent = isotonic_adjust(out.adjacent);
    }
    return out;
  }

  // Answers of one kind as a flat c,p,y list in answer order.
  std::vector<ChoiceObservation> answer_log(std::optional<GambleKind> kind = std::nullopt) const {
    std::vector<ChoiceObservation> out;
    for (const auto& a : answered_)
      if (!kind || a.gamble.kind == *kind) out.emplace_back(a.gamble.c, a.gamble.p, a.y);
    return out;
  }

 private:
  struct Pending {
    GambleSpec spec;
    std::size_t c_idx;
    bool priced;
  };

  // Interval ends of an adjacent c: grid indices, or the anchors 0 / 1.
  struct Bracket {
    std::ptrdiff_t lo;  // -1 means c = 0, U = 0
    std::ptrdiff_t hi;  // n means c = 1, U = 1
  };

  std::size_t n() const { return cfg_.c_grid.size(); }

  void validate() const {
    if (cfg_.c_grid.empty()) throw std::invalid_argument("Session: empty c grid");
    for (std::size_t i = 0; i < n(); ++i) {
      const double c = cfg_.c_grid[i];
      if (!(c > 0.0 && c < 1.0) || near_zero(c) || near_one(c))
        throw std::invalid_argument("Session: c grid values must be strictly inside (0,1)");
      if (i > 0 && !(c > cfg_.c_grid[i - 1])) throw std::invalid_argument("Session: c grid must be strictly increasing");
    }
    auto check = [&](const std::vector<std::vector<double>>& grids, const char* what) {
      if (grids.size() != n()) throw std::invalid_argument(std::string("Session: need one ") + what + " p grid per c");
      for (const auto& g : grids) {
        if (g.empty()) throw std::invalid_argument(std::string("Session: empty ") + what + " p grid");
        for (double p : g)
          if (!(p > 0.0 && p < 1.0) || near_zero(p) || near_one(p))
            throw std::invalid_argument("Session: p grid values must be strictly inside (0,1)");
      }
    };
    check(cfg_.end_point_p, "end-point");
    if (cfg_.mode != SessionMode::end_point) check(cfg_.adjacent_p, "adjacent");
  }

  void plan_bootstrap() {
    anchor_ = (n() - 1) / 2;
    if (cfg_.mode == SessionMode::end_point) return;
    std::deque<Bracket> todo{{-1, static_cast<std::ptrdiff_t>(anchor_)},
                             {static_cast<std::ptrdiff_t>(anchor_), static_cast<std::ptrdiff_t>(n())}};
    while (!todo.empty()) {
      const auto b = todo.front();
      todo.pop_front();
      if (b.hi - b.lo < 2) continue;
      const std::ptrdiff_t mid = b.lo + (b.hi - b.lo) / 2;
      brackets_[static_cast<std::size_t>(mid)] = b;
      order_.push_back(static_cast<std::size_t>(mid));
      todo.push_back({b.lo, mid});
      todo.push_back({mid, b.hi});
    }
  }

  std::string make_id(GambleKind kind, std::size_t ci, std::size_t pj) const {
    return std::string(kind == GambleKind::end_point ? "e-" : "a-") + std::to_string(ci) + "-" + std::to_string(pj);
  }

  void build_schedule() {
    Rng rng(cfg_.seed);
    std::vector<Pending> ends;
    for (std::size_t i = 0; i < n(); ++i) {
      if (cfg_.mode == SessionMode::adjacent && i != anchor_) continue;
      for (std::size_t j = 0; j < cfg_.end_point_p[i].size(); ++j)
        ends.push_back({{make_id(GambleKind::end_point, i, j), cfg_.c_grid[i], cfg_.end_point_p[i][j], 1.0, 0.0,
                         GambleKind::end_point},
                        i,
                        true});
    }
    rng.shuffle(std::span<Pending>(ends));
    pending_.assign(ends.begin(), ends.end());
    for (std::size_t i : order_) {
      std::vector<Pending> block;
      for (std::size_t j = 0; j < cfg_.adjacent_p[i].size(); ++j)
        block.push_back({{make_id(GambleKind::adjacent, i, j), cfg_.c_grid[i], cfg_.adjacent_p[i][j], std::nan(""),
                          std::nan(""), GambleKind::adjacent},
                         i,
                         false});
      rng.shuffle(std::span<Pending>(block));
      pending_.insert(pending_.end(), block.begin(), block.end());
    }
  }

  bool block_done(std::size_t idx, GambleKind kind) const {
    return std::none_of(pending_.begin(), pending_.end(),
                        [&](const Pending& p) { return p.c_idx == idx && p.spec.kind == kind; });
  }

  std::optional<double> ref_utility(std::ptrdiff_t ref) {
    if (ref < 0) return 0.0;
    if (ref >= static_cast<std::ptrdiff_t>(n())) return 1.0;
    const auto idx = static_cast<std::size_t>(ref);
    if (auto it = bootstrap_u_.find(idx); it != bootstrap_u_.end()) return it->second;
    double u = 0.0;
    if (idx == anchor_) {
      if (!block_done(idx, GambleKind::end_point)) return std::nullopt;
      u = estimate_utility(ChoiceDataset(cfg_.c_grid[idx], observations(idx, GambleKind::end_point)), cfg_.bootstrap)
              .point.u;
    } else if (fallback_.contains(idx)) {
      if (!block_done(idx, GambleKind::end_point)) return std::nullopt;
      u = estimate_utility(ChoiceDataset(cfg_.c_grid[idx], observations(idx, GambleKind::end_point)), cfg_.bootstrap)
              .point.u;
    } else {
      if (!block_done(idx, GambleKind::adjacent)) return std::nullopt;
      const auto p = adjacent_point(idx, cfg_.bootstrap);
      if (!p) return std::nullopt;
      u = p->u;
    }
    bootstrap_u_[idx] = u;
    return u;
  }

  void price_ready_blocks() {
    for (std::size_t idx : order_) {
      const auto& b = brackets_.at(idx);
      bool any_unpriced = false;
      for (const auto& p : pending_) any_unpriced |= (p.c_idx == idx && !p.priced);
      if (!any_unpriced) continue;
      const auto lo = ref_utility(b.lo);
      const auto hi = ref_utility(b.hi);
      if (!lo || !hi) continue;
      const bool degenerate = !(*hi > *lo);
      if (degenerate) fallback_.insert(idx);
      for (auto& p : pending_) {
        if (p.c_idx != idx || p.priced) continue;
        if (degenerate)
          p.spec.kind = GambleKind::end_point, p.spec.prize_lo = 0.0, p.spec.prize_hi = 1.0;
        else
          p.spec.prize_lo = *lo, p.spec.prize_hi = *hi;
        p.priced = true;
      }
    }
  }

  std::vector<ChoiceObservation> observations(std::size_t idx, GambleKind kind, double c_override = -1.0) const {
    std::vector<ChoiceObservation> out;
    const double c = c_override > 0.0 ? c_override : cfg_.c_grid[idx];
    for (const auto& a : answered_)
      if (a.gamble.kind == kind && a.gamble.c == cfg_.c_grid[idx]) out.emplace_back(c, a.gamble.p, a.y);
    return out;
  }

  double ref_c(std::ptrdiff_t ref) const {
    if (ref < 0) return 0.0;
    if (ref >= static_cast<std::ptrdiff_t>(n())) return 1.0;
    return cfg_.c_grid[static_cast<std::size_t>(ref)];
  }

  std::optional<UtilityPoint> adjacent_point(std::size_t idx, const EstimationConfig& cfg) const {
    const auto& b = brackets_.at(idx);
    const double c = cfg_.c_grid[idx];
    const double c_lo = ref_c(b.lo), c_hi = ref_c(b.hi);
    const double c_norm = (c - c_lo) / (c_hi - c_lo);
    std::optional<std::pair<double, double>> prizes;
    for (const auto& a : answered_) {
      if (a.gamble.kind != GambleKind::adjacent || a.gamble.c != c) continue;
      if (prizes && (prizes->first != a.gamble.prize_lo || prizes->second != a.gamble.prize_hi))
        throw SessionError(SessionError::Code::estimation_failed,
                           "adjacent answers at c=" + std::to_string(c) + " were given against different prizes");
      prizes = {a.gamble.prize_lo, a.gamble.prize_hi};
    }
    if (!prizes) return std::nullopt;
    const auto obs = observations(idx, GambleKind::adjacent, c_norm);
    auto [omega, est] = estimate_offset(ChoiceDataset(c_norm, obs), cfg);
    const double p_star = utility_from_omega(c_norm, omega);
    UtilityPoint pt = est.point;
    pt.c = c;
    pt.omega = omega;
    pt.disposition = risk_disposition(omega);
    pt.u = std::clamp(p_star * prizes->second + (1.0 - p_star) * prizes->first, 0.0, 1.0);
    pt.basis = GambleKind::adjacent;
    return pt;
  }

  SessionConfig cfg_;
  std::size_t anchor_ = 0;
  std::map<std::size_t, Bracket> brackets_;
  std::vector<std::size_t> order_;  // adjacent c indices in bootstrap order
  std::deque<Pending> pending_;
  std::vector<AnsweredGamble> answered_;
  std::map<std::size_t, double> bootstrap_u_;
  std::set<std::size_t> fallback_;  // adjacent blocks re-posed as end-point gambles
  std::optional<StoredEstimates> estimates_;
};

inline Session create_session(SessionConfig cfg) { return Session(std::move(cfg)); }

inline std::optional<GambleSpec> next_gamble(Session& s) { return s.next_gamble(); }

inline void record_choice(Session& s, std::string_view gamble_id, int y) { s.record_choice(gamble_id, y); }

inline SessionUtilities compute_session_utilities(const Session& s, const EstimationConfig& cfg, bool isotonic = false) {
  return s.compute_utilities(cfg, isotonic);
}

// Rebuilds a session from its configuration and answer log. Adjacent prizes
// are re-derived and must match the logged ones bit for bit.
inline Session replay(const SessionConfig& cfg, std::span<const AnsweredGamble> log) {
  Session s(cfg);
  for (const auto& a : log) {
    if (!s.complete()) s.next_gamble();  // prices any block whose prerequisites are answered
    const auto pend = s.pending();
    const auto it = std::find_if(pend.begin(), pend.end(), [&](const GambleSpec& g) { return g.id == a.gamble.id; });
    if (it != pend.end() && (it->kind != a.gamble.kind || it->c != a.gamble.c || it->p != a.gamble.p ||
                             it->prize_lo != a.gamble.prize_lo || it->prize_hi != a.gamble.prize_hi))
      throw SessionError(SessionError::Code::replay_mismatch, "logged gamble differs from schedule: " + a.gamble.id);
    s.record_choice(a.gamble.id, a.y, a.timestamp_ms);
  }
  return s;
}

}  // namespace chance
