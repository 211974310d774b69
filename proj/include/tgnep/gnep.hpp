#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tgnep/feasible.hpp"
#include "tgnep/fnspace.hpp"
#include "tgnep/profile.hpp"

namespace tgnep {

// Inner ascent ran out of steps before certifying the requested accuracy.
// Carries the best point seen so the caller can report honestly.
class InnerStallError : public std::runtime_error {
 public:
  InnerStallError(const std::string& msg, Trajectory best, double value,
                  double gap)
      : std::runtime_error(msg), best_point(std::move(best)),
        best_value(value), certified_gap(gap) {}

  Trajectory best_point;
  double best_value = 0.0;
  double certified_gap = std::numeric_limits<double>::infinity();
};

// Payoff of one player as a function of own strategy and rivals.
// Exactly one of the two specializations is set:
//   linear_weight : payoff is <<linear_weight(rivals), own>>
//   gradient      : payoff is smooth concave in own strategy; gradient uses
//                   the duality convention f(y + e*phi) ~ f(y) + e*<<g, phi>>.
struct Objective {
  std::function<double(const Trajectory&, const Rivals&)> value;
  std::function<Trajectory(const Rivals&)> linear_weight;
  std::function<Trajectory(const Trajectory&, const Rivals&)> gradient;

  bool is_linear() const { return static_cast<bool>(linear_weight); }

  static Objective linear(std::function<Trajectory(const Rivals&)> weight) {
    Objective o;
    o.linear_weight = std::move(weight);
    o.value = [w = o.linear_weight](const Trajectory& own, const Rivals& rv) {
      return inner_product(w(rv), own);
    };
    o.gradient = [w = o.linear_weight](const Trajectory&, const Rivals& rv) {
      return w(rv);
    };
    return o;
  }

  static Objective concave(
      std::function<double(const Trajectory&, const Rivals&)> value,
      std::function<Trajectory(const Trajectory&, const Rivals&)> gradient) {
    Objective o;
    o.value = std::move(value);
    o.gradient = std::move(gradient);
    return o;
  }
};

struct PlayerSpec {
  std::string name;
  int dim = 1;
  Objective objective;
  FeasibleSet feasible;
};

struct GnepInstance {
  TimeGrid grid;
  std::vector<PlayerSpec> players;

  int player_count() const { return static_cast<int>(players.size()); }

  void require_profile_shape(const StrategyProfile& x) const {
    if (x.player_count() != player_count())
      throw ShapeError("profile has wrong player count");
    if (!(x.grid() == grid)) throw ShapeError("profile grid mismatch");
    for (int nu = 0; nu < player_count(); ++nu)
      if (x.block(nu).dim() != players[nu].dim)
        throw ShapeError("block " + std::to_string(nu) + " has wrong dimension");
  }
};

struct BestResponse {
  Trajectory point;
  double value = 0.0;
  double certified_gap = 0.0;  // upper bound on sup - value
  int inner_iterations = 0;
};

namespace detail {

// Projected gradient ascent with Barzilai-Borwein step seeding, monotone
// Armijo backtracking along the projection arc, and a Frank-Wolfe optimality
// certificate: for concave f, sup f - f(y) <= max_z <<g(y), z - y>>.
inline BestResponse pga_maximize(
    const ResolvedSet& set,
    const std::function<double(const Trajectory&)>& f,
    const std::function<Trajectory(const Trajectory&)>& grad,
    const Trajectory& start, double eps, int max_steps = 50000) {
  Trajectory y = set.project(start);
  double fy = f(y);
  double sigma = 1.0;
  std::optional<Trajectory> prev_y, prev_g;
  double best_fw = std::numeric_limits<double>::infinity();

  for (int step = 0; step < max_steps; ++step) {
    Trajectory g = grad(y);
    auto [z, lin] = set.maximize_linear(g);
    double fw = lin - inner_product(g, y);
    best_fw = std::min(best_fw, std::max(fw, 0.0));
    if (fw <= eps)
      return {std::move(y), fy, std::max(fw, 0.0), step};

    if (prev_y && prev_g) {
      Trajectory s = y - *prev_y;
      Trajectory d = g - *prev_g;
      double denom = -inner_product(s, d);
      double num = inner_product(s, s);
      if (denom > 0.0 && num > 0.0)
        sigma = std::clamp(num / denom, 1e-8, 1e8);
      else
        sigma = std::min(sigma * 2.0, 1e8);
    }
    prev_y = y;
    prev_g = g;

    bool accepted = false;
    for (int halving = 0; halving < 70; ++halving) {
      Trajectory yt = set.project(y + sigma * g);
      Trajectory dmove = yt - y;
      double decr = inner_product(g, dmove);
      if (decr <= 0.0) {
        // An exact projection gives decr > 0 off stationary points, but the
        // iterative projection loses accuracy at large steps; shrink instead
        // of treating the arc as flat.
        sigma *= 0.5;
        continue;
      }
      double ft = f(yt);
      if (ft >= fy + 0.1 * decr) {
        y = std::move(yt);
        fy = ft;
        accepted = true;
        break;
      }
      sigma *= 0.5;
    }
    if (!accepted) {
      // No ascent direction survives backtracking; fw is the honest bound.
      if (fw <= 64.0 * eps + 1e-13)
        return {std::move(y), fy, std::max(fw, 0.0), step};
      throw InnerStallError("inner ascent stalled before certifying", y, fy, fw);
    }
  }
  throw InnerStallError("inner ascent hit the step limit", y, fy, best_fw);
}

}  // namespace detail

// Best response of player nu against fixed rivals. `warm` seeds the search;
// linear objectives over boxes are solved exactly. Linear objectives over the
// scaled simplex return the warm point unchanged when it is already within
// eps_inner of the supremum, and otherwise a unit projected-ascent step
// project(warm + w). That step is a fixed point exactly when the warm point
// attains the supremum, and unlike a vertex move it varies continuously with
// the rivals, so the damped iteration cannot bounce between vertices.
// certified_gap always reports sup minus the achieved value.
inline BestResponse best_response(const GnepInstance& inst, int nu,
                                  const Rivals& rivals, double eps_inner,
                                  const Trajectory* warm = nullptr) {
  if (nu < 0 || nu >= inst.player_count())
    throw std::invalid_argument("best_response: player index out of range");
  if (eps_inner <= 0.0)
    throw std::invalid_argument("best_response: eps_inner must be positive");
  const PlayerSpec& player = inst.players[nu];
  ResolvedSet set = player.feasible.resolve(rivals);

  if (player.objective.is_linear()) {
    Trajectory w = player.objective.linear_weight(rivals);
    auto [vertex, sup] = set.maximize_linear(w);
    if (set.kind == ResolvedSet::Kind::scaled_simplex) {
      Trajectory base = warm ? set.project(*warm) : set.anchor();
      double v = inner_product(w, base);
      if (v >= sup - eps_inner) return {std::move(base), v, sup - v, 0};
      Trajectory point = set.project(base + w);
      double pv = inner_product(w, point);
      return {std::move(point), pv, sup - pv, 1};
    }
    return {std::move(vertex), sup, 0.0, 0};
  }

  auto f = [&](const Trajectory& y) { return player.objective.value(y, rivals); };
  auto g = [&](const Trajectory& y) { return player.objective.gradient(y, rivals); };
  Trajectory start = warm ? *warm : set.anchor();
  return detail::pga_maximize(set, f, g, start, eps_inner);
}

// Certified upper bound on sup_theta_nu - theta_nu(x) for one player. For
// linear objectives the supremum is exact; for concave ones the returned
// best-response value may undershoot by at most eps_inner.
struct GapDetail {
  double total = 0.0;
  std::vector<double> per_player;
};

inline GapDetail ni_gap_detail(const GnepInstance& inst,
                               const StrategyProfile& x, double eps_inner) {
  inst.require_profile_shape(x);
  GapDetail out;
  out.per_player.resize(inst.player_count(), 0.0);
  for (int nu = 0; nu < inst.player_count(); ++nu) {
    auto [own, rivals] = split(x, nu);
    const PlayerSpec& player = inst.players[nu];
    ResolvedSet set = player.feasible.resolve(rivals);
    MembershipReport mem = set.contains(own, 1e-7);
    if (!mem.ok)
      throw FeasibilityError("ni_gap: player " + std::to_string(nu) + " (" +
                             player.name + ") holds an infeasible strategy: " +
                             mem.violations.front().what);
    double own_value = player.objective.value(own, rivals);
    double sup_value;
    if (player.objective.is_linear()) {
      sup_value = set.maximize_linear(player.objective.linear_weight(rivals)).second;
    } else {
      auto f = [&](const Trajectory& y) { return player.objective.value(y, rivals); };
      auto g = [&](const Trajectory& y) { return player.objective.gradient(y, rivals); };
      sup_value = detail::pga_maximize(set, f, g, own, eps_inner).value;
    }
    out.per_player[nu] = std::max(0.0, sup_value - own_value);
    out.total += out.per_player[nu];
  }
  return out;
}

inline double ni_gap(const GnepInstance& inst, const StrategyProfile& x,
                     double eps_inner) {
  return ni_gap_detail(inst, x, eps_inner).total;
}

enum class UpdateOrder { jacobi, gauss_seidel };

struct SolverSchedule {
  double lambda0 = 0.3;   // damping at iteration 0
  double decay = 0.0;     // lambda_t = lambda0 / (1 + decay * t)
  int max_iters = 5000;
  double eps_gap = 1e-6;
  double eps_inner = 1e-9;
  UpdateOrder order = UpdateOrder::jacobi;

  void validate() const {
    if (!(lambda0 > 0.0) || lambda0 > 1.0)
      throw std::invalid_argument("SolverSchedule: lambda0 must lie in (0, 1]");
    if (decay < 0.0) throw std::invalid_argument("SolverSchedule: decay must be >= 0");
    if (max_iters < 1) throw std::invalid_argument("SolverSchedule: max_iters must be >= 1");
    if (!(eps_gap > 0.0)) throw std::invalid_argument("SolverSchedule: eps_gap must be > 0");
    if (!(eps_inner > 0.0)) throw std::invalid_argument("SolverSchedule: eps_inner must be > 0");
  }
};

struct IterationRecord {
  int iter = 0;
  double gap = 0.0;       // certified equilibrium gap at the iterate
  double residual = 0.0;  // norm of the profile change produced by the sweep
  double lambda = 0.0;
};

struct SolveResult {
  StrategyProfile profile;
  bool converged = false;
  int iterations = 0;
  double gap = std::numeric_limits<double>::infinity();
  double residual = 0.0;
  double start_projection_distance = 0.0;
  std::vector<IterationRecord> trace;
};

namespace detail {

// Pull every rival-dependent block back into its (moved) strategy set.
// Ordering is fixed so reruns are bit-identical.
inline void reproject_profile(const GnepInstance& inst, StrategyProfile& x) {
  for (int nu = 0; nu < inst.player_count(); ++nu) {
    const PlayerSpec& player = inst.players[nu];
    ResolvedSet set = player.feasible.resolve(Rivals(x, nu));
    if (!set.contains(x.block(nu), 1e-10).ok)
      x.set_block(nu, set.project(x.block(nu)));
  }
}

}  // namespace detail

// Damped fixed-point iteration on the combined best-response map. Inner
// best responses are solved loosely far from equilibrium (0.1 * current gap,
// floored at the scheduled eps_inner), which keeps early sweeps cheap and is
// harmless: convergence is always declared from a gap certified at the
// scheduled eps_inner. Non-convergence is an outcome, not an error; the best
// iterate seen is returned.
inline SolveResult solve(const GnepInstance& inst, const StrategyProfile& x0,
                         const SolverSchedule& sched) {
  sched.validate();
  inst.require_profile_shape(x0);

  StrategyProfile x = x0;
  double start_dist = 0.0;
  for (int nu = 0; nu < inst.player_count(); ++nu) {
    ResolvedSet set = inst.players[nu].feasible.resolve(Rivals(x, nu));
    if (!set.contains(x.block(nu), 1e-10).ok) {
      Trajectory proj = set.project(x.block(nu));
      start_dist = std::max(start_dist, norm(proj - x.block(nu)));
      x.set_block(nu, std::move(proj));
    }
  }
  // A block projected early may have fallen out of its set again once later
  // blocks moved (budget-style coupling); settle with one more pass.
  detail::reproject_profile(inst, x);

  SolveResult res;
  res.profile = x;
  res.start_projection_distance = start_dist;

  StrategyProfile best = x;
  double best_gap = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < sched.max_iters; ++iter) {
    GapDetail gd = ni_gap_detail(inst, x, sched.eps_inner);
    double lambda = sched.lambda0 / (1.0 + sched.decay * iter);

    if (gd.total < best_gap) {
      best_gap = gd.total;
      best = x;
    }
    if (gd.total <= sched.eps_gap) {
      res.profile = x;
      res.converged = true;
      res.iterations = iter;
      res.gap = gd.total;
      res.residual = res.trace.empty() ? 0.0 : res.trace.back().residual;
      res.trace.push_back({iter, gd.total, res.residual, lambda});
      return res;
    }

    double eps_iter = std::max(sched.eps_inner, std::min(1e-2, 0.1 * gd.total));
    StrategyProfile prev = x;
    if (sched.order == UpdateOrder::jacobi) {
      std::vector<Trajectory> updated;
      updated.reserve(inst.player_count());
      for (int nu = 0; nu < inst.player_count(); ++nu) {
        Rivals rivals(prev, nu);
        const Trajectory& own = prev.block(nu);
        BestResponse br = best_response(inst, nu, rivals, eps_iter, &own);
        updated.push_back(combine(lambda, br.point, own));
      }
      x = StrategyProfile(std::move(updated));
    } else {
      for (int nu = 0; nu < inst.player_count(); ++nu) {
        Rivals rivals(x, nu);
        const Trajectory& own = x.block(nu);
        BestResponse br = best_response(inst, nu, rivals, eps_iter, &own);
        x.set_block(nu, combine(lambda, br.point, own));
      }
    }
    detail::reproject_profile(inst, x);

    double residual = 0.0;
    for (int nu = 0; nu < inst.player_count(); ++nu) {
      double d = norm(x.block(nu) - prev.block(nu));
      residual += d * d;
    }
    residual = std::sqrt(residual);
    res.trace.push_back({iter, gd.total, residual, lambda});
  }

  // Step budget exhausted: evaluate the final iterate, then report the best.
  GapDetail gd = ni_gap_detail(inst, x, sched.eps_inner);
  if (gd.total < best_gap) {
    best_gap = gd.total;
    best = x;
  }
  res.profile = best;
  res.converged = best_gap <= sched.eps_gap;
  res.iterations = sched.max_iters;
  res.gap = best_gap;
  res.residual = res.trace.empty() ? 0.0 : res.trace.back().residual;
  return res;
}

}  // namespace tgnep
