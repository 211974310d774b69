#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "tgnep/economy.hpp"
#include "tgnep/gnep.hpp"

namespace tgnep {

struct Tolerances {
  double producer = 1e-8;
  double consumer = 1e-6;
  double price = 1e-6;
  double clearing = 1e-6;
  double walras = 1e-6;
  double membership = 1e-9;
  double inner = 1e-9;  // accuracy of certified consumer best responses
};

// Profit optimality gaps, one per producer, recomputed from closed forms
// (or a fresh LP when the production set carries cuts) rather than through
// the solver's best-response path.
inline std::vector<double> check_pp(const EconomyModel& m,
                                    const std::vector<Trajectory>& a_hat,
                                    const Trajectory& p_hat,
                                    double membership_tol = 1e-9) {
  std::vector<double> gaps;
  for (int j = 0; j < m.producer_count(); ++j) {
    ResolvedSet set = producer_resolved_set(m, j);
    MembershipReport mem = set.contains(a_hat.at(j), membership_tol);
    if (!mem.ok)
      throw FeasibilityError("check_pp: producer " + std::to_string(j + 1) +
                             " plan infeasible: " + mem.violations.front().what);
    double sup;
    if (m.producers[j].cuts.empty()) {
      double acc = 0.0;
      for (int k = 0; k < m.grid.intervals; ++k)
        for (int h = 0; h < m.commodities; ++h)
          acc += std::max(p_hat.value(k, h) * m.producers[j].lower.value(k, h),
                          p_hat.value(k, h) * m.producers[j].upper.value(k, h));
      sup = m.grid.dt() * acc;
    } else {
      sup = set.maximize_linear(p_hat).second;
    }
    gaps.push_back(std::max(0.0, sup - inner_product(p_hat, a_hat[j])));
  }
  return gaps;
}

// Utility optimality gaps, one per consumer, against a certified best
// response over the budget-and-cap set at the given plans and prices. The
// ascent starts at the candidate itself, so raw gaps are nonnegative by
// construction; clamping guards rounding only.
inline std::vector<double> check_cp(const EconomyModel& m,
                                    const std::vector<Trajectory>& a_hat,
                                    const std::vector<Trajectory>& b_hat,
                                    const Trajectory& p_hat,
                                    double eps_inner = 1e-9,
                                    double membership_tol = 1e-9) {
  double R = compute_R(m);
  std::vector<double> caps = truncated_consumption_bound(m, R);
  std::vector<double> gaps;
  for (int i = 0; i < m.consumer_count(); ++i) {
    ResolvedSet set = consumer_resolved_set(m, caps, i, a_hat, p_hat);
    MembershipReport mem = set.contains(b_hat.at(i), membership_tol);
    if (!mem.ok)
      throw FeasibilityError("check_cp: consumer " + std::to_string(i + 1) +
                             " bundle infeasible: " + mem.violations.front().what);
    const Consumer& c = m.consumers[i];
    double own = utility_value(c, b_hat[i]);
    double sup;
    if (const auto* lin = std::get_if<LinearUtility>(&c.utility)) {
      sup = set.maximize_linear(lin->weights).second;
    } else {
      auto f = [&](const Trajectory& y) { return utility_value(c, y); };
      auto g = [&](const Trajectory& y) { return utility_gradient(c, y); };
      sup = detail::pga_maximize(set, f, g, b_hat[i], eps_inner).value;
    }
    gaps.push_back(std::max(0.0, sup - own));
  }
  return gaps;
}

// Price-player gap: sup over the normalized price region of the value of
// excess demand is horizon * max_cell z, attained at a vertex.
inline double check_mp(const EconomyModel& m,
                       const std::vector<Trajectory>& a_hat,
                       const std::vector<Trajectory>& b_hat,
                       const Trajectory& p_hat,
                       double membership_tol = 1e-9) {
  MembershipReport mem = price_resolved_set(m).contains(p_hat, membership_tol);
  if (!mem.ok)
    throw FeasibilityError("check_mp: prices outside the normalized region: " +
                           mem.violations.front().what);
  Trajectory z = excess_demand(m, a_hat, b_hat);
  double zmax = -std::numeric_limits<double>::infinity();
  for (double v : z.flat()) zmax = std::max(zmax, v);
  double sup = m.grid.horizon * zmax;
  return std::max(0.0, sup - inner_product(p_hat, z));
}

// Signed clearing integrals per commodity: integral of excess demand over
// the horizon. Zero at equilibrium.
inline std::vector<double> check_market_clearing(
    const EconomyModel& m, const std::vector<Trajectory>& a_hat,
    const std::vector<Trajectory>& b_hat) {
  Trajectory z = excess_demand(m, a_hat, b_hat);
  std::vector<double> out(m.commodities, 0.0);
  for (int h = 0; h < m.commodities; ++h) out[h] = integral(z, h);
  return out;
}

struct WalrasCheck {
  double residual = 0.0;    // <<p, z>>
  bool applicable = false;  // two-sided zero residual claimed only when true
  std::string note;
};

// The orthogonality residual <<p, z>>. The two-sided zero form needs every
// consumer locally non-satiated at the candidate and the consumption caps
// slack; otherwise only the budget-side inequality residual <= tol is
// claimed and `applicable` is false.
inline WalrasCheck check_walras(const EconomyModel& m,
                                const std::vector<Trajectory>& a_hat,
                                const std::vector<Trajectory>& b_hat,
                                const Trajectory& p_hat) {
  WalrasCheck out;
  Trajectory z = excess_demand(m, a_hat, b_hat);
  out.residual = inner_product(p_hat, z);
  out.applicable = true;

  double R = compute_R(m);
  std::vector<double> caps = truncated_consumption_bound(m, R);
  for (int i = 0; i < m.consumer_count() && out.applicable; ++i) {
    const Consumer& c = m.consumers[i];
    const Trajectory& b = b_hat.at(i);
    // Cap slack: the truncation must not bind, else the candidate optimizes
    // the truncated problem and satiation wrt the caps is possible.
    if (m.truncation) {
      for (int h = 0; h < m.commodities; ++h) {
        if (integral(b, h) > caps[h] - 1e-6) {
          out.applicable = false;
          out.note = "consumer " + std::to_string(i + 1) +
                     " sits on the consumption cap of commodity " +
                     std::to_string(h + 1);
        }
      }
      if (!out.applicable) break;
    }
    // Local non-satiation: some box-admissible ascent direction remains.
    Trajectory g = utility_gradient(c, b);
    double norm_sq = 0.0;
    for (int k = 0; k < m.grid.intervals; ++k)
      for (int h = 0; h < m.commodities; ++h) {
        double gi = g.value(k, h);
        double lo_floor = c.lower.value(k, h);
        if (m.truncation) lo_floor = std::max(lo_floor, 0.0);
        double up_cap = caps.at(h) / m.grid.dt();
        bool blocked_up = b.value(k, h) >= up_cap - 1e-9;
        bool blocked_dn = b.value(k, h) <= lo_floor + 1e-9;
        double d = 0.0;
        if (gi > 0.0 && !blocked_up) d = gi;
        if (gi < 0.0 && !blocked_dn) d = gi;
        norm_sq += d * d * m.grid.dt();
      }
    if (std::sqrt(norm_sq) <= 1e-8) {
      out.applicable = false;
      out.note = "consumer " + std::to_string(i + 1) +
                 " is locally satiated at the candidate bundle";
    }
  }
  return out;
}

struct EquilibriumCertificate {
  bool accepted = false;
  std::vector<double> producer_gaps;
  std::vector<double> consumer_gaps;
  double price_gap = 0.0;
  std::vector<double> clearing;  // signed integrals
  double walras_residual = 0.0;
  bool walras_applicable = false;
  std::string walras_note;
  Tolerances tol;
  std::vector<std::string> failures;
};

inline EquilibriumCertificate certify(const EconomyModel& m,
                                      const std::vector<Trajectory>& a_hat,
                                      const std::vector<Trajectory>& b_hat,
                                      const Trajectory& p_hat,
                                      const Tolerances& tol = {}) {
  EquilibriumCertificate cert;
  cert.tol = tol;

  auto fail = [&](std::string why) { cert.failures.push_back(std::move(why)); };

  try {
    cert.producer_gaps = check_pp(m, a_hat, p_hat, tol.membership);
    for (int j = 0; j < m.producer_count(); ++j)
      if (cert.producer_gaps[j] > tol.producer)
        fail("producer " + std::to_string(j + 1) + " gap " +
             std::to_string(cert.producer_gaps[j]) + " exceeds tolerance");
  } catch (const FeasibilityError& e) {
    fail(e.what());
  }

  try {
    cert.consumer_gaps = check_cp(m, a_hat, b_hat, p_hat, tol.inner, tol.membership);
    for (int i = 0; i < m.consumer_count(); ++i)
      if (cert.consumer_gaps[i] > tol.consumer)
        fail("consumer " + std::to_string(i + 1) + " gap " +
             std::to_string(cert.consumer_gaps[i]) + " exceeds tolerance");
  } catch (const FeasibilityError& e) {
    fail(e.what());
  }

  try {
    cert.price_gap = check_mp(m, a_hat, b_hat, p_hat, tol.membership);
    if (cert.price_gap > tol.price)
      fail("price gap " + std::to_string(cert.price_gap) + " exceeds tolerance");
  } catch (const FeasibilityError& e) {
    fail(e.what());
  }

  cert.clearing = check_market_clearing(m, a_hat, b_hat);
  for (int h = 0; h < m.commodities; ++h)
    if (std::abs(cert.clearing[h]) > tol.clearing)
      fail("commodity " + std::to_string(h + 1) + " clearing integral " +
           std::to_string(cert.clearing[h]) + " exceeds tolerance");

  WalrasCheck w = check_walras(m, a_hat, b_hat, p_hat);
  cert.walras_residual = w.residual;
  cert.walras_applicable = w.applicable;
  cert.walras_note = w.note;
  if (w.applicable) {
    if (std::abs(w.residual) > tol.walras)
      fail("orthogonality residual " + std::to_string(w.residual) +
           " exceeds tolerance");
  } else {
    if (w.residual > tol.walras)
      fail("budget-side residual " + std::to_string(w.residual) +
           " exceeds tolerance (one-sided check)");
  }

  cert.accepted = cert.failures.empty();
  return cert;
}

// Exhaustive grid search over single-interval models. Every player best
// responds over the same finite grid, so the reported minimum is the exact
// equilibrium gap of the discretized finite game.
struct OracleOptions {
  int resolution = 21;
  long long max_states = 6'000'000;
};

struct OracleCandidate {
  std::vector<Trajectory> a, b;
  Trajectory p;
  double gap = 0.0;
};

struct OracleResult {
  bool refused = false;
  std::string reason;
  long long states = 0;
  double min_gap = std::numeric_limits<double>::infinity();
  std::vector<OracleCandidate> best;      // all minimizers found, up to a cap
  long long minimizer_count = 0;
  std::vector<double> step_a, step_b, step_p;  // grid spacing per coordinate
};

inline OracleResult brute_force_oracle(const EconomyModel& m,
                                       const OracleOptions& opts = {}) {
  OracleResult out;
  auto refuse = [&](std::string why) {
    out.refused = true;
    out.reason = std::move(why);
    return out;
  };

  const int l = m.commodities;
  const int s = m.producer_count();
  const int r = m.consumer_count();
  const int g = opts.resolution;
  if (m.grid.intervals != 1) return refuse("needs a single-interval grid");
  if (l > 2) return refuse("supports at most two commodities");
  if (s > 1) return refuse("supports at most one producer");
  if (r != 1) return refuse("supports exactly one consumer");
  if (g < 2 || g > 64) return refuse("resolution must lie in [2, 64]");

  const long long points_a = s == 0 ? 1 : static_cast<long long>(std::pow(g, l));
  const long long points_b = static_cast<long long>(std::pow(g, l));
  const long long points_p = l == 1 ? 1 : g;
  const long long states = points_a * points_b * points_p;
  if (states > opts.max_states)
    return refuse("state space has " + std::to_string(states) +
                  " profiles, over the budget of " +
                  std::to_string(opts.max_states));

  ValidationReport vr = validate(m);
  if (!vr.ok) return refuse("model fails validation: " + vr.issues.front().message);

  const double dt = m.grid.dt();
  double R = compute_R(m);
  std::vector<double> caps = truncated_consumption_bound(m, R);
  const Consumer& cons = m.consumers[0];

  // Coordinate grids. A trajectory here is one cell of l values.
  auto linspace = [&](double lo, double up) {
    std::vector<double> v(g);
    for (int i = 0; i < g; ++i)
      v[i] = lo + (up - lo) * static_cast<double>(i) / (g - 1);
    return v;
  };

  std::vector<std::vector<double>> agrid(l), bgrid(l);
  if (s == 1) {
    for (int h = 0; h < l; ++h)
      agrid[h] = linspace(m.producers[0].lower.value(0, h),
                          m.producers[0].upper.value(0, h));
    out.step_a.resize(l);
    for (int h = 0; h < l; ++h)
      out.step_a[h] = (m.producers[0].upper.value(0, h) -
                       m.producers[0].lower.value(0, h)) / (g - 1);
  }
  for (int h = 0; h < l; ++h) {
    double lo = cons.lower.value(0, h);
    if (m.truncation) lo = std::max(lo, 0.0);
    double up = caps[h] / dt;
    bgrid[h] = linspace(lo, up);
    out.step_b.push_back((up - lo) / (g - 1));
  }
  // Price grid: the simplex segment (l == 2) or the singleton (l == 1).
  // Entries sum to intervals == 1 here.
  std::vector<std::vector<double>> pgrid;
  if (l == 1) {
    pgrid.push_back({1.0});
    out.step_p = {0.0};
  } else {
    for (int i = 0; i < g; ++i) {
      double t = static_cast<double>(i) / (g - 1);
      pgrid.push_back({t, 1.0 - t});
    }
    out.step_p = {1.0 / (g - 1), 1.0 / (g - 1)};
  }

  auto decode = [&](long long idx, const std::vector<std::vector<double>>& grid) {
    std::vector<double> cell(l);
    for (int h = 0; h < l; ++h) {
      cell[h] = grid[h][idx % g];
      idx /= g;
    }
    return cell;
  };

  auto traj = [&](const std::vector<double>& cell) {
    return Trajectory(m.grid, l, std::vector<double>(cell));
  };

  // <<p, x>> on a one-interval grid is dt * dot(p, x).
  auto pair_with = [&](const std::vector<double>& p, const std::vector<double>& x) {
    double acc = 0.0;
    for (int h = 0; h < l; ++h) acc += p[h] * x[h];
    return dt * acc;
  };

  std::vector<std::vector<double>> acells(points_a), bcells(points_b);
  std::vector<bool> a_ok(points_a, true);
  for (long long ia = 0; ia < points_a; ++ia) {
    acells[ia] = s == 1 ? decode(ia, agrid) : std::vector<double>(l, 0.0);
    if (s == 1)
      for (const auto& cut : m.producers[0].cuts)
        if (inner_product(cut.weight, traj(acells[ia])) > cut.bound + 1e-12)
          a_ok[ia] = false;
  }
  for (long long ib = 0; ib < points_b; ++ib) bcells[ib] = decode(ib, bgrid);

  std::vector<double> u_b(points_b);
  for (long long ib = 0; ib < points_b; ++ib)
    u_b[ib] = utility_value(cons, traj(bcells[ib]));

  std::vector<double> xi(l);
  for (int h = 0; h < l; ++h) xi[h] = cons.endowment.value(0, h);
  double share = s == 1 ? cons.shares[0] : 0.0;

  // Cap feasibility of consumption points is grid-independent.
  std::vector<bool> b_cap_ok(points_b, true);
  if (m.truncation)
    for (long long ib = 0; ib < points_b; ++ib)
      for (int h = 0; h < l; ++h)
        if (dt * bcells[ib][h] > caps[h] + 1e-12) b_cap_ok[ib] = false;

  const long long np = static_cast<long long>(pgrid.size());
  std::vector<std::vector<double>> pa(np, std::vector<double>(points_a, 0.0));
  std::vector<std::vector<double>> pb(np, std::vector<double>(points_b, 0.0));
  std::vector<double> pxi(np, 0.0);
  for (long long ip = 0; ip < np; ++ip) {
    for (long long ia = 0; ia < points_a; ++ia)
      pa[ip][ia] = pair_with(pgrid[ip], acells[ia]);
    for (long long ib = 0; ib < points_b; ++ib)
      pb[ip][ib] = pair_with(pgrid[ip], bcells[ib]);
    pxi[ip] = pair_with(pgrid[ip], xi);
  }

  // Best producer value per price point.
  std::vector<double> prod_best(np, 0.0);
  if (s == 1)
    for (long long ip = 0; ip < np; ++ip) {
      double best = -std::numeric_limits<double>::infinity();
      for (long long ia = 0; ia < points_a; ++ia)
        if (a_ok[ia]) best = std::max(best, pa[ip][ia]);
      prod_best[ip] = best;
    }

  // Best consumer value per (production, price) pair, honoring the budget.
  std::vector<std::vector<double>> cons_best(
      points_a, std::vector<double>(np, -std::numeric_limits<double>::infinity()));
  for (long long ia = 0; ia < points_a; ++ia) {
    if (!a_ok[ia]) continue;
    for (long long ip = 0; ip < np; ++ip) {
      double rhs = pxi[ip] + std::max(0.0, share * pa[ip][ia]);
      double best = -std::numeric_limits<double>::infinity();
      for (long long ib = 0; ib < points_b; ++ib) {
        if (!b_cap_ok[ib]) continue;
        if (pb[ip][ib] > rhs + 1e-12) continue;
        best = std::max(best, u_b[ib]);
      }
      cons_best[ia][ip] = best;
    }
  }

  const double tie = 1e-12;
  const std::size_t keep = 64;
  for (long long ia = 0; ia < points_a; ++ia) {
    if (!a_ok[ia]) continue;
    for (long long ib = 0; ib < points_b; ++ib) {
      if (!b_cap_ok[ib]) continue;
      // Best price response depends on (a, b) only.
      double zbest = -std::numeric_limits<double>::infinity();
      for (long long jp = 0; jp < np; ++jp)
        zbest = std::max(zbest, pb[jp][ib] - pxi[jp] - (s == 1 ? pa[jp][ia] : 0.0));
      for (long long ip = 0; ip < np; ++ip) {
        double rhs = pxi[ip] + std::max(0.0, share * pa[ip][ia]);
        if (pb[ip][ib] > rhs + 1e-12) continue;  // consumer infeasible here
        ++out.states;
        double gap = 0.0;
        if (s == 1) gap += prod_best[ip] - pa[ip][ia];
        gap += cons_best[ia][ip] - u_b[ib];
        double zvalue = pb[ip][ib] - pxi[ip] - (s == 1 ? pa[ip][ia] : 0.0);
        gap += zbest - zvalue;

        if (gap < out.min_gap - tie) {
          out.min_gap = gap;
          out.best.clear();
          out.minimizer_count = 0;
        }
        if (gap <= out.min_gap + tie) {
          ++out.minimizer_count;
          if (out.best.size() < keep) {
            OracleCandidate cand;
            if (s == 1) cand.a.push_back(traj(acells[ia]));
            cand.b.push_back(traj(bcells[ib]));
            cand.p = traj(pgrid[ip]);
            cand.gap = gap;
            out.best.push_back(std::move(cand));
          }
        }
      }
    }
  }
  return out;
}

}  // namespace tgnep
