#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "tgnep/convexity.hpp"
#include "tgnep/feasible.hpp"
#include "tgnep/fnspace.hpp"
#include "tgnep/gnep.hpp"

namespace tgnep {

// Production plans live in a box (shutdown must stay available: lo <= 0 <= up),
// optionally tightened by affine cuts that keep 0 feasible.
struct ProductionSet {
  Trajectory lower, upper;
  std::vector<AffineCut> cuts;
};

struct LinearUtility {
  Trajectory weights;  // payoff <<weights, b>>
};

// sum_h weights[h] * log(floor_offset + I_h(b)),  I_h = dt * sum_k (b - lower)[k,h].
// Depends on consumption only through per-commodity integrals above the
// subsistence floor; concave and increasing in each integral.
struct ShiftedLogUtility {
  std::vector<double> weights;
  double floor_offset = 1e-2;
};

// -<<b - target, b - target>>: strictly concave, satiated at the target.
struct QuadraticUtility {
  Trajectory target;
};

using UtilitySpec = std::variant<LinearUtility, ShiftedLogUtility, QuadraticUtility>;

struct Consumer {
  Trajectory lower;      // subsistence floor beta
  Trajectory endowment;  // xi, componentwise >= 0
  UtilitySpec utility;
  std::vector<double> shares;  // alpha_{i j}, one entry per producer
};

struct EconomyModel {
  TimeGrid grid;
  int commodities = 1;
  std::vector<ProductionSet> producers;
  std::vector<Consumer> consumers;
  // The consumption truncation keeps strategy sets compact: b >= 0 plus
  // per-commodity integral caps. Disabling it drops those restrictions
  // (allowing subsistence floors below zero) while keeping a finite ambient box.
  bool truncation = true;

  int producer_count() const { return static_cast<int>(producers.size()); }
  int consumer_count() const { return static_cast<int>(consumers.size()); }
};

inline double utility_value(const Consumer& c, const Trajectory& b) {
  return std::visit(
      [&](const auto& u) -> double {
        using U = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<U, LinearUtility>) {
          return inner_product(u.weights, b);
        } else if constexpr (std::is_same_v<U, ShiftedLogUtility>) {
          double dt = b.grid().dt();
          double acc = 0.0;
          for (int h = 0; h < b.dim(); ++h) {
            double integral_above = 0.0;
            for (int k = 0; k < b.cells(); ++k)
              integral_above += b.value(k, h) - c.lower.value(k, h);
            integral_above *= dt;
            acc += u.weights[h] * std::log(u.floor_offset + integral_above);
          }
          return acc;
        } else {
          static_assert(std::is_same_v<U, QuadraticUtility>);
          Trajectory d = b - u.target;
          return -inner_product(d, d);
        }
      },
      c.utility);
}

// Gradient in the duality pairing of the trajectory space:
// u(b + e*phi) ~ u(b) + e * <<grad, phi>>.
inline Trajectory utility_gradient(const Consumer& c, const Trajectory& b) {
  return std::visit(
      [&](const auto& u) -> Trajectory {
        using U = std::decay_t<decltype(u)>;
        if constexpr (std::is_same_v<U, LinearUtility>) {
          return u.weights;
        } else if constexpr (std::is_same_v<U, ShiftedLogUtility>) {
          double dt = b.grid().dt();
          Trajectory g(b.grid(), b.dim(), 0.0);
          for (int h = 0; h < b.dim(); ++h) {
            double integral_above = 0.0;
            for (int k = 0; k < b.cells(); ++k)
              integral_above += b.value(k, h) - c.lower.value(k, h);
            integral_above *= dt;
            double slope = u.weights[h] / (u.floor_offset + integral_above);
            for (int k = 0; k < b.cells(); ++k) g.value(k, h) = slope;
          }
          return g;
        } else {
          static_assert(std::is_same_v<U, QuadraticUtility>);
          return -2.0 * (b - u.target);
        }
      },
      c.utility);
}

struct ValidationIssue {
  std::string where;
  std::string message;
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;

  void flag(std::string where, std::string message) {
    ok = false;
    issues.push_back({std::move(where), std::move(message)});
  }
};

struct ValidateOptions {
  int semistrict_trials = 1000;
  std::uint64_t seed = 0x7e0a11ce;
};

// Margin producers can add to aggregate supply, used to pad consumption caps:
// R = 1 + max_h sum_j integral_k max(|lo|, |up|).
inline double compute_R(const EconomyModel& m) {
  double worst = 0.0;
  for (int h = 0; h < m.commodities; ++h) {
    double total = 0.0;
    for (const auto& prod : m.producers) {
      double cell_sum = 0.0;
      for (int k = 0; k < m.grid.intervals; ++k)
        cell_sum += std::max(std::abs(prod.lower.value(k, h)),
                             std::abs(prod.upper.value(k, h)));
      total += m.grid.dt() * cell_sum;
    }
    worst = std::max(worst, total);
  }
  return 1.0 + worst;
}

// Per-commodity integral caps C_h: total endowment plus the producer margin.
inline std::vector<double> truncated_consumption_bound(const EconomyModel& m,
                                                       double R) {
  std::vector<double> caps(m.commodities, 0.0);
  for (int h = 0; h < m.commodities; ++h) {
    double e = 0.0;
    for (const auto& cons : m.consumers)
      for (int k = 0; k < m.grid.intervals; ++k)
        e += cons.endowment.value(k, h);
    caps[h] = m.grid.dt() * e + R;
  }
  return caps;
}

// Spendable wealth of consumer i at prices p and production plans a:
// endowment value plus the nonnegative part of the share-weighted profits.
inline double budget_rhs(const EconomyModel& m, int i,
                         const std::vector<Trajectory>& a, const Trajectory& p) {
  const Consumer& c = m.consumers.at(i);
  double wealth = inner_product(p, c.endowment);
  double profits = 0.0;
  for (int j = 0; j < m.producer_count(); ++j)
    profits += c.shares.at(j) * inner_product(p, a.at(j));
  return wealth + std::max(0.0, profits);
}

// Normalized price region: p >= 0 with mean value one, i.e. (dt/T) sum = 1.
inline Trajectory project_prices(const Trajectory& q) {
  return project_scaled_simplex(q, static_cast<double>(q.grid().intervals));
}

// sum_i (b_i - xi_i) - sum_j a_j.
inline Trajectory excess_demand(const EconomyModel& m,
                                const std::vector<Trajectory>& a,
                                const std::vector<Trajectory>& b) {
  Trajectory z(m.grid, m.commodities, 0.0);
  for (int i = 0; i < m.consumer_count(); ++i)
    z = z + (b.at(i) - m.consumers[i].endowment);
  for (int j = 0; j < m.producer_count(); ++j) z = z - a.at(j);
  return z;
}

// Canonical strategy-set geometry. verify/ rebuilds sets through these same
// constructors so certification agrees with the game being played.
inline ResolvedSet producer_resolved_set(const EconomyModel& m, int j) {
  const ProductionSet& prod = m.producers.at(j);
  return ResolvedSet::box(prod.lower, prod.upper, prod.cuts);
}

inline ResolvedSet price_resolved_set(const EconomyModel& m) {
  return ResolvedSet::scaled_simplex(m.grid, m.commodities);
}

inline ResolvedSet consumer_resolved_set(const EconomyModel& m,
                                         const std::vector<double>& caps,
                                         int i,
                                         const std::vector<Trajectory>& a,
                                         const Trajectory& p) {
  const Consumer& c = m.consumers.at(i);
  Trajectory lo = c.lower;
  Trajectory up(m.grid, m.commodities, 0.0);
  for (int k = 0; k < m.grid.intervals; ++k)
    for (int h = 0; h < m.commodities; ++h)
      up.value(k, h) = caps.at(h) / m.grid.dt();
  if (m.truncation)
    for (double& v : lo.flat()) v = std::max(v, 0.0);

  std::vector<AffineCut> cuts;
  cuts.push_back({p, budget_rhs(m, i, a, p), "budget"});
  if (m.truncation) {
    for (int h = 0; h < m.commodities; ++h) {
      Trajectory ind(m.grid, m.commodities, 0.0);
      for (int k = 0; k < m.grid.intervals; ++k) ind.value(k, h) = 1.0;
      cuts.push_back({std::move(ind), caps.at(h),
                      "consumption cap, commodity " + std::to_string(h)});
    }
  }
  return ResolvedSet::box(std::move(lo), std::move(up), std::move(cuts));
}

inline ValidationReport validate(const EconomyModel& m,
                                 const ValidateOptions& opts = {}) {
  ValidationReport rep;
  if (m.commodities < 1) rep.flag("model", "commodity count must be >= 1");
  if (m.grid.intervals < 1 || !(m.grid.horizon > 0.0))
    rep.flag("model", "grid is degenerate");
  if (m.consumer_count() < 1) rep.flag("model", "need at least one consumer");

  auto shape_ok = [&](const Trajectory& t) {
    return t.grid() == m.grid && t.dim() == m.commodities;
  };

  for (int j = 0; j < m.producer_count(); ++j) {
    const auto& prod = m.producers[j];
    std::string where = "producer " + std::to_string(j + 1);
    if (!shape_ok(prod.lower) || !shape_ok(prod.upper)) {
      rep.flag(where, "bound trajectories have the wrong shape");
      continue;
    }
    for (int k = 0; k < m.grid.intervals; ++k)
      for (int h = 0; h < m.commodities; ++h) {
        if (!(prod.lower.value(k, h) <= 0.0 && 0.0 <= prod.upper.value(k, h))) {
          rep.flag(where, "shutdown plan 0 must stay available (lo <= 0 <= up)");
          k = m.grid.intervals;
          break;
        }
      }
    for (const auto& cut : prod.cuts) {
      if (!shape_ok(cut.weight)) {
        rep.flag(where, "cut weight has the wrong shape");
      } else if (cut.bound < 0.0) {
        rep.flag(where, "cut excludes the shutdown plan (bound < 0)");
      }
    }
  }

  double R = compute_R(m);
  std::vector<double> caps = truncated_consumption_bound(m, R);

  for (int i = 0; i < m.consumer_count(); ++i) {
    const Consumer& c = m.consumers[i];
    std::string where = "consumer " + std::to_string(i + 1);
    if (!shape_ok(c.lower) || !shape_ok(c.endowment)) {
      rep.flag(where, "floor or endowment trajectory has the wrong shape");
      continue;
    }
    bool endow_ok = true, floor_ok = true;
    for (int k = 0; k < m.grid.intervals; ++k)
      for (int h = 0; h < m.commodities; ++h) {
        if (c.endowment.value(k, h) < 0.0) endow_ok = false;
        if (c.lower.value(k, h) > c.endowment.value(k, h)) floor_ok = false;
      }
    if (!endow_ok) rep.flag(where, "endowment must be componentwise >= 0");
    if (!floor_ok)
      rep.flag(where, "subsistence floor exceeds the endowment somewhere");
    if (static_cast<int>(c.shares.size()) != m.producer_count())
      rep.flag(where, "shares row length differs from the producer count");
    else
      for (double sh : c.shares)
        if (sh < 0.0) rep.flag(where, "negative profit share");
    if (const auto* lin = std::get_if<LinearUtility>(&c.utility)) {
      if (!shape_ok(lin->weights))
        rep.flag(where, "linear utility weight has the wrong shape");
      else if (max_abs(lin->weights) == 0.0)
        rep.flag(where, "linear utility weight is identically zero");
    } else if (const auto* slog = std::get_if<ShiftedLogUtility>(&c.utility)) {
      if (static_cast<int>(slog->weights.size()) != m.commodities)
        rep.flag(where, "log utility needs one weight per commodity");
      else {
        double total = 0.0;
        for (double w : slog->weights) {
          if (w < 0.0) rep.flag(where, "log utility weights must be >= 0");
          total += w;
        }
        if (total <= 0.0) rep.flag(where, "log utility weights are all zero");
      }
      if (!(slog->floor_offset > 0.0))
        rep.flag(where, "log utility offset must be positive");
    } else if (const auto* quad = std::get_if<QuadraticUtility>(&c.utility)) {
      if (!shape_ok(quad->target))
        rep.flag(where, "quadratic utility target has the wrong shape");
    }
  }

  for (int j = 0; j < m.producer_count(); ++j) {
    double col = 0.0;
    bool sized = true;
    for (const auto& c : m.consumers) {
      if (static_cast<int>(c.shares.size()) != m.producer_count()) {
        sized = false;
        break;
      }
      col += c.shares[j];
    }
    if (sized && std::abs(col - 1.0) > 1e-12)
      rep.flag("shares", "profit shares of producer " + std::to_string(j + 1) +
                             " sum to " + std::to_string(col) + ", expected 1");
  }

  if (!rep.ok) return rep;

  // Sampled semistrict quasiconcavity of each utility over its ambient box.
  for (int i = 0; i < m.consumer_count(); ++i) {
    const Consumer& c = m.consumers[i];
    Trajectory lo = c.lower;
    if (m.truncation)
      for (double& v : lo.flat()) v = std::max(v, 0.0);
    Trajectory up(m.grid, m.commodities, 0.0);
    for (int k = 0; k < m.grid.intervals; ++k)
      for (int h = 0; h < m.commodities; ++h)
        up.value(k, h) = caps[h] / m.grid.dt();
    auto field = [&](const Trajectory& b) { return utility_value(c, b); };
    SampleReport sr = check_semistrict(field, make_box_sampler(lo, up),
                                       opts.semistrict_trials,
                                       opts.seed + static_cast<std::uint64_t>(i));
    if (!sr.pass)
      rep.flag("consumer " + std::to_string(i + 1),
               "utility failed the semistrict quasiconcavity sampling: " +
                   sr.counterexample->what);
  }
  return rep;
}

// Index bookkeeping for the induced game: producers first, then consumers,
// then the price player last.
struct EconomyGnep {
  GnepInstance instance;
  double R = 0.0;
  std::vector<double> caps;
  int producers = 0;
  int consumers = 0;

  int producer_block(int j) const { return j; }
  int consumer_block(int i) const { return producers + i; }
  int price_block() const { return producers + consumers; }
};

// Builds the game: producers maximize profit <<p, a_j>>, consumers maximize
// utility over budget-and-cap restricted consumption, the price player
// maximizes the value of excess demand over the normalized price region.
inline EconomyGnep to_gnep(const EconomyModel& model, double R) {
  ValidationReport vr = validate(model);
  if (!vr.ok) {
    std::string msg = "to_gnep: model fails validation:";
    for (const auto& issue : vr.issues)
      msg += "\n  [" + issue.where + "] " + issue.message;
    throw std::invalid_argument(msg);
  }
  if (!(R > 0.0)) throw std::invalid_argument("to_gnep: R must be positive");

  auto shared = std::make_shared<const EconomyModel>(model);
  const int s = shared->producer_count();
  const int r = shared->consumer_count();
  const int price_index = s + r;

  EconomyGnep out;
  out.R = R;
  out.caps = truncated_consumption_bound(*shared, R);
  out.producers = s;
  out.consumers = r;
  out.instance.grid = shared->grid;

  auto rival_production = [shared, s](const Rivals& rv) {
    std::vector<Trajectory> a;
    a.reserve(s);
    for (int j = 0; j < s; ++j) a.push_back(rv.block(j));
    return a;
  };

  for (int j = 0; j < s; ++j) {
    PlayerSpec ps;
    ps.name = "producer " + std::to_string(j + 1);
    ps.dim = shared->commodities;
    ps.objective = Objective::linear(
        [price_index](const Rivals& rv) { return rv.block(price_index); });
    ps.feasible = FeasibleSet::fixed(producer_resolved_set(*shared, j));
    out.instance.players.push_back(std::move(ps));
  }

  for (int i = 0; i < r; ++i) {
    PlayerSpec ps;
    ps.name = "consumer " + std::to_string(i + 1);
    ps.dim = shared->commodities;
    const Consumer& c = shared->consumers[i];
    if (const auto* lin = std::get_if<LinearUtility>(&c.utility)) {
      ps.objective = Objective::linear(
          [w = lin->weights](const Rivals&) { return w; });
    } else {
      ps.objective = Objective::concave(
          [shared, i](const Trajectory& own, const Rivals&) {
            return utility_value(shared->consumers[i], own);
          },
          [shared, i](const Trajectory& own, const Rivals&) {
            return utility_gradient(shared->consumers[i], own);
          });
    }
    ps.feasible.rival_dependent = true;
    ps.feasible.resolve = [shared, i, caps = out.caps, rival_production,
                           price_index](const Rivals& rv) {
      return consumer_resolved_set(*shared, caps, i, rival_production(rv),
                                   rv.block(price_index));
    };
    out.instance.players.push_back(std::move(ps));
  }

  {
    PlayerSpec ps;
    ps.name = "price";
    ps.dim = shared->commodities;
    ps.objective = Objective::linear([shared, s, r](const Rivals& rv) {
      std::vector<Trajectory> a, b;
      a.reserve(s);
      b.reserve(r);
      for (int j = 0; j < s; ++j) a.push_back(rv.block(j));
      for (int i = 0; i < r; ++i) b.push_back(rv.block(s + i));
      return excess_demand(*shared, a, b);
    });
    ps.feasible = FeasibleSet::fixed(price_resolved_set(*shared));
    out.instance.players.push_back(std::move(ps));
  }

  return out;
}

inline EconomyGnep to_gnep(const EconomyModel& model) {
  return to_gnep(model, compute_R(model));
}

}  // namespace tgnep
