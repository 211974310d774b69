#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tgnep/fnspace.hpp"
#include "tgnep/linprog.hpp"
#include "tgnep/profile.hpp"

namespace tgnep {

class FeasibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One linear restriction <<weight, y>> <= bound.
struct AffineCut {
  Trajectory weight;
  double bound = 0.0;
  std::string label;
};

inline Trajectory project_box(const Trajectory& y, const Trajectory& lo,
                              const Trajectory& up) {
  require_same_shape(y, lo, "project_box");
  require_same_shape(y, up, "project_box");
  Trajectory out = y;
  auto ov = out.flat();
  auto lv = lo.flat();
  auto uv = up.flat();
  for (std::size_t i = 0; i < ov.size(); ++i)
    ov[i] = std::min(std::max(ov[i], lv[i]), uv[i]);
  return out;
}

// Nearest point with p >= 0 and sum of entries == total. The metric weight
// dt is uniform across entries, so this equals the Euclidean projection.
inline Trajectory project_scaled_simplex(const Trajectory& y, double total) {
  if (!(total > 0.0))
    throw std::invalid_argument("project_scaled_simplex: total must be positive");
  std::vector<double> v(y.flat().begin(), y.flat().end());
  std::sort(v.begin(), v.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    cum += v[j];
    double cand = (cum - total) / static_cast<double>(j + 1);
    if (v[j] - cand > 0.0) theta = cand;
  }
  Trajectory out = y;
  for (double& p : out.flat()) p = std::max(0.0, p - theta);
  return out;
}

struct Violation {
  std::string what;
  double amount = 0.0;
};

struct MembershipReport {
  bool ok = true;
  double worst = 0.0;
  std::vector<Violation> violations;

  void add(std::string what, double amount) {
    ok = false;
    worst = std::max(worst, amount);
    violations.push_back({std::move(what), amount});
  }
};

// Concrete geometry of one player's strategy set after rival strategies have
// been substituted in. Two kinds:
//   box            lower <= y <= upper, optionally cut by affine rows
//   scaled_simplex y >= 0, sum of entries == total (ambient box kept too)
struct ResolvedSet {
  enum class Kind { box, scaled_simplex };

  Kind kind = Kind::box;
  Trajectory lower, upper;
  std::vector<AffineCut> cuts;
  double simplex_total = 0.0;

  static ResolvedSet box(Trajectory lo, Trajectory up,
                         std::vector<AffineCut> cuts = {}) {
    require_same_shape(lo, up, "ResolvedSet::box");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo.flat()[i] <= up.flat()[i]))
        throw std::invalid_argument("ResolvedSet::box: empty box");
    for (const auto& c : cuts) require_same_shape(c.weight, lo, "ResolvedSet::box cut");
    ResolvedSet s;
    s.kind = Kind::box;
    s.lower = std::move(lo);
    s.upper = std::move(up);
    s.cuts = std::move(cuts);
    return s;
  }

  static ResolvedSet scaled_simplex(TimeGrid grid, int dim) {
    ResolvedSet s;
    s.kind = Kind::scaled_simplex;
    // T/dt, which is exactly the interval count on a uniform grid.
    s.simplex_total = static_cast<double>(grid.intervals);
    s.lower = Trajectory(grid, dim, 0.0);
    s.upper = Trajectory::constant(grid, std::vector<double>(dim, s.simplex_total));
    return s;
  }

  MembershipReport contains(const Trajectory& y, double tol = 1e-9) const {
    MembershipReport rep;
    require_same_shape(y, lower, "ResolvedSet::contains");
    if (kind == Kind::box) {
      for (int k = 0; k < y.cells(); ++k)
        for (int h = 0; h < y.dim(); ++h) {
          double lo = lower.value(k, h), up = upper.value(k, h), v = y.value(k, h);
          double scale = 1.0 + std::max(std::abs(lo), std::abs(up));
          if (v < lo - tol * scale)
            rep.add("below lower bound at cell (" + std::to_string(k) + "," +
                        std::to_string(h) + ")", lo - v);
          if (v > up + tol * scale)
            rep.add("above upper bound at cell (" + std::to_string(k) + "," +
                        std::to_string(h) + ")", v - up);
        }
      for (const auto& c : cuts) {
        double lhs = inner_product(c.weight, y);
        double slack = lhs - c.bound;
        if (slack > tol * (1.0 + std::abs(c.bound)))
          rep.add("cut violated: " + (c.label.empty() ? "affine cut" : c.label), slack);
      }
    } else {
      for (int k = 0; k < y.cells(); ++k)
        for (int h = 0; h < y.dim(); ++h)
          if (y.value(k, h) < -tol)
            rep.add("negative entry at cell (" + std::to_string(k) + "," +
                        std::to_string(h) + ")", -y.value(k, h));
      double sum = std::accumulate(y.flat().begin(), y.flat().end(), 0.0);
      double err = std::abs(sum - simplex_total);
      if (err > tol * simplex_total)
        rep.add("normalisation off: entry sum " + std::to_string(sum), err);
    }
    return rep;
  }

  // Nearest feasible point. Boxes with cuts use Dykstra's alternating
  // projections (exact in the limit for intersections of convex sets); the
  // iteration is cheap here and runs until machine-level stationarity.
  Trajectory project(const Trajectory& y) const {
    if (kind == Kind::scaled_simplex) return project_scaled_simplex(y, simplex_total);
    if (cuts.empty()) return project_box(y, lower, upper);

    Trajectory x = y;
    std::vector<Trajectory> corr(cuts.size() + 1, Trajectory(y.grid(), y.dim(), 0.0));
    const int max_cycles = 20000;
    for (int cycle = 0; cycle < max_cycles; ++cycle) {
      Trajectory before = x;
      // Box first, then each halfspace, each with its Dykstra correction.
      {
        Trajectory z = x + corr[0];
        Trajectory px = project_box(z, lower, upper);
        corr[0] = z - px;
        x = px;
      }
      for (std::size_t q = 0; q < cuts.size(); ++q) {
        Trajectory z = x + corr[q + 1];
        double lhs = inner_product(cuts[q].weight, z);
        double wsq = inner_product(cuts[q].weight, cuts[q].weight);
        Trajectory px = z;
        if (lhs > cuts[q].bound && wsq > 0.0)
          px = z - ((lhs - cuts[q].bound) / wsq) * cuts[q].weight;
        corr[q + 1] = z - px;
        x = px;
      }
      double moved = norm(x - before);
      if (moved <= 1e-14 * (1.0 + norm(x)) && contains(x, 1e-10).ok) break;
    }
    return x;
  }

  // Maximize <<w, y>> over the set. Closed forms for plain boxes and the
  // scaled simplex; small LP when cuts are present.
  //
  // Tie handling is pinned down so callers see deterministic optima:
  //   box, zero weight entry      -> 0 clamped into [lo, up]
  //   simplex, tied maximal cells -> lexicographically smallest (h, k)
  std::pair<Trajectory, double> maximize_linear(const Trajectory& w) const {
    require_same_shape(w, lower, "ResolvedSet::maximize_linear");
    if (kind == Kind::scaled_simplex) {
      int bk = 0, bh = 0;
      double best = -std::numeric_limits<double>::infinity();
      for (int h = 0; h < w.dim(); ++h)
        for (int k = 0; k < w.cells(); ++k)
          if (w.value(k, h) > best) {
            best = w.value(k, h);
            bk = k;
            bh = h;
          }
      Trajectory point(w.grid(), w.dim(), 0.0);
      point.value(bk, bh) = simplex_total;
      return {point, w.grid().dt() * simplex_total * best};
    }
    if (cuts.empty()) {
      Trajectory point = lower;
      for (int k = 0; k < w.cells(); ++k)
        for (int h = 0; h < w.dim(); ++h) {
          double c = w.value(k, h);
          if (c > 0.0)
            point.value(k, h) = upper.value(k, h);
          else if (c < 0.0)
            point.value(k, h) = lower.value(k, h);
          else
            point.value(k, h) =
                std::min(std::max(0.0, lower.value(k, h)), upper.value(k, h));
        }
      return {point, inner_product(w, point)};
    }
    double dt = w.grid().dt();
    std::vector<double> c(w.flat().begin(), w.flat().end());
    std::vector<double> lo(lower.flat().begin(), lower.flat().end());
    std::vector<double> up(upper.flat().begin(), upper.flat().end());
    LinearProgram lp(c, lo, up);
    for (const auto& cut : cuts) {
      std::vector<double> row(cut.weight.flat().begin(), cut.weight.flat().end());
      for (double& v : row) v *= dt;
      lp.add_row(std::move(row), cut.bound);
    }
    LpResult res = lp.solve();
    if (res.status != LpResult::Status::optimal)
      throw FeasibilityError("maximize_linear: constraint system is infeasible");
    Trajectory point(w.grid(), w.dim(), std::vector<double>(res.x));
    return {point, inner_product(w, point)};
  }

  // A deterministic feasible anchor (used to start inner ascents).
  Trajectory anchor() const {
    if (kind == Kind::scaled_simplex) {
      double per = simplex_total / static_cast<double>(lower.size());
      Trajectory p = lower;
      for (double& v : p.flat()) v = per;
      return p;
    }
    Trajectory zero(lower.grid(), lower.dim(), 0.0);
    Trajectory base = project_box(zero, lower, upper);
    if (cuts.empty()) return base;
    Trajectory candidate = project(base);
    if (contains(candidate, 1e-8).ok) return candidate;
    candidate = project(lower);
    return candidate;
  }
};

// Strategy-set descriptor: resolves to concrete geometry once rival
// strategies are known. rival_dependent == false promises the geometry is
// the same for every rival profile.
struct FeasibleSet {
  std::function<ResolvedSet(const Rivals&)> resolve;
  bool rival_dependent = false;

  static FeasibleSet fixed(ResolvedSet s) {
    return {[s = std::move(s)](const Rivals&) { return s; }, false};
  }
};

}  // namespace tgnep
