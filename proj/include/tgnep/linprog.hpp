#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace tgnep {

// maximize c.x  subject to  lo <= x <= up  and  A x <= b.
//
// Dense two-phase tableau simplex with Bland's rule. Meant for the small
// programs this library produces (tens of variables, a handful of coupling
// rows); O(M^2 N) pivots are fine at that scale.
struct LpResult {
  enum class Status { optimal, infeasible, unbounded };
  Status status = Status::optimal;
  std::vector<double> x;
  double value = 0.0;
};

class LinearProgram {
 public:
  LinearProgram(std::vector<double> c, std::vector<double> lo,
                std::vector<double> up)
      : c_(std::move(c)), lo_(std::move(lo)), up_(std::move(up)) {
    n_ = c_.size();
    if (lo_.size() != n_ || up_.size() != n_)
      throw std::invalid_argument("LinearProgram: bound size mismatch");
    for (std::size_t i = 0; i < n_; ++i)
      if (!(lo_[i] <= up_[i]))
        throw std::invalid_argument("LinearProgram: lower bound above upper bound");
  }

  void add_row(std::vector<double> coeffs, double bound) {
    if (coeffs.size() != n_)
      throw std::invalid_argument("LinearProgram: row size mismatch");
    rows_.push_back(std::move(coeffs));
    rhs_.push_back(bound);
  }

  LpResult solve() const;

 private:
  static constexpr double kPivotTol = 1e-11;

  struct Tableau {
    std::vector<std::vector<double>> body;
    std::vector<double> rhs;
    std::vector<int> basis;
    std::size_t cols = 0;

    void pivot(std::size_t pr, std::size_t pc, std::vector<double>& obj) {
      double piv = body[pr][pc];
      for (auto& v : body[pr]) v /= piv;
      rhs[pr] /= piv;
      for (std::size_t i = 0; i < body.size(); ++i) {
        if (i == pr) continue;
        double f = body[i][pc];
        if (f == 0.0) continue;
        for (std::size_t j = 0; j < cols; ++j) body[i][j] -= f * body[pr][j];
        rhs[i] -= f * rhs[pr];
      }
      double f = obj[pc];
      if (f != 0.0) {
        for (std::size_t j = 0; j < cols; ++j) obj[j] -= f * body[pr][j];
      }
      obj[pc] = 0.0;
      basis[pr] = static_cast<int>(pc);
    }

    enum class Step { optimal, pivoted, unbounded };

    // One Bland step for maximization: entering = smallest allowed column
    // with positive reduced cost; leaving = min ratio, ties by smallest
    // basis column.
    Step step(std::vector<double>& obj, const std::vector<bool>& allowed) {
      std::size_t enter = cols;
      for (std::size_t j = 0; j < cols; ++j)
        if (allowed[j] && obj[j] > kPivotTol) { enter = j; break; }
      if (enter == cols) return Step::optimal;
      std::size_t leave = body.size();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < body.size(); ++i) {
        double a = body[i][enter];
        if (a <= kPivotTol) continue;
        double ratio = rhs[i] / a;
        if (ratio < best - kPivotTol ||
            (ratio < best + kPivotTol &&
             (leave == body.size() || basis[i] < basis[leave]))) {
          best = ratio;
          leave = i;
        }
      }
      if (leave == body.size()) return Step::unbounded;
      pivot(leave, enter, obj);
      return Step::pivoted;
    }
  };

  std::size_t n_ = 0;
  std::vector<double> c_, lo_, up_;
  std::vector<std::vector<double>> rows_;
  std::vector<double> rhs_;
};

inline LpResult LinearProgram::solve() const {
  // Shift to z = x - lo in [0, u]; coupling rows become A z <= r.
  std::size_t n = n_, q = rows_.size();
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = up_[i] - lo_[i];
  std::vector<double> r(q);
  for (std::size_t i = 0; i < q; ++i) {
    double shift = 0.0;
    for (std::size_t j = 0; j < n; ++j) shift += rows_[i][j] * lo_[j];
    r[i] = rhs_[i] - shift;
  }

  std::size_t m = q + n;                    // coupling rows + bound rows
  std::size_t art = 0;
  for (std::size_t i = 0; i < q; ++i)
    if (r[i] < 0.0) ++art;
  std::size_t core = n + q + n;             // z, row slacks, bound slacks
  std::size_t cols = core + art;

  Tableau t;
  t.cols = cols;
  t.body.assign(m, std::vector<double>(cols, 0.0));
  t.rhs.assign(m, 0.0);
  t.basis.assign(m, -1);

  std::size_t next_art = core;
  for (std::size_t i = 0; i < q; ++i) {
    double sgn = r[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < n; ++j) t.body[i][j] = sgn * rows_[i][j];
    t.body[i][n + i] = sgn;
    t.rhs[i] = sgn * r[i];
    if (sgn < 0.0) {
      t.body[i][next_art] = 1.0;
      t.basis[i] = static_cast<int>(next_art++);
    } else {
      t.basis[i] = static_cast<int>(n + i);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t row = q + i;
    t.body[row][i] = 1.0;
    t.body[row][n + q + i] = 1.0;
    t.rhs[row] = u[i];
    t.basis[row] = static_cast<int>(n + q + i);
  }

  std::vector<bool> allow_all(cols, true);
  std::vector<bool> allow_core(cols, false);
  for (std::size_t j = 0; j < core; ++j) allow_core[j] = true;

  // Reduced costs for a raw objective priced against the current basis.
  auto priced = [&](const std::vector<double>& raw) {
    std::vector<double> obj = raw;
    for (std::size_t i = 0; i < m; ++i) {
      double cb = raw[t.basis[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < cols; ++j) obj[j] -= cb * t.body[i][j];
    }
    return obj;
  };

  auto run = [&](std::vector<double>& obj, const std::vector<bool>& allowed)
      -> Tableau::Step {
    for (int guard = 0; guard < 200000; ++guard) {
      Tableau::Step s = t.step(obj, allowed);
      if (s != Tableau::Step::pivoted) return s;
    }
    throw std::runtime_error("LinearProgram: pivot limit hit");
  };

  LpResult res;

  if (art > 0) {
    // Phase I: maximize -sum(artificials); feasible iff the optimum is 0.
    std::vector<double> raw(cols, 0.0);
    for (std::size_t j = core; j < cols; ++j) raw[j] = -1.0;
    std::vector<double> obj = priced(raw);
    run(obj, allow_all);
    double infeas = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (t.basis[i] >= static_cast<int>(core)) infeas += t.rhs[i];
    if (infeas > 1e-8) {
      res.status = LpResult::Status::infeasible;
      return res;
    }
    // Pivot leftover zero-value artificials out when a core column allows it;
    // an all-zero row is redundant and may stay parked at value 0.
    for (std::size_t i = 0; i < m; ++i) {
      if (t.basis[i] < static_cast<int>(core)) continue;
      for (std::size_t j = 0; j < core; ++j)
        if (std::abs(t.body[i][j]) > kPivotTol) {
          std::vector<double> dummy(cols, 0.0);
          t.pivot(i, j, dummy);
          break;
        }
    }
  }

  std::vector<double> raw(cols, 0.0);
  for (std::size_t j = 0; j < n; ++j) raw[j] = c_[j];
  std::vector<double> obj = priced(raw);
  if (run(obj, allow_core) == Tableau::Step::unbounded) {
    res.status = LpResult::Status::unbounded;
    return res;
  }

  std::vector<double> z(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (t.basis[i] >= 0 && t.basis[i] < static_cast<int>(n))
      z[t.basis[i]] = t.rhs[i];
  res.x.resize(n);
  res.value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    // Clamp roundoff excursions back into the box.
    res.x[i] = std::min(std::max(lo_[i] + z[i], lo_[i]), up_[i]);
    res.value += c_[i] * res.x[i];
  }
  res.status = LpResult::Status::optimal;
  return res;
}

}  // namespace tgnep
