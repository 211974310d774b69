#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tgnep {

// Shape mismatches (grid or dimension) between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Uniform partition of [0, horizon] into `intervals` cells.
// Nodal values live at cell midpoints t_k = (k + 1/2) * dt.
struct TimeGrid {
  double horizon = 1.0;
  int intervals = 1;

  double dt() const { return horizon / intervals; }
  double midpoint(int k) const { return (k + 0.5) * dt(); }

  bool operator==(const TimeGrid&) const = default;
};

inline TimeGrid make_grid(double horizon, int intervals) {
  if (!std::isfinite(horizon) || horizon <= 0.0)
    throw std::invalid_argument("make_grid: horizon must be positive and finite");
  if (intervals < 1)
    throw std::invalid_argument("make_grid: intervals must be >= 1");
  return TimeGrid{horizon, intervals};
}

// Piecewise-constant R^dim valued function on a TimeGrid.
// Storage is cell-major: value(k, h) = values[k * dim + h].
class Trajectory {
 public:
  Trajectory() : grid_{1.0, 1}, dim_(1), values_(1, 0.0) {}

  Trajectory(TimeGrid grid, int dim, double fill = 0.0)
      : grid_(grid), dim_(dim),
        values_(static_cast<std::size_t>(grid.intervals) * dim, fill) {
    if (dim < 1) throw std::invalid_argument("Trajectory: dim must be >= 1");
    if (!std::isfinite(fill)) throw std::invalid_argument("Trajectory: non-finite fill");
  }

  Trajectory(TimeGrid grid, int dim, std::vector<double> values)
      : grid_(grid), dim_(dim), values_(std::move(values)) {
    if (dim < 1) throw std::invalid_argument("Trajectory: dim must be >= 1");
    if (values_.size() != static_cast<std::size_t>(grid.intervals) * dim)
      throw ShapeError("Trajectory: value count does not match grid * dim");
    for (double v : values_)
      if (!std::isfinite(v)) throw std::invalid_argument("Trajectory: non-finite value");
  }

  // One constant vector held on every cell.
  static Trajectory constant(TimeGrid grid, std::vector<double> cell) {
    Trajectory out(grid, static_cast<int>(cell.size()));
    for (int k = 0; k < grid.intervals; ++k)
      for (int h = 0; h < out.dim_; ++h) out.value(k, h) = cell[h];
    for (double v : cell)
      if (!std::isfinite(v)) throw std::invalid_argument("Trajectory: non-finite value");
    return out;
  }

  // Sample f at cell midpoints; f returns a vector of length dim.
  static Trajectory from_function(
      TimeGrid grid, int dim,
      const std::function<std::vector<double>(double)>& f) {
    Trajectory out(grid, dim);
    for (int k = 0; k < grid.intervals; ++k) {
      std::vector<double> cell = f(grid.midpoint(k));
      if (static_cast<int>(cell.size()) != dim)
        throw ShapeError("Trajectory::from_function: sample has wrong dimension");
      for (int h = 0; h < dim; ++h) {
        if (!std::isfinite(cell[h]))
          throw std::invalid_argument("Trajectory::from_function: non-finite sample");
        out.value(k, h) = cell[h];
      }
    }
    return out;
  }

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return dim_; }
  int cells() const { return grid_.intervals; }
  std::size_t size() const { return values_.size(); }

  double value(int k, int h) const { return values_[static_cast<std::size_t>(k) * dim_ + h]; }
  double& value(int k, int h) { return values_[static_cast<std::size_t>(k) * dim_ + h]; }
  double operator()(int k, int h) const { return value(k, h); }

  std::span<const double> flat() const { return values_; }
  std::span<double> flat() { return values_; }

  bool same_shape(const Trajectory& o) const {
    return grid_ == o.grid_ && dim_ == o.dim_;
  }

  bool operator==(const Trajectory&) const = default;

 private:
  TimeGrid grid_;
  int dim_;
  std::vector<double> values_;
};

inline void require_same_shape(const Trajectory& a, const Trajectory& b,
                               const char* who) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(who) + ": operands have different grid or dimension");
}

// <<phi, psi>> = dt * sum_{k,h} phi[k,h] * psi[k,h].
// Exact L2 pairing of piecewise constants on the shared grid.
inline double inner_product(const Trajectory& a, const Trajectory& b) {
  require_same_shape(a, b, "inner_product");
  double acc = 0.0;
  auto av = a.flat(), bv = b.flat();
  for (std::size_t i = 0; i < av.size(); ++i) acc += av[i] * bv[i];
  return a.grid().dt() * acc;
}

inline double norm(const Trajectory& a) {
  double acc = 0.0;
  for (double v : a.flat()) acc += v * v;
  return std::sqrt(a.grid().dt() * acc);
}

// y + lambda * (x - y). Endpoints return the argument unchanged so that
// combine(0, x, y) == y, combine(1, x, y) == x and combine(l, x, x) == x
// hold exactly, not just to rounding.
inline Trajectory combine(double lambda, const Trajectory& x, const Trajectory& y) {
  require_same_shape(x, y, "combine");
  if (!std::isfinite(lambda) || lambda < 0.0 || lambda > 1.0)
    throw std::invalid_argument("combine: lambda must lie in [0, 1]");
  if (lambda == 0.0) return y;
  if (lambda == 1.0) return x;
  Trajectory out = y;
  auto ov = out.flat();
  auto xv = x.flat();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] += lambda * (xv[i] - ov[i]);
  return out;
}

// Split every cell into `factor` copies of its value. Integrals and inner
// products against refined partners are preserved exactly up to rounding.
inline Trajectory refine(const Trajectory& a, int factor) {
  if (factor < 1) throw std::invalid_argument("refine: factor must be >= 1");
  if (factor == 1) return a;
  TimeGrid g{a.grid().horizon, a.grid().intervals * factor};
  Trajectory out(g, a.dim());
  for (int k = 0; k < a.cells(); ++k)
    for (int r = 0; r < factor; ++r)
      for (int h = 0; h < a.dim(); ++h)
        out.value(k * factor + r, h) = a.value(k, h);
  return out;
}

inline Trajectory operator+(const Trajectory& a, const Trajectory& b) {
  require_same_shape(a, b, "operator+");
  Trajectory out = a;
  auto ov = out.flat();
  auto bv = b.flat();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] += bv[i];
  return out;
}

inline Trajectory operator-(const Trajectory& a, const Trajectory& b) {
  require_same_shape(a, b, "operator-");
  Trajectory out = a;
  auto ov = out.flat();
  auto bv = b.flat();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] -= bv[i];
  return out;
}

inline Trajectory operator*(double s, const Trajectory& a) {
  Trajectory out = a;
  for (double& v : out.flat()) v *= s;
  return out;
}

// Integral of coordinate h over [0, horizon]: dt * sum_k a[k,h].
inline double integral(const Trajectory& a, int h) {
  double acc = 0.0;
  for (int k = 0; k < a.cells(); ++k) acc += a.value(k, h);
  return a.grid().dt() * acc;
}

inline double max_abs(const Trajectory& a) {
  double m = 0.0;
  for (double v : a.flat()) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace tgnep
