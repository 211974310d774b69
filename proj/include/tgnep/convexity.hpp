#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>

#include "tgnep/fnspace.hpp"

namespace tgnep {

// Randomized falsification checks for quasiconcavity and semistrict
// quasiconcavity along segments. A pass is evidence, not proof; a returned
// counterexample is a genuine violation at the reported points.

using ScalarField = std::function<double(const Trajectory&)>;
using Sampler = std::function<Trajectory(std::mt19937_64&)>;

struct SegmentCounterexample {
  Trajectory x, y;
  double lambda = 0.0;
  double fx = 0.0, fy = 0.0, fmid = 0.0;
  std::string what;
};

struct SampleReport {
  bool pass = true;
  int trials = 0;
  std::optional<SegmentCounterexample> counterexample;
};

inline Sampler make_box_sampler(Trajectory lower, Trajectory upper) {
  require_same_shape(lower, upper, "make_box_sampler");
  return [lo = std::move(lower), up = std::move(upper)](std::mt19937_64& rng) {
    Trajectory out = lo;
    auto ov = out.flat();
    auto lv = lo.flat();
    auto uv = up.flat();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < ov.size(); ++i)
      ov[i] = lv[i] + unit(rng) * (uv[i] - lv[i]);
    return out;
  };
}

// f(combine(l, x, y)) >= min(f(x), f(y)) - slack on random segments.
inline SampleReport check_quasiconcave(const ScalarField& f,
                                       const Sampler& sample, int trials,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SampleReport rep;
  for (int t = 0; t < trials; ++t) {
    rep.trials = t + 1;
    Trajectory x = sample(rng);
    Trajectory y = sample(rng);
    double lambda = unit(rng);
    double fx = f(x), fy = f(y);
    double fmid = f(combine(lambda, x, y));
    double floor = std::min(fx, fy);
    double slack = 1e-10 * (1.0 + std::abs(floor));
    if (fmid < floor - slack) {
      rep.pass = false;
      rep.counterexample = {std::move(x), std::move(y), lambda, fx, fy, fmid,
                            "midpoint value drops below both endpoints"};
      return rep;
    }
  }
  return rep;
}

// Quasiconcavity plus: whenever f(y) > f(x), interior points must beat f(x)
// strictly. A midpoint sitting on the plateau of the lower endpoint while
// the endpoints differ is a violation.
inline SampleReport check_semistrict(const ScalarField& f,
                                     const Sampler& sample, int trials,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> interior(0.05, 0.95);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SampleReport rep;
  for (int t = 0; t < trials; ++t) {
    rep.trials = t + 1;
    Trajectory x = sample(rng);
    Trajectory y = sample(rng);
    double fx = f(x), fy = f(y);
    double lambda = unit(rng);
    double fmid = f(combine(lambda, x, y));
    double floor = std::min(fx, fy);
    double slack = 1e-10 * (1.0 + std::abs(floor));
    if (fmid < floor - slack) {
      rep.pass = false;
      rep.counterexample = {std::move(x), std::move(y), lambda, fx, fy, fmid,
                            "midpoint value drops below both endpoints"};
      return rep;
    }
    double scale = 1.0 + std::max(std::abs(fx), std::abs(fy));
    if (std::abs(fx - fy) <= 1e-8 * scale) continue;  // endpoints tie
    double li = interior(rng);
    double fi = f(combine(li, x, y));
    if (fi <= floor + 1e-12 * scale) {
      rep.pass = false;
      rep.counterexample = {std::move(x), std::move(y), li, fx, fy, fi,
                            "interior point stuck at the lower endpoint value"};
      return rep;
    }
  }
  return rep;
}

}  // namespace tgnep
