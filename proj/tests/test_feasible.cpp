#include <cmath>
#include <random>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "tgnep/feasible.hpp"

using namespace tgnep;

namespace {

Trajectory random_traj(const TimeGrid& g, int dim, std::mt19937_64& rng,
                       double lo = -2.0, double hi = 2.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Trajectory t(g, dim);
  for (double& v : t.flat()) v = u(rng);
  return t;
}

}  // namespace

TEST_CASE("project_box clamps entrywise") {
  TimeGrid g = make_grid(1.0, 2);
  Trajectory lo(g, 1, std::vector<double>{-1.0, 0.0});
  Trajectory up(g, 1, std::vector<double>{1.0, 2.0});
  Trajectory y(g, 1, std::vector<double>{-3.0, 5.0});
  Trajectory p = project_box(y, lo, up);
  CHECK(p.value(0, 0) == -1.0);
  CHECK(p.value(1, 0) == 2.0);
}

TEST_CASE("simplex projection matches the two-point closed form") {
  TimeGrid g = make_grid(1.0, 1);
  Trajectory q1(g, 2, std::vector<double>{3.0, 1.0});
  Trajectory p1 = project_scaled_simplex(q1, 1.0);
  CHECK(p1.value(0, 0) == Catch::Approx(1.0).margin(1e-12));
  CHECK(p1.value(0, 1) == Catch::Approx(0.0).margin(1e-12));

  Trajectory q2(g, 2, std::vector<double>{-1.0, -1.0});
  Trajectory p2 = project_scaled_simplex(q2, 1.0);
  CHECK(p2.value(0, 0) == Catch::Approx(0.5).margin(1e-12));
  CHECK(p2.value(0, 1) == Catch::Approx(0.5).margin(1e-12));

  CHECK_THROWS_AS(project_scaled_simplex(q1, 0.0), std::invalid_argument);
}

TEST_CASE("simplex projection is idempotent and non-expansive") {
  std::mt19937_64 rng(31);
  TimeGrid g = make_grid(1.5, 3);
  for (int trial = 0; trial < 200; ++trial) {
    Trajectory x = random_traj(g, 2, rng, -3.0, 3.0);
    Trajectory y = random_traj(g, 2, rng, -3.0, 3.0);
    double total = 3.0;
    Trajectory px = project_scaled_simplex(x, total);
    Trajectory py = project_scaled_simplex(y, total);
    CHECK(norm(project_scaled_simplex(px, total) - px) <= 1e-12);
    CHECK(norm(px - py) <= norm(x - y) + 1e-12);

    double sum = 0.0;
    bool nonneg = true;
    for (double v : px.flat()) {
      sum += v;
      nonneg = nonneg && v >= 0.0;
    }
    CHECK(nonneg);
    CHECK(sum == Catch::Approx(total).epsilon(1e-12));
  }
}

TEST_CASE("box membership reports the violated side") {
  TimeGrid g = make_grid(1.0, 1);
  ResolvedSet s = ResolvedSet::box(Trajectory(g, 2, std::vector<double>{0.0, 0.0}),
                                   Trajectory(g, 2, std::vector<double>{1.0, 1.0}));
  CHECK(s.contains(Trajectory(g, 2, std::vector<double>{0.5, 1.0})).ok);
  MembershipReport bad = s.contains(Trajectory(g, 2, std::vector<double>{-0.5, 2.0}));
  CHECK_FALSE(bad.ok);
  CHECK(bad.violations.size() == 2);
  CHECK(bad.worst == Catch::Approx(1.0));
}

TEST_CASE("cut membership uses the trajectory pairing") {
  TimeGrid g = make_grid(2.0, 2);  // dt = 1
  Trajectory w(g, 1, 1.0);
  ResolvedSet s = ResolvedSet::box(Trajectory(g, 1, -5.0), Trajectory(g, 1, 5.0),
                                   {{w, 3.0, "mass"}});
  CHECK(s.contains(Trajectory(g, 1, 1.5)).ok);       // <<w,y>> = 3
  MembershipReport bad = s.contains(Trajectory(g, 1, 2.0));  // <<w,y>> = 4
  CHECK_FALSE(bad.ok);
  REQUIRE(bad.violations.size() == 1);
  CHECK(bad.violations[0].what.find("mass") != std::string::npos);
}

TEST_CASE("empty box is rejected at construction") {
  TimeGrid g = make_grid(1.0, 1);
  CHECK_THROWS_AS(ResolvedSet::box(Trajectory(g, 1, 1.0), Trajectory(g, 1, 0.0)),
                  std::invalid_argument);
}

TEST_CASE("box linear maximization uses the sign rule with zero tie-break") {
  TimeGrid g = make_grid(1.0, 2);
  Trajectory lo(g, 2, std::vector<double>{-1.0, 1.0, -1.0, -2.0});
  Trajectory up(g, 2, std::vector<double>{2.0, 3.0, 2.0, -1.0});
  ResolvedSet s = ResolvedSet::box(lo, up);
  Trajectory w(g, 2, std::vector<double>{1.0, 0.0, -1.0, 0.0});
  auto [point, value] = s.maximize_linear(w);
  CHECK(point.value(0, 0) == 2.0);   // positive weight -> upper
  CHECK(point.value(0, 1) == 1.0);   // zero weight -> 0 clamped up to lo
  CHECK(point.value(1, 0) == -1.0);  // negative weight -> lower
  CHECK(point.value(1, 1) == -1.0);  // zero weight -> 0 clamped down to up
  CHECK(value == Catch::Approx(inner_product(w, point)));
}

TEST_CASE("simplex linear maximization picks the first best cell") {
  TimeGrid g = make_grid(1.0, 2);
  ResolvedSet s = ResolvedSet::scaled_simplex(g, 2);
  CHECK(s.simplex_total == 2.0);

  Trajectory w(g, 2, 0.0);
  w.value(1, 0) = 5.0;  // (k=1, h=0)
  w.value(0, 1) = 5.0;  // tied at (k=0, h=1)
  auto [point, value] = s.maximize_linear(w);
  // lexicographically smallest (h, k) wins: h=0, k=1
  CHECK(point.value(1, 0) == 2.0);
  CHECK(point.value(0, 1) == 0.0);
  CHECK(value == Catch::Approx(0.5 * 2.0 * 5.0));

  // against vertex enumeration on random weights
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 100; ++trial) {
    Trajectory wr = random_traj(g, 2, rng);
    auto [pt, val] = s.maximize_linear(wr);
    double best = -1e300;
    for (int k = 0; k < 2; ++k)
      for (int h = 0; h < 2; ++h) {
        Trajectory vert(g, 2, 0.0);
        vert.value(k, h) = s.simplex_total;
        best = std::max(best, inner_product(wr, vert));
      }
    CHECK(val == Catch::Approx(best).margin(1e-12));
    CHECK(s.contains(pt).ok);
  }
}

TEST_CASE("maximization under cuts stays feasible and dominates samples") {
  std::mt19937_64 rng(33);
  TimeGrid g = make_grid(1.0, 2);
  Trajectory lo(g, 2, -1.0), up(g, 2, 1.0);
  Trajectory cw(g, 2, 1.0);
  ResolvedSet s = ResolvedSet::box(lo, up, {{cw, 0.5, "cap"}});

  for (int trial = 0; trial < 50; ++trial) {
    Trajectory w = random_traj(g, 2, rng);
    auto [point, value] = s.maximize_linear(w);
    CHECK(s.contains(point, 1e-7).ok);
    for (int inner = 0; inner < 200; ++inner) {
      Trajectory q = random_traj(g, 2, rng, -1.0, 1.0);
      if (!s.contains(q).ok) continue;
      CHECK(inner_product(w, q) <= value + 1e-8);
    }
  }
}

TEST_CASE("projection onto a cut box satisfies the variational inequality") {
  std::mt19937_64 rng(34);
  TimeGrid g = make_grid(1.0, 2);
  Trajectory lo(g, 2, -1.0), up(g, 2, 1.0);
  Trajectory cw(g, 2, 1.0);
  ResolvedSet s = ResolvedSet::box(lo, up, {{cw, 0.3, "cap"}});

  for (int trial = 0; trial < 30; ++trial) {
    Trajectory y = random_traj(g, 2, rng, -2.0, 2.0);
    Trajectory p = s.project(y);
    CHECK(s.contains(p, 1e-8).ok);
    // <y - p, q - p> <= 0 for all feasible q characterizes the projection
    for (int inner = 0; inner < 300; ++inner) {
      Trajectory q = random_traj(g, 2, rng, -1.0, 1.0);
      if (!s.contains(q).ok) continue;
      CHECK(inner_product(y - p, q - p) <= 1e-7);
    }
  }
}

TEST_CASE("plain projections are exact") {
  std::mt19937_64 rng(35);
  TimeGrid g = make_grid(1.0, 3);
  Trajectory lo(g, 1, -0.5), up(g, 1, 0.75);
  ResolvedSet s = ResolvedSet::box(lo, up);
  Trajectory y = random_traj(g, 1, rng, -3.0, 3.0);
  CHECK(s.project(y) == project_box(y, lo, up));

  ResolvedSet px = ResolvedSet::scaled_simplex(g, 2);
  Trajectory q = random_traj(g, 2, rng);
  CHECK(px.project(q) == project_scaled_simplex(q, px.simplex_total));
}

TEST_CASE("anchors are feasible") {
  TimeGrid g = make_grid(1.0, 2);

  ResolvedSet simplex = ResolvedSet::scaled_simplex(g, 2);
  Trajectory pa = simplex.anchor();
  CHECK(simplex.contains(pa).ok);
  CHECK(pa.value(0, 0) == Catch::Approx(0.5));

  ResolvedSet box = ResolvedSet::box(Trajectory(g, 1, 0.25), Trajectory(g, 1, 2.0));
  CHECK(box.anchor().value(0, 0) == 0.25);  // 0 clamped up

  Trajectory cw(g, 1, 1.0);
  ResolvedSet cut = ResolvedSet::box(Trajectory(g, 1, 0.25), Trajectory(g, 1, 2.0),
                                     {{cw, 0.3, ""}});
  CHECK(cut.contains(cut.anchor(), 1e-7).ok);
}

TEST_CASE("fixed feasible sets ignore rivals") {
  TimeGrid g = make_grid(1.0, 1);
  FeasibleSet f = FeasibleSet::fixed(
      ResolvedSet::box(Trajectory(g, 1, 0.0), Trajectory(g, 1, 1.0)));
  CHECK_FALSE(f.rival_dependent);
  StrategyProfile x({Trajectory(g, 1, 0.3), Trajectory(g, 1, 0.9)});
  ResolvedSet r1 = f.resolve(Rivals(x, 0));
  ResolvedSet r2 = f.resolve(Rivals(x, 1));
  CHECK(r1.upper == r2.upper);
  CHECK(r1.kind == ResolvedSet::Kind::box);
}
