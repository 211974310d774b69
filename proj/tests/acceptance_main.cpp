// Acceptance gate: one self-contained check per shipped guarantee, one
// PASS/FAIL line each, exit 0 only if every line passes. Run through ctest
// or directly; artifacts land under the system temp directory.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tgnep/convexity.hpp"
#include "tgnep/runner.hpp"

using namespace tgnep;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(3);
  ss << v;
  return ss.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

const std::string kScenarioDir = TGNEP_SCENARIO_DIR;

// Every certifiable fixture; "satiated" is handled separately because its
// honest outcome is a rejection.
const std::vector<std::string> kSuite = {
    "tiny1", "tiny2", "tiny3", "cobb2",
    "quad_exchange", "twoproducer", "twocons"};

std::string cfg(const std::string& name) {
  return kScenarioDir + "/" + name + ".cfg";
}

struct FixtureRun {
  std::string name;
  int exit_code = -1;
  double seconds = 0.0;
  Scenario sc;
  SeriesData data;
  std::string series_path;
  std::string report;
};

FixtureRun solve_fixture(const std::string& name, const std::string& dir) {
  FixtureRun run;
  run.name = name;
  CliOptions opt;
  opt.out_dir = dir;
  std::ostringstream out, err;
  Clock::time_point t0 = Clock::now();
  run.exit_code = run_solve(cfg(name), opt, out, err);
  run.seconds = seconds_since(t0);
  run.report = out.str();
  run.series_path = dir + "/" + name + ".series.csv";
  run.sc = load_scenario(cfg(name));
  if (fs::exists(run.series_path))
    run.data = detail::read_series(run.series_path, run.sc.model);
  return run;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// --- criterion 1: quadrature exactness -------------------------------------

Outcome quadrature_exactness() {
  Clock::time_point t0 = Clock::now();
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<int> cells(1, 64), dims(1, 3);
  std::uniform_real_distribution<double> span(0.5, 4.0), pos(0.1, 2.0),
      slope(0.1, 1.0);
  double worst = 0.0;
  auto track = [&](double got, long double want) {
    long double denom = std::max<long double>(std::abs(want), 1e-30L);
    worst = std::max(worst, static_cast<double>(
                                std::abs(static_cast<long double>(got) - want) /
                                denom));
  };

  for (int trial = 0; trial < 1000; ++trial) {
    TimeGrid g = make_grid(span(rng), cells(rng));
    int dim = dims(rng);

    // piecewise-constant pair against a long-double reference sum
    Trajectory phi(g, dim), psi(g, dim);
    for (double& v : phi.flat()) v = pos(rng);
    for (double& v : psi.flat()) v = pos(rng);
    long double ref = 0.0L;
    for (int k = 0; k < g.intervals; ++k)
      for (int h = 0; h < dim; ++h)
        ref += static_cast<long double>(phi.value(k, h)) * psi.value(k, h);
    ref *= static_cast<long double>(g.horizon) / g.intervals;
    track(inner_product(phi, psi), ref);

    // affine integrand, midpoint-sampled, against a piecewise-constant
    // weight: reference from the antiderivative on each cell
    std::vector<double> alpha(dim), beta(dim);
    for (int h = 0; h < dim; ++h) {
      alpha[h] = pos(rng);
      beta[h] = slope(rng);
    }
    Trajectory affine = Trajectory::from_function(g, dim, [&](double t) {
      std::vector<double> cell(dim);
      for (int h = 0; h < dim; ++h) cell[h] = alpha[h] + beta[h] * t;
      return cell;
    });
    long double ref2 = 0.0L;
    long double dt = static_cast<long double>(g.horizon) / g.intervals;
    for (int k = 0; k < g.intervals; ++k) {
      long double tl = k * dt, tr = (k + 1) * dt;
      for (int h = 0; h < dim; ++h)
        ref2 += static_cast<long double>(psi.value(k, h)) *
                (alpha[h] * (tr - tl) + beta[h] * (tr * tr - tl * tl) / 2.0L);
    }
    track(inner_product(affine, psi), ref2);

    // affine against the constant-one weight: alpha*T + beta*T^2/2
    Trajectory one(g, dim, 1.0);
    long double T = g.horizon;
    long double ref3 = 0.0L;
    for (int h = 0; h < dim; ++h) ref3 += alpha[h] * T + beta[h] * T * T / 2.0L;
    track(inner_product(affine, one), ref3);
  }

  double secs = seconds_since(t0);
  Outcome out;
  out.pass = worst <= 1e-12 && secs < 1.0;
  out.detail = "max relative error " + fmt(worst) + " over 1000 cases, " +
               fmt(secs) + " s";
  return out;
}

// --- criterion 2: solve-and-certify on the log-utility fixture -------------

Outcome definition_soundness(const FixtureRun& cobb2) {
  Outcome out;
  if (cobb2.exit_code != 0) {
    out.detail = "solve exited " + std::to_string(cobb2.exit_code);
    return out;
  }
  const EconomyModel& m = cobb2.sc.model;
  double pgap = check_pp(m, cobb2.data.a, cobb2.data.p).front();
  double cgap =
      check_cp(m, cobb2.data.a, cobb2.data.b, cobb2.data.p, 1e-9).front();
  double mgap = check_mp(m, cobb2.data.a, cobb2.data.b, cobb2.data.p);
  out.pass = pgap <= 1e-8 && cgap <= 1e-6 && mgap <= 1e-6 &&
             cobb2.seconds < 60.0;
  out.detail = "producer gap " + fmt(pgap) + ", consumer gap " + fmt(cgap) +
               ", price gap " + fmt(mgap) + ", " + fmt(cobb2.seconds) + " s";
  return out;
}

// --- criterion 3: clearing integrals and profits at accepted equilibria ----

Outcome clearing_and_profits(const std::vector<FixtureRun>& runs) {
  Outcome out;
  double worst_clearing = -1e300, worst_profit = 1e300;
  int accepted = 0;
  for (const FixtureRun& r : runs) {
    if (r.exit_code != 0) {
      out.detail = r.name + " did not certify (exit " +
                   std::to_string(r.exit_code) + ")";
      return out;
    }
    ++accepted;
    std::vector<double> cleared =
        check_market_clearing(r.sc.model, r.data.a, r.data.b);
    for (double v : cleared) worst_clearing = std::max(worst_clearing, v);
    for (const Trajectory& plan : r.data.a)
      worst_profit = std::min(worst_profit, inner_product(r.data.p, plan));
  }
  out.pass = accepted >= 5 && worst_clearing <= 1e-6 && worst_profit >= -1e-10;
  out.detail = std::to_string(accepted) + " equilibria, max clearing integral " +
               fmt(worst_clearing) + ", min profit " + fmt(worst_profit);
  return out;
}

// --- criterion 4: orthogonality residual and its applicability flag --------

Outcome orthogonality(const std::vector<FixtureRun>& runs,
                      const std::string& dir) {
  Outcome out;
  double worst = 0.0;
  for (const FixtureRun& r : runs) {
    if (r.exit_code != 0) {
      out.detail = r.name + " solve exited " + std::to_string(r.exit_code);
      return out;
    }
    WalrasCheck w = check_walras(r.sc.model, r.data.a, r.data.b, r.data.p);
    if (!w.applicable) {
      out.detail = r.name + " unexpectedly inapplicable: " + w.note;
      return out;
    }
    worst = std::max(worst, std::abs(w.residual));
  }
  if (worst > 1e-6) {
    out.detail = "max |residual| " + fmt(worst) + " over the suite";
    return out;
  }

  FixtureRun sat = solve_fixture("satiated", dir);
  WalrasCheck w = check_walras(sat.sc.model, sat.data.a, sat.data.b, sat.data.p);
  bool one_sided = w.residual <= 1e-6;  // budget side only
  out.pass = sat.exit_code == 2 && !w.applicable && one_sided;
  out.detail = "max |residual| " + fmt(worst) + " where applicable; satiated: exit " +
               std::to_string(sat.exit_code) + ", applicable=" +
               (w.applicable ? "true" : "false") + ", one-sided residual " +
               fmt(w.residual);
  return out;
}

// --- criterion 5: zero gap iff fixed point of the best-response map --------

double br_distance(const GnepInstance& inst, const StrategyProfile& x,
                   double eps_inner) {
  double acc = 0.0;
  for (int nu = 0; nu < inst.player_count(); ++nu) {
    auto [own, rivals] = split(x, nu);
    BestResponse br = best_response(inst, nu, rivals, eps_inner, &own);
    double d = norm(br.point - own);
    acc += d * d;
  }
  return std::sqrt(acc);
}

StrategyProfile random_feasible_profile(const EconomyModel& m,
                                        const EconomyGnep& game,
                                        std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double R = compute_R(m);
  std::vector<double> caps = truncated_consumption_bound(m, R);

  std::vector<Trajectory> blocks(game.instance.player_count(),
                                 Trajectory(m.grid, m.commodities, 0.0));
  std::vector<Trajectory> a;
  for (int j = 0; j < m.producer_count(); ++j) {
    Trajectory plan = m.producers[j].lower;
    for (int k = 0; k < m.grid.intervals; ++k)
      for (int h = 0; h < m.commodities; ++h) {
        double lo = m.producers[j].lower.value(k, h);
        double up = m.producers[j].upper.value(k, h);
        plan.value(k, h) = lo + unit(rng) * (up - lo);
      }
    if (!m.producers[j].cuts.empty())
      plan = producer_resolved_set(m, j).project(plan);
    blocks[game.producer_block(j)] = plan;
    a.push_back(std::move(plan));
  }

  Trajectory p(m.grid, m.commodities, 0.0);
  for (double& v : p.flat()) v = 0.25 + 1.5 * unit(rng);
  p = project_prices(p);
  blocks[game.price_block()] = p;

  for (int i = 0; i < m.consumer_count(); ++i) {
    Trajectory want(m.grid, m.commodities, 0.0);
    for (int k = 0; k < m.grid.intervals; ++k)
      for (int h = 0; h < m.commodities; ++h)
        want.value(k, h) = unit(rng) * caps[h] / m.grid.dt();
    ResolvedSet set = consumer_resolved_set(m, caps, i, a, p);
    blocks[game.consumer_block(i)] = set.project(want);
  }
  return StrategyProfile{std::move(blocks)};
}

Outcome gap_iff_fixed_point() {
  // 1e-7 keeps the inner ascent certifiable from arbitrary feasible starts:
  // the log-family utilities have curvature ~1/offset^2 near the consumption
  // floor, which caps the attainable stationarity certificate near 1e-6.
  // Both sides of the iff stay separated by orders of magnitude: equilibria
  // measure an exact zero, random profiles sit at gaps of order 0.1.
  const double eps_inner = 1e-7;
  Outcome out;
  int checked = 0;
  std::mt19937_64 rng(515);
  for (const std::string& name : kSuite) {
    Scenario sc = load_scenario(cfg(name));
    EconomyGnep game = to_gnep(sc.model);
    double thresh = game.instance.player_count() * eps_inner;
    for (int t = 0; t < 10; ++t) {
      StrategyProfile x = random_feasible_profile(sc.model, game, rng);
      double gap = 0.0, dist = 0.0;
      try {
        gap = ni_gap(game.instance, x, eps_inner);
        dist = br_distance(game.instance, x, eps_inner);
      } catch (const InnerStallError& e) {
        out.detail = name + " random profile " + std::to_string(t) +
                     ": inner ascent stalled at gap " + fmt(e.certified_gap);
        return out;
      }
      bool gap_zero = gap <= thresh;
      bool fixed = dist <= 1e-6;
      ++checked;
      if (gap_zero != fixed) {
        out.detail = name + " random profile " + std::to_string(t) +
                     ": gap " + fmt(gap) + " vs distance " + fmt(dist);
        return out;
      }
    }
  }

  // hand-built equilibria exercise the "both true" direction
  {
    Scenario sc = load_scenario(cfg("tiny1"));
    EconomyGnep game = to_gnep(sc.model);
    StrategyProfile x{{Trajectory(sc.model.grid, 1, 0.5),
                       Trajectory(sc.model.grid, 1, 1.5),
                       Trajectory(sc.model.grid, 1, 1.0)}};
    double gap = ni_gap(game.instance, x, eps_inner);
    double dist = br_distance(game.instance, x, eps_inner);
    ++checked;
    if (gap > 3 * eps_inner || dist > 1e-6) {
      out.detail = "tiny1 equilibrium: gap " + fmt(gap) + ", distance " + fmt(dist);
      return out;
    }
  }
  {
    Scenario sc = load_scenario(cfg("tiny2"));
    EconomyGnep game = to_gnep(sc.model);
    StrategyProfile x{{Trajectory(sc.model.grid, 2, 1.0),
                       Trajectory::constant(sc.model.grid, {0.75, 0.25})}};
    double gap = ni_gap(game.instance, x, eps_inner);
    double dist = br_distance(game.instance, x, eps_inner);
    ++checked;
    if (gap > 2 * eps_inner || dist > 1e-6) {
      out.detail = "tiny2 equilibrium: gap " + fmt(gap) + ", distance " + fmt(dist);
      return out;
    }
  }
  out.pass = true;
  out.detail = std::to_string(checked) + " profiles, equivalence held on all";
  return out;
}

// --- criterion 6: solver vs exhaustive grid oracle -------------------------

Outcome oracle_equivalence(const std::vector<FixtureRun>& runs) {
  Outcome out;
  std::string summary;
  for (const std::string name : {"tiny1", "tiny2", "tiny3"}) {
    const FixtureRun* run = nullptr;
    for (const FixtureRun& r : runs)
      if (r.name == name) run = &r;
    if (!run || run->exit_code != 0) {
      out.detail = name + " solve unavailable";
      return out;
    }
    CliOptions opt;
    opt.out_dir = fs::path(run->series_path).parent_path().string();
    opt.compare_series = run->series_path;
    std::ostringstream o, e;
    Clock::time_point t0 = Clock::now();
    int code = run_oracle(cfg(name), opt, o, e);
    double secs = seconds_since(t0);
    if (code != 0 || secs >= 120.0) {
      out.detail = name + ": oracle exit " + std::to_string(code) + " in " +
                   fmt(secs) + " s";
      return out;
    }
    std::string rep = o.str();
    std::size_t at = rep.find("compare_max_cells = ");
    std::string cells = at == std::string::npos
                            ? "?"
                            : fmt(std::stod(rep.substr(at + 20)));
    if (!summary.empty()) summary += ", ";
    summary += name + " " + cells + " cells in " + fmt(secs) + " s";
  }
  out.pass = true;
  out.detail = summary;
  return out;
}

// --- criterion 7: generalized concavity of the built-in tastes -------------

Outcome convexity_checks() {
  Outcome out;
  TimeGrid g = make_grid(1.0, 2);
  Sampler box = make_box_sampler(Trajectory(g, 2, 0.0), Trajectory(g, 2, 2.0));

  Consumer lin;
  lin.utility = LinearUtility{Trajectory::constant(g, {0.7, 1.3})};
  Consumer slog;
  slog.utility = ShiftedLogUtility{{0.6, 0.4}, 0.05};
  Consumer quad;
  quad.utility = QuadraticUtility{Trajectory::constant(g, {1.0, 1.5})};

  for (const auto& [label, c] : {std::pair<const char*, const Consumer*>{
                                     "linear", &lin},
                                 {"shifted_log", &slog},
                                 {"quadratic", &quad}}) {
    ScalarField f = [c](const Trajectory& b) { return utility_value(*c, b); };
    SampleReport rep = check_semistrict(f, box, 10000, 424200);
    if (!rep.pass) {
      out.detail = std::string(label) + " flagged: " +
                   rep.counterexample->what;
      return out;
    }
  }

  // the planted bowl must be caught at modest sample counts for every seed
  Sampler wide = make_box_sampler(Trajectory(g, 2, -1.0), Trajectory(g, 2, 1.0));
  ScalarField bowl = [](const Trajectory& x) { return inner_product(x, x); };
  int caught = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SampleReport rep = check_quasiconcave(bowl, wide, 1000, seed);
    if (!rep.pass) ++caught;
  }
  out.pass = caught == 20;
  out.detail = "3 utilities clean at 10^4 samples; bowl caught in " +
               std::to_string(caught) + "/20 seeds at 10^3";
  return out;
}

// --- criterion 8: determinism and artifact round-trip ----------------------

Outcome determinism(const std::vector<FixtureRun>& first,
                    const std::string& dir2) {
  Outcome out;
  for (const FixtureRun& r : first) {
    FixtureRun again = solve_fixture(r.name, dir2);
    if (again.exit_code != r.exit_code) {
      out.detail = r.name + " exit codes differ between runs";
      return out;
    }
    if (slurp(r.series_path) != slurp(again.series_path) ||
        slurp(r.series_path).empty()) {
      out.detail = r.name + " series differ between identical runs";
      return out;
    }
    CliOptions opt;
    opt.out_dir = dir2;
    std::ostringstream o, e;
    int code = run_verify(cfg(r.name), r.series_path, opt, o, e);
    if (code != 0) {
      out.detail = r.name + " verify exited " + std::to_string(code);
      return out;
    }
  }
  out.pass = true;
  out.detail = std::to_string(first.size()) +
               " fixtures byte-identical and re-verified";
  return out;
}

}  // namespace

int main() {
  fs::path root = fs::temp_directory_path() / "tgnep_acceptance";
  fs::remove_all(root);
  fs::create_directories(root);
  std::string dir1 = (root / "run1").string();
  std::string dir2 = (root / "run2").string();

  std::vector<FixtureRun> runs;
  for (const std::string& name : kSuite) runs.push_back(solve_fixture(name, dir1));
  const FixtureRun* cobb2 = nullptr;
  for (const FixtureRun& r : runs)
    if (r.name == "cobb2") cobb2 = &r;

  struct Row {
    int id;
    std::string label;
    Outcome result;
  };
  std::vector<Row> rows;
  rows.push_back({1, "quadrature exactness", quadrature_exactness()});
  rows.push_back({2, "solve-and-certify soundness", definition_soundness(*cobb2)});
  rows.push_back({3, "market clearing and profits", clearing_and_profits(runs)});
  rows.push_back({4, "orthogonality residual", orthogonality(runs, dir1)});
  rows.push_back({5, "gap iff best-response fixed point", gap_iff_fixed_point()});
  rows.push_back({6, "oracle equivalence", oracle_equivalence(runs)});
  rows.push_back({7, "generalized concavity checks", convexity_checks()});
  rows.push_back({8, "determinism and round-trip", determinism(runs, dir2)});

  int failures = 0;
  for (const Row& row : rows) {
    if (!row.result.pass) ++failures;
    std::cout << (row.result.pass ? "PASS" : "FAIL") << "  criterion " << row.id
              << "  " << row.label << "  (" << row.result.detail << ")\n";
  }
  if (failures) std::cout << failures << " criterion(s) failed\n";
  return failures == 0 ? 0 : 1;
}
