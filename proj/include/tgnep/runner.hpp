#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tgnep/economy.hpp"
#include "tgnep/gnep.hpp"
#include "tgnep/scenario.hpp"
#include "tgnep/verify.hpp"

namespace tgnep {

// Exit contract shared by all commands:
//   0  solved and certified (verify: certified; oracle: compared fine)
//   1  malformed input: parse errors, model validation, schema mismatches
//   2  honest negative outcome: no convergence, certificate rejected,
//      or an oracle comparison out of range
struct CliOptions {
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  int oracle_resolution = 21;
  std::string compare_series;  // oracle only
  double compare_cells = 2.0;  // allowed distance in grid cells
};

struct SeriesData {
  std::vector<Trajectory> a, b;
  Trajectory p, z;
};

namespace detail {

inline std::string path_stem(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

inline std::vector<std::string> series_header(const EconomyModel& m) {
  std::vector<std::string> cols;
  cols.push_back("t");
  for (int j = 0; j < m.producer_count(); ++j)
    for (int h = 0; h < m.commodities; ++h)
      cols.push_back("a" + std::to_string(j + 1) + "_" + std::to_string(h + 1));
  for (int i = 0; i < m.consumer_count(); ++i)
    for (int h = 0; h < m.commodities; ++h)
      cols.push_back("b" + std::to_string(i + 1) + "_" + std::to_string(h + 1));
  for (int h = 0; h < m.commodities; ++h)
    cols.push_back("p_" + std::to_string(h + 1));
  for (int h = 0; h < m.commodities; ++h)
    cols.push_back("z_" + std::to_string(h + 1));
  return cols;
}

inline void write_series(const std::string& path, const EconomyModel& m,
                         const std::vector<Trajectory>& a,
                         const std::vector<Trajectory>& b,
                         const Trajectory& p) {
  Trajectory z = excess_demand(m, a, b);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write series file '" + path + "'");
  std::vector<std::string> cols = series_header(m);
  for (std::size_t c = 0; c < cols.size(); ++c)
    out << (c ? "," : "") << cols[c];
  out << "\n";
  for (int k = 0; k < m.grid.intervals; ++k) {
    out << fmt17(m.grid.midpoint(k));
    for (int j = 0; j < m.producer_count(); ++j)
      for (int h = 0; h < m.commodities; ++h)
        out << "," << fmt17(a[j].value(k, h));
    for (int i = 0; i < m.consumer_count(); ++i)
      for (int h = 0; h < m.commodities; ++h)
        out << "," << fmt17(b[i].value(k, h));
    for (int h = 0; h < m.commodities; ++h) out << "," << fmt17(p.value(k, h));
    for (int h = 0; h < m.commodities; ++h) out << "," << fmt17(z.value(k, h));
    out << "\n";
  }
}

inline SeriesData read_series(const std::string& path, const EconomyModel& m) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open series file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ScenarioError("series file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> want = series_header(m);
  {
    std::stringstream ss(line);
    std::string col;
    std::size_t idx = 0;
    while (std::getline(ss, col, ',')) {
      if (idx >= want.size() || trim(col) != want[idx])
        throw ScenarioError("series header mismatch at column " +
                            std::to_string(idx + 1) + ": got '" + trim(col) +
                            "', expected '" +
                            (idx < want.size() ? want[idx] : "<end>") + "'");
      ++idx;
    }
    if (idx != want.size())
      throw ScenarioError("series header has " + std::to_string(idx) +
                          " columns, expected " + std::to_string(want.size()));
  }

  SeriesData data;
  data.a.assign(m.producer_count(), Trajectory(m.grid, m.commodities, 0.0));
  data.b.assign(m.consumer_count(), Trajectory(m.grid, m.commodities, 0.0));
  data.p = Trajectory(m.grid, m.commodities, 0.0);
  data.z = Trajectory(m.grid, m.commodities, 0.0);

  for (int k = 0; k < m.grid.intervals; ++k) {
    if (!std::getline(in, line))
      throw ScenarioError("series file ends after " + std::to_string(k) +
                          " data rows, expected " +
                          std::to_string(m.grid.intervals));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ss, cell, ','))
      row.push_back(parse_number(cell, k + 2));
    if (row.size() != series_header(m).size())
      throw ScenarioError("series row " + std::to_string(k + 2) + " has " +
                          std::to_string(row.size()) + " fields");
    std::size_t c = 0;
    double t = row[c++];
    if (std::abs(t - m.grid.midpoint(k)) > 1e-9 * (1.0 + m.grid.horizon))
      throw ScenarioError("series row " + std::to_string(k + 2) +
                          " is not at the expected cell midpoint");
    for (int j = 0; j < m.producer_count(); ++j)
      for (int h = 0; h < m.commodities; ++h) data.a[j].value(k, h) = row[c++];
    for (int i = 0; i < m.consumer_count(); ++i)
      for (int h = 0; h < m.commodities; ++h) data.b[i].value(k, h) = row[c++];
    for (int h = 0; h < m.commodities; ++h) data.p.value(k, h) = row[c++];
    for (int h = 0; h < m.commodities; ++h) data.z.value(k, h) = row[c++];
  }
  if (std::getline(in, line) && !trim(line).empty())
    throw ScenarioError("series file has extra rows beyond the grid");
  return data;
}

class Report {
 public:
  void add(const std::string& key, const std::string& value) {
    lines_.push_back(key + " = " + value);
  }
  void add(const std::string& key, double value) { add(key, fmt17(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, long long value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) {
    add(key, std::string(value ? "true" : "false"));
  }

  std::string text() const {
    std::string out;
    for (const auto& l : lines_) out += l + "\n";
    return out;
  }

 private:
  std::vector<std::string> lines_;
};

inline void add_tolerances(Report& rep, const Tolerances& tol) {
  rep.add("tol_producer", tol.producer);
  rep.add("tol_consumer", tol.consumer);
  rep.add("tol_price", tol.price);
  rep.add("tol_clearing", tol.clearing);
  rep.add("tol_walras", tol.walras);
  rep.add("tol_membership", tol.membership);
  rep.add("tol_inner", tol.inner);
}

inline void add_certificate(Report& rep, const EconomyModel& m,
                            const EquilibriumCertificate& cert) {
  rep.add("accepted", cert.accepted);
  for (int j = 0; j < m.producer_count(); ++j)
    rep.add("producer_gap_" + std::to_string(j + 1),
            j < static_cast<int>(cert.producer_gaps.size())
                ? cert.producer_gaps[j]
                : std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < m.consumer_count(); ++i)
    rep.add("consumer_gap_" + std::to_string(i + 1),
            i < static_cast<int>(cert.consumer_gaps.size())
                ? cert.consumer_gaps[i]
                : std::numeric_limits<double>::quiet_NaN());
  rep.add("price_gap", cert.price_gap);
  for (int h = 0; h < m.commodities; ++h)
    rep.add("clearing_" + std::to_string(h + 1), cert.clearing[h]);
  rep.add("walras_residual", cert.walras_residual);
  rep.add("walras_applicable", cert.walras_applicable);
  if (!cert.walras_applicable) rep.add("walras_note", cert.walras_note);
  for (std::size_t f = 0; f < cert.failures.size(); ++f)
    rep.add("failure_" + std::to_string(f + 1), cert.failures[f]);
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

}  // namespace detail

inline int run_solve(const std::string& scenario_path, const CliOptions& opt,
                     std::ostream& out, std::ostream& err) {
  Scenario sc;
  EconomyGnep game;
  try {
    sc = load_scenario(scenario_path, opt.overrides);
    if (opt.seed) sc.seed = *opt.seed;
    ValidationReport vr = validate(sc.model, {1000, sc.seed});
    if (!vr.ok) {
      err << "model validation failed:\n";
      for (const auto& issue : vr.issues)
        err << "  [" << issue.where << "] " << issue.message << "\n";
      return 1;
    }
    game = to_gnep(sc.model);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  const EconomyModel& m = sc.model;
  std::vector<Trajectory> blocks;
  for (int j = 0; j < m.producer_count(); ++j)
    blocks.push_back(Trajectory(m.grid, m.commodities, 0.0));
  for (int i = 0; i < m.consumer_count(); ++i)
    blocks.push_back(m.consumers[i].endowment);
  blocks.push_back(Trajectory(m.grid, m.commodities,
                              1.0 / static_cast<double>(m.commodities)));
  StrategyProfile x0{std::move(blocks)};

  SolveResult sol;
  try {
    sol = solve(game.instance, x0, sc.schedule);
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << "\n";
    return 1;
  }

  std::vector<Trajectory> a, b;
  for (int j = 0; j < m.producer_count(); ++j)
    a.push_back(sol.profile.block(game.producer_block(j)));
  for (int i = 0; i < m.consumer_count(); ++i)
    b.push_back(sol.profile.block(game.consumer_block(i)));
  Trajectory p = sol.profile.block(game.price_block());

  EquilibriumCertificate cert = certify(m, a, b, p, sc.tolerances);
  int exit_code = (sol.converged && cert.accepted) ? 0 : 2;

  detail::Report rep;
  rep.add("command", std::string("solve"));
  rep.add("scenario", detail::path_stem(scenario_path));
  rep.add("seed", static_cast<long long>(sc.seed));
  rep.add("converged", sol.converged);
  rep.add("iterations", sol.iterations);
  rep.add("gap", sol.gap);
  rep.add("residual", sol.residual);
  rep.add("start_projection_distance", sol.start_projection_distance);
  rep.add("eps_gap", sc.schedule.eps_gap);
  rep.add("eps_inner", sc.schedule.eps_inner);
  detail::add_tolerances(rep, sc.tolerances);
  detail::add_certificate(rep, m, cert);
  rep.add("exit_code", exit_code);

  try {
    std::filesystem::create_directories(opt.out_dir);
    std::string stem = detail::path_stem(scenario_path);
    detail::write_series(opt.out_dir + "/" + stem + ".series.csv", m, a, b, p);
    detail::write_text(opt.out_dir + "/" + stem + ".report.txt", rep.text());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  out << rep.text();
  return exit_code;
}

inline int run_verify(const std::string& scenario_path,
                      const std::string& series_path, const CliOptions& opt,
                      std::ostream& out, std::ostream& err) {
  Scenario sc;
  SeriesData data;
  try {
    sc = load_scenario(scenario_path, opt.overrides);
    if (opt.seed) sc.seed = *opt.seed;
    ValidationReport vr = validate(sc.model, {1000, sc.seed});
    if (!vr.ok) {
      err << "model validation failed:\n";
      for (const auto& issue : vr.issues)
        err << "  [" << issue.where << "] " << issue.message << "\n";
      return 1;
    }
    data = detail::read_series(series_path, sc.model);
    Trajectory z = excess_demand(sc.model, data.a, data.b);
    if (norm(z - data.z) > 1e-9 * (1.0 + norm(z)))
      throw ScenarioError(
          "stored excess demand disagrees with the plans in the series");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  EquilibriumCertificate cert =
      certify(sc.model, data.a, data.b, data.p, sc.tolerances);
  int exit_code = cert.accepted ? 0 : 2;

  detail::Report rep;
  rep.add("command", std::string("verify"));
  rep.add("scenario", detail::path_stem(scenario_path));
  rep.add("series", detail::path_stem(series_path));
  detail::add_tolerances(rep, sc.tolerances);
  detail::add_certificate(rep, sc.model, cert);
  rep.add("exit_code", exit_code);

  try {
    std::filesystem::create_directories(opt.out_dir);
    std::string stem = detail::path_stem(scenario_path);
    detail::write_text(opt.out_dir + "/" + stem + ".verify.txt", rep.text());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  out << rep.text();
  return exit_code;
}

inline int run_oracle(const std::string& scenario_path, const CliOptions& opt,
                      std::ostream& out, std::ostream& err) {
  Scenario sc;
  try {
    sc = load_scenario(scenario_path, opt.overrides);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  OracleOptions oo;
  oo.resolution = opt.oracle_resolution;
  OracleResult res = brute_force_oracle(sc.model, oo);

  detail::Report rep;
  rep.add("command", std::string("oracle"));
  rep.add("scenario", detail::path_stem(scenario_path));
  rep.add("resolution", opt.oracle_resolution);
  rep.add("refused", res.refused);
  if (res.refused) {
    rep.add("reason", res.reason);
    out << rep.text();
    err << "oracle refused: " << res.reason << "\n";
    return 1;
  }
  rep.add("states", res.states);
  rep.add("min_gap", res.min_gap);
  rep.add("minimizers", res.minimizer_count);
  const EconomyModel& m = sc.model;
  if (!res.best.empty()) {
    const OracleCandidate& c = res.best.front();
    for (std::size_t j = 0; j < c.a.size(); ++j)
      for (int h = 0; h < m.commodities; ++h)
        rep.add("best_a" + std::to_string(j + 1) + "_" + std::to_string(h + 1),
                c.a[j].value(0, h));
    for (std::size_t i = 0; i < c.b.size(); ++i)
      for (int h = 0; h < m.commodities; ++h)
        rep.add("best_b" + std::to_string(i + 1) + "_" + std::to_string(h + 1),
                c.b[i].value(0, h));
    for (int h = 0; h < m.commodities; ++h)
      rep.add("best_p_" + std::to_string(h + 1), c.p.value(0, h));
  }
  for (std::size_t h = 0; h < res.step_a.size(); ++h)
    rep.add("step_a_" + std::to_string(h + 1), res.step_a[h]);
  for (std::size_t h = 0; h < res.step_b.size(); ++h)
    rep.add("step_b_" + std::to_string(h + 1), res.step_b[h]);
  for (std::size_t h = 0; h < res.step_p.size(); ++h)
    rep.add("step_p_" + std::to_string(h + 1), res.step_p[h]);

  int exit_code = 0;
  if (!opt.compare_series.empty()) {
    SeriesData data;
    try {
      data = detail::read_series(opt.compare_series, sc.model);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return 1;
    }
    // Distance to the closest grid minimizer, in grid cells, worst
    // coordinate; production, consumption and price coordinates all count.
    double best_cells = std::numeric_limits<double>::infinity();
    for (const auto& cand : res.best) {
      double worst = 0.0;
      auto account = [&](double solved, double oracle, double step) {
        double d = std::abs(solved - oracle);
        if (step > 0.0)
          worst = std::max(worst, d / step);
        else if (d > 1e-9)
          worst = std::numeric_limits<double>::infinity();
      };
      for (std::size_t j = 0; j < cand.a.size(); ++j)
        for (int h = 0; h < m.commodities; ++h)
          account(data.a[j].value(0, h), cand.a[j].value(0, h), res.step_a[h]);
      for (std::size_t i = 0; i < cand.b.size(); ++i)
        for (int h = 0; h < m.commodities; ++h)
          account(data.b[i].value(0, h), cand.b[i].value(0, h), res.step_b[h]);
      for (int h = 0; h < m.commodities; ++h)
        account(data.p.value(0, h), cand.p.value(0, h), res.step_p[h]);
      best_cells = std::min(best_cells, worst);
    }
    rep.add("compare_series", detail::path_stem(opt.compare_series));
    rep.add("compare_max_cells", best_cells);
    bool ok = best_cells <= opt.compare_cells;
    rep.add("compare_ok", ok);
    if (!ok) exit_code = 2;
  }
  rep.add("exit_code", exit_code);

  try {
    std::filesystem::create_directories(opt.out_dir);
    std::string stem = detail::path_stem(scenario_path);
    detail::write_text(opt.out_dir + "/" + stem + ".oracle.txt", rep.text());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  out << rep.text();
  return exit_code;
}

}  // namespace tgnep
