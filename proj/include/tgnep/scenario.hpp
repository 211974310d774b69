#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tgnep/economy.hpp"
#include "tgnep/gnep.hpp"
#include "tgnep/verify.hpp"

namespace tgnep {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Scenario {
  EconomyModel model;
  SolverSchedule schedule;
  Tolerances tolerances;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Entry {
  std::string raw;
  int line = 0;
};

struct Section {
  std::string id;    // "model", "solver", "tolerances", "producer3", ...
  std::string kind;  // "model", "solver", "tolerances", "producer", "consumer"
  int index = 0;     // 1-based for producer/consumer
  int line = 0;
  std::vector<std::pair<std::string, Entry>> entries;  // insertion order

  const Entry* find(const std::string& key) const {
    for (const auto& [k, e] : entries)
      if (k == key) return &e;
    return nullptr;
  }

  void set(const std::string& key, std::string raw, int line_no) {
    for (auto& [k, e] : entries)
      if (k == key) {
        e = {std::move(raw), line_no};
        return;
      }
    entries.push_back({key, {std::move(raw), line_no}});
  }
};

struct ScenarioIr {
  std::vector<Section> sections;

  Section* find(const std::string& id) {
    for (auto& s : sections)
      if (s.id == id) return &s;
    return nullptr;
  }
  const Section* find(const std::string& id) const {
    for (const auto& s : sections)
      if (s.id == id) return &s;
    return nullptr;
  }
};

[[noreturn]] inline void fail_at(int line, const std::string& msg) {
  if (line > 0)
    throw ScenarioError("line " + std::to_string(line) + ": " + msg);
  throw ScenarioError(msg);
}

inline double parse_number(const std::string& raw, int line) {
  std::string t = trim(raw);
  if (t.empty()) fail_at(line, "expected a number, got nothing");
  const char* begin = t.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + t.size())
    fail_at(line, "malformed number '" + t + "'");
  if (!std::isfinite(v)) fail_at(line, "non-finite number '" + t + "'");
  return v;
}

inline std::vector<double> parse_numbers(const std::string& raw, int line) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss(raw);
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, line));
  if (out.empty()) fail_at(line, "expected a comma-separated list of numbers");
  return out;
}

inline long long parse_integer(const std::string& raw, int line) {
  double v = parse_number(raw, line);
  long long iv = static_cast<long long>(v);
  if (static_cast<double>(iv) != v)
    fail_at(line, "expected an integer, got '" + trim(raw) + "'");
  return iv;
}

inline ScenarioIr parse_ir(const std::string& text) {
  ScenarioIr ir;
  Section* current = nullptr;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail_at(line_no, "unterminated section header");
      std::string name = trim(line.substr(1, line.size() - 2));
      std::string kind = name;
      int index = 0;
      if (auto sp = name.find(' '); sp != std::string::npos) {
        kind = trim(name.substr(0, sp));
        std::string idx = trim(name.substr(sp + 1));
        index = static_cast<int>(parse_integer(idx, line_no));
      }
      if (kind != "model" && kind != "solver" && kind != "tolerances" &&
          kind != "producer" && kind != "consumer")
        fail_at(line_no, "unknown section '" + name + "'");
      bool indexed = kind == "producer" || kind == "consumer";
      if (indexed && index < 1)
        fail_at(line_no, "section '" + kind + "' needs a positive index");
      if (!indexed && index != 0)
        fail_at(line_no, "section '" + kind + "' takes no index");
      Section s;
      s.kind = kind;
      s.index = index;
      s.id = indexed ? kind + std::to_string(index) : kind;
      s.line = line_no;
      if (ir.find(s.id)) fail_at(line_no, "duplicate section '" + s.id + "'");
      ir.sections.push_back(std::move(s));
      current = &ir.sections.back();
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail_at(line_no, "expected 'key = value' or a section header");
    if (!current) fail_at(line_no, "key outside any section");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail_at(line_no, "empty key");
    if (value.empty()) fail_at(line_no, "empty value for key '" + key + "'");
    if (current->find(key))
      fail_at(line_no, "duplicate key '" + key + "' in section [" +
                           current->id + "]");
    current->set(key, value, line_no);
  }
  return ir;
}

// "<section>.<key>=<value>" with section ids as in Section::id.
inline void apply_override(ScenarioIr& ir, const std::string& text) {
  auto eq = text.find('=');
  auto dot = text.find('.');
  if (dot == std::string::npos || eq == std::string::npos || dot > eq)
    throw ScenarioError("override '" + text +
                        "' must look like section.key=value");
  std::string id = trim(text.substr(0, dot));
  std::string key = trim(text.substr(dot + 1, eq - dot - 1));
  std::string value = trim(text.substr(eq + 1));
  if (id.empty() || key.empty() || value.empty())
    throw ScenarioError("override '" + text + "' has an empty part");
  Section* s = ir.find(id);
  if (!s)
    throw ScenarioError("override targets unknown section '" + id + "'");
  s->set(key, value, 0);
}

// Key whitelists; indexed trajectory keys like "lo_2" are validated against
// their stem.
inline bool key_known(const std::string& kind, const std::string& key) {
  auto stem_of = [](const std::string& k) {
    auto us = k.rfind('_');
    if (us == std::string::npos) return std::pair<std::string, bool>{k, false};
    std::string tail = k.substr(us + 1);
    if (tail.empty()) return std::pair<std::string, bool>{k, false};
    for (char c : tail)
      if (!std::isdigit(static_cast<unsigned char>(c)))
        return std::pair<std::string, bool>{k, false};
    return std::pair<std::string, bool>{k.substr(0, us), true};
  };
  auto [stem, indexed] = stem_of(key);
  auto one_of = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (stem == k) return true;
    return false;
  };
  if (kind == "model")
    return !indexed && one_of({"horizon", "intervals", "commodities"});
  if (kind == "solver")
    return !indexed && one_of({"lambda", "decay", "max_iters", "eps_gap",
                               "eps_inner", "update", "seed", "truncation"});
  if (kind == "tolerances")
    return !indexed && one_of({"producer", "consumer", "price", "clearing",
                               "walras", "membership"});
  if (kind == "producer")
    return indexed ? one_of({"lo", "up", "cut"}) : one_of({"lo", "up"});
  if (kind == "consumer") {
    if (indexed) return one_of({"endowment", "floor", "weights", "target"});
    return one_of({"endowment", "floor", "utility", "weights", "offset",
                   "target", "shares"});
  }
  return false;
}

// Assemble a trajectory for one section from "key" (per-commodity constants)
// plus "key_h" per-cell overrides (h is a 1-based commodity index).
inline Trajectory read_trajectory(const Section& s, const std::string& stem,
                                  const TimeGrid& grid, int commodities,
                                  std::optional<double> default_fill) {
  Trajectory out(grid, commodities,
                 default_fill.has_value() ? *default_fill : 0.0);
  const Entry* base = s.find(stem);
  if (!base && !default_fill.has_value()) {
    // Without a constant row, every commodity must get a per-cell row.
    for (int h = 1; h <= commodities; ++h)
      if (!s.find(stem + "_" + std::to_string(h)))
        fail_at(s.line, "section [" + s.id + "] is missing '" + stem +
                            "' (or '" + stem + "_" + std::to_string(h) + "')");
  }
  if (base) {
    std::vector<double> cell = parse_numbers(base->raw, base->line);
    if (static_cast<int>(cell.size()) != commodities)
      fail_at(base->line, "'" + stem + "' needs " + std::to_string(commodities) +
                              " values, got " + std::to_string(cell.size()));
    for (int k = 0; k < grid.intervals; ++k)
      for (int h = 0; h < commodities; ++h) out.value(k, h) = cell[h];
  }
  for (int h = 1; h <= commodities; ++h) {
    const Entry* per_cell = s.find(stem + "_" + std::to_string(h));
    if (!per_cell) continue;
    std::vector<double> vals = parse_numbers(per_cell->raw, per_cell->line);
    if (static_cast<int>(vals.size()) != grid.intervals)
      fail_at(per_cell->line,
              "'" + stem + "_" + std::to_string(h) + "' needs one value per cell (" +
                  std::to_string(grid.intervals) + "), got " +
                  std::to_string(vals.size()));
    for (int k = 0; k < grid.intervals; ++k) out.value(k, h - 1) = vals[k];
  }
  // Reject indexed keys beyond the commodity count.
  for (const auto& [key, entry] : s.entries) {
    if (key.rfind(stem + "_", 0) != 0) continue;
    std::string tail = key.substr(stem.size() + 1);
    bool digits = !tail.empty();
    for (char ch : tail)
      if (!std::isdigit(static_cast<unsigned char>(ch))) digits = false;
    if (!digits) continue;
    int h = std::atoi(tail.c_str());
    if (h < 1 || h > commodities)
      fail_at(entry.line, "'" + key + "' refers to commodity " + tail +
                              ", model has " + std::to_string(commodities));
  }
  return out;
}

inline Scenario build_scenario(const ScenarioIr& ir) {
  const Section* model_sec = ir.find("model");
  if (!model_sec) throw ScenarioError("missing [model] section");
  const Section* solver_sec = ir.find("solver");
  if (!solver_sec) throw ScenarioError("missing [solver] section");

  for (const auto& s : ir.sections)
    for (const auto& [key, entry] : s.entries)
      if (!key_known(s.kind, key))
        fail_at(entry.line, "unknown key '" + key + "' in section [" + s.id + "]");

  auto need = [](const Section& s, const std::string& key) -> const Entry& {
    const Entry* e = s.find(key);
    if (!e)
      fail_at(s.line, "section [" + s.id + "] is missing '" + key + "'");
    return *e;
  };

  Scenario sc;

  {
    const Entry& h = need(*model_sec, "horizon");
    const Entry& iv = need(*model_sec, "intervals");
    const Entry& cm = need(*model_sec, "commodities");
    long long intervals = parse_integer(iv.raw, iv.line);
    long long commodities = parse_integer(cm.raw, cm.line);
    if (intervals < 1 || intervals > 100000)
      fail_at(iv.line, "intervals out of range");
    if (commodities < 1 || commodities > 1000)
      fail_at(cm.line, "commodities out of range");
    double horizon = parse_number(h.raw, h.line);
    if (!(horizon > 0.0)) fail_at(h.line, "horizon must be positive");
    sc.model.grid = make_grid(horizon, static_cast<int>(intervals));
    sc.model.commodities = static_cast<int>(commodities);
  }

  // Producer/consumer sections must be numbered 1..count contiguously.
  auto collect = [&](const std::string& kind) {
    std::vector<const Section*> out;
    for (const auto& s : ir.sections)
      if (s.kind == kind) out.push_back(&s);
    std::sort(out.begin(), out.end(),
              [](const Section* a, const Section* b) { return a->index < b->index; });
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out[i]->index != static_cast<int>(i) + 1)
        fail_at(out[i]->line, kind + " sections must be numbered 1.." +
                                  std::to_string(out.size()) + " without gaps");
    return out;
  };

  const int l = sc.model.commodities;
  const TimeGrid grid = sc.model.grid;

  for (const Section* s : collect("producer")) {
    ProductionSet prod;
    prod.lower = read_trajectory(*s, "lo", grid, l, std::nullopt);
    prod.upper = read_trajectory(*s, "up", grid, l, std::nullopt);
    for (int q = 1;; ++q) {
      const Entry* cut = s->find("cut_" + std::to_string(q));
      if (!cut) break;
      std::vector<double> row = parse_numbers(cut->raw, cut->line);
      if (static_cast<int>(row.size()) != l + 1)
        fail_at(cut->line, "cut needs " + std::to_string(l) +
                               " weights plus a bound");
      std::vector<double> weights(row.begin(), row.end() - 1);
      Trajectory w = Trajectory::constant(grid, weights);
      prod.cuts.push_back({std::move(w), row.back(),
                           "cut " + std::to_string(q)});
    }
    sc.model.producers.push_back(std::move(prod));
  }

  for (const Section* s : collect("consumer")) {
    Consumer c;
    c.endowment = read_trajectory(*s, "endowment", grid, l, std::nullopt);
    c.lower = read_trajectory(*s, "floor", grid, l, 0.0);
    const Entry& u = need(*s, "utility");
    std::string kind = trim(u.raw);
    auto forbid = [&](const char* key, const char* why) {
      if (const Entry* e = s->find(key))
        fail_at(e->line, std::string("'") + key + "' is only valid " + why);
      for (int h = 1; h <= l; ++h)
        if (const Entry* e = s->find(std::string(key) + "_" + std::to_string(h)))
          fail_at(e->line, std::string("'") + key + "' is only valid " + why);
    };
    if (kind == "linear") {
      LinearUtility lin;
      lin.weights = read_trajectory(*s, "weights", grid, l, std::nullopt);
      forbid("target", "for quadratic utilities");
      forbid("offset", "for shifted_log utilities");
      c.utility = std::move(lin);
    } else if (kind == "shifted_log") {
      const Entry& w = need(*s, "weights");
      ShiftedLogUtility slog;
      slog.weights = parse_numbers(w.raw, w.line);
      if (static_cast<int>(slog.weights.size()) != l)
        fail_at(w.line, "shifted_log needs one weight per commodity");
      if (const Entry* off = s->find("offset"))
        slog.floor_offset = parse_number(off->raw, off->line);
      forbid("target", "for quadratic utilities");
      c.utility = std::move(slog);
    } else if (kind == "quadratic") {
      QuadraticUtility quad;
      quad.target = read_trajectory(*s, "target", grid, l, std::nullopt);
      forbid("weights", "for linear and shifted_log utilities");
      forbid("offset", "for shifted_log utilities");
      c.utility = std::move(quad);
    } else {
      fail_at(u.line, "unknown utility '" + kind +
                          "' (expected linear, shifted_log or quadratic)");
    }
    if (const Entry* sh = s->find("shares")) {
      c.shares = parse_numbers(sh->raw, sh->line);
    }
    sc.model.consumers.push_back(std::move(c));
  }
  int s_count = sc.model.producer_count();
  for (std::size_t i = 0; i < sc.model.consumers.size(); ++i) {
    auto& shares = sc.model.consumers[i].shares;
    if (shares.empty() && s_count == 0) continue;
    if (static_cast<int>(shares.size()) != s_count)
      throw ScenarioError("consumer " + std::to_string(i + 1) + " needs " +
                          std::to_string(s_count) + " profit shares");
  }

  {
    const Section& s = *solver_sec;
    const Entry& seed = need(s, "seed");
    long long sv = parse_integer(seed.raw, seed.line);
    if (sv < 0) fail_at(seed.line, "seed must be >= 0");
    sc.seed = static_cast<std::uint64_t>(sv);
    if (const Entry* e = s.find("lambda"))
      sc.schedule.lambda0 = parse_number(e->raw, e->line);
    if (const Entry* e = s.find("decay"))
      sc.schedule.decay = parse_number(e->raw, e->line);
    if (const Entry* e = s.find("max_iters"))
      sc.schedule.max_iters = static_cast<int>(parse_integer(e->raw, e->line));
    if (const Entry* e = s.find("eps_gap"))
      sc.schedule.eps_gap = parse_number(e->raw, e->line);
    if (const Entry* e = s.find("eps_inner"))
      sc.schedule.eps_inner = parse_number(e->raw, e->line);
    if (const Entry* e = s.find("update")) {
      std::string v = trim(e->raw);
      if (v == "jacobi")
        sc.schedule.order = UpdateOrder::jacobi;
      else if (v == "gauss_seidel")
        sc.schedule.order = UpdateOrder::gauss_seidel;
      else
        fail_at(e->line, "update must be jacobi or gauss_seidel");
    }
    if (const Entry* e = s.find("truncation")) {
      std::string v = trim(e->raw);
      if (v == "on")
        sc.model.truncation = true;
      else if (v == "off")
        sc.model.truncation = false;
      else
        fail_at(e->line, "truncation must be on or off");
    }
    try {
      sc.schedule.validate();
    } catch (const std::invalid_argument& e) {
      fail_at(s.line, e.what());
    }
  }

  if (const Section* s = ir.find("tolerances")) {
    auto opt = [&](const char* key, double& slot) {
      if (const Entry* e = s->find(key)) {
        double v = parse_number(e->raw, e->line);
        if (!(v > 0.0)) fail_at(e->line, std::string(key) + " must be positive");
        slot = v;
      }
    };
    opt("producer", sc.tolerances.producer);
    opt("consumer", sc.tolerances.consumer);
    opt("price", sc.tolerances.price);
    opt("clearing", sc.tolerances.clearing);
    opt("walras", sc.tolerances.walras);
    opt("membership", sc.tolerances.membership);
  }
  sc.tolerances.inner = sc.schedule.eps_inner;

  return sc;
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text,
                               const std::vector<std::string>& overrides = {}) {
  detail::ScenarioIr ir = detail::parse_ir(text);
  for (const auto& o : overrides) detail::apply_override(ir, o);
  return detail::build_scenario(ir);
}

inline Scenario load_scenario(const std::string& path,
                              const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), overrides);
}

// Canonical text form; parsing it back yields an equivalent scenario.
// Trajectories are emitted per cell so values survive exactly.
inline std::string serialize_scenario(const Scenario& sc) {
  using detail::fmt17;
  std::ostringstream out;
  const EconomyModel& m = sc.model;

  auto emit_trajectory = [&](const std::string& stem, const Trajectory& t) {
    for (int h = 0; h < t.dim(); ++h) {
      out << stem << "_" << (h + 1) << " = ";
      for (int k = 0; k < t.cells(); ++k) {
        if (k) out << ", ";
        out << fmt17(t.value(k, h));
      }
      out << "\n";
    }
  };

  out << "[model]\n";
  out << "horizon = " << fmt17(m.grid.horizon) << "\n";
  out << "intervals = " << m.grid.intervals << "\n";
  out << "commodities = " << m.commodities << "\n";

  for (int j = 0; j < m.producer_count(); ++j) {
    out << "\n[producer " << (j + 1) << "]\n";
    emit_trajectory("lo", m.producers[j].lower);
    emit_trajectory("up", m.producers[j].upper);
    // Cuts round-trip only for weights constant in time, which is what the
    // grammar can express.
    for (std::size_t q = 0; q < m.producers[j].cuts.size(); ++q) {
      const AffineCut& cut = m.producers[j].cuts[q];
      out << "cut_" << (q + 1) << " = ";
      for (int h = 0; h < m.commodities; ++h)
        out << fmt17(cut.weight.value(0, h)) << ", ";
      out << fmt17(cut.bound) << "\n";
    }
  }

  for (int i = 0; i < m.consumer_count(); ++i) {
    const Consumer& c = m.consumers[i];
    out << "\n[consumer " << (i + 1) << "]\n";
    emit_trajectory("endowment", c.endowment);
    emit_trajectory("floor", c.lower);
    if (const auto* lin = std::get_if<LinearUtility>(&c.utility)) {
      out << "utility = linear\n";
      emit_trajectory("weights", lin->weights);
    } else if (const auto* slog = std::get_if<ShiftedLogUtility>(&c.utility)) {
      out << "utility = shifted_log\n";
      out << "weights = ";
      for (std::size_t h = 0; h < slog->weights.size(); ++h) {
        if (h) out << ", ";
        out << fmt17(slog->weights[h]);
      }
      out << "\n";
      out << "offset = " << fmt17(slog->floor_offset) << "\n";
    } else if (const auto* quad = std::get_if<QuadraticUtility>(&c.utility)) {
      out << "utility = quadratic\n";
      emit_trajectory("target", quad->target);
    }
    if (!c.shares.empty()) {
      out << "shares = ";
      for (std::size_t j = 0; j < c.shares.size(); ++j) {
        if (j) out << ", ";
        out << fmt17(c.shares[j]);
      }
      out << "\n";
    }
  }

  out << "\n[solver]\n";
  out << "lambda = " << fmt17(sc.schedule.lambda0) << "\n";
  out << "decay = " << fmt17(sc.schedule.decay) << "\n";
  out << "max_iters = " << sc.schedule.max_iters << "\n";
  out << "eps_gap = " << fmt17(sc.schedule.eps_gap) << "\n";
  out << "eps_inner = " << fmt17(sc.schedule.eps_inner) << "\n";
  out << "update = "
      << (sc.schedule.order == UpdateOrder::jacobi ? "jacobi" : "gauss_seidel")
      << "\n";
  out << "seed = " << sc.seed << "\n";
  out << "truncation = " << (m.truncation ? "on" : "off") << "\n";

  out << "\n[tolerances]\n";
  out << "producer = " << fmt17(sc.tolerances.producer) << "\n";
  out << "consumer = " << fmt17(sc.tolerances.consumer) << "\n";
  out << "price = " << fmt17(sc.tolerances.price) << "\n";
  out << "clearing = " << fmt17(sc.tolerances.clearing) << "\n";
  out << "walras = " << fmt17(sc.tolerances.walras) << "\n";
  out << "membership = " << fmt17(sc.tolerances.membership) << "\n";
  return out.str();
}

}  // namespace tgnep
