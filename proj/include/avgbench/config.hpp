// SPDX-License-Identifier: Apache-2.0
//
// JSON run configurations for the command-line tools: circuit and gate
// definitions, averaging strategies, schemes, observables, noise, and the
// two built-in experiments. Configs are schema-checked before any
// computation; unknown keys are rejected.

#pragma once

#include "correlators.hpp"
#include "ensembles.hpp"
#include "simulator.hpp"
#include "supermap.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <string>

namespace avgbench {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace config_detail {

inline void check_keys(const json& j, const std::vector<std::string>& allowed,
                       const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(ctx + ": unknown key \"" + key + "\"");
  }
}

inline double need_number(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key) || !j[key].is_number())
    throw ConfigError(ctx + ": missing numeric field \"" + key + "\"");
  return j[key].get<double>();
}

inline std::array<double, 3> triple(const json& j, const std::string& ctx) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError(ctx + ": expected three numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline int pauli_index(const std::string& s, const std::string& ctx) {
  if (s == "I" || s == "1") return 0;
  if (s == "X") return 1;
  if (s == "Y") return 2;
  if (s == "Z") return 3;
  throw ConfigError(ctx + ": unknown Pauli label \"" + s + "\"");
}

}  // namespace config_detail

// A gate plus, when it was specified through interaction parameters, the
// exact form; the reflection strategy reflects those parameters verbatim.
struct GateSpec {
  Matrix4cd matrix = Matrix4cd::Identity();
  std::optional<KakForm> form;
};

inline GateSpec parse_gate(const json& j) {
  using namespace config_detail;
  check_keys(j, {"kind", "theta", "w_a", "w_b", "v_a", "v_b", "phase", "rows",
                 "name", "n", "phi", "seed"},
             "gate");
  const std::string kind = j.value("kind", "");
  GateSpec g;
  if (kind == "kak") {
    KakForm k;
    k.theta = triple(j.at("theta"), "gate.theta");
    auto local = [&](const char* key) {
      if (!j.contains(key)) return Matrix2cd(Matrix2cd::Identity());
      const auto p = triple(j.at(key), std::string("gate.") + key);
      return su2_exponential(p[0], p[1], p[2]);
    };
    k.w_a = local("w_a");
    k.w_b = local("w_b");
    k.v_a = local("v_a");
    k.v_b = local("v_b");
    k.phase = j.value("phase", 0.0);
    g.form = k;
    g.matrix = kak_compose(k);
  } else if (kind == "matrix") {
    const auto& rows = j.at("rows");
    if (!rows.is_array() || rows.size() != 4)
      throw ConfigError("gate.rows: expected 4 rows");
    for (int r = 0; r < 4; ++r) {
      if (!rows[r].is_array() || rows[r].size() != 4)
        throw ConfigError("gate.rows: expected 4 complex entries per row");
      for (int c = 0; c < 4; ++c) {
        const auto& e = rows[r][c];
        if (!e.is_array() || e.size() != 2)
          throw ConfigError("gate.rows: entries are [re, im] pairs");
        g.matrix(r, c) = cd(e[0].get<double>(), e[1].get<double>());
      }
    }
  } else if (kind == "named") {
    const std::string name = j.value("name", "");
    if (name == "identity")
      g.matrix = Matrix4cd::Identity();
    else if (name == "swap") {
      g.matrix = Matrix4cd::Zero();
      g.matrix(0, 0) = g.matrix(1, 2) = g.matrix(2, 1) = g.matrix(3, 3) = 1.0;
    } else if (name == "cnot")
      g.matrix = cnot_12();
    else
      throw ConfigError("gate.name: unknown gate \"" + name + "\"");
  } else if (kind == "coherent_error") {
    g.matrix = coherent_error_gate(int(need_number(j, "n", "gate")),
                                   need_number(j, "phi", "gate"));
  } else if (kind == "haar") {
    std::mt19937_64 rng(uint64_t(need_number(j, "seed", "gate")));
    g.matrix = haar_su4(rng);
  } else {
    throw ConfigError("gate.kind: expected kak | matrix | named | coherent_error | haar");
  }
  if (!is_unitary(g.matrix, 1e-10))
    throw ConfigError("gate: matrix is not unitary");
  return g;
}

enum class StrategyKind { none, reflection, twirl4way, twirl3way, supermap };

struct StrategySpec {
  StrategyKind kind = StrategyKind::none;
  double lambda = 1.0;
  TwirlLeg leg = TwirlLeg::first;
  RescalingSupermap supermap;
};

inline GateEnsemble build_ensemble(const StrategySpec& s, const GateSpec& gate) {
  switch (s.kind) {
    case StrategyKind::reflection:
      return gate.form ? reflection_ensemble(*gate.form)
                       : reflection_ensemble(gate.matrix);
    case StrategyKind::twirl4way: return twirl_4way(gate.matrix, s.lambda);
    case StrategyKind::twirl3way: return twirl_3way(gate.matrix, s.leg);
    case StrategyKind::supermap: {
      const DecomposeResult d = lp_decompose(s.supermap);
      if (!d.feasible)
        throw ConfigError("ensemble: supermap has no Pauli-dressing realization");
      return ensemble_from_distribution(d.distribution, gate.matrix);
    }
    case StrategyKind::none: {
      GateEnsemble e;
      e.members.push_back({1.0, DressedGate{{0, 0}, {0, 0}, gate.matrix}});
      return e;
    }
  }
  throw std::logic_error("bad strategy");
}

// supermap (de)serialization ------------------------------------------------

inline json supermap_to_json(const RescalingSupermap& s) {
  json rows = json::array();
  for (int out = 0; out < 16; ++out) {
    json row = json::array();
    for (int in = 0; in < 16; ++in) row.push_back(s.x(out, in));
    rows.push_back(row);
  }
  return json{{"x", rows}};
}

inline RescalingSupermap supermap_from_json(const json& j) {
  config_detail::check_keys(j, {"x"}, "supermap");
  const auto& rows = j.at("x");
  if (!rows.is_array() || rows.size() != 16)
    throw ConfigError("supermap.x: expected 16 rows of 16 entries");
  RescalingSupermap s;
  for (int out = 0; out < 16; ++out) {
    if (!rows[out].is_array() || rows[out].size() != 16)
      throw ConfigError("supermap.x: expected 16 rows of 16 entries");
    for (int in = 0; in < 16; ++in) s.x(out, in) = rows[out][in].get<double>();
  }
  return s;
}

inline json ensemble_to_json(const GateEnsemble& e) {
  json members = json::array();
  for (const auto& m : e.members) {
    json rows = json::array();
    for (int r = 0; r < 4; ++r) {
      json row = json::array();
      for (int c = 0; c < 4; ++c)
        row.push_back({m.element.gate(r, c).real(), m.element.gate(r, c).imag()});
      rows.push_back(row);
    }
    members.push_back({{"probability", m.probability},
                       {"pre", {m.element.pre[0], m.element.pre[1]}},
                       {"post", {m.element.post[0], m.element.post[1]}},
                       {"gate", {{"kind", "matrix"}, {"rows", rows}}}});
  }
  return json{{"members", members}};
}

inline GateEnsemble ensemble_from_json(const json& j) {
  config_detail::check_keys(j, {"members"}, "ensemble");
  GateEnsemble e;
  for (const auto& m : j.at("members")) {
    config_detail::check_keys(m, {"probability", "pre", "post", "gate"}, "member");
    DressedGate g;
    g.gate = parse_gate(m.at("gate")).matrix;
    if (m.contains("pre")) {
      g.pre = {m["pre"][0].get<int>(), m["pre"][1].get<int>()};
    }
    if (m.contains("post")) {
      g.post = {m["post"][0].get<int>(), m["post"][1].get<int>()};
    }
    e.members.push_back({m.at("probability").get<double>(), g});
  }
  e.validate();
  return e;
}

// run configuration ---------------------------------------------------------

struct RunConfig {
  enum class Kind { benchmark, coherent_error_scan, sample_complexity };
  Kind kind = Kind::benchmark;

  // circuit
  int L = 0;
  int T = 0;
  InitKind init = InitKind::bell_product;
  GateSpec gate;
  std::vector<std::tuple<int, int, GateSpec>> slot_overrides;  // layer, slot, gate
  StrategySpec strategy;
  std::optional<PauliNoiseModel> noise;

  // evaluation
  Scheme scheme = Scheme::single_site;
  std::vector<Observable> observables;

  int rounds = 0;
  int shots = 0;
  uint64_t seed = 1;

  // coherent-error scan
  int scan_family = 1;
  double phi_min = 0.0;
  double phi_max = std::numbers::pi / 2;
  int phi_points = 41;

  // sample-complexity experiment
  std::vector<int> depths;
};

inline Observable parse_observable(const json& j) {
  using namespace config_detail;
  check_keys(j, {"site", "sites", "pauli", "paulis", "coeffs", "matrix", "normalize"},
             "observable");
  Observable o;
  if (j.contains("site")) {
    const int site = j.at("site").get<int>();
    if (j.contains("pauli"))
      o = Observable::pauli_at(site, pauli_index(j.at("pauli"), "observable.pauli"));
    else if (j.contains("coeffs")) {
      const auto c = triple(j.at("coeffs"), "observable.coeffs");
      MatrixXcd a = c[0] * pauli(1) + c[1] * pauli(2) + c[2] * pauli(3);
      if (j.value("normalize", true))
        a /= std::sqrt((a.adjoint() * a).trace().real());
      o = {{site}, a};
    } else {
      throw ConfigError("observable: site entries need a pauli or coeffs field");
    }
  } else if (j.contains("sites")) {
    for (const auto& s : j.at("sites")) o.sites.push_back(s.get<int>());
    if (j.contains("paulis")) {
      MatrixXcd op = MatrixXcd::Identity(1, 1);
      for (const auto& p : j.at("paulis"))
        op = Eigen::kroneckerProduct(op, pauli(pauli_index(p, "observable.paulis")))
                 .eval();
      o.op = op;
    } else if (j.contains("matrix")) {
      const auto& rows = j.at("matrix");
      const Eigen::Index d = Eigen::Index(1) << o.sites.size();
      if (!rows.is_array() || Eigen::Index(rows.size()) != d)
        throw ConfigError("observable.matrix: dimension mismatch");
      o.op.resize(d, d);
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c)
          o.op(r, c) = cd(rows[r][c][0].get<double>(), rows[r][c][1].get<double>());
    } else {
      throw ConfigError("observable: multi-site entries need paulis or matrix");
    }
  } else {
    throw ConfigError("observable: needs a site or sites field");
  }
  o.validate();
  if (o.operator_norm() > 1.0 + 1e-12)
    throw ConfigError("observable: operator norm must not exceed 1");
  return o;
}

inline RunConfig parse_config(const json& j) {
  using namespace config_detail;
  check_keys(j,
             {"experiment", "circuit", "ensemble", "scheme", "observables", "noise",
              "rounds", "shots", "seed", "scan", "depths", "mode", "lambda",
              "force_both_unit"},
             "config");
  RunConfig cfg;
  const std::string experiment = j.value("experiment", "benchmark");
  if (experiment == "benchmark")
    cfg.kind = RunConfig::Kind::benchmark;
  else if (experiment == "coherent_error_scan")
    cfg.kind = RunConfig::Kind::coherent_error_scan;
  else if (experiment == "sample_complexity")
    cfg.kind = RunConfig::Kind::sample_complexity;
  else
    throw ConfigError("experiment: unknown kind \"" + experiment + "\"");

  cfg.rounds = j.value("rounds", 0);
  cfg.shots = j.value("shots", 0);
  cfg.seed = j.value("seed", uint64_t(1));
  if (cfg.rounds < 0 || cfg.shots < 0) throw ConfigError("rounds/shots must be >= 0");

  if (j.contains("noise")) {
    check_keys(j["noise"], {"p_x", "p_y", "p_z"}, "noise");
    PauliNoiseModel n;
    n.uniform = {j["noise"].value("p_x", 0.0), j["noise"].value("p_y", 0.0),
                 j["noise"].value("p_z", 0.0)};
    cfg.noise = n;
  }

  if (j.contains("ensemble")) {
    const auto& e = j["ensemble"];
    check_keys(e, {"strategy", "lambda", "leg", "supermap_file"}, "ensemble");
    const std::string s = e.value("strategy", "none");
    if (s == "reflection")
      cfg.strategy.kind = StrategyKind::reflection;
    else if (s == "twirl4way")
      cfg.strategy.kind = StrategyKind::twirl4way;
    else if (s == "twirl3way")
      cfg.strategy.kind = StrategyKind::twirl3way;
    else if (s == "supermap")
      cfg.strategy.kind = StrategyKind::supermap;
    else if (s == "none")
      cfg.strategy.kind = StrategyKind::none;
    else
      throw ConfigError("ensemble.strategy: unknown strategy \"" + s + "\"");
    cfg.strategy.lambda = e.value("lambda", 1.0);
    if (cfg.strategy.lambda < 0.0 || cfg.strategy.lambda > 1.0)
      throw ConfigError("ensemble.lambda: must lie in [0, 1]");
    const std::string leg = e.value("leg", "first");
    if (leg == "first")
      cfg.strategy.leg = TwirlLeg::first;
    else if (leg == "second")
      cfg.strategy.leg = TwirlLeg::second;
    else
      throw ConfigError("ensemble.leg: expected first | second");
    if (e.contains("supermap_file")) {
      std::ifstream in(e["supermap_file"].get<std::string>());
      if (!in) throw ConfigError("ensemble.supermap_file: cannot open file");
      json sj;
      in >> sj;
      if (sj.contains("x"))
        cfg.strategy.supermap = supermap_from_json(json{{"x", sj["x"]}});
      else
        throw ConfigError("ensemble.supermap_file: no x tensor found");
    }
  }

  if (cfg.kind == RunConfig::Kind::coherent_error_scan) {
    const auto& s = j.at("scan");
    check_keys(s, {"n", "phi_min", "phi_max", "points"}, "scan");
    cfg.scan_family = int(need_number(s, "n", "scan"));
    cfg.phi_min = s.value("phi_min", 0.0);
    cfg.phi_max = s.value("phi_max", std::numbers::pi / 2);
    cfg.phi_points = s.value("points", 41);
    if (cfg.phi_points < 1) throw ConfigError("scan.points: must be >= 1");
    const auto& c = j.at("circuit");
    check_keys(c, {"L", "T"}, "circuit");
    cfg.L = c.value("L", 12);
    cfg.T = c.value("T", 5);
    return cfg;
  }

  if (cfg.kind == RunConfig::Kind::sample_complexity) {
    if (!j.contains("depths")) throw ConfigError("sample_complexity: needs depths");
    for (const auto& d : j.at("depths")) cfg.depths.push_back(d.get<int>());
    return cfg;
  }

  const auto& c = j.at("circuit");
  check_keys(c, {"L", "T", "init", "gate", "gates"}, "circuit");
  cfg.L = int(need_number(c, "L", "circuit"));
  cfg.T = int(need_number(c, "T", "circuit"));
  const std::string init = c.value("init", "bell_product");
  if (init == "bell_product")
    cfg.init = InitKind::bell_product;
  else if (init == "plus_bell")
    cfg.init = InitKind::plus_bell;
  else
    throw ConfigError("circuit.init: expected bell_product | plus_bell");
  if (c.contains("gate")) cfg.gate = parse_gate(c["gate"]);
  if (c.contains("gates")) {
    for (const auto& g : c["gates"]) {
      check_keys(g, {"layer", "slot", "gate"}, "circuit.gates");
      cfg.slot_overrides.emplace_back(g.at("layer").get<int>(),
                                      g.at("slot").get<int>(),
                                      parse_gate(g.at("gate")));
    }
  }

  const std::string scheme = j.value("scheme", "single_site");
  if (scheme == "single_site")
    cfg.scheme = Scheme::single_site;
  else if (scheme == "two_body")
    cfg.scheme = Scheme::two_body;
  else if (scheme == "three_site")
    cfg.scheme = Scheme::three_site;
  else if (scheme == "k_body")
    cfg.scheme = Scheme::k_body;
  else
    throw ConfigError("scheme: unknown scheme \"" + scheme + "\"");

  if (!j.contains("observables") || !j["observables"].is_array() ||
      j["observables"].empty())
    throw ConfigError("observables: at least one entry required");
  for (const auto& o : j["observables"]) cfg.observables.push_back(parse_observable(o));
  if (cfg.scheme == Scheme::two_body && cfg.observables.size() % 2 != 0)
    throw ConfigError("two_body: observables come in (a, b) pairs");
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_config(j);
}

// circuit assembly ----------------------------------------------------------

inline BrickworkSpec build_spec(const RunConfig& cfg) {
  const InitialState init = cfg.init == InitKind::bell_product
                                ? InitialState::bell_product(cfg.L)
                                : InitialState::plus_bell(cfg.L);
  BrickworkSpec spec = BrickworkSpec::uniform(
      cfg.L, cfg.T, init,
      BrickworkSpec::Slot::from_ensemble(build_ensemble(cfg.strategy, cfg.gate)));
  for (const auto& [layer, slot, gate] : cfg.slot_overrides) {
    if (layer < 1 || layer > cfg.T || slot < 0 ||
        slot >= int(spec.layers[layer - 1].size()))
      throw ConfigError("circuit.gates: slot index outside the brickwork");
    spec.layers[layer - 1][slot] =
        BrickworkSpec::Slot::from_ensemble(build_ensemble(cfg.strategy, gate));
  }
  spec.noise = cfg.noise;
  spec.observables = cfg.observables;
  return spec;
}

// 17 significant digits: doubles round-trip exactly
inline std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace avgbench
