// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: config-driven benchmark runs, strategy search by
// convex optimization, and channel classification reports.
//
// Exit codes: 0 success, 2 config error, 3 precondition failure,
// 4 solver failure.

#include <avgbench/config.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>

using namespace avgbench;
namespace fs = std::filesystem;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_precondition = 3;
constexpr int exit_solver = 4;

int thread_count(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("AVGBENCH_THREADS"))
    if (const int n = std::atoi(env); n > 0) return n;
  return 1;
}

std::string sites_label(const Observable& o) {
  std::string s;
  for (size_t i = 0; i < o.sites.size(); ++i)
    s += (i ? "-" : "") + std::to_string(o.sites[i]);
  return s;
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  std::ofstream f(fs::path(dir) / name, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write to " + dir + "/" + name);
  return f;
}

struct BenchRow {
  std::string scheme;
  std::string sites;
  int depth = 0;
  std::optional<double> classical;
  std::optional<double> mean, stddev;
  int rounds = 0, shots = 0;
  uint64_t seed = 0;
};

void write_rows(std::ostream& out, const std::vector<BenchRow>& rows,
                const std::string& prefix_header = "",
                const std::vector<std::string>& prefixes = {}) {
  out << (prefix_header.empty() ? "" : prefix_header + ",")
      << "scheme,sites,T,classical_value,sampled_mean,sampled_std,n_rounds,"
         "n_shots,seed\n";
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (!prefixes.empty()) out << prefixes[i] << ",";
    out << r.scheme << "," << r.sites << "," << r.depth << ","
        << (r.classical ? format_value(*r.classical) : "") << ","
        << (r.mean ? format_value(*r.mean) : "") << ","
        << (r.stddev ? format_value(*r.stddev) : "") << "," << r.rounds << ","
        << r.shots << "," << r.seed << "\n";
  }
}

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::single_site: return "single_site";
    case Scheme::two_body: return "two_body";
    case Scheme::three_site: return "three_site";
    case Scheme::k_body: return "k_body";
  }
  return "?";
}

// ---------------------------------------------------------------------------

int run_benchmark_config(const RunConfig& cfg, const std::string& out_dir,
                         int threads) {
  const BrickworkSpec spec = build_spec(cfg);
  const ChannelCircuit circuit = to_channel_circuit(spec);

  std::vector<BenchRow> rows;
  int precondition_failures = 0;
  const size_t group = cfg.scheme == Scheme::two_body ? 2 : 1;
  std::vector<std::vector<size_t>> groups;
  for (size_t i = 0; i + group - 1 < cfg.observables.size(); i += group) {
    groups.push_back({});
    for (size_t q = 0; q < group; ++q) groups.back().push_back(i + q);
  }

  for (const auto& idx : groups) {
    BenchRow row;
    row.scheme = scheme_name(cfg.scheme);
    row.depth = cfg.T;
    row.rounds = cfg.rounds;
    row.shots = cfg.shots;
    row.seed = cfg.seed;
    row.sites = sites_label(cfg.observables[idx[0]]);
    if (idx.size() > 1) row.sites += "-" + sites_label(cfg.observables[idx[1]]);
    try {
      switch (cfg.scheme) {
        case Scheme::single_site:
          row.classical = avg_single_site(circuit, cfg.observables[idx[0]]);
          break;
        case Scheme::two_body:
          row.classical = avg_two_body(circuit, cfg.observables[idx[0]],
                                       cfg.observables[idx[1]]);
          break;
        case Scheme::three_site:
          row.classical = avg_three_site(circuit, cfg.observables[idx[0]]);
          break;
        case Scheme::k_body:
          row.classical = avg_k_body(circuit, cfg.observables[idx[0]]);
          break;
      }
    } catch (const std::invalid_argument& e) {
      std::cerr << "precondition failure (" << row.scheme << " at " << row.sites
                << "): " << e.what() << "\n";
      ++precondition_failures;
    }
    rows.push_back(row);
  }

  if (cfg.rounds > 0) {
    // two-body pairs are measured jointly per round
    BrickworkSpec sampling = spec;
    sampling.observables.clear();
    for (const auto& idx : groups) {
      if (idx.size() == 1) {
        sampling.observables.push_back(cfg.observables[idx[0]]);
      } else {
        Observable joint;
        joint.sites = {cfg.observables[idx[0]].sites[0],
                       cfg.observables[idx[1]].sites[0]};
        joint.op = Eigen::kroneckerProduct(cfg.observables[idx[0]].op,
                                           cfg.observables[idx[1]].op);
        sampling.observables.push_back(joint);
      }
    }
    const SampleRun run =
        sample_rounds(sampling, cfg.rounds, cfg.seed, threads, cfg.shots);
    for (size_t gidx = 0; gidx < groups.size(); ++gidx) {
      rows[gidx].mean = run.summary.mean[gidx];
      rows[gidx].stddev = run.summary.stddev[gidx];
    }
  }

  auto csv = open_out(out_dir, "benchmark.csv");
  write_rows(csv, rows);
  std::cout << "wrote " << rows.size() << " rows to " << out_dir
            << "/benchmark.csv\n";
  return precondition_failures == 0 ? exit_ok : exit_precondition;
}

int run_coherent_error_scan(const RunConfig& cfg, const std::string& out_dir,
                            int threads, int grid_override) {
  const int points = grid_override > 0 ? grid_override : cfg.phi_points;
  std::vector<BenchRow> rows;
  std::vector<std::string> prefixes;
  for (int p = 0; p < points; ++p) {
    const double phi =
        points == 1 ? cfg.phi_min
                    : cfg.phi_min + (cfg.phi_max - cfg.phi_min) * p / (points - 1);
    const BrickworkSpec spec =
        build_coherent_error_spec(cfg.scan_family, phi, cfg.T, cfg.L);
    const ChannelCircuit c = to_channel_circuit(spec);
    BenchRow row;
    row.scheme = "single_site";
    row.sites = sites_label(spec.observables[0]);
    row.depth = cfg.T;
    row.seed = cfg.seed;
    row.classical = avg_single_site(c, spec.observables[0]);
    rows.push_back(row);
    prefixes.push_back(format_value(phi) + "," + std::to_string(cfg.scan_family));
  }
  if (cfg.rounds > 0) {
    // Monte-Carlo verification point at the ideal angle
    const double phi = std::numbers::pi / 4;
    const BrickworkSpec spec =
        build_coherent_error_spec(cfg.scan_family, phi, cfg.T, cfg.L);
    const SampleRun run =
        sample_rounds(spec, cfg.rounds, cfg.seed, threads, cfg.shots);
    BenchRow row;
    row.scheme = "single_site";
    row.sites = sites_label(spec.observables[0]);
    row.depth = cfg.T;
    row.seed = cfg.seed;
    row.rounds = cfg.rounds;
    row.shots = cfg.shots;
    row.classical = avg_single_site(to_channel_circuit(spec), spec.observables[0]);
    row.mean = run.summary.mean[0];
    row.stddev = run.summary.stddev[0];
    rows.push_back(row);
    prefixes.push_back(format_value(phi) + "," + std::to_string(cfg.scan_family));
  }
  auto csv = open_out(out_dir, "coherent_error_scan.csv");
  write_rows(csv, rows, "phi,family", prefixes);
  std::cout << "wrote " << rows.size() << " rows to " << out_dir
            << "/coherent_error_scan.csv\n";
  return exit_ok;
}

int run_sample_complexity(const RunConfig& cfg, const std::string& out_dir,
                          int threads, int max_depth) {
  auto csv = open_out(out_dir, "sample_complexity.csv");
  csv << "T,L,classical_at_T,mean_at_T,std_at_T,stderr_at_T,mean_at_Tm1,"
         "std_at_Tm1,stderr_at_Tm1,n_rounds,seed\n";
  auto raw = open_out(out_dir, "sample_complexity_samples.csv");
  raw << "T,round,value_at_T,value_at_Tm1\n";
  auto hist = open_out(out_dir, "sample_complexity_hist.csv");
  hist << "T,bin_lo,bin_width,count\n";

  for (const int depth : cfg.depths) {
    if (max_depth > 0 && depth > max_depth) continue;
    if (2 * depth + 2 > 20) continue;  // statevector cap
    const BrickworkSpec spec = build_sample_complexity_spec(depth);
    const double classical =
        avg_single_site(to_channel_circuit(spec), spec.observables[0]);
    const SampleRun run =
        sample_rounds(spec, cfg.rounds, cfg.seed, threads, cfg.shots);
    csv << depth << "," << spec.L << "," << format_value(classical) << ","
        << format_value(run.summary.mean[0]) << ","
        << format_value(run.summary.stddev[0]) << ","
        << format_value(run.summary.standard_error[0]) << ","
        << format_value(run.summary.mean[1]) << ","
        << format_value(run.summary.stddev[1]) << ","
        << format_value(run.summary.standard_error[1]) << "," << cfg.rounds << ","
        << cfg.seed << "\n";
    std::vector<double> at_t;
    for (const auto& r : run.rounds) {
      raw << depth << "," << r.round << "," << format_value(r.values[0]) << ","
          << format_value(r.values[1]) << "\n";
      at_t.push_back(r.values[0]);
    }
    const Histogram h = histogram_fd(at_t);
    for (size_t b = 0; b < h.counts.size(); ++b)
      hist << depth << "," << format_value(h.lo + double(b) * h.bin_width) << ","
           << format_value(h.bin_width) << "," << h.counts[b] << "\n";
    std::cout << "depth " << depth << ": classical " << format_value(classical)
              << ", sampled mean " << format_value(run.summary.mean[0]) << " (std "
              << format_value(run.summary.stddev[0]) << ")\n";
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------

int run_check(const std::string& path, double tol) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "cannot open " << path << "\n";
    return exit_config;
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    std::cerr << "parse error in " << path << ": " << e.what() << "\n";
    return exit_config;
  }
  Superoperator channel;
  try {
    if (j.contains("gate")) {
      channel = unitary_superop(parse_gate(j["gate"]).matrix);
    } else if (j.contains("ensemble")) {
      const auto& e = j["ensemble"];
      if (e.contains("members")) {
        channel = average_channel(ensemble_from_json(e));
      } else {
        config_detail::check_keys(e, {"strategy", "lambda", "leg", "gate"},
                                  "ensemble");
        StrategySpec strat;
        const std::string s = e.value("strategy", "none");
        if (s == "reflection")
          strat.kind = StrategyKind::reflection;
        else if (s == "twirl4way")
          strat.kind = StrategyKind::twirl4way;
        else if (s == "twirl3way")
          strat.kind = StrategyKind::twirl3way;
        else
          throw ConfigError("ensemble.strategy: unknown strategy \"" + s + "\"");
        strat.lambda = e.value("lambda", 1.0);
        strat.leg = e.value("leg", "first") == std::string("second")
                        ? TwirlLeg::second
                        : TwirlLeg::first;
        channel = average_channel(build_ensemble(strat, parse_gate(e.at("gate"))));
      }
    } else if (j.contains("channel")) {
      const auto& rows = j["channel"].at("matrix");
      if (!rows.is_array() || rows.size() != 16)
        throw ConfigError("channel.matrix: expected a 16x16 complex matrix");
      MatrixXcd m(16, 16);
      for (int r = 0; r < 16; ++r)
        for (int cdx = 0; cdx < 16; ++cdx)
          m(r, cdx) = cd(rows[r][cdx][0].get<double>(), rows[r][cdx][1].get<double>());
      channel = Superoperator{m, 2};
    } else {
      throw ConfigError("check: file needs a gate, ensemble or channel entry");
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return exit_config;
  } catch (const json::exception& e) {
    std::cerr << "field error: " << e.what() << "\n";
    return exit_config;
  }

  const SpaceTimeClass cls = classify(channel, tol);
  std::cout << "class:        " << cls.label() << "\n"
            << "tp:           " << (cls.tp ? "yes" : "no") << "  (residual "
            << format_value(cls.tp_residual) << ")\n"
            << "unital:       " << (cls.unital ? "yes" : "no") << "  (residual "
            << format_value(cls.unital_residual) << ")\n"
            << "left unital:  " << (cls.left_space_unital ? "yes" : "no")
            << "  (residual " << format_value(cls.left_residual) << ")\n"
            << "right unital: " << (cls.right_space_unital ? "yes" : "no")
            << "  (residual " << format_value(cls.right_residual) << ")\n"
            << "max residual: " << format_value(cls.max_residual()) << "\n";
  const Matrix4cd tplus = transfer(channel, TransferSide::plus);
  std::cout << "second transfer eigenvalue modulus: "
            << format_value(second_eigenvalue_modulus(tplus)) << "\n";
  return exit_ok;
}

// ---------------------------------------------------------------------------

json solution_to_json(const SdpResult& r, const std::string& mode,
                      std::optional<double> lambda) {
  json out;
  out["mode"] = mode;
  if (lambda) out["lambda"] = *lambda;
  out["feasible"] = r.feasible;
  if (!r.feasible) {
    out["farkas"] =
        std::vector<double>(r.farkas.data(), r.farkas.data() + r.farkas.size());
    return out;
  }
  out["optimum"] = r.optimum;
  out["x"] = supermap_to_json(r.x)["x"];
  out["certificate"] = {{"min_eigenvalue", r.certificate.min_eigenvalue},
                        {"spectrum_agreement", r.certificate.spectrum_agreement},
                        {"positive", r.certificate.positive}};
  const DecomposeResult dec = lp_decompose(r.x);
  out["decomposable"] = dec.feasible;
  if (dec.feasible) {
    json weights = json::array();
    for (int jdx = 0; jdx < 256; ++jdx)
      if (dec.distribution.p(jdx) > 1e-12)
        weights.push_back({{"pre", {(jdx >> 6) & 3, (jdx >> 4) & 3}},
                           {"post", {(jdx >> 2) & 3, jdx & 3}},
                           {"probability", dec.distribution.p(jdx)}});
    out["distribution"] = weights;
  }
  return out;
}

int run_supermap(const std::string& config_path, std::string mode_flag,
                 std::vector<double> lambdas, bool force_both,
                 const std::string& out_dir) {
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "cannot open " << config_path << "\n";
      return exit_config;
    }
    json j;
    try {
      in >> j;
      config_detail::check_keys(j, {"mode", "lambda", "force_both_unit"},
                                "supermap config");
      mode_flag = j.at("mode").get<std::string>();
      if (j.contains("lambda")) {
        lambdas.clear();
        if (j["lambda"].is_array())
          for (const auto& l : j["lambda"]) lambdas.push_back(l.get<double>());
        else
          lambdas.push_back(j["lambda"].get<double>());
      }
      force_both = j.value("force_both_unit", false);
    } catch (const json::exception& e) {
      std::cerr << "config error: " << e.what() << "\n";
      return exit_config;
    } catch (const ConfigError& e) {
      std::cerr << e.what() << "\n";
      return exit_config;
    }
  }
  SdpMode mode;
  if (mode_flag == "three_way")
    mode = SdpMode::three_way;
  else if (mode_flag == "four_way")
    mode = SdpMode::four_way;
  else {
    std::cerr << "mode must be three_way or four_way\n";
    return exit_config;
  }

  try {
    std::vector<std::pair<std::optional<double>, SdpResult>> solutions;
    if (force_both) {
      SdpOptions o;
      o.force_both_unit = true;
      solutions.emplace_back(std::nullopt, solve_sdp(mode, o));
    } else if (mode == SdpMode::four_way && !lambdas.empty()) {
      for (const double l : lambdas) {
        SdpOptions o;
        o.lambda = l;
        solutions.emplace_back(l, solve_sdp(mode, o));
      }
    } else {
      solutions.emplace_back(std::nullopt, solve_sdp(mode));
    }

    for (const auto& [lambda, r] : solutions) {
      std::string name = "supermap_" + mode_flag;
      if (lambda) name += "_lambda" + format_value(*lambda);
      if (force_both) name += "_forced";
      auto f = open_out(out_dir, name + ".json");
      f << solution_to_json(r, mode_flag, lambda).dump(2) << "\n";
      if (r.feasible) {
        std::cout << name << ": optimum " << format_value(r.optimum)
                  << ", min eigenvalue "
                  << format_value(r.certificate.min_eigenvalue) << " ("
                  << (r.certificate.positive ? "certified" : "NOT POSITIVE")
                  << ")\n";
        if (!r.certificate.positive) return exit_solver;
      } else {
        std::cout << name << ": infeasible (certificate written)\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return exit_solver;
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"average-computation benchmarking for brickwork circuits"};
  app.require_subcommand(1);

  std::string check_path;
  double check_tol = 1e-10;
  auto* check = app.add_subcommand("check", "classify a gate, ensemble or channel");
  check->add_option("input", check_path, "JSON file to classify")->required();
  check->add_option("--tol", check_tol, "classification tolerance");

  std::string bench_config, bench_out = "out";
  int bench_seed = -1, bench_rounds = -1, bench_shots = -1, bench_threads = 0;
  int grid_points = 0, max_depth = 0;
  double bench_tol = 1e-10;
  auto* bench = app.add_subcommand("benchmark", "run a configured benchmark");
  bench->add_option("--config", bench_config, "JSON run configuration")->required();
  bench->add_option("--seed", bench_seed, "override the config seed");
  bench->add_option("--rounds", bench_rounds, "override the sampled round count");
  bench->add_option("--shots", bench_shots, "override the per-round shot count");
  bench->add_option("--out", bench_out, "output directory");
  bench->add_option("--threads", bench_threads,
                    "worker threads (or AVGBENCH_THREADS)");
  bench->add_option("--grid-points", grid_points, "override scan resolution");
  bench->add_option("--max-depth", max_depth, "cap experiment depths");
  bench->add_option("--tol", bench_tol, "classification tolerance");

  std::string sm_config, sm_mode = "four_way", sm_out = "out";
  std::vector<double> sm_lambdas;
  bool sm_force = false;
  auto* sm = app.add_subcommand("supermap", "search averaging strategies");
  sm->add_option("--config", sm_config, "JSON with mode/lambda/force_both_unit");
  sm->add_option("--mode", sm_mode, "three_way | four_way");
  sm->add_option("--lambda", sm_lambdas, "four-way family members to pin");
  sm->add_flag("--force-both-unit", sm_force,
               "demand both transfer blocks preserved exactly");
  sm->add_option("--out", sm_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (check->parsed()) return run_check(check_path, check_tol);
    if (sm->parsed())
      return run_supermap(sm_config, sm_mode, sm_lambdas, sm_force, sm_out);

    RunConfig cfg = load_config(bench_config);
    if (bench_seed >= 0) cfg.seed = uint64_t(bench_seed);
    if (bench_rounds >= 0) cfg.rounds = bench_rounds;
    if (bench_shots >= 0) cfg.shots = bench_shots;
    const int threads = thread_count(bench_threads);
    switch (cfg.kind) {
      case RunConfig::Kind::benchmark:
        return run_benchmark_config(cfg, bench_out, threads);
      case RunConfig::Kind::coherent_error_scan:
        return run_coherent_error_scan(cfg, bench_out, threads, grid_points);
      case RunConfig::Kind::sample_complexity:
        return run_sample_complexity(cfg, bench_out, threads, max_depth);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::invalid_argument& e) {
    std::cerr << "precondition failure: " << e.what() << "\n";
    return exit_precondition;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return exit_solver;
  }
  return exit_ok;
}
