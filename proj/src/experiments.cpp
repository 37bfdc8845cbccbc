#include "skeld/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "skeld/io.hpp"
#include "skeld/rate.hpp"
#include "skeld/spde.hpp"

namespace skeld {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_keys(const json& obj, const std::string& prefix,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) {
    throw config_error("invalid config: '" + prefix + "' must be an object");
  }
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw config_error("invalid config: unknown key '" +
                         (prefix.empty() ? key : prefix + "." + key) + "'");
    }
  }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T def) {
  if (!obj.contains(key)) return def;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error("invalid config: bad value for key '" + key + "'");
  }
}

json need(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.contains(key)) {
    throw config_error("invalid config: missing key '" + path + "'");
  }
  return obj.at(key);
}

Nonlinearity parse_phi(const json& cfg) {
  const json j = need(cfg, "nonlinearity", "nonlinearity");
  check_keys(j, "nonlinearity", {"kind", "m", "points"});
  try {
    return Nonlinearity::from_json(j);
  } catch (const std::exception& e) {
    throw config_error(std::string("invalid config: key 'nonlinearity': ") +
                       e.what());
  }
}

Grid parse_grid(const json& cfg) {
  const json j = need(cfg, "grid", "grid");
  check_keys(j, "grid", {"d", "n"});
  return Grid::make(get_or(j, "d", 1), get_or(j, "n", 64));
}

double bump(double x, double c) {
  const double s = std::sin(std::numbers::pi * (x - c));
  return std::exp(-s * s / 0.02);
}

Field parse_initial(const json& cfg, const Grid& g) {
  const json j = need(cfg, "initial", "initial");
  check_keys(j, "initial",
             {"profile", "value", "base", "amplitude", "mode", "path"});
  const std::string profile = get_or<std::string>(j, "profile", "constant");
  Field f(g);
  if (profile == "constant") {
    const double v = get_or(j, "value", 1.0);
    std::fill(f.v.begin(), f.v.end(), v);
  } else if (profile == "cosine-bump") {
    const double base = get_or(j, "base", 1.0);
    const double amp = get_or(j, "amplitude", 0.5);
    const int mode = get_or(j, "mode", 1);
    for (int jy = 0; jy < (g.d == 1 ? 1 : g.n); ++jy) {
      for (int ix = 0; ix < g.n; ++ix) {
        double v = base + amp * std::cos(2.0 * std::numbers::pi * mode *
                                         g.center(ix));
        if (g.d == 2) {
          v = base + amp * std::cos(2.0 * std::numbers::pi * mode *
                                    g.center(ix)) *
                         std::cos(2.0 * std::numbers::pi * mode *
                                  g.center(jy));
        }
        f.v[g.d == 1 ? static_cast<std::size_t>(ix) : g.idx(ix, jy)] = v;
      }
    }
  } else if (profile == "two-bump") {
    const double base = get_or(j, "base", 0.1);
    const double amp = get_or(j, "amplitude", 1.0);
    for (int jy = 0; jy < (g.d == 1 ? 1 : g.n); ++jy) {
      for (int ix = 0; ix < g.n; ++ix) {
        const double x = g.center(ix);
        double v = base + amp * (bump(x, 0.25) + bump(x, 0.75));
        if (g.d == 2) v = base + amp * bump(x, 0.25) * bump(g.center(jy), 0.5) +
                          amp * bump(x, 0.75) * bump(g.center(jy), 0.5);
        f.v[g.d == 1 ? static_cast<std::size_t>(ix) : g.idx(ix, jy)] = v;
      }
    }
  } else if (profile == "file") {
    const std::string path = need(j, "path", "initial.path").get<std::string>();
    auto [field, t] = read_snapshot(path);
    if (!(field.grid == g)) {
      throw config_error("invalid config: key 'initial.path': grid mismatch");
    }
    f = std::move(field);
  } else {
    throw config_error("invalid config: key 'initial.profile': unknown "
                       "profile '" + profile + "'");
  }
  for (double v : f.v) {
    if (!(v >= 0.0)) {
      throw config_error(
          "invalid config: key 'initial': profile is negative somewhere");
    }
  }
  return f;
}

ControlField parse_control(const json& cfg, const Grid& g, double T) {
  if (!cfg.contains("control")) return ControlField::zero(g, {0.0, T});
  const json j = cfg.at("control");
  check_keys(j, "control", {"kind", "coefficients", "path"});
  const std::string kind = get_or<std::string>(j, "kind", "zero");
  if (kind == "zero") return ControlField::zero(g, {0.0, T});
  if (kind == "spectral") {
    const std::vector<double> coeffs =
        need(j, "coefficients", "control.coefficients")
            .get<std::vector<double>>();
    const SpectralBasis basis(g.d, g.n);
    if (static_cast<int>(coeffs.size()) > basis.capacity()) {
      throw config_error(
          "invalid config: key 'control.coefficients': more modes than the "
          "basis capacity");
    }
    return ControlField::from_spectral(g, basis, {0.0, T}, {coeffs, coeffs});
  }
  if (kind == "file") {
    const std::string path = need(j, "path", "control.path").get<std::string>();
    return read_spectral_control(path, g);
  }
  throw config_error("invalid config: key 'control.kind': unknown kind '" +
                     kind + "'");
}

SolverConfig parse_solver(const json& cfg, double* T_out) {
  const json j = need(cfg, "solver", "solver");
  check_keys(j, "solver",
             {"dt", "T", "cfl_factor", "newton_tol", "newton_max_iter",
              "eta1", "eta2", "eta3", "transport", "allow_substep",
              "snapshot_stride"});
  SolverConfig c;
  c.dt = get_or(j, "dt", c.dt);
  *T_out = get_or(j, "T", 0.1);
  c.cfl_factor = get_or(j, "cfl_factor", c.cfl_factor);
  c.newton_tol = get_or(j, "newton_tol", c.newton_tol);
  c.newton_max_iter = get_or(j, "newton_max_iter", c.newton_max_iter);
  c.eta1 = get_or(j, "eta1", c.eta1);
  c.eta2 = get_or(j, "eta2", c.eta2);
  c.eta3 = get_or(j, "eta3", c.eta3);
  c.allow_substep = get_or(j, "allow_substep", c.allow_substep);
  c.snapshot_stride = get_or(j, "snapshot_stride", c.snapshot_stride);
  const std::string tr = get_or<std::string>(j, "transport", "upwind");
  if (tr == "upwind") {
    c.transport = SolverConfig::Transport::Upwind;
  } else if (tr == "centered") {
    c.transport = SolverConfig::Transport::Centered;
  } else {
    throw config_error("invalid config: key 'solver.transport'");
  }
  return c;
}

NoiseConfig parse_noise(const json& cfg, std::uint64_t seed) {
  NoiseConfig n;
  n.seed = seed;
  if (!cfg.contains("noise")) return n;
  const json j = cfg.at("noise");
  check_keys(j, "noise", {"K", "epsilon", "eta", "replica_index"});
  n.K = get_or(j, "K", 0);
  n.epsilon = get_or(j, "epsilon", 0.0);
  n.eta = get_or(j, "eta", 0.1);
  n.replica_index = get_or(j, "replica_index", 0);
  return n;
}

void dump_json(const std::string& path, const ordered_json& j) {
  write_text(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------
// experiment drivers

void run_solve_skeleton(const json& cfg, const fs::path& dir) {
  const Nonlinearity phi = parse_phi(cfg);
  const Grid grid = parse_grid(cfg);
  const Field rho0 = parse_initial(cfg, grid);
  double T = 0.0;
  const SolverConfig sc = parse_solver(cfg, &T);
  const ControlField g = parse_control(cfg, grid, T);
  const Trajectory traj = solve_skeleton(phi, grid, rho0, g, T, sc);
  write_diagnostics((dir / "diagnostics.csv").string(), traj);
  write_snapshot((dir / "final.csv").string(), traj.final_field(),
                 traj.times.back());
  const EntropyReport er = entropy_report(traj);
  ordered_json ej;
  ej["lhs"] = er.lhs;
  ej["rhs"] = er.rhs;
  ej["margin"] = er.margin;
  dump_json((dir / "entropy.json").string(), ej);
}

void run_simulate_spde(const json& cfg, const fs::path& dir,
                       std::uint64_t seed) {
  const Nonlinearity phi = parse_phi(cfg);
  const Grid grid = parse_grid(cfg);
  const Field rho0 = parse_initial(cfg, grid);
  double T = 0.0;
  const SolverConfig sc = parse_solver(cfg, &T);
  const ControlField g = parse_control(cfg, grid, T);
  const NoiseConfig noise = parse_noise(cfg, seed);
  const SpdePath p = simulate_spde(phi, grid, rho0, noise, &g, T, sc);
  if (p.rejected) {
    throw numerical_failure("path rejected (nonnegativity failure), seed " +
                            std::to_string(p.seed));
  }
  write_diagnostics((dir / "diagnostics.csv").string(), p.traj);
  write_snapshot((dir / "final.csv").string(), p.traj.final_field(),
                 p.traj.times.back());
  write_path_stats((dir / "path_stats.csv").string(), p);
}

void run_evaluate_rate(const json& cfg, const fs::path& dir) {
  const Nonlinearity phi = parse_phi(cfg);
  const Grid grid = parse_grid(cfg);
  const Field rho0 = parse_initial(cfg, grid);
  double T = 0.0;
  const SolverConfig sc = parse_solver(cfg, &T);
  const ControlField g = parse_control(cfg, grid, T);
  double weight_floor = 1e-10;
  if (cfg.contains("rate")) {
    check_keys(cfg.at("rate"), "rate", {"weight_floor"});
    weight_floor = get_or(cfg.at("rate"), "weight_floor", weight_floor);
  }
  const Trajectory traj = solve_skeleton(phi, grid, rho0, g, T, sc);
  const RateEvaluation ev = recover_minimal_control(phi, traj, weight_floor);
  dump_json((dir / "rate.json").string(), rate_evaluation_json(ev));
  write_diagnostics((dir / "diagnostics.csv").string(), traj);
}

void run_minimize_action(const json& cfg, const fs::path& dir) {
  const Nonlinearity phi = parse_phi(cfg);
  const Grid grid = parse_grid(cfg);
  const Field rho0 = parse_initial(cfg, grid);
  double T = 0.0;
  SolverConfig sc = parse_solver(cfg, &T);
  sc.allow_substep = false;
  sc.transport = SolverConfig::Transport::Centered;
  OptimizerConfig opt;
  int K = -1;
  double eta = 0.0;
  json tgt;
  if (cfg.contains("optimizer")) {
    const json j = cfg.at("optimizer");
    check_keys(j, "optimizer",
               {"mu_sweep", "max_iterations", "grad_tol", "armijo_c",
                "backtrack", "memory", "feasibility_gap", "K", "eta",
                "target"});
    opt.mu_sweep = get_or(j, "mu_sweep", opt.mu_sweep);
    opt.max_iterations = get_or(j, "max_iterations", opt.max_iterations);
    opt.grad_tol = get_or(j, "grad_tol", opt.grad_tol);
    opt.armijo_c = get_or(j, "armijo_c", opt.armijo_c);
    opt.backtrack = get_or(j, "backtrack", opt.backtrack);
    opt.memory = get_or(j, "memory", opt.memory);
    opt.feasibility_gap = get_or(j, "feasibility_gap", opt.feasibility_gap);
    K = get_or(j, "K", K);
    eta = get_or(j, "eta", eta);
    if (j.contains("target")) tgt = j.at("target");
  }
  Field target(grid);
  if (tgt.is_null() || (tgt.is_string() && tgt == "deterministic")) {
    const ControlField gz = ControlField::zero(grid, {0.0, T});
    target = solve_skeleton(phi, grid, rho0, gz, T, sc).final_field();
  } else if (tgt.is_object()) {
    json wrapper;
    wrapper["initial"] = tgt;
    target = parse_initial(wrapper, grid);
  } else {
    throw config_error("invalid config: key 'optimizer.target'");
  }
  const RateEvaluation ev =
      minimize_action(phi, grid, rho0, target, T, sc, opt, K, eta);
  dump_json((dir / "rate.json").string(), rate_evaluation_json(ev));
  if (ev.control && ev.control->spectral()) {
    write_spectral_control((dir / "control.csv").string(), *ev.control);
  }
}

void run_gamma_sweep(const json& cfg, const fs::path& dir) {
  const Nonlinearity phi = parse_phi(cfg);
  const Grid grid = parse_grid(cfg);
  const Field rho0 = parse_initial(cfg, grid);
  double T = 0.0;
  const SolverConfig sc = parse_solver(cfg, &T);
  const ControlField g = parse_control(cfg, grid, T);
  std::vector<int> K_list{2, 4, 8, 16};
  if (cfg.contains("gamma")) {
    check_keys(cfg.at("gamma"), "gamma", {"K_list"});
    K_list = get_or(cfg.at("gamma"), "K_list", K_list);
  }
  const auto rows = gamma_sweep(phi, grid, rho0, g, K_list, T, sc);
  write_gamma((dir / "gamma.csv").string(), rows);
}

void run_check_assumptions(const json& cfg, const fs::path& dir) {
  const Nonlinearity phi = parse_phi(cfg);
  double M = 10.0;
  int samples = 4096;
  std::vector<double> delta_grid{0.5, 0.05, 0.02, 0.01, 0.005};
  if (cfg.contains("assumptions")) {
    const json j = cfg.at("assumptions");
    check_keys(j, "assumptions", {"M", "samples", "delta_grid"});
    M = get_or(j, "M", M);
    samples = get_or(j, "samples", samples);
    delta_grid = get_or(j, "delta_grid", delta_grid);
  }
  const AssumptionReport rep = check_assumptions(phi, M, delta_grid, samples);
  write_text((dir / "assumptions.json").string(), rep.to_json().dump(2) + "\n");
}

void run_ldp_mc(const json& cfg, const fs::path& dir, std::uint64_t seed,
                int workers) {
  const Nonlinearity phi = parse_phi(cfg);
  const Grid grid = parse_grid(cfg);
  const Field rho0 = parse_initial(cfg, grid);
  double T = 0.0;
  const SolverConfig sc = parse_solver(cfg, &T);
  const ControlField g = parse_control(cfg, grid, T);
  const NoiseConfig noise = parse_noise(cfg, seed);
  std::vector<double> epsilons{0.1, 0.05, 0.025};
  int replicas = 1000;
  double delta = 0.1;
  bool crn = true;
  std::string event_kind = "l1_deviation";
  if (cfg.contains("ldp")) {
    const json j = cfg.at("ldp");
    check_keys(j, "ldp",
               {"epsilons", "replicas", "delta", "common_random_numbers",
                "event"});
    epsilons = get_or(j, "epsilons", epsilons);
    replicas = get_or(j, "replicas", replicas);
    delta = get_or(j, "delta", delta);
    crn = get_or(j, "common_random_numbers", crn);
    event_kind = get_or<std::string>(j, "event", event_kind);
  }
  std::function<bool(const Trajectory&)> event;
  if (event_kind == "true") {
    event = [](const Trajectory&) { return true; };
  } else if (event_kind == "mass_deviation") {
    event = [](const Trajectory& t) {
      return std::abs(t.mass_series.back() - t.mass_series.front()) >
             1e-6 * t.mass_series.front();
    };
  } else if (event_kind == "l1_deviation") {
    NoiseConfig det = noise;
    det.epsilon = 0.0;
    det.K = 0;
    const Field ref =
        simulate_spde(phi, grid, rho0, det, &g, T, sc).traj.final_field();
    event = [ref, delta](const Trajectory& t) {
      return l1_distance(t.final_field(), ref) >= delta;
    };
  } else {
    throw config_error("invalid config: key 'ldp.event': unknown event '" +
                       event_kind + "'");
  }
  const EventTable table = estimate_event_probability(
      phi, grid, rho0, noise, &g, T, sc, event, epsilons, replicas, crn,
      workers);
  write_ensemble((dir / "ensemble.csv").string(), table);
  dump_json((dir / "ldp.json").string(), ldp_summary_json(table));
}

void run_criticality_scan(const json& cfg, const fs::path& dir) {
  std::vector<double> m_list{1.0, 2.0};
  std::vector<int> d_list{1, 2};
  double p = 2.0, q = 2.0, r = 1.0;
  std::vector<double> eta_list{0.5, 0.25};
  int n = 32;
  if (cfg.contains("criticality")) {
    const json j = cfg.at("criticality");
    check_keys(j, "criticality",
               {"m_list", "d_list", "p", "q", "r", "eta_list", "n"});
    m_list = get_or(j, "m_list", m_list);
    d_list = get_or(j, "d_list", d_list);
    p = get_or(j, "p", p);
    q = get_or(j, "q", q);
    r = get_or(j, "r", r);
    eta_list = get_or(j, "eta_list", eta_list);
    n = get_or(j, "n", n);
  }
  std::string out = "m,d,p,q,r,exponent,fitted\n";
  for (int d : d_list) {
    const Grid grid = Grid::make(d, n);
    const SpectralBasis basis(d, n);
    std::vector<double> coeffs(std::min(5, basis.capacity()), 0.0);
    for (std::size_t k = 0; k < coeffs.size(); ++k) {
      coeffs[k] = 1.0 / (1.0 + static_cast<double>(k));
    }
    const ControlField g = ControlField::from_spectral(
        grid, basis, {0.0, 1.0}, {coeffs, coeffs});
    for (double m : m_list) {
      std::vector<double> lx, ly;
      for (double eta : eta_list) {
        const RescaleResult rr = rescale_control(g, eta, m, r, p, q);
        lx.push_back(std::log(eta));
        ly.push_back(std::log(rr.measured_ratio));
      }
      const double fitted = fit_slope(lx, ly);
      const double ex = criticality_exponent(m, d, p, q, r);
      out += format_number(m) + "," + std::to_string(d) + "," +
             format_number(p) + "," + format_number(q) + "," +
             format_number(r) + "," + format_number(ex) + "," +
             format_number(fitted) + "\n";
    }
  }
  write_text((dir / "criticality.csv").string(), out);
}

// ---------------------------------------------------------------------
// report helpers

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  const std::string text = read_text(path.string());
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> row;
    std::istringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) row.push_back(tok);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

int run_scenario(const std::string& config_path, const RunOptions& opts) {
  json cfg;
  fs::path dir;
  try {
    try {
      cfg = json::parse(read_text(config_path));
    } catch (const json::exception& e) {
      throw config_error(std::string("invalid config: parse error: ") +
                         e.what());
    }
    check_keys(cfg, "",
               {"name", "experiment", "seed", "output", "nonlinearity",
                "grid", "initial", "control", "solver", "noise", "rate",
                "optimizer", "gamma", "ldp", "criticality", "assumptions"});
    const std::string experiment =
        need(cfg, "experiment", "experiment").get<std::string>();
    const std::uint64_t seed = get_or<std::uint64_t>(cfg, "seed", 0);
    std::string out =
        !opts.out_dir.empty()
            ? opts.out_dir
            : get_or<std::string>(cfg, "output",
                                  "run-" + get_or<std::string>(cfg, "name",
                                                               "scenario"));
    dir = out;
    fs::create_directories(dir);

    ordered_json manifest;
    manifest["experiment"] = experiment;
    manifest["name"] = get_or<std::string>(cfg, "name", "scenario");
    manifest["seed"] = seed;
    manifest["config"] = cfg;
    dump_json((dir / "run.json").string(), manifest);

    if (experiment == "solve-skeleton") {
      run_solve_skeleton(cfg, dir);
    } else if (experiment == "simulate-spde") {
      run_simulate_spde(cfg, dir, seed);
    } else if (experiment == "evaluate-rate") {
      run_evaluate_rate(cfg, dir);
    } else if (experiment == "minimize-action") {
      run_minimize_action(cfg, dir);
    } else if (experiment == "gamma-sweep") {
      run_gamma_sweep(cfg, dir);
    } else if (experiment == "check-assumptions") {
      run_check_assumptions(cfg, dir);
    } else if (experiment == "ldp-mc") {
      run_ldp_mc(cfg, dir, seed, opts.workers);
    } else if (experiment == "criticality-scan") {
      run_criticality_scan(cfg, dir);
    } else {
      throw config_error("invalid config: key 'experiment': unknown "
                         "experiment '" + experiment + "'");
    }
    return 0;
  } catch (const config_error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const infeasible_error& e) {
    std::cerr << "infeasible problem: " << e.what() << "\n";
    return 4;
  } catch (const numerical_failure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    if (!dir.empty()) {
      ordered_json diag;
      diag["error"] = "numerical_failure";
      diag["message"] = e.what();
      dump_json((dir / "failure.json").string(), diag);
    }
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return 2;
  }
}

int emit_report(const std::string& run_dir) {
  const fs::path dir(run_dir);
  try {
    if (!fs::exists(dir / "run.json")) {
      std::cerr << "missing run manifest: " << (dir / "run.json") << "\n";
      return 5;
    }
    const json manifest = json::parse(read_text((dir / "run.json").string()));
    const std::string experiment = manifest.at("experiment").get<std::string>();
    ordered_json summary;
    summary["experiment"] = experiment;
    summary["name"] = manifest.value("name", "scenario");

    const auto require = [&](const char* file) -> fs::path {
      const fs::path p = dir / file;
      if (!fs::exists(p)) {
        throw std::runtime_error(std::string("missing artifact: ") + file);
      }
      return p;
    };

    if (experiment == "solve-skeleton" || experiment == "simulate-spde" ||
        experiment == "evaluate-rate") {
      const auto rows = read_csv(require("diagnostics.csv"));
      // columns: t, mass, entropy, dissipation_cum, control_energy_cum, dt
      const double m0 = std::stod(rows[1][1]);
      double drift = 0.0;
      std::string mass_csv = "t,mass\n", entropy_csv = "t,entropy\n";
      for (std::size_t i = 1; i < rows.size(); ++i) {
        drift = std::max(drift, std::abs(std::stod(rows[i][1]) - m0));
        mass_csv += rows[i][0] + "," + rows[i][1] + "\n";
        entropy_csv += rows[i][0] + "," + rows[i][2] + "\n";
      }
      const auto& last = rows.back();
      const double lhs = (std::stod(last[2]) - std::stod(rows[1][2])) +
                         std::stod(last[3]);
      const double rhs = std::stod(last[4]);
      const double margin = rhs - lhs;
      summary["mass_drift_rel"] = drift / m0;
      summary["entropy_margin"] = margin;
      summary["entropy_margin_nonneg"] = margin >= -0.05 * rhs - 1e-6;
      write_text((dir / "plot_mass.csv").string(), mass_csv);
      write_text((dir / "plot_entropy.csv").string(), entropy_csv);
      if (experiment == "evaluate-rate") {
        summary["rate"] = json::parse(read_text(require("rate.json").string()));
      }
    } else if (experiment == "minimize-action") {
      summary["rate"] = json::parse(read_text(require("rate.json").string()));
    } else if (experiment == "gamma-sweep") {
      const auto rows = read_csv(require("gamma.csv"));
      bool mono_J = true, strict_l1 = true;
      std::string plot = "K,J_etaK\n";
      for (std::size_t i = 1; i < rows.size(); ++i) {
        plot += rows[i][0] + "," + rows[i][2] + "\n";
        if (i > 1) {
          if (std::stod(rows[i][2]) < std::stod(rows[i - 1][2])) mono_J = false;
          if (std::stod(rows[i][4]) >= std::stod(rows[i - 1][4]))
            strict_l1 = false;
        }
      }
      summary["monotone_J"] = mono_J;
      summary["l1_strictly_decreasing"] = strict_l1;
      write_text((dir / "plot_gamma.csv").string(), plot);
    } else if (experiment == "ldp-mc") {
      const json ldp = json::parse(read_text(require("ldp.json").string()));
      summary["table"] = ldp.at("table");
      std::string plot = "epsilon,minus_eps_log_p\n";
      for (const auto& row : ldp.at("table")) {
        if (!row.at("minus_eps_log_p").is_null()) {
          plot += format_number(row.at("epsilon").get<double>()) + "," +
                  format_number(row.at("minus_eps_log_p").get<double>()) +
                  "\n";
        }
      }
      write_text((dir / "plot_ldp.csv").string(), plot);
    } else if (experiment == "check-assumptions") {
      const json rep =
          json::parse(read_text(require("assumptions.json").string()));
      bool all = true;
      for (const auto& c : rep.at("checks")) {
        if (!c.at("pass").get<bool>()) all = false;
      }
      summary["all_pass"] = all;
      summary["checks"] = rep.at("checks");
    } else if (experiment == "criticality-scan") {
      const auto rows = read_csv(require("criticality.csv"));
      double worst = 0.0;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        worst = std::max(worst, std::abs(std::stod(rows[i][5]) -
                                         std::stod(rows[i][6])));
      }
      summary["max_exponent_error"] = worst;
    }
    dump_json((dir / "summary.json").string(), summary);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 5;
  }
}

}  // namespace skeld
