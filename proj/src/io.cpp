#include "skeld/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace skeld {

std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_snapshot(const std::string& path, const Field& f, double t) {
  const Grid& g = f.grid;
  std::string out = "# SKELD v1 d=" + std::to_string(g.d) +
                    " n=" + std::to_string(g.n) + " t=" + format_number(t) +
                    "\n";
  out += g.d == 1 ? "ix,value\n" : "ix,iy,value\n";
  if (g.d == 1) {
    for (int i = 0; i < g.n; ++i) {
      out += std::to_string(i) + "," + format_number(f.v[i]) + "\n";
    }
  } else {
    for (int j = 0; j < g.n; ++j) {
      for (int i = 0; i < g.n; ++i) {
        out += std::to_string(i) + "," + std::to_string(j) + "," +
               format_number(f.v[g.idx(i, j)]) + "\n";
      }
    }
  }
  write_text(path, out);
}

std::pair<Field, double> read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string header;
  std::getline(in, header);
  int d = 0, n = 0;
  double t = 0.0;
  if (std::sscanf(header.c_str(), "# SKELD v1 d=%d n=%d t=%lf", &d, &n, &t) !=
      3) {
    throw std::runtime_error("bad snapshot header in " + path);
  }
  Grid g = Grid::make(d, n);
  Field f(g);
  std::string line;
  std::getline(in, line);  // column header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    int ix = 0, iy = 0;
    std::getline(ss, tok, ',');
    ix = std::stoi(tok);
    if (d == 2) {
      std::getline(ss, tok, ',');
      iy = std::stoi(tok);
    }
    std::getline(ss, tok, ',');
    f.v[d == 1 ? static_cast<std::size_t>(ix) : g.idx(ix, iy)] =
        std::stod(tok);
  }
  return {std::move(f), t};
}

void write_diagnostics(const std::string& path, const Trajectory& traj) {
  std::string out = "t,mass,entropy,dissipation_cum,control_energy_cum,dt\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out += format_number(traj.times[i]) + "," +
           format_number(traj.mass_series[i]) + "," +
           format_number(traj.entropy_series[i]) + "," +
           format_number(traj.dissipation_cum[i]) + "," +
           format_number(traj.control_energy_cum[i]) + "," +
           format_number(traj.dt_history[i]) + "\n";
  }
  write_text(path, out);
}

void write_spectral_control(const std::string& path, const ControlField& g) {
  if (!g.spectral()) {
    throw std::runtime_error("control is not in spectral representation");
  }
  std::string out = "t,k,coefficient\n";
  for (std::size_t j = 0; j < g.times().size(); ++j) {
    const auto& row = g.coeffs()[j];
    for (std::size_t k = 0; k < row.size(); ++k) {
      out += format_number(g.times()[j]) + "," + std::to_string(k + 1) + "," +
             format_number(row[k]) + "\n";
    }
  }
  write_text(path, out);
}

ControlField read_spectral_control(const std::string& path,
                                   const Grid& grid) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> times;
  std::vector<std::vector<double>> coeffs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    const double t = std::stod(tok);
    std::getline(ss, tok, ',');
    const std::size_t k = std::stoul(tok);
    std::getline(ss, tok, ',');
    const double c = std::stod(tok);
    if (times.empty() || t != times.back()) {
      times.push_back(t);
      coeffs.emplace_back();
    }
    if (coeffs.back().size() < k) coeffs.back().resize(k, 0.0);
    coeffs.back()[k - 1] = c;
  }
  std::size_t kmax = 0;
  for (const auto& row : coeffs) kmax = std::max(kmax, row.size());
  for (auto& row : coeffs) row.resize(kmax, 0.0);
  const SpectralBasis basis(grid.d, grid.n);
  return ControlField::from_spectral(grid, basis, std::move(times),
                                     std::move(coeffs));
}

void write_path_stats(const std::string& path, const SpdePath& p) {
  std::string out = "step,noise_checksum,correction_norm\n";
  for (std::size_t j = 0; j < p.noise_checksum.size(); ++j) {
    out += std::to_string(j) + "," + format_number(p.noise_checksum[j]) + "," +
           format_number(p.correction_norm[j]) + "\n";
  }
  write_text(path, out);
}

void write_ensemble(const std::string& path, const EventTable& table) {
  std::string out = "epsilon,replica,event_hit,l1_deviation,rejected\n";
  for (const EnsembleRow& r : table.rows) {
    out += format_number(r.epsilon) + "," + std::to_string(r.replica) + "," +
           std::to_string(r.event_hit ? 1 : 0) + "," +
           format_number(r.l1_deviation) + "," +
           std::to_string(r.rejected ? 1 : 0) + "\n";
  }
  write_text(path, out);
}

nlohmann::ordered_json ldp_summary_json(const EventTable& table) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const EventEstimate& e : table.estimates) {
    nlohmann::ordered_json r;
    r["epsilon"] = e.epsilon;
    r["p_hat"] = e.p_hat;
    if (e.log_valid) {
      r["minus_eps_log_p"] = e.minus_eps_log_p;
    } else {
      r["minus_eps_log_p"] = nullptr;
      r["zero_hit_bound"] = e.zero_hit_bound;
    }
    r["stderr"] = e.stderr_wilson;
    r["hits"] = e.hits;
    r["used"] = e.used;
    r["rejected"] = e.rejected;
    rows.push_back(std::move(r));
  }
  nlohmann::ordered_json j;
  j["table"] = std::move(rows);
  return j;
}

nlohmann::ordered_json rate_evaluation_json(const RateEvaluation& ev) {
  nlohmann::ordered_json j;
  j["J"] = ev.value;
  j["residual"] = ev.constraint_residual;
  j["iterations"] = ev.iterations;
  j["feasible"] = ev.feasible;
  j["mu"] = ev.mu;
  return j;
}

void write_gamma(const std::string& path, const std::vector<GammaRow>& rows) {
  std::string out = "K,eta,J_etaK,J_ref,l1_dist\n";
  for (const GammaRow& r : rows) {
    out += std::to_string(r.K) + "," + format_number(r.eta) + "," +
           format_number(r.J_etaK) + "," + format_number(r.J_ref) + "," +
           format_number(r.l1_dist) + "\n";
  }
  write_text(path, out);
}

}  // namespace skeld
