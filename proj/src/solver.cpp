#include "skeld/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace skeld {

namespace {

// Diffusion nonlinearity with the eta1 truncation (linear growth beyond
// 1/eta1) and zero extension for negative arguments, so Newton transients
// below zero stay finite.
double phi_eff(const Nonlinearity& phi, double eta1, double xi) {
  if (xi <= 0.0) return 0.0;
  if (eta1 > 0.0) {
    const double lvl = 1.0 / eta1;
    if (xi > lvl) return phi.phi(lvl) + phi.dphi(lvl) * (xi - lvl);
  }
  return phi.phi(xi);
}

double dphi_eff(const Nonlinearity& phi, double eta1, double xi) {
  if (xi <= 0.0) return 0.0;
  if (eta1 > 0.0) {
    const double lvl = 1.0 / eta1;
    if (xi > lvl) return phi.dphi(lvl);
  }
  return phi.dphi(xi);
}

// Cyclic tridiagonal solve for J x = r with J = I - dt L diag(w)
// (column-diagonally dominant, so unpivoted elimination is stable);
// Sherman-Morrison removes the periodic corner entries.
void solve_cyclic_newton(const std::vector<double>& w, double dt, double h,
                         const std::vector<double>& r, std::vector<double>& x) {
  const int n = static_cast<int>(w.size());
  const double s = dt / (h * h);
  std::vector<double> a(n), b(n), c(n);
  for (int i = 0; i < n; ++i) {
    a[i] = -s * w[(i - 1 + n) % n];  // coefficient of x_{i-1}
    b[i] = 1.0 + 2.0 * s * w[i];
    c[i] = -s * w[(i + 1) % n];  // coefficient of x_{i+1}
  }
  const double alpha = a[0];      // corner (0, n-1)
  const double beta = c[n - 1];   // corner (n-1, 0)
  const double gamma = -b[0];
  std::vector<double> bb(b);
  bb[0] -= gamma;
  bb[n - 1] -= alpha * beta / gamma;

  const auto thomas = [&](const std::vector<double>& rhs,
                          std::vector<double>& sol) {
    std::vector<double> cp(n), dp(n);
    cp[0] = c[0] / bb[0];
    dp[0] = rhs[0] / bb[0];
    for (int i = 1; i < n; ++i) {
      const double m = bb[i] - a[i] * cp[i - 1];
      cp[i] = c[i] / m;
      dp[i] = (rhs[i] - a[i] * dp[i - 1]) / m;
    }
    sol[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) sol[i] = dp[i] - cp[i] * sol[i + 1];
  };

  std::vector<double> x1(n), u(n, 0.0), x2(n);
  thomas(r, x1);
  u[0] = gamma;
  u[n - 1] = beta;
  thomas(u, x2);
  const double fact =
      (x1[0] + alpha / gamma * x1[n - 1]) /
      (1.0 + x2[0] + alpha / gamma * x2[n - 1]);
  x.resize(n);
  for (int i = 0; i < n; ++i) x[i] = x1[i] - fact * x2[i];
}

// Jacobi-preconditioned CG for (diag(1/w) - dt L) y = r (SPD).
bool cg_newton_2d(const Grid& g, const std::vector<double>& winv, double dt,
                  const std::vector<double>& r, std::vector<double>& y) {
  const std::size_t N = r.size();
  const double s = dt / (g.h * g.h);
  const int n = g.n;
  const auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const std::size_t id = g.idx(i, j);
        const double nb = v[g.idx((i + 1) % n, j)] +
                          v[g.idx((i - 1 + n) % n, j)] +
                          v[g.idx(i, (j + 1) % n)] +
                          v[g.idx(i, (j - 1 + n) % n)];
        out[id] = winv[id] * v[id] - s * (nb - 4.0 * v[id]);
      }
    }
  };
  y.assign(N, 0.0);
  std::vector<double> res(r), z(N), p(N), Ap(N), diag(N);
  for (std::size_t i = 0; i < N; ++i) diag[i] = winv[i] + 4.0 * s;
  double rz = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    z[i] = res[i] / diag[i];
    rz += res[i] * z[i];
  }
  p = z;
  double rnorm0 = 0.0;
  for (double v : r) rnorm0 += v * v;
  rnorm0 = std::sqrt(rnorm0);
  if (rnorm0 == 0.0) return true;
  const int max_iter = static_cast<int>(10 * N) + 100;
  for (int it = 0; it < max_iter; ++it) {
    apply(p, Ap);
    double pAp = 0.0;
    for (std::size_t i = 0; i < N; ++i) pAp += p[i] * Ap[i];
    if (pAp <= 0.0) return false;
    const double alpha = rz / pAp;
    double rnorm = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      y[i] += alpha * p[i];
      res[i] -= alpha * Ap[i];
      rnorm += res[i] * res[i];
    }
    if (std::sqrt(rnorm) <= 1e-12 * rnorm0) return true;
    double rz_new = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      z[i] = res[i] / diag[i];
      rz_new += res[i] * z[i];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < N; ++i) p[i] = z[i] + beta * p[i];
  }
  return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// FluxFunction

FluxFunction::FluxFunction(const Nonlinearity& phi, double eta3,
                           double range_hint)
    : phi_(phi), eta3_(eta3) {
  if (eta3 <= 0.0) return;
  const auto params = RegularizationParams::from_eta(phi, eta3);
  exact_ = std::make_shared<const RegularizedSqrtPhi>(phi, params);
  const double eps = params.mollifier_width;
  split_ = 8.0 * eps;
  top_ = std::max({2.0 * range_hint + 1.0, 4.0 * split_, 1.0});
  top_ = std::min(top_, phi.domain_max());
  split_ = std::min(split_, 0.5 * top_);
  const int nlo = 1024, nhi = 4096;
  lo_vals_.resize(nlo + 1);
  hi_vals_.resize(nhi + 1);
  lo_der_.resize(nlo + 1);
  hi_der_.resize(nhi + 1);
  for (int i = 0; i <= nlo; ++i) {
    const double x = split_ * i / nlo;
    lo_vals_[i] = exact_->value(x);
    lo_der_[i] = exact_->derivative(x);
  }
  for (int i = 0; i <= nhi; ++i) {
    const double x = split_ + (top_ - split_) * i / nhi;
    hi_vals_[i] = exact_->value(x);
    hi_der_[i] = exact_->derivative(x);
  }
}

double FluxFunction::table_value(double xi, const std::vector<double>& lo,
                                 const std::vector<double>& hi) const {
  if (xi <= split_) {
    const double s = xi / split_ * (lo.size() - 1);
    const std::size_t i =
        std::min<std::size_t>(static_cast<std::size_t>(s), lo.size() - 2);
    const double t = s - static_cast<double>(i);
    return (1.0 - t) * lo[i] + t * lo[i + 1];
  }
  const double s = (xi - split_) / (top_ - split_) * (hi.size() - 1);
  const std::size_t i =
      std::min<std::size_t>(static_cast<std::size_t>(s), hi.size() - 2);
  const double t = s - static_cast<double>(i);
  return (1.0 - t) * hi[i] + t * hi[i + 1];
}

double FluxFunction::value(double xi) const {
  if (xi < 0.0) xi = 0.0;  // zero extension of Phi
  if (eta3_ <= 0.0) {
    return phi_.sqrt_phi(std::min(xi, phi_.domain_max()));
  }
  if (xi == 0.0) return 0.0;  // exact by construction of the mollifier
  if (xi > top_) return exact_->value(xi);
  return table_value(xi, lo_vals_, hi_vals_);
}

double FluxFunction::derivative(double xi) const {
  if (xi < 0.0) xi = 0.0;
  if (eta3_ > 0.0) {
    if (xi > top_) return exact_->derivative(xi);
    return table_value(xi, lo_der_, hi_der_);
  }
  if (phi_.is_power() && phi_.exponent() < 2.0 && xi < 1e-6) {
    const double d = 1e-6;
    return (phi_.sqrt_phi(xi + d) - phi_.sqrt_phi(xi)) / d;
  }
  return phi_.dsqrt_phi(std::min(xi, phi_.domain_max()));
}

double FluxFunction::slope(double xi) const {
  if (xi < 0.0) xi = 0.0;
  if (eta3_ > 0.0) {
    // consistent with the interpolated table: its own secant slope
    const double d = std::max(1e-6, 1e-3 * split_);
    return std::abs(value(xi + d) - value(std::max(xi - d, 0.0))) /
           (xi + d - std::max(xi - d, 0.0));
  }
  if (phi_.is_power() && phi_.exponent() < 2.0 && xi < 1e-6) {
    const double d = 1e-6;
    return (phi_.sqrt_phi(xi + d) - phi_.sqrt_phi(xi)) / d;
  }
  return std::abs(phi_.dsqrt_phi(std::min(xi, phi_.domain_max())));
}

// ---------------------------------------------------------------------------

Field transport_divergence(const FluxFunction& flux, const Field& rho,
                           const VectorField& g, SolverConfig::Transport kind) {
  require_same_grid(rho.grid, g.grid);
  Field s(rho.grid);
  for (std::size_t i = 0; i < s.v.size(); ++i) s.v[i] = flux.value(rho.v[i]);
  if (kind == SolverConfig::Transport::Upwind) {
    return div_upwind(s, g);
  }
  VectorField flux_vec(rho.grid);
  for (int c = 0; c < rho.grid.d; ++c) {
    for (std::size_t i = 0; i < s.v.size(); ++i) {
      flux_vec.comp[c][i] = s.v[i] * g.comp[c][i];
    }
  }
  return div_centered(flux_vec);
}

double cfl_max_speed(const FluxFunction& flux, const Field& rho,
                     const VectorField& g) {
  const Grid& gr = rho.grid;
  const int n = gr.n;
  double speed = 0.0;
  for (int j = 0; j < (gr.d == 1 ? 1 : n); ++j) {
    for (int i = 0; i < n; ++i) {
      double gmag = 0.0;
      for (int c = 0; c < gr.d; ++c) gmag += g.at(c, i, j) * g.at(c, i, j);
      gmag = std::sqrt(gmag);
      if (gmag == 0.0) continue;
      const double r0 = rho(i, j);
      double local = flux.slope(std::max(r0, 0.0));
      // face secants against the realized neighbor values
      for (int c = 0; c < gr.d; ++c) {
        const int ni = (c == 0) ? (i + 1) % n : i;
        const int nj = (c == 0) ? j : (j + 1) % n;
        const double r1 = rho(ni, nj);
        if (std::abs(r1 - r0) > 1e-14) {
          local = std::max(local, std::abs(flux.value(std::max(r1, 0.0)) -
                                           flux.value(std::max(r0, 0.0))) /
                                      std::abs(r1 - r0));
        }
      }
      speed = std::max(speed, local * gmag);
    }
  }
  return speed;
}

bool implicit_diffusion_step(const Nonlinearity& phi, const SolverConfig& cfg,
                             const Field& rhs, double dt, Field& out) {
  const Grid& g = rhs.grid;
  Field u = rhs;
  const std::size_t N = u.v.size();
  Field phiu(g);
  std::vector<double> w(N), resid(N);
  for (int it = 0; it < cfg.newton_max_iter; ++it) {
    for (std::size_t i = 0; i < N; ++i) {
      phiu.v[i] = phi_eff(phi, cfg.eta1, u.v[i]) + cfg.eta2 * u.v[i];
    }
    const Field lap = laplacian_compact(phiu);
    std::vector<double> absres(N);
    for (std::size_t i = 0; i < N; ++i) {
      resid[i] = u.v[i] - dt * lap.v[i] - rhs.v[i];
      absres[i] = std::abs(resid[i]);
    }
    const double res = std::pow(g.h, g.d) * kahan_sum(absres);
    if (res <= cfg.newton_tol) {
      out = std::move(u);
      return true;
    }
    for (std::size_t i = 0; i < N; ++i) {
      w[i] = dphi_eff(phi, cfg.eta1, u.v[i]) + cfg.eta2;
    }
    std::vector<double> delta(N);
    if (g.d == 1) {
      std::vector<double> negres(N);
      for (std::size_t i = 0; i < N; ++i) negres[i] = -resid[i];
      solve_cyclic_newton(w, dt, g.h, negres, delta);
    } else {
      double wmax = 0.0;
      for (double x : w) wmax = std::max(wmax, x);
      const double floor = std::max(1e-14 * wmax, 1e-300);
      std::vector<double> winv(N), y(N), negres(N);
      for (std::size_t i = 0; i < N; ++i) {
        winv[i] = 1.0 / std::max(w[i], floor);
        negres[i] = -resid[i];
      }
      if (!cg_newton_2d(g, winv, dt, negres, y)) return false;
      for (std::size_t i = 0; i < N; ++i) delta[i] = y[i] * winv[i];
    }
    for (std::size_t i = 0; i < N; ++i) u.v[i] += delta[i];
  }
  return false;
}

bool implicit_transpose_solve(const Nonlinearity& phi,
                              const SolverConfig& cfg, const Field& rho_new,
                              double dt, const Field& v, Field& out) {
  // Solves (I - dt diag(w) L) out = v with w = phi_eff'(rho_new) + eta2,
  // the transpose of the converged Newton Jacobian of the implicit step.
  // Identity used: (I - dt W L) = W (I - dt L W) W^{-1}.
  const Grid& g = rho_new.grid;
  const std::size_t N = rho_new.v.size();
  std::vector<double> w(N);
  double wmax = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    w[i] = dphi_eff(phi, cfg.eta1, rho_new.v[i]) + cfg.eta2;
    wmax = std::max(wmax, w[i]);
  }
  const double floor = std::max(1e-14 * wmax, 1e-300);
  for (double& x : w) x = std::max(x, floor);
  out = Field(g);
  if (g.d == 1) {
    std::vector<double> rhs(N), z(N);
    for (std::size_t i = 0; i < N; ++i) rhs[i] = v.v[i] / w[i];
    solve_cyclic_newton(w, dt, g.h, rhs, z);
    for (std::size_t i = 0; i < N; ++i) out.v[i] = w[i] * z[i];
    return true;
  }
  std::vector<double> winv(N), rhs(N), y(N);
  for (std::size_t i = 0; i < N; ++i) {
    winv[i] = 1.0 / w[i];
    rhs[i] = v.v[i] * winv[i];
  }
  if (!cg_newton_2d(g, winv, dt, rhs, y)) return false;
  out.v = std::move(y);
  return true;
}

void renormalize_mass(Field& rho, double target_mass) {
  const double m = mass(rho);
  if (m > 0.0 && target_mass > 0.0 && m != target_mass) {
    const double f = target_mass / m;
    for (double& x : rho.v) x *= f;
  }
}

// ---------------------------------------------------------------------------

const Field* Trajectory::field_at_node(std::size_t node) const {
  for (std::size_t i = 0; i < field_nodes.size(); ++i) {
    if (field_nodes[i] == node) return &fields[i];
  }
  return nullptr;
}

// Spatial dissipation functional 2 h^d sum |grad_c Phi^{1/2}(rho)|^2.
double dissipation_rate(const Nonlinearity& phi, const Field& rho) {
  Field s(rho.grid);
  for (std::size_t i = 0; i < s.v.size(); ++i) {
    s.v[i] = phi.sqrt_phi(std::max(rho.v[i], 0.0));
  }
  const VectorField gr = grad_centered(s);
  std::vector<double> cell(rho.grid.size(), 0.0);
  for (int c = 0; c < rho.grid.d; ++c) {
    for (std::size_t i = 0; i < cell.size(); ++i) {
      cell[i] += gr.comp[c][i] * gr.comp[c][i];
    }
  }
  return 2.0 * std::pow(rho.grid.h, rho.grid.d) * kahan_sum(cell);
}

double entropy_functional(const Nonlinearity& phi, const Field& rho) {
  std::vector<double> cell(rho.grid.size());
  for (std::size_t i = 0; i < cell.size(); ++i) {
    cell[i] = phi.entropy_density(std::max(rho.v[i], 0.0));
  }
  return std::pow(rho.grid.h, rho.grid.d) * kahan_sum(cell);
}

Trajectory solve_skeleton(const Nonlinearity& phi, const Grid& grid,
                          const Field& rho0, const ControlField& g, double T,
                          const SolverConfig& cfg) {
  require_same_grid(grid, rho0.grid);
  if (!(T > 0.0) || !(cfg.dt > 0.0)) {
    throw domain_error("solver needs T > 0 and dt > 0");
  }
  for (double x : rho0.v) {
    if (!(x >= 0.0)) throw domain_error("initial data must be nonnegative");
  }
  const int J = std::max(1, static_cast<int>(std::llround(T / cfg.dt)));
  const double dt = T / J;

  FluxFunction flux(phi, cfg.eta3, linf_norm(rho0));

  Trajectory traj;
  traj.grid = grid;
  Field rho = rho0;
  const double mass0 = mass(rho0);
  double dissipation = 0.0, energy = 0.0;
  const auto record = [&](int j, double step_dt) {
    traj.times.push_back(j * dt);
    traj.mass_series.push_back(mass(rho));
    traj.entropy_series.push_back(entropy_functional(phi, rho));
    traj.dissipation_cum.push_back(dissipation);
    traj.control_energy_cum.push_back(energy);
    traj.dt_history.push_back(step_dt);
    if (j % std::max(1, cfg.snapshot_stride) == 0 || j == J) {
      traj.fields.push_back(rho);
      traj.field_nodes.push_back(static_cast<std::size_t>(j));
    }
  };
  record(0, dt);

  for (int j = 0; j < J; ++j) {
    const VectorField gj = g.at(j * dt);
    // left-endpoint diagnostics
    dissipation += dt * dissipation_rate(phi, rho);
    energy += dt * energy_density(gj);

    const double speed = cfl_max_speed(flux, rho, gj);
    int halvings = 0;
    if (cfg.allow_substep && speed > 0.0) {
      while (halvings < 10 &&
             dt / (1 << halvings) > cfg.cfl_factor * grid.h / speed) {
        ++halvings;
      }
    }
    bool done = false;
    Field saved = rho;
    while (!done) {
      const int nsub = 1 << halvings;
      const double dts = dt / nsub;
      bool ok = true;
      Field cur = saved;
      for (int s = 0; s < nsub && ok; ++s) {
        const Field divF = transport_divergence(flux, cur, gj, cfg.transport);
        Field rhs(grid);
        for (std::size_t i = 0; i < rhs.v.size(); ++i) {
          rhs.v[i] = cur.v[i] - dts * divF.v[i];
        }
        Field next(grid);
        ok = implicit_diffusion_step(phi, cfg, rhs, dts, next);
        if (ok) {
          double mn = 0.0;
          for (double x : next.v) mn = std::min(mn, x);
          if (mn < -1e-12) {
            ok = false;
            if (!cfg.allow_substep || halvings >= 10) {
              throw numerical_failure(
                  "nonnegativity violated (min cell " + std::to_string(mn) +
                  ") at t = " + std::to_string(j * dt));
            }
          }
        }
        if (ok) {
          renormalize_mass(next, mass0);
          cur = std::move(next);
        }
      }
      if (ok) {
        rho = std::move(cur);
        done = true;
        record(j + 1, dts);
      } else {
        if (!cfg.allow_substep) {
          throw numerical_failure("implicit step failed with substepping off");
        }
        if (++halvings > 10) {
          throw numerical_failure("step halving exhausted at t = " +
                                  std::to_string(j * dt));
        }
      }
    }
  }
  return traj;
}

EntropyReport entropy_report(const Trajectory& traj) {
  if (traj.entropy_series.empty()) {
    throw domain_error("trajectory has no diagnostics");
  }
  EntropyReport r;
  r.lhs = traj.entropy_series.back() - traj.entropy_series.front() +
          traj.dissipation_cum.back();
  r.rhs = traj.control_energy_cum.back();
  r.margin = r.rhs - r.lhs;
  return r;
}

Field defect_field(const Nonlinearity& phi, const Field& rho) {
  Field s(rho.grid);
  for (std::size_t i = 0; i < s.v.size(); ++i) {
    s.v[i] = phi.sqrt_phi(std::max(rho.v[i], 0.0));
  }
  const VectorField gr = grad_centered(s);
  Field out(rho.grid);
  for (std::size_t i = 0; i < out.v.size(); ++i) {
    double mag2 = 0.0;
    for (int c = 0; c < rho.grid.d; ++c) {
      mag2 += gr.comp[c][i] * gr.comp[c][i];
    }
    out.v[i] = phi.defect_coeff(std::max(rho.v[i], 0.0)) * mag2;
  }
  return out;
}

ContractionSeries contraction_distance(const Trajectory& a,
                                       const Trajectory& b) {
  require_same_grid(a.grid, b.grid);
  if (a.field_nodes != b.field_nodes || a.times.size() != b.times.size()) {
    throw grid_mismatch_error("trajectories have mismatched snapshots");
  }
  ContractionSeries out;
  for (std::size_t i = 0; i < a.fields.size(); ++i) {
    out.distances.push_back(l1_distance(a.fields[i], b.fields[i]));
  }
  const double d0 = out.distances.empty() ? 0.0 : out.distances.front();
  for (double d : out.distances) {
    if (d > d0 * (1.0 + 1e-3) + 1e-15) out.violation = true;
  }
  return out;
}

}  // namespace skeld
