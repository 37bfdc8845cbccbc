#include "skeld/rate.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace skeld {

namespace {

// Squared spatial L2 norm of the control at time node i.
double spatial_energy(const ControlField& g, std::size_t node) {
  if (g.spectral()) {
    double acc = 0.0;
    for (double c : g.coeffs()[node]) acc += c * c;
    return acc;
  }
  const VectorField vf = g.at(g.times()[node]);
  const double n2 = l2_norm(vf);
  return n2 * n2;
}

// Null space of the wide centered operator D (grad_centered / div_centered):
// constants and per-direction checkerboards. Projecting them out keeps the
// singular-but-consistent Poisson systems inside the CG-invariant subspace.
void deflate(const Grid& g, std::vector<double>& v) {
  const std::size_t N = v.size();
  const int nmodes = g.d == 1 ? 2 : 4;
  for (int m = 0; m < nmodes; ++m) {
    double dot = 0.0;
    for (int j = 0; j < (g.d == 1 ? 1 : g.n); ++j) {
      for (int i = 0; i < g.n; ++i) {
        const double sign =
            ((m & 1) && (i % 2) ? -1.0 : 1.0) * ((m & 2) && (j % 2) ? -1.0 : 1.0);
        dot += sign * v[g.d == 1 ? i : g.idx(i, j)];
      }
    }
    dot /= static_cast<double>(N);
    for (int j = 0; j < (g.d == 1 ? 1 : g.n); ++j) {
      for (int i = 0; i < g.n; ++i) {
        const double sign =
            ((m & 1) && (i % 2) ? -1.0 : 1.0) * ((m & 2) && (j % 2) ? -1.0 : 1.0);
        v[g.d == 1 ? i : g.idx(i, j)] -= sign * dot;
      }
    }
  }
}

// A H = div_c(w grad_c H) with cell-wise weights, matching the discrete
// weak form div_c(Phi^{1/2}(rho) g) used by the centered transport term.
Field apply_weighted(const Field& w, const Field& H) {
  VectorField gr = grad_centered(H);
  for (int c = 0; c < H.grid.d; ++c) {
    for (std::size_t i = 0; i < H.v.size(); ++i) {
      gr.comp[c][i] *= w.v[i];
    }
  }
  return div_centered(gr);
}

// CG for -A H = -r on the deflated subspace; returns iterations, throws on
// stagnation. The Jacobi diagonal of -A is (sum of neighbor weights)/4h^2.
int solve_weighted_poisson(const Field& w, const Field& r, Field& H,
                           std::size_t slice) {
  const Grid& g = r.grid;
  const std::size_t N = r.v.size();
  std::vector<double> rhs = r.v;
  deflate(g, rhs);
  Field diagf(g);
  {
    const double inv4h2 = 1.0 / (4.0 * g.h * g.h);
    for (int j = 0; j < (g.d == 1 ? 1 : g.n); ++j) {
      for (int i = 0; i < g.n; ++i) {
        const std::size_t id = g.d == 1 ? static_cast<std::size_t>(i)
                                        : g.idx(i, j);
        double acc = w.v[g.d == 1 ? (i + 1) % g.n
                                  : g.idx((i + 1) % g.n, j)] +
                     w.v[g.d == 1 ? (i - 1 + g.n) % g.n
                                  : g.idx((i - 1 + g.n) % g.n, j)];
        if (g.d == 2) {
          acc += w.v[g.idx(i, (j + 1) % g.n)] +
                 w.v[g.idx(i, (j - 1 + g.n) % g.n)];
        }
        diagf.v[id] = std::max(acc * inv4h2, 1e-300);
      }
    }
  }
  H = Field(g);
  std::vector<double> res(rhs), z(N), p(N), Ap(N);
  double rnorm0 = 0.0;
  for (double v : res) rnorm0 += v * v;
  rnorm0 = std::sqrt(rnorm0);
  if (rnorm0 == 0.0) return 0;
  double rz = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    z[i] = res[i] / diagf.v[i];
    rz += res[i] * z[i];
  }
  p = z;
  const int max_iter = static_cast<int>(40 * N) + 200;
  Field pf(g);
  for (int it = 1; it <= max_iter; ++it) {
    pf.v = p;
    const Field Af = apply_weighted(w, pf);
    for (std::size_t i = 0; i < N; ++i) Ap[i] = -Af.v[i];
    double pAp = 0.0;
    for (std::size_t i = 0; i < N; ++i) pAp += p[i] * Ap[i];
    if (!(pAp > 0.0)) {
      throw numerical_failure("weighted Poisson CG stagnated at slice " +
                              std::to_string(slice));
    }
    const double alpha = rz / pAp;
    double rnorm = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      H.v[i] -= alpha * p[i];  // solving -A H = -rhs, i.e. A H = rhs
      res[i] -= alpha * Ap[i];
      rnorm += res[i] * res[i];
    }
    if (std::sqrt(rnorm) <= 1e-8 * rnorm0) {
      deflate(g, H.v);
      return it;
    }
    if (it % 64 == 0) deflate(g, res);
    double rz_new = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      z[i] = res[i] / diagf.v[i];
      rz_new += res[i] * z[i];
    }
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < N; ++i) p[i] = z[i] + beta * p[i];
  }
  throw numerical_failure("weighted Poisson CG stagnated at slice " +
                          std::to_string(slice));
}

}  // namespace

double control_energy(const ControlField& g) {
  const auto& times = g.times();
  if (times.size() < 2) return 0.0;
  double acc = 0.0;
  double prev = spatial_energy(g, 0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double cur = spatial_energy(g, i);
    acc += 0.5 * (prev + cur) * (times[i] - times[i - 1]);
    prev = cur;
  }
  return 0.5 * acc;
}

RateEvaluation recover_minimal_control(const Nonlinearity& phi,
                                       const Trajectory& traj,
                                       double weight_floor) {
  if (traj.fields.size() < 2) {
    throw domain_error("trajectory needs at least two snapshots");
  }
  const Grid& g = traj.grid;
  const double hd = std::pow(g.h, g.d);
  RateEvaluation ev;
  std::vector<double> times;
  std::vector<VectorField> controls;
  double energy_acc = 0.0, resid_acc = 0.0;

  for (std::size_t s = 0; s + 1 < traj.fields.size(); ++s) {
    const Field& a = traj.fields[s];
    const Field& b = traj.fields[s + 1];
    const double t0 = traj.times[traj.field_nodes[s]];
    const double dt = traj.times[traj.field_nodes[s + 1]] - t0;
    times.push_back(t0);

    // Residual of the uncontrolled scheme on this slice, mean-subtracted
    // (the mean is at mass-conservation tolerance).
    Field phib(g);
    for (std::size_t i = 0; i < b.v.size(); ++i) {
      phib.v[i] = phi.phi(std::max(b.v[i], 0.0));
    }
    const Field lap = laplacian_compact(phib);
    Field r(g);
    double mean = 0.0;
    for (std::size_t i = 0; i < r.v.size(); ++i) {
      r.v[i] = (b.v[i] - a.v[i]) / dt - lap.v[i];
      mean += r.v[i];
    }
    mean /= static_cast<double>(r.v.size());
    for (double& x : r.v) x -= mean;

    Field w(g), sq(g);
    double wmax = 0.0;
    for (std::size_t i = 0; i < w.v.size(); ++i) {
      w.v[i] = phi.phi(std::max(a.v[i], 0.0));
      sq.v[i] = phi.sqrt_phi(std::max(a.v[i], 0.0));
      wmax = std::max(wmax, w.v[i]);
    }
    VectorField gstar(g);
    if (wmax == 0.0) {
      controls.push_back(std::move(gstar));  // degenerate slice: zero control
      continue;
    }
    for (double& x : w.v) x += weight_floor * wmax;

    Field H(g);
    ev.iterations += solve_weighted_poisson(w, r, H, s);

    const VectorField grH = grad_centered(H);
    for (int c = 0; c < g.d; ++c) {
      for (std::size_t i = 0; i < gstar.comp[c].size(); ++i) {
        gstar.comp[c][i] = -sq.v[i] * grH.comp[c][i];
      }
    }
    const double gn = l2_norm(gstar);
    energy_acc += dt * gn * gn;

    // Discrete weak residual of the recovered slice.
    const Field back = apply_weighted(w, H);
    std::vector<double> absres(r.v.size());
    for (std::size_t i = 0; i < r.v.size(); ++i) {
      absres[i] = std::abs(r.v[i] - back.v[i]);
    }
    resid_acc += dt * hd * kahan_sum(absres);
    controls.push_back(std::move(gstar));
  }

  times.push_back(traj.times[traj.field_nodes.back()]);
  controls.push_back(controls.back());
  ev.control = ControlField::from_grid(std::move(times), std::move(controls));
  ev.value = 0.5 * energy_acc;
  ev.constraint_residual = resid_acc;
  const double scale =
      std::max(traj.mass_series.front() * traj.times.back(), 1e-30);
  ev.feasible = resid_acc <= 1e-6 * scale;
  return ev;
}

namespace {

struct ForwardResult {
  std::vector<Field> states;  // rho^0 .. rho^J
  bool ok = true;
};

// Fixed-dt IMEX forward pass used inside the optimizer: no substepping and
// no mass renormalization, so the discrete adjoint is exact.
ForwardResult forward_pass(const Nonlinearity& phi, const SolverConfig& cfg,
                           const FluxFunction& flux, const Field& rho0,
                           const std::vector<VectorField>& g, double dt) {
  ForwardResult fr;
  fr.states.reserve(g.size() + 1);
  fr.states.push_back(rho0);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const Field& cur = fr.states.back();
    const Field divF =
        transport_divergence(flux, cur, g[j], SolverConfig::Transport::Centered);
    Field rhs(rho0.grid);
    for (std::size_t i = 0; i < rhs.v.size(); ++i) {
      rhs.v[i] = cur.v[i] - dt * divF.v[i];
    }
    Field next(rho0.grid);
    if (!implicit_diffusion_step(phi, cfg, rhs, dt, next)) {
      fr.ok = false;
      return fr;
    }
    fr.states.push_back(std::move(next));
  }
  return fr;
}

struct Problem {
  const Nonlinearity* phi;
  const SolverConfig* cfg;
  const FluxFunction* flux;
  const Grid* grid;
  const Field* rho0;
  const Field* target;
  double dt;
  int J;
  int K;  // < 0: per-cell grid control
  const SpectralBasis* basis;
  std::vector<VectorField> modes;  // spectral case
  double mu;

  std::size_t step_dim() const {
    return K < 0 ? static_cast<std::size_t>(grid->d) * grid->size()
                 : static_cast<std::size_t>(K);
  }

  std::vector<VectorField> controls_from(const std::vector<double>& x) const {
    std::vector<VectorField> g;
    g.reserve(J);
    const std::size_t sd = step_dim();
    for (int j = 0; j < J; ++j) {
      VectorField vf(*grid);
      if (K < 0) {
        const double* p = x.data() + j * sd;
        for (int c = 0; c < grid->d; ++c) {
          std::copy(p + c * grid->size(), p + (c + 1) * grid->size(),
                    vf.comp[c].begin());
        }
      } else {
        for (int k = 0; k < K; ++k) {
          const double ck = x[j * sd + k];
          if (ck == 0.0) continue;
          for (int c = 0; c < grid->d; ++c) {
            for (std::size_t i = 0; i < vf.comp[c].size(); ++i) {
              vf.comp[c][i] += ck * modes[k].comp[c][i];
            }
          }
        }
      }
      g.push_back(std::move(vf));
    }
    return g;
  }

  double energy(const std::vector<double>& x) const {
    const double hd = std::pow(grid->h, grid->d);
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return 0.5 * dt * (K < 0 ? hd : 1.0) * acc;
  }

  // Objective and gradient via one forward and one adjoint sweep.
  double eval(const std::vector<double>& x, std::vector<double>& grad,
              double* gap_out) const {
    const std::vector<VectorField> g = controls_from(x);
    const ForwardResult fr = forward_pass(*phi, *cfg, *flux, *rho0, g, dt);
    if (!fr.ok) {
      throw numerical_failure("optimizer forward pass failed");
    }
    const double hd = std::pow(grid->h, grid->d);
    const Field& rT = fr.states.back();
    double gap2 = 0.0;
    for (std::size_t i = 0; i < rT.v.size(); ++i) {
      const double dv = rT.v[i] - target->v[i];
      gap2 += dv * dv;
    }
    gap2 *= hd;
    if (gap_out != nullptr) *gap_out = std::sqrt(gap2);
    const double obj = energy(x) + mu * gap2;

    grad.assign(x.size(), 0.0);
    const std::size_t sd = step_dim();
    Field lam(*grid);
    for (std::size_t i = 0; i < lam.v.size(); ++i) {
      lam.v[i] = 2.0 * mu * hd * (rT.v[i] - target->v[i]);
    }
    for (int j = J - 1; j >= 0; --j) {
      Field lt(*grid);
      if (!implicit_transpose_solve(*phi, *cfg, fr.states[j + 1], dt, lam,
                                    lt)) {
        throw numerical_failure("adjoint transpose solve failed");
      }
      const Field& rj = fr.states[j];
      const VectorField dlt = grad_centered(lt);
      // gradient w.r.t. this step's control
      if (K < 0) {
        for (int c = 0; c < grid->d; ++c) {
          for (std::size_t i = 0; i < rj.v.size(); ++i) {
            grad[j * sd + c * grid->size() + i] =
                dt * hd * x[j * sd + c * grid->size() + i] +
                dt * flux->value(std::max(rj.v[i], 0.0)) * dlt.comp[c][i];
          }
        }
      } else {
        for (int k = 0; k < K; ++k) {
          double acc = 0.0;
          for (int c = 0; c < grid->d; ++c) {
            for (std::size_t i = 0; i < rj.v.size(); ++i) {
              acc += flux->value(std::max(rj.v[i], 0.0)) * dlt.comp[c][i] *
                     modes[k].comp[c][i];
            }
          }
          grad[j * sd + k] = dt * x[j * sd + k] + dt * acc;
        }
      }
      // propagate the adjoint state through the explicit transport term
      Field lnew = lt;
      for (int c = 0; c < grid->d; ++c) {
        for (std::size_t i = 0; i < lnew.v.size(); ++i) {
          lnew.v[i] += dt * flux->derivative(std::max(rj.v[i], 0.0)) *
                       g[j].comp[c][i] * dlt.comp[c][i];
        }
      }
      lam = std::move(lnew);
    }
    return obj;
  }
};

}  // namespace

RateEvaluation minimize_action(const Nonlinearity& phi, const Grid& grid,
                               const Field& rho0, const Field& target,
                               double T, const SolverConfig& cfg,
                               const OptimizerConfig& opt, int K, double eta) {
  require_same_grid(grid, rho0.grid);
  require_same_grid(grid, target.grid);
  const double m0 = mass(rho0), mT = mass(target);
  if (std::abs(m0 - mT) > 1e-8 * std::max({m0, mT, 1.0})) {
    throw infeasible_error("target mass differs from initial mass");
  }
  if (!(T > 0.0) || !(cfg.dt > 0.0)) {
    throw domain_error("optimizer needs T > 0 and dt > 0");
  }

  Problem pr;
  pr.phi = &phi;
  pr.cfg = &cfg;
  pr.grid = &grid;
  pr.rho0 = &rho0;
  pr.target = &target;
  pr.J = std::max(1, static_cast<int>(std::llround(T / cfg.dt)));
  pr.dt = T / pr.J;
  pr.K = K;
  const FluxFunction flux(phi, eta, linf_norm(rho0));
  pr.flux = &flux;
  SpectralBasis basis(grid.d, grid.n);
  pr.basis = &basis;
  if (K >= 0) {
    if (K > basis.capacity()) {
      throw domain_error("mode count K exceeds basis capacity");
    }
    for (int k = 1; k <= K; ++k) {
      pr.modes.push_back(basis.mode_field(grid, k));
    }
  }

  const std::size_t dim = pr.step_dim() * pr.J;
  std::vector<double> x(dim, 0.0);

  RateEvaluation best;
  best.feasible = false;
  bool have_best = false;
  int total_iters = 0;

  for (double mu : opt.mu_sweep) {
    pr.mu = mu;
    std::vector<double> grad(dim), gnew(dim);
    double gap = 0.0;
    double f = pr.eval(x, grad, &gap);
    // L-BFGS two-loop recursion with Armijo backtracking.
    std::vector<std::vector<double>> S, Y;
    std::vector<double> rho_lb;
    bool line_failed = false;
    std::vector<double> history{f};
    for (int it = 0; it < opt.max_iterations; ++it) {
      ++total_iters;
      double gmax = 0.0;
      for (double v : grad) gmax = std::max(gmax, std::abs(v));
      if (gmax <= opt.grad_tol) break;
      // search direction
      std::vector<double> q = grad;
      std::vector<double> alpha_v(S.size());
      for (int i = static_cast<int>(S.size()) - 1; i >= 0; --i) {
        double sq = 0.0;
        for (std::size_t t = 0; t < dim; ++t) sq += S[i][t] * q[t];
        alpha_v[i] = rho_lb[i] * sq;
        for (std::size_t t = 0; t < dim; ++t) q[t] -= alpha_v[i] * Y[i][t];
      }
      double gamma = 1.0;
      if (!S.empty()) {
        double sy = 0.0, yy = 0.0;
        const auto& s = S.back();
        const auto& y = Y.back();
        for (std::size_t t = 0; t < dim; ++t) {
          sy += s[t] * y[t];
          yy += y[t] * y[t];
        }
        if (yy > 0.0) gamma = sy / yy;
      }
      for (double& v : q) v *= gamma;
      for (int i = 0; i < static_cast<int>(S.size()); ++i) {
        double yq = 0.0;
        for (std::size_t t = 0; t < dim; ++t) yq += Y[i][t] * q[t];
        const double beta = rho_lb[i] * yq;
        for (std::size_t t = 0; t < dim; ++t) {
          q[t] += (alpha_v[i] - beta) * S[i][t];
        }
      }
      for (double& v : q) v = -v;  // descent direction
      double gq = 0.0;
      for (std::size_t t = 0; t < dim; ++t) gq += grad[t] * q[t];
      if (gq >= 0.0) {  // fall back to steepest descent
        for (std::size_t t = 0; t < dim; ++t) q[t] = -grad[t];
        gq = 0.0;
        for (std::size_t t = 0; t < dim; ++t) gq -= grad[t] * grad[t];
      }
      double step = 1.0;
      std::vector<double> xn(dim);
      double fn = f, gapn = gap;
      bool accepted = false;
      while (step > 1e-16) {
        for (std::size_t t = 0; t < dim; ++t) xn[t] = x[t] + step * q[t];
        fn = pr.eval(xn, gnew, &gapn);
        if (fn <= f + opt.armijo_c * step * gq) {
          accepted = true;
          break;
        }
        step *= opt.backtrack;
      }
      if (!accepted) {
        line_failed = true;
        break;
      }
      std::vector<double> s(dim), y(dim);
      double sy = 0.0;
      for (std::size_t t = 0; t < dim; ++t) {
        s[t] = xn[t] - x[t];
        y[t] = gnew[t] - grad[t];
        sy += s[t] * y[t];
      }
      x.swap(xn);
      grad.swap(gnew);
      f = fn;
      gap = gapn;
      history.push_back(f);
      if (sy > 1e-30) {
        S.push_back(std::move(s));
        Y.push_back(std::move(y));
        rho_lb.push_back(1.0 / sy);
        if (static_cast<int>(S.size()) > opt.memory) {
          S.erase(S.begin());
          Y.erase(Y.begin());
          rho_lb.erase(rho_lb.begin());
        }
      }
    }
    RateEvaluation ev;
    ev.value = pr.energy(x);
    ev.constraint_residual = gap;
    ev.iterations = total_iters;
    ev.mu = mu;
    ev.feasible = gap <= opt.feasibility_gap && !line_failed;
    ev.objective_history = history;
    if (ev.feasible || !have_best) {
      std::vector<double> times;
      for (int j = 0; j <= pr.J; ++j) times.push_back(j * pr.dt);
      if (K >= 0) {
        std::vector<std::vector<double>> coeffs(pr.J + 1,
                                                std::vector<double>(K, 0.0));
        for (int j = 0; j < pr.J; ++j) {
          for (int k = 0; k < K; ++k) {
            coeffs[j][k] = x[j * pr.step_dim() + k];
          }
        }
        coeffs[pr.J] = coeffs[pr.J - 1];
        ev.control =
            ControlField::from_spectral(grid, basis, times, std::move(coeffs));
      } else {
        std::vector<VectorField> vals = pr.controls_from(x);
        vals.push_back(vals.back());
        ev.control = ControlField::from_grid(times, std::move(vals));
      }
      best = std::move(ev);
      have_best = true;
    }
  }
  return best;
}

std::vector<GammaRow> gamma_sweep(const Nonlinearity& phi, const Grid& grid,
                                  const Field& rho0, const ControlField& g_ref,
                                  const std::vector<int>& K_list, double T,
                                  const SolverConfig& cfg) {
  const SpectralBasis basis(grid.d, grid.n);
  const ControlField gs =
      g_ref.spectral() ? g_ref : project_PK(g_ref, basis, basis.capacity());
  SolverConfig ref_cfg = cfg;
  ref_cfg.eta3 = 0.0;
  const Trajectory ref = solve_skeleton(phi, grid, rho0, gs, T, ref_cfg);
  const double J_ref = control_energy(gs);

  std::vector<GammaRow> rows;
  for (int K : K_list) {
    const ControlField gK = project_PK(gs, basis, K);
    SolverConfig kcfg = cfg;
    kcfg.eta3 = 1.0 / K;
    const Trajectory trK = solve_skeleton(phi, grid, rho0, gK, T, kcfg);
    GammaRow row;
    row.K = K;
    row.eta = 1.0 / K;
    row.J_etaK = control_energy(gK);
    row.J_ref = J_ref;
    row.l1_dist = l1_distance(trK.final_field(), ref.final_field());
    rows.push_back(row);
  }
  return rows;
}

}  // namespace skeld
