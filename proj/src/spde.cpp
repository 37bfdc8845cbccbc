#include "skeld/spde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <thread>
#include <utility>

#include "skeld/rng.hpp"

namespace skeld {

namespace {

// div(flux.value(rho) * w) with the centered conservative stencil; shared
// with the stochastic flux and the correction term so that every noise
// contribution telescopes to zero mass exactly.
Field scaled_divergence(const FluxFunction& flux, const Field& rho,
                        const VectorField& w) {
  const Grid& g = rho.grid;
  VectorField sv(g);
  for (int c = 0; c < g.d; ++c) {
    for (std::size_t i = 0; i < rho.v.size(); ++i) {
      sv.comp[c][i] = flux.value(std::max(rho.v[i], 0.0)) * w.comp[c][i];
    }
  }
  return div_centered(sv);
}

Field correction_with(const FluxFunction& flux,
                      const std::vector<VectorField>& modes,
                      const Field& rho) {
  const Grid& g = rho.grid;
  std::vector<double> ds(rho.v.size());
  for (std::size_t i = 0; i < rho.v.size(); ++i) {
    ds[i] = flux.derivative(std::max(rho.v[i], 0.0));
  }
  Field corr(g);
  for (const VectorField& ek : modes) {
    const Field inner = scaled_divergence(flux, rho, ek);
    VectorField outer(g);
    for (int c = 0; c < g.d; ++c) {
      for (std::size_t i = 0; i < rho.v.size(); ++i) {
        outer.comp[c][i] = ds[i] * inner.v[i] * ek.comp[c][i];
      }
    }
    const Field dv = div_centered(outer);
    for (std::size_t i = 0; i < corr.v.size(); ++i) corr.v[i] += dv.v[i];
  }
  return corr;
}

std::vector<VectorField> make_modes(const SpectralBasis& basis,
                                    const Grid& grid, int K) {
  if (K < 0 || K > basis.capacity()) {
    throw domain_error("mode count K out of range for this resolution");
  }
  std::vector<VectorField> modes;
  modes.reserve(K);
  for (int k = 1; k <= K; ++k) modes.push_back(basis.mode_field(grid, k));
  return modes;
}

}  // namespace

Field ito_correction(const Nonlinearity& phi, const Field& rho, double eta,
                     int K) {
  for (double x : rho.v) {
    if (!(x >= 0.0)) throw domain_error("ito_correction needs rho >= 0");
  }
  const SpectralBasis basis(rho.grid.d, rho.grid.n);
  const FluxFunction flux(phi, eta, linf_norm(rho));
  return correction_with(flux, make_modes(basis, rho.grid, K), rho);
}

SpdePath simulate_spde(const Nonlinearity& phi, const Grid& grid,
                       const Field& rho0, const NoiseConfig& noise,
                       const ControlField* g, double T,
                       const SolverConfig& cfg) {
  require_same_grid(grid, rho0.grid);
  if (!(T > 0.0) || !(cfg.dt > 0.0)) {
    throw domain_error("solver needs T > 0 and dt > 0");
  }
  if (!(noise.epsilon >= 0.0)) throw domain_error("epsilon must be >= 0");
  for (double x : rho0.v) {
    if (!(x >= 0.0)) throw domain_error("initial data must be nonnegative");
  }
  const double eK3 =
      noise.epsilon * static_cast<double>(noise.K) * noise.K * noise.K;
  static std::atomic<bool> warned{false};
  if (eK3 > 1.0 && !warned.exchange(true)) {
    std::cerr << "[skeld] warning: epsilon*K^3 = " << eK3
              << " > 1, outside the small-noise regime\n";
  }

  const int J = std::max(1, static_cast<int>(std::llround(T / cfg.dt)));
  const double dt = T / J;
  const bool noisy = noise.epsilon > 0.0 && noise.K > 0;

  FluxFunction flux(phi, cfg.eta3, linf_norm(rho0));
  // The stochastic flux and correction use Phi^{1/2, eta} from the noise
  // config; the deterministic transport keeps the solver's own setting so
  // that epsilon = 0 degenerates to solve_skeleton exactly.
  std::vector<VectorField> modes;
  std::unique_ptr<FluxFunction> nflux;
  if (noisy) {
    const SpectralBasis basis(grid.d, grid.n);
    modes = make_modes(basis, grid, noise.K);
    nflux = std::make_unique<FluxFunction>(phi, noise.eta, linf_norm(rho0));
  }

  SpdePath path;
  path.seed = noise.seed;
  path.replica_index = noise.replica_index;
  Trajectory& traj = path.traj;
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

  const ControlField gzero = ControlField::zero(grid, {0.0, T});
  const double sqeps = std::sqrt(noise.epsilon);

  for (int j = 0; j < J; ++j) {
    const VectorField gj = (g != nullptr ? g->at(j * dt) : gzero.at(j * dt));
    dissipation += dt * dissipation_rate(phi, rho);
    energy += dt * energy_density(gj);

    // Start-of-step noise data: the macro increments, a combined mode
    // field weighted by them, and the explicit correction term.
    double checksum = 0.0;
    VectorField wsum(grid);
    Field corr(grid);
    if (noisy) {
      for (int k = 1; k <= noise.K; ++k) {
        const double db = normal_increment(
            noise.seed, static_cast<std::uint64_t>(noise.replica_index),
            static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(k), dt);
        checksum += db;
        const VectorField& ek = modes[static_cast<std::size_t>(k - 1)];
        for (int c = 0; c < grid.d; ++c) {
          for (std::size_t i = 0; i < wsum.comp[c].size(); ++i) {
            wsum.comp[c][i] += db * ek.comp[c][i];
          }
        }
      }
      corr = correction_with(*nflux, modes, rho);
      path.correction_norm.push_back(l1_norm(corr));
    } else {
      path.correction_norm.push_back(0.0);
    }
    path.noise_checksum.push_back(checksum);

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
        if (noisy) {
          // The macro-step stochastic increment and the start-of-step
          // correction are distributed evenly over substeps; the noise
          // coefficient is refreshed at the substep state.
          const Field ndiv = scaled_divergence(*nflux, cur, wsum);
          for (std::size_t i = 0; i < rhs.v.size(); ++i) {
            rhs.v[i] -= sqeps / nsub * ndiv.v[i] +
                        dts * 0.5 * noise.epsilon * corr.v[i];
          }
        }
        Field next(grid);
        ok = implicit_diffusion_step(phi, cfg, rhs, dts, next);
        if (ok) {
          double mn = 0.0;
          for (double x : next.v) mn = std::min(mn, x);
          if (mn < -1e-12) {
            ok = false;
            if (!cfg.allow_substep || halvings >= 10) {
              path.rejected = true;
              return path;
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
        if (!cfg.allow_substep || ++halvings > 10) {
          path.rejected = true;
          return path;
        }
      }
    }
  }
  return path;
}

namespace {

void wilson_fill(EventEstimate& e) {
  const double n = static_cast<double>(e.used);
  if (n <= 0.0) return;
  const double p = static_cast<double>(e.hits) / n;
  e.p_hat = p;
  const double z = 1.0;  // one-standard-error Wilson half width
  const double denom = 1.0 + z * z / n;
  e.stderr_wilson =
      z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  if (e.hits > 0) {
    e.log_valid = true;
    e.minus_eps_log_p = -e.epsilon * std::log(p);
  } else {
    e.log_valid = false;
    e.zero_hit_bound = 3.0 / n;  // one-sided 95% rule-of-three bound
  }
}

}  // namespace

EventTable estimate_event_probability(
    const Nonlinearity& phi, const Grid& grid, const Field& rho0,
    const NoiseConfig& noise, const ControlField* g, double T,
    const SolverConfig& cfg,
    const std::function<bool(const Trajectory&)>& event,
    const std::vector<double>& epsilons, int replicas,
    bool common_random_numbers, int workers) {
  if (replicas < 1) throw domain_error("need at least one replica");
  if (epsilons.empty()) throw domain_error("need at least one epsilon");

  // Deterministic reference for the L1 deviation column.
  NoiseConfig det = noise;
  det.epsilon = 0.0;
  det.K = 0;
  const Field ref =
      simulate_spde(phi, grid, rho0, det, g, T, cfg).traj.final_field();

  EventTable table;
  table.rows.resize(epsilons.size() * static_cast<std::size_t>(replicas));

  const auto run_range = [&](int lo, int hi) {
    for (int r = lo; r < hi; ++r) {
      for (std::size_t ei = 0; ei < epsilons.size(); ++ei) {
        NoiseConfig nc = noise;
        nc.epsilon = epsilons[ei];
        nc.replica_index = r;
        if (!common_random_numbers) {
          nc.seed = mix64(noise.seed + 0x5bd1e995u * (ei + 1));
        }
        const SpdePath p = simulate_spde(phi, grid, rho0, nc, g, T, cfg);
        EnsembleRow& row = table.rows[ei * replicas + r];
        row.epsilon = nc.epsilon;
        row.replica = r;
        row.rejected = p.rejected;
        if (!p.rejected) {
          row.event_hit = event(p.traj);
          row.l1_deviation = l1_distance(p.traj.final_field(), ref);
        }
      }
    }
  };

  const int nw = std::max(1, std::min(workers, replicas));
  if (nw == 1) {
    run_range(0, replicas);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (replicas + nw - 1) / nw;
    for (int w = 0; w < nw; ++w) {
      const int lo = w * chunk, hi = std::min(replicas, lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& t : pool) t.join();
  }

  for (std::size_t ei = 0; ei < epsilons.size(); ++ei) {
    EventEstimate e;
    e.epsilon = epsilons[ei];
    for (int r = 0; r < replicas; ++r) {
      const EnsembleRow& row = table.rows[ei * replicas + r];
      if (row.rejected) {
        ++e.rejected;
      } else {
        ++e.used;
        if (row.event_hit) ++e.hits;
      }
    }
    wilson_fill(e);
    table.estimates.push_back(e);
  }
  return table;
}

}  // namespace skeld
