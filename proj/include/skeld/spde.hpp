#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "skeld/solver.hpp"

namespace skeld {

struct NoiseConfig {
  int K = 0;                  // number of noise modes
  double epsilon = 0.0;       // noise intensity, >= 0
  double eta = 0.0;           // flux regularization for Phi^{1/2, eta}
  std::uint64_t seed = 0;
  int replica_index = 0;
};

struct SpdePath {
  Trajectory traj;
  // Per macro step: sum over modes of the Brownian increments (cheap
  // reproducibility fingerprint) and the L1 norm of the correction term.
  std::vector<double> noise_checksum;
  std::vector<double> correction_norm;
  bool rejected = false;
  std::uint64_t seed = 0;
  int replica_index = 0;
};

// Ito Euler-Maruyama step for the regularized conservative SPDE: the
// deterministic IMEX skeleton step, the stochastic flux divergence with
// increment dB^k, and the explicit correction term at the start-of-step
// state. epsilon = 0 with no control reproduces solve_skeleton bit for bit.
SpdePath simulate_spde(const Nonlinearity& phi, const Grid& grid,
                       const Field& rho0, const NoiseConfig& noise,
                       const ControlField* g, double T,
                       const SolverConfig& cfg);

// Sum over modes k <= K of div((Phi^{1/2,eta})'(rho) e_k div(Phi^{1/2,eta}
// (rho) e_k)), centered operators, without the epsilon/2 prefactor.
Field ito_correction(const Nonlinearity& phi, const Field& rho, double eta,
                     int K);

struct EventEstimate {
  double epsilon = 0.0;
  double p_hat = 0.0;
  double minus_eps_log_p = 0.0;  // valid only when log_valid
  bool log_valid = false;
  double stderr_wilson = 0.0;
  double zero_hit_bound = 0.0;  // one-sided 95% bound when hits == 0
  long hits = 0;
  long used = 0;      // accepted replicas entering the frequency
  long rejected = 0;  // paths discarded for nonnegativity failure
};

struct EnsembleRow {
  double epsilon = 0.0;
  int replica = 0;
  bool event_hit = false;
  double l1_deviation = 0.0;  // ||rho(T) - deterministic rho(T)||_{L^1}
  bool rejected = false;
};

struct EventTable {
  std::vector<EventEstimate> estimates;  // one per epsilon, input order
  std::vector<EnsembleRow> rows;         // sorted by (epsilon order, replica)
};

// Monte Carlo estimate of P[event] across noise intensities. With
// common_random_numbers the same (replica, step, mode) increments are
// reused for every epsilon; otherwise each epsilon gets a distinct
// sub-seed. Replicas run on `workers` threads with deterministic,
// replica-ordered aggregation.
EventTable estimate_event_probability(
    const Nonlinearity& phi, const Grid& grid, const Field& rho0,
    const NoiseConfig& noise, const ControlField* g, double T,
    const SolverConfig& cfg,
    const std::function<bool(const Trajectory&)>& event,
    const std::vector<double>& epsilons, int replicas,
    bool common_random_numbers, int workers = 1);

}  // namespace skeld
