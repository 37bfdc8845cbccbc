#pragma once

#include <optional>
#include <vector>

#include "skeld/solver.hpp"

namespace skeld {

struct RateEvaluation {
  double value = 0.0;  // J = half the control energy
  std::optional<ControlField> control;
  // L1 space-time norm of d_t rho - Lap Phi(rho) + div(Phi^{1/2}(rho) g)
  // in the discrete weak sense (for minimize_action: the endpoint L2 gap).
  double constraint_residual = 0.0;
  int iterations = 0;
  bool feasible = true;
  double mu = 0.0;  // penalty weight the reported value was obtained with
  // Objective values of accepted optimizer iterates (minimize_action only).
  std::vector<double> objective_history;
};

struct OptimizerConfig {
  std::vector<double> mu_sweep{1e2, 1e3, 1e4};
  int max_iterations = 200;
  double grad_tol = 1e-8;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  int memory = 10;              // limited-memory quasi-Newton depth
  double feasibility_gap = 1e-3;  // endpoint L2 tolerance for "feasible"
};

// Half the squared L2(space x time) norm of the control; trapezoid in
// time over the control's nodes, cell sums (grid) or coefficient sums
// (spectral) in space.
double control_energy(const ControlField& g);

// Minimal-norm control reproducing a trajectory: per time slice, solve the
// weighted periodic Poisson problem div(w grad H) = d_t rho - Lap Phi(rho)
// with w = Phi(rho) + weight_floor * max Phi(rho) and return
// g* = -Phi^{1/2}(rho) grad H together with J = half its energy.
RateEvaluation recover_minimal_control(const Nonlinearity& phi,
                                       const Trajectory& traj,
                                       double weight_floor = 1e-10);

// Quadratic-penalty minimization of half the control energy subject to
// rho_g(T) = target, over per-step grid controls (K < 0) or spectral
// coefficients for modes k <= K with flux Phi^{1/2, eta}. Discrete-adjoint
// gradients of the IMEX scheme, limited-memory quasi-Newton with Armijo
// backtracking; mu swept per opt.mu_sweep, the largest feasible one wins.
RateEvaluation minimize_action(const Nonlinearity& phi, const Grid& grid,
                               const Field& rho0, const Field& target,
                               double T, const SolverConfig& cfg,
                               const OptimizerConfig& opt, int K = -1,
                               double eta = 0.0);

struct GammaRow {
  int K = 0;
  double eta = 0.0;     // eta_K = 1/K
  double J_etaK = 0.0;  // half energy of the projected control
  double J_ref = 0.0;   // half energy of the full control
  double l1_dist = 0.0;  // endpoint L1 distance to the reference solution
};

// Recovery-sequence sweep: for each K, run the skeleton equation with the
// K-mode projection of g_ref and flux Phi^{1/2, 1/K}, against the
// reference run with the full control and the bare flux.
std::vector<GammaRow> gamma_sweep(const Nonlinearity& phi, const Grid& grid,
                                  const Field& rho0, const ControlField& g_ref,
                                  const std::vector<int>& K_list, double T,
                                  const SolverConfig& cfg);

}  // namespace skeld
