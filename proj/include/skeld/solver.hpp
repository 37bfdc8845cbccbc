#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "skeld/basis.hpp"
#include "skeld/grid.hpp"
#include "skeld/nonlinearity.hpp"

namespace skeld {

struct SolverConfig {
  double dt = 1e-3;
  double cfl_factor = 0.5;
  double newton_tol = 1e-10;  // L1 residual
  int newton_max_iter = 50;
  double eta1 = 0.0;  // diffusion regularization (0 = bare Phi)
  double eta2 = 0.0;  // viscosity
  double eta3 = 0.0;  // flux regularization (0 = bare Phi^{1/2})
  enum class Transport { Upwind, Centered };
  Transport transport = Transport::Upwind;
  // Substepping keeps the scheme inside the CFL bound; optimizer runs
  // disable it so the discrete dynamics (and its adjoint) use a fixed dt.
  bool allow_substep = true;
  int snapshot_stride = 1;
};

struct Trajectory {
  Grid grid;
  std::vector<double> times;  // macro nodes t_j
  // Snapshots at nodes listed in field_nodes (stride plus first/last).
  std::vector<Field> fields;
  std::vector<std::size_t> field_nodes;
  // Diagnostics aligned with times.
  std::vector<double> mass_series;
  std::vector<double> entropy_series;
  std::vector<double> dissipation_cum;
  std::vector<double> control_energy_cum;
  std::vector<double> dt_history;  // effective substep size per macro step

  const Field& final_field() const { return fields.back(); }
  const Field* field_at_node(std::size_t node) const;
};

// Flux nonlinearity Phi^{1/2, eta3} (or the bare square root when eta3 = 0)
// with fast tabulated evaluation and a CFL-safe slope estimate.
class FluxFunction {
 public:
  FluxFunction(const Nonlinearity& phi, double eta3, double range_hint);
  double value(double xi) const;
  // Signed derivative (the flux is nondecreasing); secant fallback where
  // the bare derivative is singular.
  double derivative(double xi) const;
  double slope(double xi) const;
  bool regularized() const { return eta3_ > 0.0; }

 private:
  Nonlinearity phi_;
  double eta3_;
  double split_ = 0.0, top_ = 0.0;
  std::vector<double> lo_vals_, hi_vals_;  // dense near 0, uniform beyond
  std::vector<double> lo_der_, hi_der_;
  std::shared_ptr<const RegularizedSqrtPhi> exact_;
  double table_value(double xi, const std::vector<double>& lo,
                     const std::vector<double>& hi) const;
};

// Divergence of the transport flux value(rho) * g in conservative form.
Field transport_divergence(const FluxFunction& flux, const Field& rho,
                           const VectorField& g, SolverConfig::Transport kind);

// Max wave speed for the CFL bound dt <= cfl_factor * h / speed.
double cfl_max_speed(const FluxFunction& flux, const Field& rho,
                     const VectorField& g);

// Solves rho_new - dt * Lap(Phi_eff(rho_new) + eta2 rho_new) = rhs with the
// compact second-order Laplacian; returns false on Newton failure.
bool implicit_diffusion_step(const Nonlinearity& phi, const SolverConfig& cfg,
                             const Field& rhs, double dt, Field& out);

// Solves the transposed Newton-Jacobian system (I - dt diag(w) L) out = v
// at the converged new state; the adjoint of the implicit diffusion step.
bool implicit_transpose_solve(const Nonlinearity& phi,
                              const SolverConfig& cfg, const Field& rho_new,
                              double dt, const Field& v, Field& out);

// Multiplicative mass renormalization (keeps nonnegativity; removes the
// Newton-tolerance mass drift).
void renormalize_mass(Field& rho, double target_mass);

Trajectory solve_skeleton(const Nonlinearity& phi, const Grid& grid,
                          const Field& rho0, const ControlField& g, double T,
                          const SolverConfig& cfg);

// Discrete entropy functional sum h^d Psi_Phi(rho_i) and the dissipation
// rate 2 h^d sum |grad_c Phi^{1/2}(rho)|^2.
double entropy_functional(const Nonlinearity& phi, const Field& rho);
double dissipation_rate(const Nonlinearity& phi, const Field& rho);

struct EntropyReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
};
EntropyReport entropy_report(const Trajectory& traj);

// Cell-wise 4 Phi(rho)/Phi'(rho) |grad Phi^{1/2}(rho)|^2, centered gradient.
Field defect_field(const Nonlinearity& phi, const Field& rho);

struct ContractionSeries {
  std::vector<double> distances;
  bool violation = false;  // any value above the initial distance (>1e-3 rel)
};
ContractionSeries contraction_distance(const Trajectory& a,
                                       const Trajectory& b);

}  // namespace skeld
