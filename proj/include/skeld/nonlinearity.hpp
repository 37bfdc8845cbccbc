#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "skeld/common.hpp"

namespace skeld {

enum class PhiFn { Phi, DPhi, SqrtPhi, DSqrtPhi };

// The monotone nonlinearity and every scalar function derived from it.
// Either an exact power law xi^m (m >= 1) or a strictly monotone table
// with monotone cubic (PCHIP) interpolation. All evaluations are pure
// and deterministic.
class Nonlinearity {
 public:
  static Nonlinearity power_law(double m);
  static Nonlinearity tabulated(std::vector<std::pair<double, double>> points);

  static Nonlinearity from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;

  bool is_power() const { return power_.has_value(); }
  double exponent() const;
  // Upper end of the sample range (tabulated case); +inf for power laws.
  double domain_max() const;

  double phi(double xi) const;
  double dphi(double xi) const;
  double sqrt_phi(double xi) const;
  // Throws singular_derivative_error at xi = 0 when the one-sided limit
  // is infinite (power law with m < 2).
  double dsqrt_phi(double xi) const;
  double eval(PhiFn which, double xi) const;

  // Psi_Phi(xi) = int_0^xi log Phi; closed form m(xi log xi - xi) for
  // power laws, adaptive quadrature (abs tol 1e-10) otherwise.
  double entropy_density(double xi) const;

  // Phi_n(xi) = Phi(xi ^ n) + Phi'(n)(xi - n)_+.
  double truncated_phi(int n, double xi) const;

  // Theta_{sqrt Phi'}: antiderivative of sqrt(Phi').
  double theta_sqrt_dphi(double xi) const;
  // Theta_{Phi_n}: antiderivative of (Phi')^2 / Phi. Throws domain_error
  // for the power law m = 1 (the bounded-derivative branch applies there).
  double theta_phi(double xi) const;

  // 4 Phi(xi) / Phi'(xi), continuously extended by 0 at xi = 0.
  double defect_coeff(double xi) const;

 private:
  Nonlinearity() = default;
  void check_domain(double xi) const;
  double table_phi(double xi) const;
  double table_dphi(double xi) const;

  std::optional<double> power_;  // exponent m when power-law
  // Tabulated case: strictly increasing breakpoints with PCHIP slopes.
  std::vector<double> tx_, ty_, td_;
};

struct RegularizationParams {
  double eta = 0.1;             // regularization level in (0, 1)
  double mollifier_width = 0.0; // eps_eta; defaults to eta^2
  double cap_level = 0.0;       // Phi(1/eta)

  static RegularizationParams from_eta(const Nonlinearity& phi, double eta);
};

// Phi^{1/2,eta}: the capped square root Phi^{1/2} ^ Phi(1/eta) mollified
// with a cubic B-spline kernel supported on (-eps_eta, 0), so that
// Phi^{1/2,eta}(0) = 0 exactly and the function is smooth, nondecreasing,
// and globally bounded by the cap.
class RegularizedSqrtPhi {
 public:
  RegularizedSqrtPhi(const Nonlinearity& phi, RegularizationParams params);

  double value(double xi) const;
  double derivative(double xi) const;
  const RegularizationParams& params() const { return params_; }

 private:
  double capped_sqrt(double xi) const;
  const Nonlinearity phi_;
  RegularizationParams params_;
  double cap_cross_ = 0.0;  // where Phi^{1/2} reaches the cap (inf if never)
};

double regularized_sqrt_phi(const Nonlinearity& phi,
                            const RegularizationParams& params, double xi,
                            bool derivative);

struct AssumptionCheck {
  std::string id;          // e.g. "skel_continuity_3"
  bool pass = false;
  double fitted_c = 0.0;   // least-squares constant against the stated law
  double worst_ratio = 0.0;  // max empirical sup / fitted bound
  std::optional<std::pair<double, double>> witness;  // failing pair (xi, xi')
  std::string note;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  std::vector<double> delta_grid;
  int sample_count = 0;
  bool all_pass() const;
  const AssumptionCheck* find(const std::string& id) const;
  nlohmann::json to_json() const;  // stable key order
};

// Samples the structural assumptions on quasi-random pairs over [0, M],
// fits the stated delta- or M-dependence, and records pass/fail with a
// witness pair on failure. Ratio tolerance 1.05.
AssumptionReport check_assumptions(const Nonlinearity& phi, double M,
                                   std::vector<double> delta_grid,
                                   int sample_count);

}  // namespace skeld
