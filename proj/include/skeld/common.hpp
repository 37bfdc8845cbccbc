#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace skeld {

// Error hierarchy. Callers that can recover catch the specific type;
// the CLI maps these onto exit codes.
struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct singular_derivative_error : domain_error {
  using domain_error::domain_error;
};
struct invalid_nonlinearity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct grid_mismatch_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct resolution_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct numerical_failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct infeasible_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Compensated (Kahan) summation. Mass bookkeeping must stay well below
// 1e-12 relative per step, which a naive sum over 256^2 cells cannot
// guarantee.
double kahan_sum(std::span<const double> v);

// Low-discrepancy sequences for the assumption certifier.
double van_der_corput(std::uint64_t index, std::uint64_t base);

// Nodes/weights of the 32-point Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussRule& gauss_legendre_32();

// Integrate f over [a, b] with a single 32-point Gauss-Legendre panel.
template <typename F>
double gauss_integrate(F&& f, double a, double b) {
  const GaussRule& rule = gauss_legendre_32();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  }
  return acc * half;
}

// Adaptive Simpson quadrature with absolute tolerance.
double adaptive_simpson(const std::function<double(double)>& f, double a,
                        double b, double abs_tol, int max_depth = 40);

// Least-squares slope of y against x (used for log-log exponent fits).
double fit_slope(std::span<const double> x, std::span<const double> y);

}  // namespace skeld
