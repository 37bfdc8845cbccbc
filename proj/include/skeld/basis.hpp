#pragma once

#include <array>
#include <vector>

#include "skeld/grid.hpp"

namespace skeld {

// One vector-valued trigonometric mode: a product of per-axis factors
// (1, sqrt(2) cos(2 pi f x), or sqrt(2) sin(2 pi f x)) times a coordinate
// direction. Modes are L2-orthonormal on the torus.
struct Mode {
  enum Trig : int { Const = 0, Cos = 1, Sin = 2 };
  std::array<int, 2> freq{0, 0};
  std::array<int, 2> trig{Const, Const};
  int dir = 0;

  int total_freq_sq() const {
    return freq[0] * freq[0] + freq[1] * freq[1];
  }
};

class SpectralBasis {
 public:
  // All modes resolvable on resolution n (max frequency n/4), in the
  // canonical deterministic order. d = 1: e_1 = 1, e_{2j} = sqrt(2) sin,
  // e_{2j+1} = sqrt(2) cos. d = 2: increasing total frequency, then
  // lexicographic frequency/trig (cos before sin), x-direction before y.
  SpectralBasis(int d, int n);

  int dimension() const { return d_; }
  int capacity() const { return static_cast<int>(modes_.size()); }
  // k is 1-based.
  const Mode& mode(int k) const;
  // Scalar factor of mode k at an arbitrary point (periodic extension).
  double scalar_at(int k, double x, double y = 0.0) const;
  VectorField mode_field(const Grid& grid, int k) const;
  // Analytic divergence of mode k at a point.
  double divergence_at(int k, double x, double y = 0.0) const;
  double divergence_linf(int k) const;

 private:
  int d_;
  std::vector<Mode> modes_;
};

// Time-dependent control field; either per-node grid samples or spectral
// coefficients in a SpectralBasis.
class ControlField {
 public:
  static ControlField zero(const Grid& grid, std::vector<double> times);
  static ControlField from_grid(std::vector<double> times,
                                std::vector<VectorField> values);
  static ControlField from_spectral(const Grid& grid, const SpectralBasis& basis,
                                    std::vector<double> times,
                                    std::vector<std::vector<double>> coeffs);

  bool spectral() const { return spectral_; }
  const Grid& grid() const { return grid_; }
  const std::vector<double>& times() const { return times_; }
  const SpectralBasis& basis() const;
  const std::vector<std::vector<double>>& coeffs() const { return coeffs_; }
  int mode_count() const;

  // Linear interpolation in time; constant extrapolation outside the nodes.
  VectorField at(double t) const;
  std::vector<double> coeffs_at(double t) const;
  // Pointwise evaluation (spectral representation only).
  void eval_point(double t, double x, double y, double* out) const;

  // L^p_t L^q_x norm over the time span of the control (trapezoid in time).
  double lp_lq_norm(double p, double q) const;

 private:
  ControlField() = default;
  bool spectral_ = false;
  Grid grid_;
  std::vector<double> times_;
  std::vector<VectorField> values_;            // grid representation
  std::vector<SpectralBasis> basis_;           // 0 or 1 element
  std::vector<std::vector<double>> coeffs_;    // [time][mode]
};

// Fourier projection onto the first K modes; result is spectral.
ControlField project_PK(const ControlField& g, const SpectralBasis& basis,
                        int K);

// Criticality rescaling g~(x,t) = (tau / (eta lambda^{m/2-1})) g(eta x, tau t)
// with tau = eta^2 lambda^{m-1}, lambda = eta^{d/r}. Returns the rescaled
// control sampled on the grid plus the measured norm ratio
// ||g~||_{L^p_t L^q_x} / ||g||_{L^p_t L^q_x}.
struct RescaleResult {
  ControlField control;
  double measured_ratio = 0.0;
};
RescaleResult rescale_control(const ControlField& g, double eta, double m,
                              double r, double p, double q);

// Exponent E with ||g~|| = eta^E ||g|| under the rescaling above.
double criticality_exponent(double m, double d, double p, double q, double r);

}  // namespace skeld
