#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "skeld/common.hpp"

namespace skeld {

// Periodic cell-centered grid on the unit torus, d in {1, 2}, n cells per
// dimension (power of two so that h = 1/n is exactly representable).
struct Grid {
  int d = 1;
  int n = 8;
  double h = 0.125;

  static Grid make(int d, int n);

  std::size_t size() const {
    return d == 1 ? static_cast<std::size_t>(n)
                  : static_cast<std::size_t>(n) * n;
  }
  // Cell-center coordinate along one axis.
  double center(int i) const { return (i + 0.5) * h; }
  // Row-major flattening: index = iy * n + ix (iy = 0 when d = 1).
  std::size_t idx(int ix, int iy = 0) const {
    return static_cast<std::size_t>(iy) * n + ix;
  }
  int wrap(int i) const { return ((i % n) + n) % n; }

  bool operator==(const Grid&) const = default;
};

struct Field {
  Grid grid;
  std::vector<double> v;

  Field() = default;
  explicit Field(const Grid& g, double fill = 0.0) : grid(g), v(g.size(), fill) {}

  double& operator()(int ix, int iy = 0) { return v[grid.idx(ix, iy)]; }
  double operator()(int ix, int iy = 0) const { return v[grid.idx(ix, iy)]; }
  double at_wrapped(int ix, int iy = 0) const {
    return v[grid.idx(grid.wrap(ix), grid.wrap(iy))];
  }
  std::size_t size() const { return v.size(); }
};

struct VectorField {
  Grid grid;
  std::array<std::vector<double>, 2> comp;  // comp[1] unused when d = 1

  VectorField() = default;
  explicit VectorField(const Grid& g, double fill = 0.0) : grid(g) {
    for (int c = 0; c < g.d; ++c) comp[c].assign(g.size(), fill);
  }

  double& at(int c, int ix, int iy = 0) { return comp[c][grid.idx(ix, iy)]; }
  double at(int c, int ix, int iy = 0) const {
    return comp[c][grid.idx(ix, iy)];
  }
};

void require_same_grid(const Grid& a, const Grid& b);

// Centered second-order operators with periodic wrap. The divergence is
// assembled in flux form (shared face values), so its cell sum telescopes.
VectorField grad_centered(const Field& f);
Field div_centered(const VectorField& v);
// First-order upwind divergence of the flux scalar * velocity: the face
// velocity is the average of the adjacent cells and the scalar is taken
// from the upwind side.
Field div_upwind(const Field& scalar, const VectorField& velocity);
// Wide-stencil Laplacian, exactly div_centered(grad_centered(f)).
Field laplacian(const Field& f);
// Compact second-order Laplacian (3/5-point stencil), the operator used by
// the implicit diffusion step.
Field laplacian_compact(const Field& f);

// Cell-sum quadrature scaled by h^d (compensated summation).
double mass(const Field& f);
double l1_norm(const Field& f);
double l2_norm(const Field& f);
double linf_norm(const Field& f);
double l1_distance(const Field& a, const Field& b);
double l2_norm(const VectorField& v);
// 1/2 * integral of |v|^2 over the torus.
double energy_density(const VectorField& v);

}  // namespace skeld
