#include "skeld/grid.hpp"

#include <cmath>
#include <string>

namespace skeld {

Grid Grid::make(int d, int n) {
  if (d != 1 && d != 2) {
    throw resolution_error("grid dimension must be 1 or 2");
  }
  if (n < 8 || (n & (n - 1)) != 0) {
    throw resolution_error("grid resolution must be a power of two >= 8, got " +
                           std::to_string(n));
  }
  Grid g;
  g.d = d;
  g.n = n;
  g.h = 1.0 / n;
  return g;
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw grid_mismatch_error("operands live on different grids");
}

VectorField grad_centered(const Field& f) {
  const Grid& g = f.grid;
  VectorField out(g);
  const double inv2h = 1.0 / (2.0 * g.h);
  const int n = g.n;
  if (g.d == 1) {
    for (int i = 0; i < n; ++i) {
      out.at(0, i) = (f.at_wrapped(i + 1) - f.at_wrapped(i - 1)) * inv2h;
    }
    return out;
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      out.at(0, i, j) =
          (f.at_wrapped(i + 1, j) - f.at_wrapped(i - 1, j)) * inv2h;
      out.at(1, i, j) =
          (f.at_wrapped(i, j + 1) - f.at_wrapped(i, j - 1)) * inv2h;
    }
  }
  return out;
}

namespace {

// Divergence from precomputed face fluxes: out(i) += (F(i+1/2) - F(i-1/2))/h
// along axis `c`. Shared face values make the cell sum telescope.
void accumulate_face_divergence(const std::vector<double>& face, int axis,
                                Field& out) {
  const Grid& g = out.grid;
  const int n = g.n;
  const double invh = 1.0 / g.h;
  if (g.d == 1) {
    for (int i = 0; i < n; ++i) {
      out(i) += (face[(i + 1) % n] - face[i]) * invh;
    }
    return;
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const std::size_t hi = (axis == 0) ? g.idx((i + 1) % n, j)
                                         : g.idx(i, (j + 1) % n);
      out(i, j) += (face[hi] - face[g.idx(i, j)]) * invh;
    }
  }
}

}  // namespace

Field div_centered(const VectorField& v) {
  const Grid& g = v.grid;
  Field out(g);
  const int n = g.n;
  // Face value at i+1/2 along axis c: (v_c(i) + v_c(i+1)) / 2, so the
  // centered difference (v(i+1) - v(i-1)) / 2h appears as a flux balance.
  std::vector<double> face(g.size());
  for (int c = 0; c < g.d; ++c) {
    if (g.d == 1) {
      for (int i = 0; i < n; ++i) {
        face[(i + 1) % n] = 0.5 * (v.at(0, i) + v.at(0, (i + 1) % n));
      }
    } else {
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          const int ip = (c == 0) ? (i + 1) % n : i;
          const int jp = (c == 0) ? j : (j + 1) % n;
          // face slot keyed by the upper cell: face[cell] = its lower face
          face[g.idx(ip, jp)] = 0.5 * (v.at(c, i, j) + v.at(c, ip, jp));
        }
      }
    }
    accumulate_face_divergence(face, c, out);
  }
  return out;
}

Field div_upwind(const Field& scalar, const VectorField& velocity) {
  require_same_grid(scalar.grid, velocity.grid);
  const Grid& g = scalar.grid;
  Field out(g);
  const int n = g.n;
  std::vector<double> face(g.size());
  for (int c = 0; c < g.d; ++c) {
    for (int j = 0; j < (g.d == 1 ? 1 : n); ++j) {
      for (int i = 0; i < n; ++i) {
        const int ip = (c == 0) ? (i + 1) % n : i;
        const int jp = (c == 0) ? j : (j + 1) % n;
        const double vface = 0.5 * (velocity.at(c, i, j) + velocity.at(c, ip, jp));
        const double s = (vface >= 0.0) ? scalar(i, j) : scalar(ip, jp);
        face[g.idx(i, j)] = vface * s;
      }
    }
    if (g.d == 1) {
      // keyed by lower cell: shift so face[i] is the i-1/2 face of cell i
      Field tmp(g);
      for (int i = 0; i < n; ++i) {
        tmp(i) = (face[i] - face[(i - 1 + n) % n]) / g.h;
      }
      for (int i = 0; i < n; ++i) out(i) += tmp(i);
    } else {
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          const int im = (c == 0) ? (i - 1 + n) % n : i;
          const int jm = (c == 0) ? j : (j - 1 + n) % n;
          out(i, j) += (face[g.idx(i, j)] - face[g.idx(im, jm)]) / g.h;
        }
      }
    }
  }
  return out;
}

Field laplacian(const Field& f) { return div_centered(grad_centered(f)); }

double mass(const Field& f) {
  const double hd = std::pow(f.grid.h, f.grid.d);
  return hd * kahan_sum(f.v);
}

double l1_norm(const Field& f) {
  std::vector<double> a(f.v.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::abs(f.v[i]);
  return std::pow(f.grid.h, f.grid.d) * kahan_sum(a);
}

double l2_norm(const Field& f) {
  std::vector<double> a(f.v.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = f.v[i] * f.v[i];
  return std::sqrt(std::pow(f.grid.h, f.grid.d) * kahan_sum(a));
}

double linf_norm(const Field& f) {
  double m = 0.0;
  for (double x : f.v) m = std::max(m, std::abs(x));
  return m;
}

double l1_distance(const Field& a, const Field& b) {
  require_same_grid(a.grid, b.grid);
  std::vector<double> d(a.v.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::abs(a.v[i] - b.v[i]);
  return std::pow(a.grid.h, a.grid.d) * kahan_sum(d);
}

double l2_norm(const VectorField& v) {
  std::vector<double> a(v.grid.size(), 0.0);
  for (int c = 0; c < v.grid.d; ++c) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] += v.comp[c][i] * v.comp[c][i];
    }
  }
  return std::sqrt(std::pow(v.grid.h, v.grid.d) * kahan_sum(a));
}

double energy_density(const VectorField& v) {
  const double n2 = l2_norm(v);
  return 0.5 * n2 * n2;
}

// Compact second-order Laplacian (3/5-point stencil).
Field laplacian_compact(const Field& f) {
  const Grid& g = f.grid;
  Field out(g);
  const double invh2 = 1.0 / (g.h * g.h);
  const int n = g.n;
  if (g.d == 1) {
    for (int i = 0; i < n; ++i) {
      out(i) = (f.at_wrapped(i - 1) - 2.0 * f(i) + f.at_wrapped(i + 1)) * invh2;
    }
    return out;
  }
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      out(i, j) = (f.at_wrapped(i - 1, j) + f.at_wrapped(i + 1, j) +
                   f.at_wrapped(i, j - 1) + f.at_wrapped(i, j + 1) -
                   4.0 * f(i, j)) *
                  invh2;
    }
  }
  return out;
}


}  // namespace skeld
