#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "skeld/basis.hpp"
#include "skeld/grid.hpp"

using namespace skeld;

namespace {
constexpr double kTau = 2.0 * std::numbers::pi;
}

TEST_CASE("grid construction invariants") {
  Grid g = Grid::make(1, 64);
  CHECK(g.h == 1.0 / 64);  // power-of-two spacing is exact
  CHECK(g.size() == 64);
  CHECK(Grid::make(2, 32).size() == 32u * 32u);
  CHECK(g.wrap(-1) == 63);
  CHECK(g.wrap(64) == 0);
  CHECK(g.center(0) == doctest::Approx(0.5 / 64));
  CHECK_THROWS_AS((void)Grid::make(1, 48), resolution_error);
  CHECK_THROWS_AS((void)Grid::make(1, 4), resolution_error);
  CHECK_THROWS_AS((void)Grid::make(3, 64), resolution_error);
}

TEST_CASE("centered operators are second order on trig data") {
  for (int n : {64, 128}) {
    Grid g = Grid::make(1, n);
    Field f(g);
    for (int i = 0; i < n; ++i) f(i) = std::sin(kTau * g.center(i));
    VectorField gr = grad_centered(f);
    double err = 0.0;
    for (int i = 0; i < n; ++i) {
      err = std::max(err, std::fabs(gr.comp[0][i] -
                                    kTau * std::cos(kTau * g.center(i))));
    }
    // centered difference error ~ (2 pi h)^2 / 6 * |f'''|
    CHECK(err < 50.0 / (n * n));
  }
}

TEST_CASE("divergence telescopes exactly on lattice-valued data") {
  Grid g = Grid::make(2, 16);
  // integer-valued fields: the flux-form cell sum cancels to exactly 0
  VectorField v(g);
  for (int iy = 0; iy < g.n; ++iy) {
    for (int ix = 0; ix < g.n; ++ix) {
      v.at(0, ix, iy) = static_cast<double>((ix * 7 + iy * 3) % 11 - 5);
      v.at(1, ix, iy) = static_cast<double>((ix * 5 + iy * 13) % 9 - 4);
    }
  }
  Field d = div_centered(v);
  double s = 0.0;
  for (double x : d.v) s += x;
  CHECK(s == 0.0);

  Field scalar(g);
  for (std::size_t i = 0; i < scalar.size(); ++i) {
    scalar.v[i] = static_cast<double>((i * 31) % 17);
  }
  Field du = div_upwind(scalar, v);
  s = 0.0;
  for (double x : du.v) s += x;
  CHECK(s == 0.0);
}

TEST_CASE("laplacian consistency") {
  Grid g = Grid::make(1, 128);
  Field f(g);
  for (int i = 0; i < g.n; ++i) f(i) = std::cos(kTau * g.center(i));
  Field wide = laplacian(f);
  Field compact = laplacian_compact(f);
  // both converge to -4 pi^2 cos; the wide one equals div(grad) exactly
  VectorField gr = grad_centered(f);
  Field dg = div_centered(gr);
  for (std::size_t i = 0; i < f.size(); ++i) {
    CHECK(wide.v[i] == dg.v[i]);
    CHECK(compact.v[i] ==
          doctest::Approx(-kTau * kTau * f.v[i]).epsilon(5e-3));
  }
  // both annihilate constants exactly
  Field c(g, 3.5);
  for (double x : laplacian(c).v) CHECK(x == 0.0);
  for (double x : laplacian_compact(c).v) CHECK(x == 0.0);
}

TEST_CASE("norms and mass") {
  Grid g = Grid::make(1, 256);
  Field f(g, 2.0);
  CHECK(mass(f) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(l1_norm(f) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(l2_norm(f) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(linf_norm(f) == 2.0);
  Field h(g, -1.0);
  CHECK(l1_distance(f, h) == doctest::Approx(3.0).epsilon(1e-15));
  VectorField v(g, 3.0);
  CHECK(l2_norm(v) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(energy_density(v) == doctest::Approx(4.5).epsilon(1e-14));
  Field other(Grid::make(1, 64));
  CHECK_THROWS_AS((void)l1_distance(f, other), grid_mismatch_error);
}

TEST_CASE("spectral basis orthonormality and divergence bound") {
  for (int d : {1, 2}) {
    Grid g = Grid::make(d, d == 1 ? 128 : 64);
    SpectralBasis bs(d, g.n);
    CHECK(bs.capacity() > 16);
    const double hd = std::pow(g.h, d);
    int K = 16;
    for (int a = 1; a <= K; ++a) {
      for (int b = a; b <= K; ++b) {
        VectorField ea = bs.mode_field(g, a);
        VectorField eb = bs.mode_field(g, b);
        double s = 0.0;
        for (int c = 0; c < d; ++c) {
          for (std::size_t i = 0; i < ea.comp[c].size(); ++i) {
            s += ea.comp[c][i] * eb.comp[c][i];
          }
        }
        s *= hd;
        CHECK(std::fabs(s - (a == b ? 1.0 : 0.0)) < 1e-12);
      }
    }
    // ||div e_k||_inf <= c k with a dimension-dependent constant
    for (int k = 1; k <= std::min(32, bs.capacity()); ++k) {
      CHECK(bs.divergence_linf(k) <= 10.0 * k);
    }
  }
  // d = 1 canonical ordering: e_1 = const, e_2 = sqrt(2) sin(2 pi x)
  Grid g = Grid::make(1, 64);
  SpectralBasis bs(1, 64);
  CHECK(bs.scalar_at(1, 0.37) == doctest::Approx(1.0));
  CHECK(bs.scalar_at(2, 0.25) == doctest::Approx(std::sqrt(2.0)));
  CHECK(bs.scalar_at(3, 0.0) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("control fields: interpolation and norms") {
  Grid g = Grid::make(1, 64);
  SpectralBasis bs(1, 64);
  // coefficient 1 on mode 2 at t=0, coefficient 3 at t=1
  ControlField cf = ControlField::from_spectral(
      g, bs, {0.0, 1.0}, {{0.0, 1.0}, {0.0, 3.0}});
  CHECK(cf.coeffs_at(0.5)[1] == doctest::Approx(2.0));
  CHECK(cf.coeffs_at(-1.0)[1] == doctest::Approx(1.0));  // constant extrap
  CHECK(cf.coeffs_at(9.0)[1] == doctest::Approx(3.0));
  // L2_t L2_x norm: trapezoid over the control's two time nodes of the
  // squared spatial norms 1 and 9 gives sqrt(5).
  CHECK(cf.lp_lq_norm(2.0, 2.0) ==
        doctest::Approx(std::sqrt(5.0)).epsilon(1e-10));
  VectorField at_half = cf.at(0.5);
  CHECK(at_half.comp[0][16] ==
        doctest::Approx(2.0 * bs.scalar_at(2, g.center(16))).epsilon(1e-12));
}

TEST_CASE("projection onto the first K modes") {
  Grid g = Grid::make(1, 128);
  SpectralBasis bs(1, 128);
  std::vector<double> ts{0.0, 0.5, 1.0};
  std::vector<std::vector<double>> c(3, std::vector<double>(9, 0.0));
  for (int j = 0; j < 3; ++j) {
    c[j][0] = 0.3;
    c[j][2] = 0.8;
    c[j][6] = 0.5;
  }
  ControlField full = ControlField::from_spectral(g, bs, ts, c);
  ControlField pk = project_PK(full, bs, 3);
  CHECK(pk.mode_count() == 3);
  CHECK(pk.coeffs()[0][0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(pk.coeffs()[0][2] == doctest::Approx(0.8).epsilon(1e-12));
  // idempotent
  ControlField pk2 = project_PK(pk, bs, 3);
  CHECK(pk.coeffs() == pk2.coeffs());
  // projecting a grid control also works (quadrature Fourier coefficients)
  std::vector<VectorField> vals;
  for (int j = 0; j < 3; ++j) vals.push_back(full.at(ts[j]));
  ControlField gridrep = ControlField::from_grid(ts, vals);
  ControlField pg = project_PK(gridrep, bs, 3);
  CHECK(pg.coeffs()[0][2] == doctest::Approx(0.8).epsilon(1e-10));
}

TEST_CASE("criticality rescaling matches the predicted exponent") {
  Grid g = Grid::make(1, 128);
  SpectralBasis bs(1, 128);
  std::vector<double> ts;
  for (int j = 0; j <= 20; ++j) ts.push_back(j * 0.05);
  std::vector<std::vector<double>> cf(ts.size());
  for (std::size_t j = 0; j < ts.size(); ++j) {
    cf[j] = {0.3, 0.8 * std::cos(ts[j]), 0.0, -0.4, 0.2 * std::sin(2 * ts[j])};
  }
  ControlField ctrl = ControlField::from_spectral(g, bs, ts, cf);

  // E(m, d, 2, 2, 1) = 0 for every m: the scan's critical point
  CHECK(criticality_exponent(1, 1, 2, 2, 1) == doctest::Approx(0.0));
  CHECK(criticality_exponent(2, 2, 2, 2, 1) == doctest::Approx(0.0));
  CHECK(criticality_exponent(2, 1, 2, 2, 2) < 0.0);  // r = 2 supercritical

  struct Combo {
    double m, d, p, q, r;
  };
  for (const Combo& cb : {Combo{1, 1, 2, 2, 1}, Combo{2, 1, 2, 2, 1},
                          Combo{2, 1, 3, 2, 1.5}, Combo{1.5, 1, 2, 4, 1}}) {
    double E = criticality_exponent(cb.m, cb.d, cb.p, cb.q, cb.r);
    double r1 = rescale_control(ctrl, 0.5, cb.m, cb.r, cb.p, cb.q)
                    .measured_ratio;
    double r2 = rescale_control(ctrl, 0.25, cb.m, cb.r, cb.p, cb.q)
                    .measured_ratio;
    double fitted = std::log(r1 / r2) / std::log(2.0);
    CAPTURE(cb.m);
    CAPTURE(cb.r);
    CHECK(fitted == doctest::Approx(E).epsilon(0.05));
  }
  // eta = 1 is the identity rescaling
  RescaleResult id = rescale_control(ctrl, 1.0, 1.0, 1.0, 2.0, 2.0);
  CHECK(id.measured_ratio == doctest::Approx(1.0).epsilon(1e-10));
}
