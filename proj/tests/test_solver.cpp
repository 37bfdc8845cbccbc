#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "skeld/solver.hpp"

using namespace skeld;

namespace {
constexpr double kTau = 2.0 * std::numbers::pi;

Field cosine_data(const Grid& g, double base, double amp, int mode = 1) {
  Field f(g);
  for (int i = 0; i < g.n; ++i) {
    f(i) = base + amp * std::cos(kTau * mode * g.center(i));
  }
  return f;
}
}  // namespace

TEST_CASE("linear diffusion matches the heat kernel decay") {
  Grid g = Grid::make(1, 128);
  Nonlinearity m1 = Nonlinearity::power_law(1.0);
  Field rho0 = cosine_data(g, 1.0, 0.5);
  SolverConfig cfg;
  cfg.dt = 1e-5;
  const double T = 0.02;
  Trajectory tr = solve_skeleton(m1, g, rho0, ControlField::zero(g, {0.0, T}),
                                 T, cfg);
  double amp = 0.0;
  for (int i = 0; i < g.n; ++i) {
    amp += tr.final_field()(i) * std::cos(kTau * g.center(i));
  }
  amp *= 2.0 * g.h;
  CHECK(amp == doctest::Approx(0.5 * std::exp(-kTau * kTau * T))
                   .epsilon(5e-3));
}

TEST_CASE("mass is conserved to machine precision every step") {
  Grid g = Grid::make(1, 128);
  SpectralBasis bs(1, 128);
  ControlField gc = ControlField::from_spectral(
      g, bs, {0.0, 0.05}, {{0.5, 0.3, 0.2, 0.1}, {0.5, 0.3, 0.2, 0.1}});
  for (double m : {1.0, 2.0, 3.0}) {
    Nonlinearity phi = Nonlinearity::power_law(m);
    Field rho0 = cosine_data(g, 1.0, 0.5);
    SolverConfig cfg;
    cfg.dt = 1e-4;
    Trajectory tr = solve_skeleton(phi, g, rho0, gc, 0.05, cfg);
    const double m0 = tr.mass_series.front();
    for (double mv : tr.mass_series) {
      CHECK(std::fabs(mv - m0) <= 1e-12 * m0);
    }
    for (const Field& f : tr.fields) {
      for (double v : f.v) CHECK(v >= -1e-12);
    }
  }
}

TEST_CASE("entropy is nonincreasing without control") {
  Grid g = Grid::make(1, 256);
  Nonlinearity m2 = Nonlinearity::power_law(2.0);
  Field bump(g);
  for (int i = 0; i < g.n; ++i) {
    double x = g.center(i);
    bump(i) = 0.2 + std::exp(-50.0 * (x - 0.5) * (x - 0.5));
  }
  SolverConfig cfg;
  cfg.dt = 1e-4;
  Trajectory tr = solve_skeleton(m2, g, bump,
                                 ControlField::zero(g, {0.0, 0.1}), 0.1, cfg);
  for (std::size_t i = 1; i < tr.entropy_series.size(); ++i) {
    CHECK(tr.entropy_series[i] <= tr.entropy_series[i - 1] + 1e-12);
  }
  EntropyReport er = entropy_report(tr);
  CHECK(er.margin >= 0.0);  // g = 0: lhs is pure decay, rhs = 0 energy term
}

TEST_CASE("entropy-dissipation inequality holds with a control") {
  Grid g = Grid::make(1, 128);
  SpectralBasis bs(1, 128);
  ControlField gc = ControlField::from_spectral(
      g, bs, {0.0, 0.05}, {{0.5, 0.3, 0.2, 0.1}, {0.5, 0.3, 0.2, 0.1}});
  for (double m : {1.0, 2.0, 3.0}) {
    Nonlinearity phi = Nonlinearity::power_law(m);
    Field rho0 = cosine_data(g, 1.0, 0.5);
    SolverConfig cfg;
    cfg.dt = g.h * g.h / 4.0;
    Trajectory tr = solve_skeleton(phi, g, rho0, gc, 0.05, cfg);
    EntropyReport er = entropy_report(tr);
    CAPTURE(m);
    // discrete margin may be slightly negative; bounded by 5% of the
    // right-hand side plus an absolute floor
    CHECK(er.margin >= -0.05 * std::fabs(er.rhs) - 1e-6);
  }
}

TEST_CASE("L1 contraction for shared controls") {
  Grid g = Grid::make(1, 128);
  SpectralBasis bs(1, 128);
  ControlField gc = ControlField::from_spectral(
      g, bs, {0.0, 0.05}, {{0.5, 0.3, 0.2, 0.1}, {0.5, 0.3, 0.2, 0.1}});
  Nonlinearity m2 = Nonlinearity::power_law(2.0);
  Field a = cosine_data(g, 1.0, 0.3);
  Field b(g);
  for (int i = 0; i < g.n; ++i) {
    b(i) = 1.2 + 0.2 * std::cos(2.0 * kTau * g.center(i));
  }
  SolverConfig cfg;
  cfg.dt = 1e-4;
  Trajectory ta = solve_skeleton(m2, g, a, gc, 0.05, cfg);
  Trajectory tb = solve_skeleton(m2, g, b, gc, 0.05, cfg);
  ContractionSeries cs = contraction_distance(ta, tb);
  CHECK_FALSE(cs.violation);
  CHECK(cs.distances.front() > 0.0);
  for (double dv : cs.distances) {
    CHECK(dv <= cs.distances.front() * (1.0 + 1e-3));
  }
}

TEST_CASE("flux function agrees with the bare square root away from 0") {
  Nonlinearity m2 = Nonlinearity::power_law(2.0);
  FluxFunction bare(m2, 0.0, 4.0);
  FluxFunction reg(m2, 0.1, 4.0);
  CHECK_FALSE(bare.regularized());
  CHECK(reg.regularized());
  for (double xi : {0.05, 0.3, 1.0, 2.5, 3.9}) {
    CHECK(bare.value(xi) == doctest::Approx(xi).epsilon(1e-8));
    CHECK(bare.derivative(xi) == doctest::Approx(1.0).epsilon(1e-6));
    // regularized flux: shifted by eps/2 = eta^2/2 on the linear region
    if (xi > 0.02) {
      CHECK(reg.value(xi) == doctest::Approx(xi - 0.005).epsilon(1e-6));
    }
    CHECK(reg.slope(xi) >= reg.derivative(xi) - 1e-6);
  }
  CHECK(bare.value(0.0) == 0.0);
  CHECK(reg.value(0.0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("defect field identity for linear diffusion") {
  // m = 1: 4 Phi/Phi' = 4 rho, so the defect density is 4 rho |grad
  // sqrt(rho)|^2 = |grad rho|^2 / rho pointwise in the centered stencil.
  Grid g = Grid::make(1, 128);
  Nonlinearity m1 = Nonlinearity::power_law(1.0);
  Field rho = cosine_data(g, 1.5, 0.5);
  Field d = defect_field(m1, rho);
  Field sq(g);
  for (int i = 0; i < g.n; ++i) sq(i) = std::sqrt(rho(i));
  VectorField gs = grad_centered(sq);
  for (int i = 0; i < g.n; ++i) {
    CHECK(d(i) == doctest::Approx(4.0 * rho(i) * gs.comp[0][i] *
                                  gs.comp[0][i])
                      .epsilon(1e-10));
  }
}

TEST_CASE("substepping respects the CFL bound; fixed-dt mode does not") {
  Grid g = Grid::make(1, 64);
  SpectralBasis bs(1, 64);
  // strong control so that dt = 1e-2 violates the CFL bound
  ControlField gc = ControlField::from_spectral(
      g, bs, {0.0, 0.02}, {{8.0, 4.0}, {8.0, 4.0}});
  Nonlinearity m2 = Nonlinearity::power_law(2.0);
  Field rho0 = cosine_data(g, 1.0, 0.4);
  SolverConfig cfg;
  cfg.dt = 1e-2;
  Trajectory tr = solve_skeleton(m2, g, rho0, gc, 0.02, cfg);
  bool halved = false;
  for (double dtv : tr.dt_history) {
    if (dtv < cfg.dt * 0.75) halved = true;
  }
  CHECK(halved);
  // with substepping disabled the macro step size never changes
  cfg.allow_substep = false;
  cfg.dt = 1e-4;
  Trajectory fixed =
      solve_skeleton(m2, g, rho0, gc, 0.02, cfg);
  for (double dtv : fixed.dt_history) CHECK(dtv == cfg.dt);
}

TEST_CASE("invalid inputs are rejected") {
  Grid g = Grid::make(1, 64);
  Nonlinearity m2 = Nonlinearity::power_law(2.0);
  SolverConfig cfg;
  Field neg(g, 1.0);
  neg(3) = -0.5;
  CHECK_THROWS(solve_skeleton(m2, g, neg, ControlField::zero(g, {0.0, 0.1}),
                              0.1, cfg));
  Field ok(g, 1.0);
  CHECK_THROWS(solve_skeleton(m2, g, ok, ControlField::zero(g, {0.0, 0.1}),
                              -0.1, cfg));
}

TEST_CASE("implicit transpose solve is the adjoint of the Newton Jacobian") {
  Grid g = Grid::make(1, 32);
  Nonlinearity m2 = Nonlinearity::power_law(2.0);
  SolverConfig cfg;
  Field rho(g);
  for (int i = 0; i < g.n; ++i) rho(i) = 1.0 + 0.3 * std::sin(kTau * g.center(i));
  const double dt = 1e-3;
  // forward apply M x = x - dt L (w x), w = Phi'(rho) (+ eta2)
  Field w(g);
  for (int i = 0; i < g.n; ++i) w(i) = m2.dphi(rho(i));
  auto apply = [&](const Field& x) {
    Field wx(g);
    for (int i = 0; i < g.n; ++i) wx(i) = w(i) * x(i);
    Field lap = laplacian_compact(wx);
    Field out(g);
    for (int i = 0; i < g.n; ++i) out(i) = x(i) - dt * lap(i);
    return out;
  };
  Field u(g), v(g);
  for (int i = 0; i < g.n; ++i) {
    u(i) = std::cos(kTau * 3 * g.center(i));
    v(i) = std::sin(kTau * 2 * g.center(i)) + 0.2;
  }
  // <M u, v> must equal <u, M^T v> with M^T v obtained from the solver:
  // solve (M^T)^{-1} then apply forward to invert. Instead verify
  // M^T (transpose_solve(v)) == v via the inner-product identity
  // <M u, z> == <u, v> where z = transpose_solve(v).
  Field z(g);
  REQUIRE(implicit_transpose_solve(m2, cfg, rho, dt, v, z));
  double lhs = 0.0, rhs = 0.0;
  Field Mu = apply(u);
  for (int i = 0; i < g.n; ++i) {
    lhs += Mu(i) * z(i);
    rhs += u(i) * v(i);
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
}
