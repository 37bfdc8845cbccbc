#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "skeld/nonlinearity.hpp"

using namespace skeld;

TEST_CASE("power law values and derivatives") {
  Nonlinearity p2 = Nonlinearity::power_law(2.0);
  CHECK(p2.phi(1.5) == doctest::Approx(2.25).epsilon(1e-14));
  CHECK(p2.dphi(1.5) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(p2.sqrt_phi(1.5) == doctest::Approx(1.5).epsilon(1e-14));
  CHECK(p2.dsqrt_phi(1.5) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(p2.phi(0.0) == 0.0);
  CHECK(p2.dphi(0.0) == 0.0);
  CHECK(p2.sqrt_phi(0.0) == 0.0);
  // m = 2: (sqrt phi)'(0) = 1; m = 3: limit 0; m = 1: singular.
  CHECK(p2.dsqrt_phi(0.0) == doctest::Approx(1.0));
  CHECK(Nonlinearity::power_law(3.0).dsqrt_phi(0.0) == 0.0);
  CHECK_THROWS_AS((void)Nonlinearity::power_law(1.0).dsqrt_phi(0.0),
                  singular_derivative_error);
  CHECK(Nonlinearity::power_law(1.0).dphi(0.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS((void)Nonlinearity::power_law(0.5),
                  invalid_nonlinearity_error);
  CHECK_THROWS_AS((void)p2.phi(-0.5), domain_error);
}

TEST_CASE("entropy density closed form") {
  Nonlinearity p2 = Nonlinearity::power_law(2.0);
  CHECK(p2.entropy_density(2.0) ==
        doctest::Approx(2.0 * (2.0 * std::log(2.0) - 2.0)).epsilon(1e-12));
  CHECK(p2.entropy_density(0.0) == 0.0);
  // minimum of m(xi log xi - xi) at xi = 1 is -m.
  CHECK(Nonlinearity::power_law(3.0).entropy_density(1.0) ==
        doctest::Approx(-3.0).epsilon(1e-12));
}

TEST_CASE("truncation, theta antiderivatives, defect coefficient") {
  Nonlinearity p2 = Nonlinearity::power_law(2.0);
  // Phi_1(3) = Phi(1) + Phi'(1) * (3 - 1) = 1 + 2*2 = 5.
  CHECK(p2.truncated_phi(1, 3.0) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(p2.truncated_phi(1, 0.5) == doctest::Approx(0.25).epsilon(1e-14));
  // antiderivative of sqrt(2 xi): 2 sqrt(2)/3 xi^{3/2}.
  CHECK(p2.theta_sqrt_dphi(4.0) ==
        doctest::Approx(2.0 * std::sqrt(2.0) / 3.0 * 8.0).epsilon(1e-10));
  // antiderivative of (3 xi^2)^2 / xi^3 = 9 xi for m = 3: 9 xi^2 / 2.
  CHECK(Nonlinearity::power_law(3.0).theta_phi(2.0) ==
        doctest::Approx(18.0).epsilon(1e-10));
  CHECK_THROWS_AS((void)Nonlinearity::power_law(1.0).theta_phi(2.0),
                  domain_error);
  // 4 xi^m / (m xi^{m-1}) = 4 xi / m.
  CHECK(p2.defect_coeff(3.0) == doctest::Approx(6.0).epsilon(1e-13));
  CHECK(p2.defect_coeff(0.0) == 0.0);
}

TEST_CASE("tabulated nonlinearity with monotone interpolation") {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i <= 200; ++i) {
    double x = 4.0 * i / 200;
    pts.push_back({x, x * x});
  }
  Nonlinearity tab = Nonlinearity::tabulated(pts);
  CHECK_FALSE(tab.is_power());
  CHECK(tab.phi(1.57) == doctest::Approx(1.57 * 1.57).epsilon(1e-6));
  CHECK(tab.phi(0.0) == 0.0);
  CHECK(tab.entropy_density(2.0) ==
        doctest::Approx(2.0 * (2.0 * std::log(2.0) - 2.0)).epsilon(5e-3));
  // interpolant stays monotone across every breakpoint interval
  double prev = -1.0;
  for (int i = 0; i <= 4000; ++i) {
    double v = tab.phi(4.0 * i / 4000);
    CHECK(v >= prev - 1e-14);
    prev = v;
  }

  // decreasing tables are rejected; flat segments are allowed
  CHECK_THROWS_AS((void)Nonlinearity::tabulated({{0, 0}, {1, 2}, {2, 1}}),
                  invalid_nonlinearity_error);
  CHECK_THROWS_AS((void)Nonlinearity::tabulated({{0, 0.5}, {1, 1}, {2, 2}}),
                  invalid_nonlinearity_error);
  Nonlinearity flat =
      Nonlinearity::tabulated({{0, 0}, {1, 1}, {2, 1}, {3, 2}});
  CHECK(flat.phi(1.5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("json round trip") {
  Nonlinearity p2 = Nonlinearity::from_json({{"kind", "power"}, {"m", 2.0}});
  CHECK(p2.is_power());
  CHECK(p2.exponent() == 2.0);
  Nonlinearity back = Nonlinearity::from_json(p2.to_json());
  CHECK(back.phi(1.3) == p2.phi(1.3));
}

TEST_CASE("regularized square-root flux") {
  Nonlinearity p2 = Nonlinearity::power_law(2.0);
  RegularizationParams rp = RegularizationParams::from_eta(p2, 0.1);
  CHECK(rp.mollifier_width == doctest::Approx(0.01));
  CHECK(rp.cap_level == doctest::Approx(100.0));
  RegularizedSqrtPhi reg(p2, rp);
  // exact zero at the origin
  CHECK(reg.value(0.0) == 0.0);
  // on the linear region sqrt(phi)(xi) = xi, mollification shifts by eps/2
  CHECK(reg.value(0.5) == doctest::Approx(0.5 - 0.005).epsilon(1e-12));
  CHECK(reg.derivative(0.5) == doctest::Approx(1.0).epsilon(1e-10));
  // smooth, nondecreasing, sandwiched between 0 and 2 sqrt(phi) + cap
  double prev = -1.0;
  for (int i = 0; i <= 2000; ++i) {
    double x = 12.0 * i / 2000;
    double v = reg.value(x);
    CHECK(v >= prev - 1e-13);
    CHECK(v >= -1e-15);
    CHECK(v <= 2.0 * p2.sqrt_phi(x) + 1e-12);
    CHECK(v <= rp.cap_level + 1e-12);
    prev = v;
  }

  // m = 1: bare derivative is singular at 0, the regularization is not
  Nonlinearity p1 = Nonlinearity::power_law(1.0);
  RegularizedSqrtPhi reg1(p1, RegularizationParams::from_eta(p1, 0.1));
  CHECK(reg1.value(0.0) == 0.0);
  CHECK(std::isfinite(reg1.derivative(0.0)));
  CHECK(reg1.derivative(0.0) >= 0.0);
}

TEST_CASE("assumption certification") {
  const std::vector<double> dg{0.5, 0.05, 0.02, 0.01, 0.005};
  for (double m : {1.0, 2.0, 3.0}) {
    AssumptionReport rep =
        check_assumptions(Nonlinearity::power_law(m), 10.0, dg, 2000);
    CAPTURE(m);
    CHECK(rep.all_pass());
    for (const AssumptionCheck& c : rep.checks) {
      CHECK(std::isfinite(c.fitted_c));
    }
  }

  // smooth tabulated x^2 passes as well
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i <= 400; ++i) {
    double x = 12.0 * i / 400;
    pts.push_back({x, x * x});
  }
  CHECK(check_assumptions(Nonlinearity::tabulated(pts), 10.0, dg, 2000)
            .all_pass());

  // a near-jump table fails continuity with a witness pair
  Nonlinearity bad = Nonlinearity::tabulated(
      {{0, 0}, {0.9999, 0.0001}, {1.0, 1.0}, {2, 1.1}, {3, 1.2}, {4, 1.3}});
  AssumptionReport repb = check_assumptions(bad, 3.5, dg, 2000);
  CHECK_FALSE(repb.all_pass());
  bool has_witness = false;
  for (const AssumptionCheck& c : repb.checks) {
    if (!c.pass && c.witness.has_value()) has_witness = true;
  }
  CHECK(has_witness);

  // input validation
  CHECK_THROWS(check_assumptions(Nonlinearity::power_law(2.0), 0.5, dg, 2000));
  CHECK_THROWS(check_assumptions(Nonlinearity::power_law(2.0), 10.0, {}, 2000));
  CHECK_THROWS(check_assumptions(Nonlinearity::power_law(2.0), 10.0, dg, 10));

  // stable key order in the serialized report
  AssumptionReport rep =
      check_assumptions(Nonlinearity::power_law(2.0), 10.0, dg, 1000);
  std::string s1 = rep.to_json().dump();
  std::string s2 = rep.to_json().dump();
  CHECK(s1 == s2);
}
