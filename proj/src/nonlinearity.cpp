#include "skeld/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace skeld {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Nonlinearity Nonlinearity::power_law(double m) {
  if (!(m >= 1.0) || !std::isfinite(m)) {
    throw invalid_nonlinearity_error("power-law exponent must satisfy m >= 1");
  }
  Nonlinearity f;
  f.power_ = m;
  return f;
}

Nonlinearity Nonlinearity::tabulated(
    std::vector<std::pair<double, double>> points) {
  if (points.size() < 3) {
    throw invalid_nonlinearity_error("tabulated nonlinearity needs >= 3 points");
  }
  std::sort(points.begin(), points.end());
  Nonlinearity f;
  const std::size_t n = points.size();
  f.tx_.resize(n);
  f.ty_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    f.tx_[i] = points[i].first;
    f.ty_[i] = points[i].second;
    if (i > 0 && !(f.tx_[i] > f.tx_[i - 1])) {
      throw invalid_nonlinearity_error("duplicate abscissa in table");
    }
    if (i > 0 && f.ty_[i] < f.ty_[i - 1]) {
      throw invalid_nonlinearity_error("tabulated Phi must be nondecreasing");
    }
  }
  if (f.tx_[0] != 0.0 || f.ty_[0] != 0.0) {
    throw invalid_nonlinearity_error("tabulated Phi must start at (0, 0)");
  }
  if (f.ty_.back() <= 0.0) {
    throw invalid_nonlinearity_error("tabulated Phi must increase somewhere");
  }

  // Fritsch-Carlson monotone cubic slopes.
  f.td_.resize(n);
  std::vector<double> h(n - 1), sec(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = f.tx_[i + 1] - f.tx_[i];
    sec[i] = (f.ty_[i + 1] - f.ty_[i]) / h[i];
  }
  // Endpoint slopes: three-point formula with the usual monotone clipping.
  const auto endpoint = [](double h0, double h1, double s0, double s1) {
    double d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if (d * s0 <= 0.0) return 0.0;
    if (s0 * s1 <= 0.0 && std::abs(d) > 3.0 * std::abs(s0)) return 3.0 * s0;
    return d;
  };
  f.td_[0] = endpoint(h[0], h[1], sec[0], sec[1]);
  f.td_[n - 1] = endpoint(h[n - 2], h[n - 3], sec[n - 2], sec[n - 3]);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (sec[i - 1] * sec[i] <= 0.0) {
      f.td_[i] = 0.0;
    } else {
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      f.td_[i] = (w1 + w2) / (w1 / sec[i - 1] + w2 / sec[i]);
    }
  }
  return f;
}

Nonlinearity Nonlinearity::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "power") {
    return power_law(j.at("m").get<double>());
  }
  if (kind == "table") {
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : j.at("points")) {
      pts.emplace_back(row.at(0).get<double>(), row.at(1).get<double>());
    }
    return tabulated(std::move(pts));
  }
  throw invalid_nonlinearity_error("unknown nonlinearity kind: " + kind);
}

nlohmann::json Nonlinearity::to_json() const {
  nlohmann::json j;
  if (is_power()) {
    j["kind"] = "power";
    j["m"] = *power_;
  } else {
    j["kind"] = "table";
    auto pts = nlohmann::json::array();
    for (std::size_t i = 0; i < tx_.size(); ++i) {
      pts.push_back({tx_[i], ty_[i]});
    }
    j["points"] = pts;
  }
  return j;
}

double Nonlinearity::exponent() const {
  if (!is_power()) throw domain_error("exponent() on tabulated nonlinearity");
  return *power_;
}

double Nonlinearity::domain_max() const {
  return is_power() ? kInf : tx_.back();
}

void Nonlinearity::check_domain(double xi) const {
  if (!(xi >= 0.0)) {
    throw domain_error("nonlinearity evaluated at negative argument");
  }
  if (!is_power() && xi > tx_.back() * (1.0 + 1e-12)) {
    throw domain_error("argument outside tabulated sample range");
  }
}

double Nonlinearity::table_phi(double xi) const {
  const auto it = std::upper_bound(tx_.begin(), tx_.end(), xi);
  std::size_t i = (it == tx_.begin()) ? 0 : (it - tx_.begin() - 1);
  i = std::min(i, tx_.size() - 2);
  const double h = tx_[i + 1] - tx_[i];
  const double t = (xi - tx_[i]) / h;
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  const double h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t);
  const double h11 = t * t * (t - 1);
  return h00 * ty_[i] + h10 * h * td_[i] + h01 * ty_[i + 1] +
         h11 * h * td_[i + 1];
}

double Nonlinearity::table_dphi(double xi) const {
  const auto it = std::upper_bound(tx_.begin(), tx_.end(), xi);
  std::size_t i = (it == tx_.begin()) ? 0 : (it - tx_.begin() - 1);
  i = std::min(i, tx_.size() - 2);
  const double h = tx_[i + 1] - tx_[i];
  const double t = (xi - tx_[i]) / h;
  const double dh00 = 6 * t * t - 6 * t;
  const double dh10 = 3 * t * t - 4 * t + 1;
  const double dh01 = -6 * t * t + 6 * t;
  const double dh11 = 3 * t * t - 2 * t;
  return (dh00 * ty_[i] + dh01 * ty_[i + 1]) / h + dh10 * td_[i] +
         dh11 * td_[i + 1];
}

double Nonlinearity::phi(double xi) const {
  check_domain(xi);
  if (is_power()) return std::pow(xi, *power_);
  return std::max(0.0, table_phi(xi));
}

double Nonlinearity::dphi(double xi) const {
  check_domain(xi);
  if (is_power()) {
    const double m = *power_;
    if (xi == 0.0) return (m > 1.0) ? 0.0 : 1.0;
    return m * std::pow(xi, m - 1.0);
  }
  return std::max(0.0, table_dphi(xi));
}

double Nonlinearity::sqrt_phi(double xi) const {
  check_domain(xi);
  if (is_power()) return std::pow(xi, 0.5 * *power_);
  return std::sqrt(std::max(0.0, table_phi(xi)));
}

double Nonlinearity::dsqrt_phi(double xi) const {
  check_domain(xi);
  if (is_power()) {
    const double m = *power_;
    if (xi == 0.0) {
      if (m > 2.0) return 0.0;
      if (m == 2.0) return 1.0;
      throw singular_derivative_error(
          "(Phi^{1/2})' is singular at 0 for m < 2; use the regularized "
          "variant");
    }
    return 0.5 * m * std::pow(xi, 0.5 * m - 1.0);
  }
  const double p = table_phi(xi);
  if (p <= 0.0) {
    throw singular_derivative_error("(Phi^{1/2})' singular where Phi = 0");
  }
  return 0.5 * table_dphi(xi) / std::sqrt(p);
}

double Nonlinearity::eval(PhiFn which, double xi) const {
  switch (which) {
    case PhiFn::Phi:
      return phi(xi);
    case PhiFn::DPhi:
      return dphi(xi);
    case PhiFn::SqrtPhi:
      return sqrt_phi(xi);
    case PhiFn::DSqrtPhi:
      return dsqrt_phi(xi);
  }
  throw domain_error("unknown function selector");
}

double Nonlinearity::entropy_density(double xi) const {
  check_domain(xi);
  if (xi == 0.0) return 0.0;
  if (is_power()) {
    return *power_ * (xi * std::log(xi) - xi);
  }
  // Split off the degenerate end: substitute t = s u^2 so the integrand
  // of int_0^s log Phi stays bounded.
  const double s = std::min(xi, 0.01 * tx_.back());
  const auto near = [&](double u) {
    if (u <= 0.0) return 0.0;
    const double p = std::max(table_phi(s * u * u), 1e-300);
    return 2.0 * s * u * std::log(p);
  };
  double total = adaptive_simpson(near, 0.0, 1.0, 1e-11);
  if (xi > s) {
    const auto mid = [&](double t) {
      return std::log(std::max(table_phi(t), 1e-300));
    };
    total += adaptive_simpson(mid, s, xi, 1e-11);
  }
  return total;
}

double Nonlinearity::truncated_phi(int n, double xi) const {
  if (n < 1) throw domain_error("truncation level must be >= 1");
  check_domain(xi);
  const double nd = static_cast<double>(n);
  if (xi <= nd) return phi(xi);
  return phi(nd) + dphi(nd) * (xi - nd);
}

double Nonlinearity::theta_sqrt_dphi(double xi) const {
  check_domain(xi);
  if (xi == 0.0) return 0.0;
  if (is_power()) {
    const double m = *power_;
    return 2.0 * std::sqrt(m) / (m + 1.0) * std::pow(xi, 0.5 * (m + 1.0));
  }
  const auto f = [&](double t) { return std::sqrt(std::max(0.0, table_dphi(t))); };
  return adaptive_simpson(f, 0.0, xi, 1e-10);
}

double Nonlinearity::theta_phi(double xi) const {
  check_domain(xi);
  if (is_power()) {
    const double m = *power_;
    if (m == 1.0) {
      throw domain_error(
          "Theta_{Phi_n} diverges for m = 1 (use the bounded-derivative "
          "branch)");
    }
    if (xi == 0.0) return 0.0;
    return m * m / (m - 1.0) * std::pow(xi, m - 1.0);
  }
  if (td_[0] > 0.0) {
    throw domain_error(
        "Theta_{Phi_n} diverges at 0 for tables with Phi'(0) > 0");
  }
  if (xi == 0.0) return 0.0;
  const auto f = [&](double t) {
    const double p = table_phi(t);
    if (p <= 0.0) return 0.0;
    const double dp = table_dphi(t);
    return dp * dp / p;
  };
  return adaptive_simpson(f, 0.0, xi, 1e-10);
}

double Nonlinearity::defect_coeff(double xi) const {
  check_domain(xi);
  if (xi == 0.0) return 0.0;
  if (is_power()) return 4.0 / *power_ * xi;
  const double dp = table_dphi(xi);
  const double p = table_phi(xi);
  if (dp <= 0.0) return p > 0.0 ? kInf : 0.0;
  return 4.0 * p / dp;
}

// ---------------------------------------------------------------------------
// Regularization

RegularizationParams RegularizationParams::from_eta(const Nonlinearity& phi,
                                                    double eta) {
  if (!(eta > 0.0 && eta < 1.0)) {
    throw domain_error("regularization eta must lie in (0, 1)");
  }
  RegularizationParams p;
  p.eta = eta;
  p.mollifier_width = eta * eta;
  const double arg = std::min(1.0 / eta, phi.domain_max());
  p.cap_level = phi.phi(arg);
  return p;
}

namespace {

// Cubic B-spline bump rescaled to support (-eps, 0), unit mass.
double bspline3(double t) {
  const double a = std::abs(t);
  if (a >= 2.0) return 0.0;
  if (a <= 1.0) return 2.0 / 3.0 - a * a + 0.5 * a * a * a;
  const double b = 2.0 - a;
  return b * b * b / 6.0;
}

double kernel(double u, double eps) {
  // Map (-eps, 0) onto the native support (-2, 2).
  return (4.0 / eps) * bspline3(4.0 * (u + 0.5 * eps) / eps);
}

double dkernel(double u, double eps) {
  const double t = 4.0 * (u + 0.5 * eps) / eps;
  const double a = std::abs(t);
  double db;
  if (a >= 2.0) {
    db = 0.0;
  } else if (a <= 1.0) {
    db = -2.0 * t + 1.5 * t * a;
  } else {
    const double b = 2.0 - a;
    db = -0.5 * b * b * (t > 0 ? 1.0 : -1.0);
  }
  return (16.0 / (eps * eps)) * db;
}

}  // namespace

RegularizedSqrtPhi::RegularizedSqrtPhi(const Nonlinearity& phi,
                                       RegularizationParams params)
    : phi_(phi), params_(params) {
  if (params_.mollifier_width <= 0.0) {
    params_.mollifier_width = params_.eta * params_.eta;
  }
  if (params_.cap_level <= 0.0) {
    params_ = RegularizationParams::from_eta(phi, params_.eta);
  }
  // Locate where Phi^{1/2} crosses the cap (bisection; monotone).
  const double cap = params_.cap_level;
  double hi = std::min(phi_.domain_max(), 1.0);
  if (phi_.sqrt_phi(std::min(hi, phi_.domain_max())) < cap) {
    while (hi < 1e300 && hi < phi_.domain_max() && phi_.sqrt_phi(hi) < cap) {
      hi = std::min(hi * 2.0, phi_.domain_max());
      if (hi == phi_.domain_max()) break;
    }
  }
  if (hi >= phi_.domain_max() && phi_.is_power()) {
    cap_cross_ = std::pow(cap, 2.0 / phi_.exponent());
  } else if (phi_.sqrt_phi(hi) < cap) {
    cap_cross_ = kInf;  // never reaches the cap on the sample range
  } else {
    double lo = 0.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (phi_.sqrt_phi(mid) < cap ? lo : hi) = mid;
    }
    cap_cross_ = 0.5 * (lo + hi);
  }
}

double RegularizedSqrtPhi::capped_sqrt(double xi) const {
  if (xi <= 0.0) return 0.0;
  const double v =
      phi_.sqrt_phi(std::min(xi, phi_.domain_max()));
  return std::min(v, params_.cap_level);
}

double RegularizedSqrtPhi::value(double xi) const {
  if (!(xi >= 0.0)) throw domain_error("regularized sqrt-Phi needs xi >= 0");
  const double eps = params_.mollifier_width;
  // value(xi) = int_{-eps}^0 f(xi + u) kernel(u) du, f = capped sqrt
  // extended by zero for negative arguments. Split at the points where
  // the integrand loses smoothness: sign change of xi + u, the cap
  // crossing, and the B-spline knots.
  std::vector<double> cuts = {-eps, -0.75 * eps, -0.5 * eps, -0.25 * eps, 0.0};
  const double zero_cut = -xi;
  if (zero_cut > -eps && zero_cut < 0.0) cuts.push_back(zero_cut);
  const double cap_cut = cap_cross_ - xi;
  if (cap_cut > -eps && cap_cut < 0.0) cuts.push_back(cap_cut);
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    acc += gauss_integrate(
        [&](double u) { return capped_sqrt(xi + u) * kernel(u, eps); },
        cuts[i], cuts[i + 1]);
  }
  return std::max(0.0, acc);
}

double RegularizedSqrtPhi::derivative(double xi) const {
  if (!(xi >= 0.0)) throw domain_error("regularized sqrt-Phi needs xi >= 0");
  const double eps = params_.mollifier_width;
  // d/dxi (f * kernel) = -int f(xi + u) kernel'(u) du; keeps the
  // integrand bounded even where f' is singular.
  std::vector<double> cuts = {-eps, -0.75 * eps, -0.5 * eps, -0.25 * eps, 0.0};
  const double zero_cut = -xi;
  if (zero_cut > -eps && zero_cut < 0.0) cuts.push_back(zero_cut);
  const double cap_cut = cap_cross_ - xi;
  if (cap_cut > -eps && cap_cut < 0.0) cuts.push_back(cap_cut);
  std::sort(cuts.begin(), cuts.end());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    acc += gauss_integrate(
        [&](double u) { return -capped_sqrt(xi + u) * dkernel(u, eps); },
        cuts[i], cuts[i + 1]);
  }
  return std::max(0.0, acc);
}

double regularized_sqrt_phi(const Nonlinearity& phi,
                            const RegularizationParams& params, double xi,
                            bool derivative) {
  RegularizedSqrtPhi reg(phi, params);
  return derivative ? reg.derivative(xi) : reg.value(xi);
}

// ---------------------------------------------------------------------------
// Assumption certification

bool AssumptionReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const AssumptionCheck& c) { return c.pass; });
}

const AssumptionCheck* AssumptionReport::find(const std::string& id) const {
  for (const auto& c : checks) {
    if (c.id == id) return &c;
  }
  return nullptr;
}

nlohmann::json AssumptionReport::to_json() const {
  nlohmann::ordered_json j;
  j["all_pass"] = all_pass();
  j["delta_grid"] = delta_grid;
  j["sample_count"] = sample_count;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json e;
    e["id"] = c.id;
    e["pass"] = c.pass;
    e["fitted_c"] = c.fitted_c;
    e["worst_ratio"] = c.worst_ratio;
    if (c.witness) {
      e["witness"] = {c.witness->first, c.witness->second};
    }
    if (!c.note.empty()) e["note"] = c.note;
    arr.push_back(std::move(e));
  }
  j["checks"] = std::move(arr);
  return j;
}

namespace {

struct SupResult {
  double sup = 0.0;
  std::pair<double, double> arg{0.0, 0.0};
};

// Sup of f(xi, xi') over quasi-random pairs with |xi - xi'| < delta and
// both arguments in [lo, hi].
template <typename F>
SupResult sampled_pair_sup(F&& f, double lo, double hi, double delta,
                           int samples) {
  SupResult best;
  for (int i = 0; i <= samples; ++i) {
    // i = 0 and i = samples pin the endpoints, which often carry the sup.
    const double xi = (i == 0)        ? lo
                      : (i == samples) ? hi
                                       : lo + (hi - lo) * van_der_corput(i, 2);
    const double offsets[] = {delta * (2.0 * van_der_corput(i + 1, 3) - 1.0),
                              delta * 0.999999, -delta * 0.999999,
                              0.5 * delta, -0.5 * delta};
    for (double off : offsets) {
      const double xip = std::clamp(xi + off, lo, hi);
      const double v = std::abs(f(xi, xip));
      if (v > best.sup || !std::isfinite(v)) {
        best.sup = v;
        best.arg = {xi, xip};
        if (!std::isfinite(v)) return best;
      }
    }
  }
  return best;
}

template <typename F>
SupResult sampled_sup(F&& f, double lo, double hi, int samples) {
  SupResult best;
  for (int i = 0; i <= samples; ++i) {
    const double xi = (i == 0)        ? lo
                      : (i == samples) ? hi
                                       : lo + (hi - lo) * van_der_corput(i, 2);
    const double v = std::abs(f(xi));
    if (v > best.sup || !std::isfinite(v)) {
      best.sup = v;
      best.arg = {xi, xi};
      if (!std::isfinite(v)) return best;
    }
  }
  return best;
}

// Fit S(delta) ~= c * delta through the origin and test the one-sided
// bound S <= 1.05 * c * delta on the whole grid.
AssumptionCheck delta_law_check(const std::string& id,
                                const std::vector<double>& deltas,
                                const std::vector<SupResult>& sups) {
  AssumptionCheck chk;
  chk.id = id;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!std::isfinite(sups[i].sup)) {
      chk.pass = false;
      chk.worst_ratio = kInf;
      chk.witness = sups[i].arg;
      chk.note = "unbounded sample";
      return chk;
    }
    num += sups[i].sup * deltas[i];
    den += deltas[i] * deltas[i];
  }
  chk.fitted_c = num / den;
  if (chk.fitted_c <= 0.0) {  // expression vanishes identically
    chk.pass = true;
    chk.worst_ratio = 0.0;
    return chk;
  }
  chk.worst_ratio = 0.0;
  std::size_t worst = 0;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    const double r = sups[i].sup / (chk.fitted_c * deltas[i]);
    if (r > chk.worst_ratio) {
      chk.worst_ratio = r;
      worst = i;
    }
  }
  chk.pass = chk.worst_ratio <= 1.05;
  if (!chk.pass) chk.witness = sups[worst].arg;
  return chk;
}

double safe_ratio(double a, double b) {
  if (b == 0.0) return a == 0.0 ? 0.0 : kInf;
  return a / b;
}

// Cumulative integrals of the Theta integrands and log Phi, sampled once
// so the certification sweep stays O(samples) instead of re-integrating
// from 0 on every call.
class CumulativeCache {
 public:
  CumulativeCache(const Nonlinearity& phi, double hi, bool theta2_defined)
      : hi_(hi) {
    const int N = 4000;
    th1_.assign(N + 1, 0.0);
    th2_.assign(N + 1, 0.0);
    ent_.assign(N + 1, 0.0);
    const double h = hi / N;
    const auto f1 = [&](double t) { return std::sqrt(phi.dphi(t)); };
    const auto f2 = [&](double t) {
      const double p = phi.phi(t);
      if (p <= 0.0) return 0.0;
      const double dp = phi.dphi(t);
      return dp * dp / p;
    };
    const auto fe = [&](double t) {
      return std::log(std::max(phi.phi(t), 1e-300));
    };
    for (int i = 0; i < N; ++i) {
      const double a = i * h, b = (i + 1) * h;
      th1_[i + 1] = th1_[i] + gauss_integrate(f1, a, b);
      if (theta2_defined) th2_[i + 1] = th2_[i] + gauss_integrate(f2, a, b);
      if (i == 0) {
        // log Phi is integrable but singular at 0; t = h u^2 tames it.
        ent_[1] = gauss_integrate(
            [&](double u) { return 2.0 * h * u * fe(h * u * u); }, 0.0, 1.0);
      } else {
        ent_[i + 1] = ent_[i] + gauss_integrate(fe, a, b);
      }
    }
  }

  double theta1(double x) const { return interp(th1_, x); }
  double theta2(double x) const { return interp(th2_, x); }
  double entropy(double x) const { return interp(ent_, x); }

 private:
  double interp(const std::vector<double>& c, double x) const {
    const double s = std::clamp(x / hi_, 0.0, 1.0) * (c.size() - 1);
    const std::size_t i = std::min<std::size_t>(
        static_cast<std::size_t>(s), c.size() - 2);
    const double t = s - static_cast<double>(i);
    return (1.0 - t) * c[i] + t * c[i + 1];
  }
  double hi_;
  std::vector<double> th1_, th2_, ent_;
};

}  // namespace

AssumptionReport check_assumptions(const Nonlinearity& phi, double M,
                                   std::vector<double> delta_grid,
                                   int sample_count) {
  if (!(M > 1.0)) throw domain_error("check_assumptions requires M > 1");
  if (sample_count < 1000) {
    throw domain_error("check_assumptions requires sample_count >= 1000");
  }
  std::sort(delta_grid.begin(), delta_grid.end(), std::greater<double>());
  if (delta_grid.empty() || delta_grid.front() >= 1.0 ||
      delta_grid.back() <= 0.0) {
    throw domain_error("delta grid must lie in (0, 1)");
  }
  const double hi = std::min(M, phi.domain_max());
  const double lo = 1.0 / M;

  AssumptionReport rep;
  rep.delta_grid = delta_grid;
  rep.sample_count = sample_count;

  const auto sp = [&](double x) { return phi.sqrt_phi(x); };
  const auto dp = [&](double x) { return phi.dphi(x); };

  const bool is_pow = phi.is_power();
  const bool theta2_defined =
      is_pow ? (phi.exponent() > 1.0) : (phi.dphi(0.0) == 0.0);
  std::unique_ptr<CumulativeCache> cache;
  if (!is_pow) {
    cache = std::make_unique<CumulativeCache>(phi, hi, theta2_defined);
  }
  const auto theta1 = [&](double x) {
    return is_pow ? phi.theta_sqrt_dphi(x) : cache->theta1(x);
  };
  const auto theta2 = [&](double x) {
    return is_pow ? phi.theta_phi(x) : cache->theta2(x);
  };
  const auto entropy = [&](double x) {
    return is_pow ? phi.entropy_density(x) : cache->entropy(x);
  };

  // (as_unique ii): |Phi^{1/2}(xi)/Phi'(xi) (Phi^{1/2}(xi)-Phi^{1/2}(xi'))|
  {
    std::vector<SupResult> sups;
    for (double d : delta_grid) {
      sups.push_back(sampled_pair_sup(
          [&](double a, double b) {
            return safe_ratio(sp(a), dp(a)) * (sp(a) - sp(b));
          },
          lo, hi, d, sample_count));
    }
    rep.checks.push_back(delta_law_check("skel_continuity", delta_grid, sups));
  }

  // (as_unique iii)
  {
    std::vector<SupResult> sups;
    for (double d : delta_grid) {
      sups.push_back(sampled_pair_sup(
          [&](double a, double b) {
            const double da = dp(a), db = dp(b);
            const double diff = std::sqrt(da) - std::sqrt(db);
            return safe_ratio(sp(a) * sp(b), da * db) * diff * diff;
          },
          lo, hi, d, sample_count));
    }
    rep.checks.push_back(
        delta_law_check("skel_continuity_1", delta_grid, sups));
  }

  // (as_unique iv): sup Phi^{1/2}(xi) Phi^{1/2}(xi') / Phi'(xi) <= c M
  {
    AssumptionCheck chk;
    chk.id = "skel_continuity_2";
    const auto s = sampled_pair_sup(
        [&](double a, double b) { return safe_ratio(sp(a) * sp(b), dp(a)); },
        lo, hi, delta_grid.front(), sample_count);
    chk.fitted_c = s.sup / M;
    chk.worst_ratio = 1.0;
    chk.pass = std::isfinite(s.sup);
    if (!chk.pass) chk.witness = s.arg;
    rep.checks.push_back(chk);
  }

  // (as_unique v): sup_{0 <= xi <= M} Phi/Phi' <= c M
  {
    AssumptionCheck chk;
    chk.id = "skel_continuity_3";
    const auto s = sampled_sup(
        [&](double x) { return safe_ratio(phi.phi(x), dp(x)); }, 0.0, hi,
        sample_count);
    chk.fitted_c = s.sup / M;
    chk.worst_ratio = 1.0;
    chk.pass = std::isfinite(s.sup);
    if (!chk.pass) chk.witness = s.arg;
    rep.checks.push_back(chk);
  }

  // (as_equiv): growth branch (skel_continuity_5) or the bounded branch
  // (skel_continuity_6) + (skel_continuity_7), certified via the fitted
  // growth rate of R = Phi^{1/2}/Phi'.
  {
    AssumptionCheck chk;
    chk.id = "as_equiv";
    std::vector<double> lx, ly;
    bool finite = true;
    std::pair<double, double> bad{0.0, 0.0};
    for (int i = 1; i <= sample_count; ++i) {
      const double x = lo + (hi - lo) * van_der_corput(i, 2);
      const double r = safe_ratio(sp(x), dp(x));
      if (!std::isfinite(r)) {
        finite = false;
        bad = {x, x};
        break;
      }
      if (r > 0.0) {
        lx.push_back(std::log1p(x));
        ly.push_back(std::log(r));
      }
    }
    if (!finite || lx.size() < 10) {
      chk.pass = false;
      chk.witness = bad;
      chk.note = "Phi^{1/2}/Phi' unbounded on sample range";
    } else {
      const double sigma = fit_slope(lx, ly);
      if (sigma <= 1.0 + 1e-9) {
        chk.pass = true;
        chk.fitted_c = sigma;
        chk.worst_ratio = 1.0;
        chk.note = sigma > 1e-6
                       ? "branch (skel_continuity_5), p = 1/slope"
                       : "branch (skel_continuity_6)-(skel_continuity_7)";
        // Bounded-ratio branch also needs Phi(xi+1)/Phi(xi) bounded.
        if (sigma <= 1e-6 && hi > 2.0) {
          const auto s6 = sampled_sup(
              [&](double x) {
                return safe_ratio(phi.phi(std::min(x + 1.0, hi)), phi.phi(x));
              },
              1.0, hi - 1.0, sample_count);
          chk.pass = std::isfinite(s6.sup);
          if (!chk.pass) chk.witness = s6.arg;
        }
      } else {
        chk.pass = false;
        chk.fitted_c = sigma;
        chk.note = "Phi^{1/2}/Phi' grows superlinearly";
      }
    }
    rep.checks.push_back(chk);
  }

  // (ass_log): inf of the entropy density is finite.
  {
    AssumptionCheck chk;
    chk.id = "ass_log";
    double inf = kInf;
    double arg = 0.0;
    for (int i = 0; i <= 2000; ++i) {
      const double x = hi * static_cast<double>(i) / 2000.0;
      const double v = entropy(x);
      if (v < inf) {
        inf = v;
        arg = x;
      }
    }
    chk.fitted_c = -inf;
    chk.worst_ratio = 1.0;
    chk.pass = std::isfinite(inf);
    if (!chk.pass) chk.witness = {arg, arg};
    rep.checks.push_back(chk);
  }

  // (as_weak_ldp_1): sqrt(Phi'(0)) finite, c sqrt(Phi') >= 1_{xi >= 1},
  // and the inverse modulus of Theta_{sqrt Phi'}.
  {
    AssumptionCheck chk;
    chk.id = "as_weak_ldp_1";
    double d0;
    bool d0_ok = true;
    try {
      d0 = dp(0.0);
    } catch (const std::exception&) {
      d0 = kInf;
      d0_ok = false;
    }
    const auto smin = sampled_sup(
        [&](double x) { return safe_ratio(1.0, std::sqrt(dp(x))); },
        std::min(1.0, hi), hi, sample_count);
    // Inverse modulus: fit the exponent of Theta near 0 and take the sup
    // of the required constant.
    std::vector<double> lx, ly;
    for (int i = 1; i <= 200; ++i) {
      const double x = std::min(1.0, hi) * i / 200.0;
      const double th = theta1(x);
      if (th > 0.0) {
        lx.push_back(std::log(x));
        ly.push_back(std::log(th));
      }
    }
    const double expo = lx.size() >= 10 ? fit_slope(lx, ly) : kInf;
    const double p_fit = 2.0 * expo - 1.0;
    SupResult need = sampled_pair_sup(
        [&](double a, double b) {
          const double dth = std::abs(theta1(a) - theta1(b));
          const double gap = std::abs(a - b);
          if (gap == 0.0) return 0.0;
          const double target = (std::max(a, b) >= 1.0)
                                    ? gap
                                    : std::pow(gap, 0.5 * (p_fit + 1.0));
          return safe_ratio(target, dth);
        },
        0.0, hi, delta_grid.back(), sample_count / 4);
    chk.fitted_c = std::max(smin.sup, need.sup);
    chk.worst_ratio = 1.0;
    chk.pass = d0_ok && std::isfinite(smin.sup) && std::isfinite(need.sup) &&
               p_fit >= 1.0 - 1e-6;
    if (!std::isfinite(smin.sup)) chk.witness = smin.arg;
    if (!std::isfinite(need.sup)) chk.witness = need.arg;
    chk.note = "fitted p = " + std::to_string(p_fit);
    rep.checks.push_back(chk);
  }

  // (as_weak_ldp_2): either Phi' bounded (as_weak_ldp_21) or the
  // pointwise sufficient form of (as_weak_ldp_22):
  // Phi' + Theta_{Phi_n} <= c Phi^theta with fitted theta in (0, 1).
  {
    AssumptionCheck chk;
    chk.id = "as_weak_ldp_2";
    bool theta_ok = true;
    double theta_fit = 0.0;
    if (theta2_defined) {
      std::vector<double> lx, ly;
      for (int i = 1; i <= sample_count; ++i) {
        const double x =
            std::min(1.0, hi) + (hi - std::min(1.0, hi)) * van_der_corput(i, 2);
        const double lhs = dp(x) + theta2(x);
        const double p = phi.phi(x);
        if (lhs > 0.0 && p > 1.0) {
          lx.push_back(std::log(p));
          ly.push_back(std::log(lhs));
        }
      }
      theta_fit = lx.size() >= 10 ? fit_slope(lx, ly) : 0.0;
      theta_ok = theta_fit < 1.0;
    } else {
      theta_ok = false;
    }
    const auto sd = sampled_sup([&](double x) { return dp(x); }, 0.0, hi,
                                sample_count);
    const bool bounded_branch = std::isfinite(sd.sup);
    if (theta_ok) {
      chk.pass = true;
      chk.fitted_c = theta_fit;
      chk.note = "branch (as_weak_ldp_22), pointwise sufficient form";
    } else if (bounded_branch) {
      chk.pass = true;
      chk.fitted_c = sd.sup;
      chk.note = "branch (as_weak_ldp_21)";
    } else {
      chk.pass = false;
      chk.witness = sd.arg;
    }
    chk.worst_ratio = 1.0;
    rep.checks.push_back(chk);
  }

  return rep;
}

}  // namespace skeld
