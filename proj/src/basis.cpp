#include "skeld/basis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

namespace skeld {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSqrt2 = std::numbers::sqrt2;

double axis_factor(int trig, int f, double x) {
  switch (trig) {
    case Mode::Const:
      return 1.0;
    case Mode::Cos:
      return kSqrt2 * std::cos(kTwoPi * f * x);
    default:
      return kSqrt2 * std::sin(kTwoPi * f * x);
  }
}

double axis_factor_deriv(int trig, int f, double x) {
  switch (trig) {
    case Mode::Const:
      return 0.0;
    case Mode::Cos:
      return -kSqrt2 * kTwoPi * f * std::sin(kTwoPi * f * x);
    default:
      return kSqrt2 * kTwoPi * f * std::cos(kTwoPi * f * x);
  }
}
}  // namespace

SpectralBasis::SpectralBasis(int d, int n) : d_(d) {
  if (d != 1 && d != 2) throw resolution_error("basis dimension must be 1 or 2");
  if (n < 8 || (n & (n - 1)) != 0) {
    throw resolution_error("basis resolution must be a power of two >= 8");
  }
  const int fmax = n / 4;
  if (d == 1) {
    modes_.push_back(Mode{});  // e_1 = 1
    for (int f = 1; f <= fmax; ++f) {
      modes_.push_back(Mode{{f, 0}, {Mode::Sin, Mode::Const}, 0});
      modes_.push_back(Mode{{f, 0}, {Mode::Cos, Mode::Const}, 0});
    }
    return;
  }
  std::vector<Mode> all;
  const auto axis_choices = [&](int axis, auto&& emit) {
    emit(0, Mode::Const);
    for (int f = 1; f <= fmax; ++f) {
      emit(f, Mode::Cos);
      emit(f, Mode::Sin);
    }
    (void)axis;
  };
  axis_choices(0, [&](int fx, int tx) {
    axis_choices(1, [&](int fy, int ty) {
      for (int dir = 0; dir < 2; ++dir) {
        all.push_back(Mode{{fx, fy}, {tx, ty}, dir});
      }
    });
  });
  std::sort(all.begin(), all.end(), [](const Mode& a, const Mode& b) {
    return std::make_tuple(a.total_freq_sq(), a.freq[0], a.freq[1], a.trig[0],
                           a.trig[1], a.dir) <
           std::make_tuple(b.total_freq_sq(), b.freq[0], b.freq[1], b.trig[0],
                           b.trig[1], b.dir);
  });
  modes_ = std::move(all);
}

const Mode& SpectralBasis::mode(int k) const {
  if (k < 1 || k > capacity()) {
    throw resolution_error("basis mode index out of range");
  }
  return modes_[k - 1];
}

double SpectralBasis::scalar_at(int k, double x, double y) const {
  const Mode& m = mode(k);
  double v = axis_factor(m.trig[0], m.freq[0], x);
  if (d_ == 2) v *= axis_factor(m.trig[1], m.freq[1], y);
  return v;
}

VectorField SpectralBasis::mode_field(const Grid& grid, int k) const {
  if (grid.d != d_) throw grid_mismatch_error("basis/grid dimension mismatch");
  const Mode& m = mode(k);
  if (std::max(m.freq[0], m.freq[1]) > grid.n / 4) {
    throw resolution_error("mode not resolvable on this grid (f > n/4)");
  }
  VectorField out(grid);
  for (int j = 0; j < (d_ == 1 ? 1 : grid.n); ++j) {
    for (int i = 0; i < grid.n; ++i) {
      out.at(m.dir, i, j) = scalar_at(k, grid.center(i), grid.center(j));
    }
  }
  return out;
}

double SpectralBasis::divergence_at(int k, double x, double y) const {
  const Mode& m = mode(k);
  if (d_ == 1) return axis_factor_deriv(m.trig[0], m.freq[0], x);
  if (m.dir == 0) {
    return axis_factor_deriv(m.trig[0], m.freq[0], x) *
           axis_factor(m.trig[1], m.freq[1], y);
  }
  return axis_factor(m.trig[0], m.freq[0], x) *
         axis_factor_deriv(m.trig[1], m.freq[1], y);
}

double SpectralBasis::divergence_linf(int k) const {
  const Mode& m = mode(k);
  const int f = m.freq[m.dir];
  double bound = kTwoPi * f;
  for (int a = 0; a < d_; ++a) {
    if (m.trig[a] != Mode::Const) bound *= kSqrt2;
  }
  return bound;
}

// ---------------------------------------------------------------------------
// ControlField

ControlField ControlField::zero(const Grid& grid, std::vector<double> times) {
  ControlField c;
  c.grid_ = grid;
  c.times_ = std::move(times);
  c.values_.assign(c.times_.size(), VectorField(grid));
  return c;
}

ControlField ControlField::from_grid(std::vector<double> times,
                                     std::vector<VectorField> values) {
  if (times.empty() || times.size() != values.size()) {
    throw domain_error("control needs matching, nonempty time/value arrays");
  }
  ControlField c;
  c.grid_ = values.front().grid;
  c.times_ = std::move(times);
  c.values_ = std::move(values);
  for (const auto& v : c.values_) require_same_grid(v.grid, c.grid_);
  return c;
}

ControlField ControlField::from_spectral(
    const Grid& grid, const SpectralBasis& basis, std::vector<double> times,
    std::vector<std::vector<double>> coeffs) {
  if (times.empty() || times.size() != coeffs.size()) {
    throw domain_error("control needs matching, nonempty time/coeff arrays");
  }
  for (const auto& row : coeffs) {
    if (static_cast<int>(row.size()) > basis.capacity()) {
      throw resolution_error("more coefficients than basis modes");
    }
  }
  ControlField c;
  c.spectral_ = true;
  c.grid_ = grid;
  c.basis_.push_back(basis);
  c.times_ = std::move(times);
  c.coeffs_ = std::move(coeffs);
  return c;
}

const SpectralBasis& ControlField::basis() const {
  if (!spectral_) throw domain_error("control has no spectral representation");
  return basis_.front();
}

int ControlField::mode_count() const {
  if (!spectral_) return 0;
  std::size_t k = 0;
  for (const auto& row : coeffs_) k = std::max(k, row.size());
  return static_cast<int>(k);
}

namespace {
// Index of the segment containing t plus the interpolation weight.
std::pair<std::size_t, double> locate(const std::vector<double>& ts, double t) {
  if (t <= ts.front() || ts.size() == 1) return {0, 0.0};
  if (t >= ts.back()) return {ts.size() - 2, 1.0};
  const auto it = std::upper_bound(ts.begin(), ts.end(), t);
  const std::size_t i = (it - ts.begin()) - 1;
  const double w = (t - ts[i]) / (ts[i + 1] - ts[i]);
  return {i, w};
}
}  // namespace

std::vector<double> ControlField::coeffs_at(double t) const {
  if (!spectral_) throw domain_error("control has no spectral representation");
  const auto [i, w] = locate(times_, t);
  const auto& a = coeffs_[i];
  const auto& b = coeffs_[std::min(i + 1, coeffs_.size() - 1)];
  std::vector<double> out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double va = k < a.size() ? a[k] : 0.0;
    const double vb = k < b.size() ? b[k] : 0.0;
    out[k] = (1.0 - w) * va + w * vb;
  }
  return out;
}

VectorField ControlField::at(double t) const {
  if (!spectral_) {
    const auto [i, w] = locate(times_, t);
    const auto& a = values_[i];
    const auto& b = values_[std::min(i + 1, values_.size() - 1)];
    VectorField out(grid_);
    for (int c = 0; c < grid_.d; ++c) {
      for (std::size_t s = 0; s < out.comp[c].size(); ++s) {
        out.comp[c][s] = (1.0 - w) * a.comp[c][s] + w * b.comp[c][s];
      }
    }
    return out;
  }
  const auto cs = coeffs_at(t);
  VectorField out(grid_);
  const auto& bs = basis_.front();
  for (std::size_t k = 0; k < cs.size(); ++k) {
    if (cs[k] == 0.0) continue;
    const Mode& m = bs.mode(static_cast<int>(k) + 1);
    for (int j = 0; j < (grid_.d == 1 ? 1 : grid_.n); ++j) {
      for (int i = 0; i < grid_.n; ++i) {
        out.at(m.dir, i, j) += cs[k] * bs.scalar_at(static_cast<int>(k) + 1,
                                                    grid_.center(i),
                                                    grid_.center(j));
      }
    }
  }
  return out;
}

void ControlField::eval_point(double t, double x, double y, double* out) const {
  const auto cs = coeffs_at(t);  // throws unless spectral
  const auto& bs = basis_.front();
  out[0] = 0.0;
  if (grid_.d == 2) out[1] = 0.0;
  for (std::size_t k = 0; k < cs.size(); ++k) {
    if (cs[k] == 0.0) continue;
    const Mode& m = bs.mode(static_cast<int>(k) + 1);
    out[m.dir] += cs[k] * bs.scalar_at(static_cast<int>(k) + 1, x, y);
  }
}

double ControlField::lp_lq_norm(double p, double q) const {
  if (!(p >= 1.0) || !(q >= 1.0)) {
    throw domain_error("norm exponents must be >= 1");
  }
  std::vector<double> slice(times_.size());
  for (std::size_t j = 0; j < times_.size(); ++j) {
    const VectorField v = at(times_[j]);
    std::vector<double> cell(grid_.size());
    for (std::size_t s = 0; s < cell.size(); ++s) {
      double mag2 = 0.0;
      for (int c = 0; c < grid_.d; ++c) mag2 += v.comp[c][s] * v.comp[c][s];
      cell[s] = std::pow(std::sqrt(mag2), q);
    }
    slice[j] = std::pow(std::pow(grid_.h, grid_.d) * kahan_sum(cell), 1.0 / q);
  }
  if (times_.size() == 1) return slice[0];
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < times_.size(); ++j) {
    acc += 0.5 * (times_[j + 1] - times_[j]) *
           (std::pow(slice[j], p) + std::pow(slice[j + 1], p));
  }
  return std::pow(acc, 1.0 / p);
}

// ---------------------------------------------------------------------------

ControlField project_PK(const ControlField& g, const SpectralBasis& basis,
                        int K) {
  if (K < 0 || K > basis.capacity()) {
    throw resolution_error("projection rank exceeds basis capacity");
  }
  const Grid& grid = g.grid();
  std::vector<std::vector<double>> coeffs(g.times().size(),
                                          std::vector<double>(K, 0.0));
  if (g.spectral()) {
    for (std::size_t j = 0; j < g.times().size(); ++j) {
      const auto& row = g.coeffs()[j];
      for (int k = 0; k < K && k < static_cast<int>(row.size()); ++k) {
        coeffs[j][k] = row[k];
      }
    }
  } else {
    const double hd = std::pow(grid.h, grid.d);
    // Sample each mode once; cell-sum inner products are spectrally exact
    // for resolved frequencies.
    std::vector<VectorField> ek;
    ek.reserve(K);
    for (int k = 1; k <= K; ++k) ek.push_back(basis.mode_field(grid, k));
    for (std::size_t j = 0; j < g.times().size(); ++j) {
      const VectorField v = g.at(g.times()[j]);
      for (int k = 0; k < K; ++k) {
        std::vector<double> prod(grid.size(), 0.0);
        for (int c = 0; c < grid.d; ++c) {
          for (std::size_t s = 0; s < prod.size(); ++s) {
            prod[s] += v.comp[c][s] * ek[k].comp[c][s];
          }
        }
        coeffs[j][k] = hd * kahan_sum(prod);
      }
    }
  }
  return ControlField::from_spectral(grid, basis, g.times(), std::move(coeffs));
}

double criticality_exponent(double m, double d, double p, double q, double r) {
  if (!(m >= 1.0) || !(p >= 1.0) || !(q >= 1.0) || !(r >= 1.0)) {
    throw domain_error("criticality_exponent requires m, p, q, r >= 1");
  }
  const double L = d / r;
  return 1.0 + 0.5 * L * m - d / q - (2.0 + L * (m - 1.0)) / p;
}

RescaleResult rescale_control(const ControlField& g, double eta, double m,
                              double r, double p, double q) {
  if (!(eta > 0.0 && eta <= 1.0)) throw domain_error("eta must lie in (0, 1]");
  if (!g.spectral()) {
    throw domain_error("rescale_control needs a band-limited spectral control");
  }
  const Grid& grid = g.grid();
  const int d = grid.d;
  int fmax = 0;
  for (std::size_t j = 0; j < g.coeffs().size(); ++j) {
    for (std::size_t k = 0; k < g.coeffs()[j].size(); ++k) {
      if (g.coeffs()[j][k] != 0.0) {
        const Mode& md = g.basis().mode(static_cast<int>(k) + 1);
        fmax = std::max({fmax, md.freq[0], md.freq[1]});
      }
    }
  }
  if (static_cast<double>(fmax) * eta > grid.n / 4.0) {
    throw resolution_error("rescaled control not resolvable on this grid");
  }

  const double lambda = std::pow(eta, d / r);
  const double tau = eta * eta * std::pow(lambda, m - 1.0);
  const double amp = tau / (eta * std::pow(lambda, 0.5 * m - 1.0));

  // Rescaled control sampled at cell centers; time nodes stretched by 1/tau.
  std::vector<double> times(g.times().size());
  for (std::size_t j = 0; j < times.size(); ++j) times[j] = g.times()[j] / tau;
  std::vector<VectorField> values(times.size(), VectorField(grid));
  for (std::size_t j = 0; j < times.size(); ++j) {
    for (int jy = 0; jy < (d == 1 ? 1 : grid.n); ++jy) {
      for (int ix = 0; ix < grid.n; ++ix) {
        double vec[2];
        g.eval_point(g.times()[j], eta * grid.center(ix),
                     eta * grid.center(jy), vec);
        for (int c = 0; c < d; ++c) {
          values[j].at(c, ix, jy) = amp * vec[c];
        }
      }
    }
  }

  // Measured L^p_t L^q_x norm of the rescaled field over one full period
  // [0, 1/eta)^d of the (1/eta)-periodic integrand, midpoint rule.
  const double period = 1.0 / eta;
  const int N = static_cast<int>(std::ceil(grid.n * period));
  const double dx = period / N;
  std::vector<double> slice(times.size());
  for (std::size_t j = 0; j < times.size(); ++j) {
    std::vector<double> cell;
    cell.reserve(static_cast<std::size_t>(N) * (d == 1 ? 1 : N));
    for (int jy = 0; jy < (d == 1 ? 1 : N); ++jy) {
      for (int ix = 0; ix < N; ++ix) {
        double vec[2];
        g.eval_point(g.times()[j], eta * (ix + 0.5) * dx, eta * (jy + 0.5) * dx,
                     vec);
        double mag2 = 0.0;
        for (int c = 0; c < d; ++c) mag2 += amp * vec[c] * (amp * vec[c]);
        cell.push_back(std::pow(std::sqrt(mag2), q));
      }
    }
    slice[j] = std::pow(std::pow(dx, d) * kahan_sum(cell), 1.0 / q);
  }
  double num = 0.0;
  if (times.size() == 1) {
    num = slice[0];
  } else {
    for (std::size_t j = 0; j + 1 < times.size(); ++j) {
      num += 0.5 * (times[j + 1] - times[j]) *
             (std::pow(slice[j], p) + std::pow(slice[j + 1], p));
    }
    num = std::pow(num, 1.0 / p);
  }
  const double den = g.lp_lq_norm(p, q);

  return RescaleResult{ControlField::from_grid(std::move(times), std::move(values)),
                       den > 0.0 ? num / den : 0.0};
}

}  // namespace skeld
