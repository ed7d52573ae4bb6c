#pragma once

// Exact KP solutions of the form f = 2 d^2/dx^2 ln det M for the three
// families: trigonometric (harmonic breathers), hyperbolic (solitonic dipoles)
// and plain solitons. Every evaluation is templated on the working precision;
// double is the default, Quad is used where finite differences need it.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <type_traits>
#include <vector>

#include "kpc/errors.hpp"
#include "kpc/numeric.hpp"
#include "kpc/parallel.hpp"
#include "kpc/types.hpp"

namespace kpc {

/// Linear phase Γ of a spectral mode.
template <class Real = double>
Real phase_gamma(const SpectralMode& m, const BasicPoint<Real>& pt, Family family,
                 double alpha = 1.0) {
  const Real l(m.lambda), mu(m.mu), a2(alpha * alpha);
  const Real base = Real(m.gamma) + l * pt.x - 2 * l * mu * pt.y;
  if (family == Family::Hyperbolic) return base - 4 * l * (l * l + 3 * a2 * mu * mu) * pt.t;
  return base + 4 * l * (l * l - 3 * a2 * mu * mu) * pt.t;
}

template <class Real = double>
Real phase_gamma(const SpectralMode& m, const EvalPoint& pt, Family family, double alpha = 1.0) {
  return phase_gamma<Real>(m, lift<Real>(pt), family, alpha);
}

/// Secular factor Υ of a spectral mode (linear in x, y, t).
template <class Real = double>
Real phase_upsilon(const SpectralMode& m, const BasicPoint<Real>& pt, Family family,
                   double alpha = 1.0) {
  using std::cos;
  using std::cosh;
  using std::sin;
  using std::sinh;
  const Real l(m.lambda), mu(m.mu), a(alpha), a2(alpha * alpha);
  const Real ac = a * Real(m.chi);
  if (family == Family::Hyperbolic) {
    const Real c = cosh(ac), s = sinh(ac);
    return Real(m.rho) + pt.x * c - 2 * (l * s / a + mu * c) * pt.y -
           12 * (l * l * c + a2 * mu * mu * c + 2 * a * l * mu * s) * pt.t;
  }
  const Real c = cos(ac), s = sin(ac);
  return Real(m.rho) + pt.x * c + 2 * (l * s / a - mu * c) * pt.y +
         12 * (l * l * c - a2 * mu * mu * c + 2 * a * l * mu * s) * pt.t;
}

template <class Real = double>
Real phase_upsilon(const SpectralMode& m, const EvalPoint& pt, Family family,
                   double alpha = 1.0) {
  return phase_upsilon<Real>(m, lift<Real>(pt), family, alpha);
}

/// A matrix together with its first three x-derivatives. Entries beyond the
/// requested order are left empty.
template <class Scalar>
struct MatrixJet {
  Matrix<Scalar> value;
  Matrix<Scalar> d1;
  Matrix<Scalar> d2;
  Matrix<Scalar> d3;

  const Matrix<Scalar>& derivative(int order) const {
    switch (order) {
      case 0: return value;
      case 1: return d1;
      case 2: return d2;
      default: return d3;
    }
  }
};

namespace detail {

// m-th derivative of sin/cos (or sinh/cosh) at an argument whose own sin and
// cos values are s and c, excluding the chain-rule slope factor.
template <class Real>
Real sin_derivative(int order, const Real& s, const Real& c, bool hyperbolic) {
  if (hyperbolic) return order % 2 == 0 ? s : c;
  switch (order % 4) {
    case 0: return s;
    case 1: return c;
    case 2: return -s;
    default: return -c;
  }
}

template <class Real>
Real cos_derivative(int order, const Real& s, const Real& c, bool hyperbolic) {
  if (hyperbolic) return order % 2 == 0 ? c : s;
  switch (order % 4) {
    case 0: return c;
    case 1: return -s;
    case 2: return -c;
    default: return s;
  }
}

template <class Real>
void sincos(const Real& v, bool hyperbolic, Real& s, Real& c) {
  using std::cos;
  using std::cosh;
  using std::sin;
  using std::sinh;
  if (hyperbolic) {
    s = sinh(v);
    c = cosh(v);
  } else {
    s = sin(v);
    c = cos(v);
  }
}

template <class Real>
Real ipow(const Real& v, int n) {
  Real r(1);
  for (int i = 0; i < n; ++i) r *= v;
  return r;
}

template <class Scalar>
void resize_jet(MatrixJet<Scalar>& jet, Eigen::Index n, int order) {
  jet.value.resize(n, n);
  if (order >= 1) jet.d1.resize(n, n);
  if (order >= 2) jet.d2.resize(n, n);
  if (order >= 3) jet.d3.resize(n, n);
}

template <class Scalar>
Matrix<Scalar>& jet_slot(MatrixJet<Scalar>& jet, int order) {
  switch (order) {
    case 0: return jet.value;
    case 1: return jet.d1;
    case 2: return jet.d2;
    default: return jet.d3;
  }
}

template <class Real>
void require_spectral(const SolutionSpec& spec) {
  if (spec.family() == Family::Soliton)
    throw InputError("interaction matrix requested for a soliton spec");
}

}  // namespace detail

/// Interaction matrix K of a trigonometric or hyperbolic spec and its
/// x-derivatives up to `order` (at most 3).
///
/// Diagonal: K_nn = Υ_n − S(2Γ_n)/(2λ_n) with S = sin or sinh. Off-diagonal
/// entries use the shifted phases A_n = Γ_n − αχ_n/2 (row) and
/// B_k = Γ_k + αχ_k/2 (column); with Δ = A_n − B_k and Σ = A_n + B_k,
///   trig: (δλ sinΔ)/d₋ − (σλ sinΣ)/d₊ + α δμ (cosΣ/d₊ − cosΔ/d₋)
///   hyp:  −(δλ sinhΔ)/d₋ + (σλ sinhΣ)/d₊ + α δμ (coshΣ/d₊ − coshΔ/d₋)
/// where d∓ = α²δμ² ± (λ_n ∓ λ_k)² (sign + for trig, − for hyp). The shift is
/// what the ε → 0 soliton limit produces; without it N ≥ 2 fields do not solve KP.
template <class Real = double>
MatrixJet<Real> interaction_jet(const SolutionSpec& spec, const BasicPoint<Real>& pt,
                                int order = 2) {
  using std::cos;
  using std::cosh;
  detail::require_spectral<Real>(spec);
  const bool hyp = spec.family() == Family::Hyperbolic;
  const auto& modes = spec.spectral_modes();
  const auto n = static_cast<Eigen::Index>(modes.size());
  const Real a(spec.alpha()), a2(spec.alpha() * spec.alpha());

  std::array<Real, kMaxModes> gamma{}, upsilon{}, upsilon_x{};
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& m = modes[i];
    gamma[i] = phase_gamma<Real>(m, pt, spec.family(), spec.alpha());
    upsilon[i] = phase_upsilon<Real>(m, pt, spec.family(), spec.alpha());
    upsilon_x[i] = hyp ? Real(cosh(a * Real(m.chi))) : Real(cos(a * Real(m.chi)));
  }

  MatrixJet<Real> jet;
  detail::resize_jet(jet, n, order);
  for (Eigen::Index r = 0; r < n; ++r) {
    const Real lr(modes[r].lambda);
    Real s2, c2;
    detail::sincos(Real(2 * gamma[r]), hyp, s2, c2);
    for (int d = 0; d <= order; ++d) {
      Real v = -detail::ipow(Real(2 * lr), d) * detail::sin_derivative(d, s2, c2, hyp) / (2 * lr);
      if (d == 0) v += upsilon[r];
      if (d == 1) v += upsilon_x[r];
      detail::jet_slot(jet, d)(r, r) = v;
    }
    for (Eigen::Index k = 0; k < n; ++k) {
      if (k == r) continue;
      const Real lk(modes[k].lambda);
      const Real dm = Real(modes[r].mu) - Real(modes[k].mu);
      const Real dl = lr - lk, sl = lr + lk;
      const Real sign = hyp ? Real(-1) : Real(1);
      const Real d_minus = a2 * dm * dm + sign * dl * dl;
      const Real d_plus = a2 * dm * dm + sign * sl * sl;
      const Real row_phase = gamma[r] - a * Real(modes[r].chi) / 2;
      const Real col_phase = gamma[k] + a * Real(modes[k].chi) / 2;
      Real sd, cd, ss, cs;
      detail::sincos(Real(row_phase - col_phase), hyp, sd, cd);
      detail::sincos(Real(row_phase + col_phase), hyp, ss, cs);
      for (int d = 0; d <= order; ++d) {
        const Real pd = detail::ipow(dl, d), ps = detail::ipow(sl, d);
        const Real sin_d = detail::sin_derivative(d, sd, cd, hyp);
        const Real sin_s = detail::sin_derivative(d, ss, cs, hyp);
        const Real cos_d = detail::cos_derivative(d, sd, cd, hyp);
        const Real cos_s = detail::cos_derivative(d, ss, cs, hyp);
        Real v = sign * (dl * pd * sin_d / d_minus - sl * ps * sin_s / d_plus);
        v += a * dm * (ps * cos_s / d_plus - pd * cos_d / d_minus);
        detail::jet_slot(jet, d)(r, k) = v;
      }
    }
  }
  return jet;
}

/// Interaction matrix K at a point (no derivatives).
template <class Real = double>
Matrix<Real> interaction_matrix(const SolutionSpec& spec, const BasicPoint<Real>& pt) {
  return interaction_jet<Real>(spec, pt, 0).value;
}

inline Matrix<double> interaction_matrix(const SolutionSpec& spec, const EvalPoint& pt) {
  return interaction_matrix<double>(spec, lift<double>(pt));
}

/// Soliton matrix A_mn = δ_mn + c_n e^{θ_n} / (p_n + q_m) and its
/// x-derivatives, θ_n = k_n x + (q_n² − p_n²) y − k_n (k_n² + 3α²(p_n − q_n)²) t
/// with k_n = p_n + q_n. Scalar may be real only when every mode is real.
template <class Scalar = std::complex<double>>
MatrixJet<Scalar> soliton_jet(const SolutionSpec& spec,
                              const BasicPoint<real_of_t<Scalar>>& pt, int order = 2) {
  using Real = real_of_t<Scalar>;
  using std::exp;
  if (spec.family() != Family::Soliton)
    throw InputError("soliton matrix requested for a " + std::string(to_string(spec.family())) +
                     " spec");
  if constexpr (!is_complex_v<Scalar>) {
    if (spec.has_complex_modes())
      throw InputError("complex soliton modes need a complex scalar type");
  }
  const auto& modes = spec.soliton_modes();
  const auto n = static_cast<Eigen::Index>(modes.size());
  const Real a2(spec.alpha() * spec.alpha());
  auto cast = [](std::complex<double> z) -> Scalar {
    if constexpr (is_complex_v<Scalar>)
      return Scalar(Real(z.real()), Real(z.imag()));
    else
      return Scalar(z.real());
  };

  MatrixJet<Scalar> jet;
  detail::resize_jet(jet, n, order);
  for (Eigen::Index col = 0; col < n; ++col) {
    const Scalar p = cast(modes[col].p), q = cast(modes[col].q), c = cast(modes[col].c);
    const Scalar k = p + q;
    const Scalar theta =
        k * Scalar(pt.x) + (q * q - p * p) * Scalar(pt.y) -
        k * (k * k + Scalar(3) * Scalar(a2) * (p - q) * (p - q)) * Scalar(pt.t);
    const Scalar amp = c * exp(theta);
    for (Eigen::Index row = 0; row < n; ++row) {
      const Scalar denom = p + cast(modes[row].q);
      if (denom == Scalar(0))
        throw SingularDenominator("p[" + std::to_string(col) + "] + q[" + std::to_string(row) +
                                  "] = 0");
      Scalar kd(1);
      for (int d = 0; d <= order; ++d) {
        Scalar v = kd * amp / denom;
        if (d == 0 && row == col) v += Scalar(1);
        detail::jet_slot(jet, d)(row, col) = v;
        kd *= k;
      }
    }
  }
  return jet;
}

template <class Scalar = std::complex<double>>
Matrix<Scalar> soliton_matrix(const SolutionSpec& spec, const EvalPoint& pt) {
  return soliton_jet<Scalar>(spec, lift<real_of_t<Scalar>>(pt), 0).value;
}

/// Family matrix and its analytic x-derivatives, as a real or complex jet.
template <class Scalar = double>
MatrixJet<Scalar> matrix_x_derivatives(const SolutionSpec& spec,
                                       const BasicPoint<real_of_t<Scalar>>& pt, int order = 2) {
  if (spec.family() == Family::Soliton) return soliton_jet<Scalar>(spec, pt, order);
  using Real = real_of_t<Scalar>;
  auto real_jet = interaction_jet<Real>(spec, pt, order);
  if constexpr (is_complex_v<Scalar>) {
    MatrixJet<Scalar> out;
    out.value = real_jet.value.template cast<Scalar>();
    if (order >= 1) out.d1 = real_jet.d1.template cast<Scalar>();
    if (order >= 2) out.d2 = real_jet.d2.template cast<Scalar>();
    if (order >= 3) out.d3 = real_jet.d3.template cast<Scalar>();
    return out;
  } else {
    return real_jet;
  }
}

template <class Scalar = double>
MatrixJet<Scalar> matrix_x_derivatives(const SolutionSpec& spec, const EvalPoint& pt,
                                       int order = 2) {
  return matrix_x_derivatives<Scalar>(spec, lift<real_of_t<Scalar>>(pt), order);
}

/// Result of factoring a family matrix: log|det|, and the singular-set test.
struct DetInfo {
  double log_abs_det = 0.0;
  bool singular = false;
};

namespace detail {

// Diagonal balancing S = D_r M D_c with every row and column maximum of S
// equal to 1 (three alternating passes). det M = det S / (Π r_i Π c_j) and
// the Jacobi traces are unchanged when the same D_r, D_c are applied to every
// derivative. A 1×1 matrix is left as is: balancing it would erase the
// cancellation inside the entry that the singular test has to see.
template <class Scalar>
struct Equilibration {
  std::array<real_of_t<Scalar>, kMaxModes> row{};
  std::array<real_of_t<Scalar>, kMaxModes> col{};
  real_of_t<Scalar> log_scale{0};  // Σ log r_i + Σ log c_j

  explicit Equilibration(const Matrix<Scalar>& m) {
    using std::abs;
    using std::log;
    using Real = real_of_t<Scalar>;
    const Eigen::Index n = m.rows();
    for (Eigen::Index i = 0; i < n; ++i) row[i] = col[i] = Real(1);
    if (n < 2) return;
    for (int pass = 0; pass < 3; ++pass) {
      for (Eigen::Index i = 0; i < n; ++i) {
        Real mx(0);
        for (Eigen::Index j = 0; j < n; ++j) mx = std::max<Real>(mx, Real(abs(m(i, j)) * col[j]));
        if (mx > Real(0)) row[i] = Real(1) / mx;
      }
      for (Eigen::Index j = 0; j < n; ++j) {
        Real mx(0);
        for (Eigen::Index i = 0; i < n; ++i) mx = std::max<Real>(mx, Real(abs(m(i, j)) * row[i]));
        if (mx > Real(0)) col[j] = Real(1) / mx;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) log_scale += log(row[i]) + log(col[i]);
  }

  void apply(Matrix<Scalar>& m) const {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) *= Scalar(row[i] * col[j]);
  }
};

// Singular when |det S| < 1e-10 (1 + max |S_ij|)^N for the balanced S. The
// balancing makes the test invariant under the exponential row/column growth
// of the hyperbolic and soliton families, which leaves both the zero set and
// f unchanged.
template <class Scalar>
DetInfo det_info(const Eigen::PartialPivLU<Matrix<Scalar>>& lu, const Matrix<Scalar>& s,
                 const real_of_t<Scalar>& log_scale) {
  using std::abs;
  using std::log;
  using Real = real_of_t<Scalar>;
  const Eigen::Index n = s.rows();
  Real log_det(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Real piv = abs(lu.matrixLU()(i, i));
    if (piv == Real(0)) return {-std::numeric_limits<double>::infinity(), true};
    log_det += log(piv);
  }
  Real max_entry(0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) max_entry = std::max<Real>(max_entry, abs(s(i, j)));
  DetInfo info;
  const double scaled = to_double(log_det);
  info.log_abs_det = to_double(Real(log_det - log_scale));
  info.singular = scaled < std::log(1e-10) + static_cast<double>(n) * std::log1p(to_double(max_entry));
  return info;
}

template <class Real>
auto working_scalar_dispatch(const SolutionSpec& spec, auto&& fn) {
  if (spec.family() == Family::Soliton && spec.has_complex_modes()) {
    if constexpr (std::is_floating_point_v<Real>)
      return fn(std::complex<Real>{});
    else
      throw InputError("complex soliton modes are evaluated in built-in floating types only");
  } else {
    return fn(Real{});
  }
}

// Equilibrated jet with its factorization.
template <class Scalar>
struct Factored {
  MatrixJet<Scalar> jet;
  real_of_t<Scalar> log_scale{0};
  Eigen::PartialPivLU<Matrix<Scalar>> lu;
  DetInfo info;
};

template <class Scalar>
Factored<Scalar> factor(const SolutionSpec& spec, const BasicPoint<real_of_t<Scalar>>& pt,
                        int order) {
  Factored<Scalar> f;
  f.jet = matrix_x_derivatives<Scalar>(spec, pt, order);
  const Equilibration<Scalar> eq(f.jet.value);
  f.log_scale = eq.log_scale;
  eq.apply(f.jet.value);
  if (order >= 1) eq.apply(f.jet.d1);
  if (order >= 2) eq.apply(f.jet.d2);
  if (order >= 3) eq.apply(f.jet.d3);
  f.lu.compute(f.jet.value);
  f.info = det_info<Scalar>(f.lu, f.jet.value, f.log_scale);
  return f;
}

}  // namespace detail

/// log|det M| and the singular flag at a point.
template <class Real = double>
DetInfo log_abs_det(const SolutionSpec& spec, const BasicPoint<Real>& pt) {
  return detail::working_scalar_dispatch<Real>(spec, [&](auto tag) {
    using Scalar = decltype(tag);
    return detail::factor<Scalar>(spec, pt, 0).info;
  });
}

/// x-derivatives of ln|det M|: first, second and (optionally) third.
template <class Real>
struct LogDetDerivatives {
  Real d1{0};
  Real d2{0};
  Real d3{0};
};

template <class Real = double>
LogDetDerivatives<Real> log_det_x_derivatives(const SolutionSpec& spec,
                                              const BasicPoint<Real>& pt, int order = 2) {
  using std::isfinite;
  return detail::working_scalar_dispatch<Real>(spec, [&](auto tag) {
    using Scalar = decltype(tag);
    const auto fac = detail::factor<Scalar>(spec, pt, order);
    const auto& jet = fac.jet;
    const auto& lu = fac.lu;
    if (fac.info.singular) throw OnSingularSet("determinant vanishes at the evaluation point");
    // Jacobi: (ln det)' = tr X1, (ln det)'' = tr X2 − tr X1², with Xk = M⁻¹ M^(k).
    const Matrix<Scalar> x1 = lu.solve(jet.d1);
    const Matrix<Scalar> x2 = lu.solve(jet.d2);
    LogDetDerivatives<Real> out;
    out.d1 = real_part<Scalar>(x1.trace());
    out.d2 = real_part<Scalar>(x2.trace() - (x1 * x1).trace());
    if (order >= 3) {
      const Matrix<Scalar> x3 = lu.solve(jet.d3);
      const Matrix<Scalar> x11 = x1 * x1;
      out.d3 = real_part<Scalar>(x3.trace() - Scalar(3) * (x1 * x2).trace() +
                                 Scalar(2) * (x11 * x1).trace());
    }
    const double probe = to_double(out.d2) + to_double(out.d1) + to_double(out.d3);
    if (!std::isfinite(probe)) throw NonFinite("non-finite log-determinant derivative");
    return out;
  });
}

/// f = 2 ∂²ₓ ln|det M|, evaluated through the Jacobi identity.
template <class Real = double>
Real field_f(const SolutionSpec& spec, const BasicPoint<Real>& pt) {
  return Real(2) * log_det_x_derivatives<Real>(spec, pt, 2).d2;
}

inline double field_f(const SolutionSpec& spec, const EvalPoint& pt) {
  return field_f<double>(spec, lift<double>(pt));
}

/// ∂ₓf = 2 ∂³ₓ ln|det M| from the analytic third-derivative Jacobi term.
template <class Real = double>
Real field_f_x(const SolutionSpec& spec, const BasicPoint<Real>& pt) {
  return Real(2) * log_det_x_derivatives<Real>(spec, pt, 3).d3;
}

inline double field_f_x(const SolutionSpec& spec, const EvalPoint& pt) {
  return field_f_x<double>(spec, lift<double>(pt));
}

/// Finite-difference oracle for field_f: the 5-point fourth-order second
/// difference of ln|det M| in x, times 2.
template <class Real = double>
Real field_f_fd(const SolutionSpec& spec, const BasicPoint<Real>& pt, const Real& h) {
  if (!(h > Real(0))) throw InputError("finite-difference step must be positive");
  static constexpr std::array<int, 5> offsets{-2, -1, 0, 1, 2};
  static constexpr std::array<double, 5> weights{-1, 16, -30, 16, -1};
  Real acc(0);
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    BasicPoint<Real> q = pt;
    q.x += Real(offsets[i]) * h;
    // log|det| must be formed at working precision for Quad to pay off.
    const Real l = detail::working_scalar_dispatch<Real>(spec, [&](auto tag) {
      using Scalar = decltype(tag);
      using std::abs;
      using std::log;
      const auto fac = detail::factor<Scalar>(spec, q, 0);
      if (fac.info.singular)
        throw OnSingularSet("finite-difference stencil touches the singular set");
      Real s = -fac.log_scale;
      for (Eigen::Index k = 0; k < fac.jet.value.rows(); ++k)
        s += log(abs(fac.lu.matrixLU()(k, k)));
      return s;
    });
    acc += Real(weights[i]) * l;
  }
  return Real(2) * acc / (Real(12) * h * h);
}

inline double field_f_fd(const SolutionSpec& spec, const EvalPoint& pt, double h) {
  return field_f_fd<double>(spec, lift<double>(pt), h);
}

/// Sign-carrying determinant used to trace singular curves. For spectral
/// families this is det(diag(2λ) K), which for N = 1 is 2λΥ − S(2Γ).
inline double singular_indicator(const SolutionSpec& spec, const EvalPoint& pt) {
  using std::sin;
  using std::sinh;
  if (spec.family() != Family::Soliton && spec.size() == 1) {
    const auto& m = spec.spectral_modes().front();
    const double g = phase_gamma<double>(m, pt, spec.family(), spec.alpha());
    const double u = phase_upsilon<double>(m, pt, spec.family(), spec.alpha());
    const double s = spec.family() == Family::Hyperbolic ? sinh(2 * g) : sin(2 * g);
    return 2 * m.lambda * u - s;
  }
  if (spec.family() == Family::Soliton) {
    if (spec.has_complex_modes())
      return soliton_matrix<std::complex<double>>(spec, pt).determinant().real();
    return soliton_matrix<double>(spec, pt).determinant();
  }
  Matrix<double> k = interaction_matrix(spec, pt);
  const auto& modes = spec.spectral_modes();
  for (std::size_t i = 0; i < modes.size(); ++i)
    k.row(static_cast<Eigen::Index>(i)) *= 2 * modes[i].lambda;
  return k.determinant();
}

/// singular_indicator sampled on the grid, row-major.
inline std::vector<double> indicator_grid(const SolutionSpec& spec, const GridSpec& grid, double t,
                                          std::size_t threads = 0) {
  grid.validate();
  std::vector<double> d(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    d[k] = singular_indicator(spec, EvalPoint{grid.x(k % grid.nx), grid.y(k / grid.nx), t});
  });
  return d;
}

/// Cells on the sampled singular set: for every pair of 4-neighbours where
/// the indicator changes sign, the one with smaller |D| is marked. Unmarked
/// 4-neighbours therefore always share the sign of D.
inline std::vector<bool> sign_change_cells(const GridSpec& grid, const std::vector<double>& d) {
  std::vector<bool> marked(grid.size(), false);
  auto visit = [&](std::size_t a, std::size_t b) {
    if ((d[a] < 0.0) == (d[b] < 0.0)) return;
    marked[std::abs(d[a]) <= std::abs(d[b]) ? a : b] = true;
  };
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const std::size_t k = grid.index(i, j);
      if (i + 1 < grid.nx) visit(k, k + 1);
      if (j + 1 < grid.ny) visit(k, k + grid.nx);
    }
  return marked;
}

/// f over a grid at fixed t. Points where the determinant test fails, the
/// solve is not finite, or D changes sign against a neighbour (see
/// sign_change_cells) are marked singular and carry kSingularValue.
inline ScalarField field_f_grid(const SolutionSpec& spec, const GridSpec& grid, double t,
                                std::size_t threads = 0) {
  grid.validate();
  ScalarField out(grid);
  const auto marked = sign_change_cells(grid, indicator_grid(spec, grid, t, threads));
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    const std::size_t i = k % grid.nx, j = k / grid.nx;
    if (!marked[k]) {
      try {
        out.values[k] = field_f(spec, EvalPoint{grid.x(i), grid.y(j), t});
        return;
      } catch (const NumericalError&) {
      }
    }
    out.values[k] = kSingularValue;
    out.mask[k] = Cell::Singular;
  });
  return out;
}

}  // namespace kpc
