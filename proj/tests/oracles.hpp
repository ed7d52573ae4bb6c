#pragma once

// Reference computations written straight from the formulas, sharing no code
// with the library beyond its plain data types.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include <boost/math/tools/minima.hpp>
#include <boost/multiprecision/float128.hpp>

#include "kpc/types.hpp"

namespace oracle {

using boost::multiprecision::float128;

// Phases, term by term.
template <class R>
R gamma_trig(R lam, R mu, R g, R x, R y, R t) {
  return g + lam * x - 2 * lam * mu * y + 4 * lam * (lam * lam - 3 * mu * mu) * t;
}

template <class R>
R gamma_hyp(R lam, R mu, R g, R x, R y, R t) {
  return g + lam * x - 2 * lam * mu * y - 4 * lam * (lam * lam + 3 * mu * mu) * t;
}

template <class R>
R upsilon_trig(R lam, R mu, R chi, R rho, R x, R y, R t) {
  using std::cos;
  using std::sin;
  const R c = cos(chi), s = sin(chi);
  const R ycoef = 2 * (lam * s - mu * c);
  const R tcoef = 12 * (lam * lam * c - mu * mu * c + 2 * lam * mu * s);
  return rho + x * c + ycoef * y + tcoef * t;
}

template <class R>
R upsilon_hyp(R lam, R mu, R chi, R rho, R x, R y, R t) {
  using std::cosh;
  using std::sinh;
  const R c = cosh(chi), s = sinh(chi);
  const R ycoef = -2 * (lam * s + mu * c);
  const R tcoef = -12 * (lam * lam * c + mu * mu * c + 2 * lam * mu * s);
  return rho + x * c + ycoef * y + tcoef * t;
}

// Interaction matrix entry by entry. Off-diagonal phases carry the ∓χ/2 shift.
template <class R>
std::vector<std::vector<R>> interaction(const std::vector<kpc::SpectralMode>& modes, bool hyperbolic,
                                        R x, R y, R t) {
  using std::cos;
  using std::cosh;
  using std::sin;
  using std::sinh;
  const std::size_t n = modes.size();
  std::vector<R> G(n), U(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& m = modes[i];
    G[i] = hyperbolic ? gamma_hyp<R>(m.lambda, m.mu, m.gamma, x, y, t)
                      : gamma_trig<R>(m.lambda, m.mu, m.gamma, x, y, t);
    U[i] = hyperbolic ? upsilon_hyp<R>(m.lambda, m.mu, m.chi, m.rho, x, y, t)
                      : upsilon_trig<R>(m.lambda, m.mu, m.chi, m.rho, x, y, t);
  }
  std::vector<std::vector<R>> K(n, std::vector<R>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      const R la = modes[a].lambda, lb = modes[b].lambda;
      if (a == b) {
        K[a][a] = hyperbolic ? U[a] - sinh(2 * G[a]) / (2 * la) : U[a] - sin(2 * G[a]) / (2 * la);
        continue;
      }
      const R A = G[a] - R(modes[a].chi) / 2;
      const R B = G[b] + R(modes[b].chi) / 2;
      const R dm = R(modes[a].mu) - R(modes[b].mu);
      const R dl = la - lb, sl = la + lb;
      if (!hyperbolic) {
        const R dminus = dm * dm + dl * dl, dplus = dm * dm + sl * sl;
        K[a][b] = dl * sin(A - B) / dminus - sl * sin(A + B) / dplus +
                  dm * (cos(A + B) / dplus - cos(A - B) / dminus);
      } else {
        const R dminus = dm * dm - dl * dl, dplus = dm * dm - sl * sl;
        K[a][b] = -dl * sinh(A - B) / dminus + sl * sinh(A + B) / dplus +
                  dm * (cosh(A + B) / dplus - cosh(A - B) / dminus);
      }
    }
  return K;
}

// Soliton matrix A_mn = δ + c_n e^{θ_n} / (p_n + q_m).
template <class C>
std::vector<std::vector<C>> soliton(const std::vector<kpc::SolitonMode>& modes, C x, C y, C t) {
  const std::size_t n = modes.size();
  std::vector<std::vector<C>> A(n, std::vector<C>(n));
  for (std::size_t col = 0; col < n; ++col) {
    const C p(modes[col].p), q(modes[col].q), c(modes[col].c);
    const C k = p + q;
    const C theta = k * x + (q * q - p * p) * y - k * (k * k + C(3) * (p - q) * (p - q)) * t;
    for (std::size_t row = 0; row < n; ++row)
      A[row][col] = (row == col ? C(1) : C(0)) + c * std::exp(theta) / (p + C(modes[row].q));
  }
  return A;
}

// Laplace expansion along the first row.
template <class T>
T cofactor_det(const std::vector<std::vector<T>>& m) {
  const std::size_t n = m.size();
  if (n == 1) return m[0][0];
  T det(0);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<std::vector<T>> minor(n - 1);
    for (std::size_t r = 1; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c)
        if (c != j) minor[r - 1].push_back(m[r][c]);
    const T term = m[0][j] * cofactor_det(minor);
    det = (j % 2 == 0) ? det + term : det - term;
  }
  return det;
}

// 2 ∂²ₓ ln|D| from samples of ln|D| in quad precision: two 6th-order central
// second differences combined by Richardson extrapolation.
inline double second_log_derivative(const std::function<float128(float128)>& log_abs_d, double x,
                                    double h = 1e-3) {
  auto d2 = [&](float128 s) {
    const float128 X(x);
    const float128 c0 = log_abs_d(X);
    const float128 c1 = log_abs_d(X + s) + log_abs_d(X - s);
    const float128 c2 = log_abs_d(X + 2 * s) + log_abs_d(X - 2 * s);
    const float128 c3 = log_abs_d(X + 3 * s) + log_abs_d(X - 3 * s);
    return (2 * c3 - 27 * c2 + 270 * c1 - 490 * c0) / (180 * s * s);
  };
  const float128 H(h);
  const float128 coarse = d2(H), fine = d2(H / 2);
  return static_cast<double>(2 * (fine + (fine - coarse) / 127));
}

inline double f_interaction(const std::vector<kpc::SpectralMode>& modes, bool hyperbolic, double x,
                            double y, double t) {
  return second_log_derivative(
      [&](float128 X) {
        using std::abs;
        using std::log;
        return log(abs(cofactor_det(interaction<float128>(modes, hyperbolic, X, float128(y), float128(t)))));
      },
      x);
}

inline double f_soliton(const std::vector<kpc::SolitonMode>& modes, double x, double y, double t) {
  return second_log_derivative(
      [&](float128 X) {
        using C = std::complex<long double>;
        const auto A = soliton<C>(modes, C(static_cast<long double>(X)), C(y), C(t));
        return float128(std::log(std::abs(cofactor_det(A))));
      },
      x, 1e-2);
}

// Single soliton: f = (k²/2) sech²((θ + ln(c/k))/2), k = p + q.
inline double soliton_closed_form(double p, double q, double c, double x, double y, double t) {
  const double k = p + q;
  const double theta = k * x + (q * q - p * p) * y - k * (k * k + 3 * (p - q) * (p - q)) * t;
  const double s = 1.0 / std::cosh(0.5 * (theta + std::log(c / k)));
  return 0.5 * k * k * s * s;
}

// N = 1 breather through D = 2λΥ − sin 2Γ: f = 2(D_xx D − D_x²)/D².
inline double breather_closed_form(const kpc::SpectralMode& m, double x, double y, double t) {
  const double G = gamma_trig<double>(m.lambda, m.mu, m.gamma, x, y, t);
  const double U = upsilon_trig<double>(m.lambda, m.mu, m.chi, m.rho, x, y, t);
  const double D = 2 * m.lambda * U - std::sin(2 * G);
  const double Dx = 2 * m.lambda * (std::cos(m.chi) - std::cos(2 * G));
  const double Dxx = 4 * m.lambda * m.lambda * std::sin(2 * G);
  return 2 * (Dxx * D - Dx * Dx) / (D * D);
}

// Same for the dipole, D = 2λΥ − sinh 2Γ.
inline double dipole_closed_form(const kpc::SpectralMode& m, double x, double y, double t) {
  const double G = gamma_hyp<double>(m.lambda, m.mu, m.gamma, x, y, t);
  const double U = upsilon_hyp<double>(m.lambda, m.mu, m.chi, m.rho, x, y, t);
  const double D = 2 * m.lambda * U - std::sinh(2 * G);
  const double Dx = 2 * m.lambda * (std::cosh(m.chi) - std::cosh(2 * G));
  const double Dxx = -4 * m.lambda * m.lambda * std::sinh(2 * G);
  return 2 * (Dxx * D - Dx * Dx) / (D * D);
}

// Literal display formula F = sign(f)·ln[ln(|e^f − 1| + 1) + 1] in long double.
inline double regularize_literal(double f) {
  if (f == 0.0) return 0.0;
  const long double F = std::log(std::log(std::fabs(std::exp(static_cast<long double>(f)) - 1.0L) + 1.0L) + 1.0L);
  return static_cast<double>(f > 0 ? F : -F);
}

// Maximum of g on [lo, hi] by Brent's golden-section/parabolic search.
inline std::pair<double, double> maximize(const std::function<double(double)>& g, double lo, double hi) {
  auto r = boost::math::tools::brent_find_minima([&](double s) { return -g(s); }, lo, hi, 52);
  return {r.first, -r.second};
}

// Total-least-squares line through points; largest perpendicular distance.
inline double line_fit_max_deviation(const std::vector<std::pair<double, double>>& pts) {
  double mx = 0, my = 0;
  for (auto [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(pts.size());
  my /= static_cast<double>(pts.size());
  double sxx = 0, sxy = 0, syy = 0;
  for (auto [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  const double angle = 0.5 * std::atan2(2 * sxy, sxx - syy);
  const double nx = -std::sin(angle), ny = std::cos(angle);
  double worst = 0;
  for (auto [x, y] : pts) worst = std::max(worst, std::abs((x - mx) * nx + (y - my) * ny));
  return worst;
}

}  // namespace oracle
