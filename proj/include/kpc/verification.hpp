#pragma once

// KP residual by finite differences of the exact field, and the ε → 0
// degeneration of a conjugate soliton pair into a harmonic breather.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "kpc/errors.hpp"
#include "kpc/geometry.hpp"
#include "kpc/numeric.hpp"
#include "kpc/solution_kernel.hpp"

namespace kpc {

namespace detail {

template <class Real>
Real kp_residual_impl(const SolutionSpec& spec, const EvalPoint& pt, double h_in) {
  using std::abs;
  const BasicPoint<Real> p0 = lift<Real>(pt);
  const Real h(h_in);
  auto f_at = [&](int a, int b, int c) -> Real {
    BasicPoint<Real> q = p0;
    q.x += Real(a) * h;
    q.y += Real(b) * h;
    q.t += Real(c) * h;
    try {
      return field_f<Real>(spec, q);
    } catch (const NumericalError&) {
      throw StencilOnSingularSet("residual stencil touches the singular set");
    }
  };

  std::array<Real, 7> fx;  // offsets −3..3 along x
  for (int a = -3; a <= 3; ++a) fx[a + 3] = f_at(a, 0, 0);
  const Real f0 = fx[3];
  const Real f_x = (fx[1] - 8 * fx[2] + 8 * fx[4] - fx[5]) / (12 * h);
  const Real f_xx = (-fx[1] + 16 * fx[2] - 30 * f0 + 16 * fx[4] - fx[5]) / (12 * h * h);
  const Real f_xxxx =
      (-fx[0] + 12 * fx[1] - 39 * fx[2] + 56 * f0 - 39 * fx[4] + 12 * fx[5] - fx[6]) /
      (6 * h * h * h * h);

  const Real fym2 = f_at(0, -2, 0), fym1 = f_at(0, -1, 0), fyp1 = f_at(0, 1, 0),
             fyp2 = f_at(0, 2, 0);
  const Real f_yy = (-fym2 + 16 * fym1 - 30 * f0 + 16 * fyp1 - fyp2) / (12 * h * h);

  static constexpr std::array<int, 4> off{-2, -1, 1, 2};
  static constexpr std::array<int, 4> w{1, -8, 8, -1};
  Real cross(0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) cross += Real(w[i] * w[j]) * f_at(off[i], 0, off[j]);
  const Real f_xt = cross / (144 * h * h);

  const Real a2(spec.alpha() * spec.alpha());
  return abs(f_xt + f_xxxx + 6 * (f_x * f_x + f0 * f_xx) + 3 * a2 * f_yy);
}

inline void check_stencil_signs(const SolutionSpec& spec, const EvalPoint& pt, double h) {
  const double d0 = singular_indicator(spec, pt);
  auto same = [&](double dx, double dy, double dt) {
    const double d = singular_indicator(spec, EvalPoint{pt.x + dx, pt.y + dy, pt.t + dt});
    return (d < 0.0) == (d0 < 0.0);
  };
  for (int a = -3; a <= 3; ++a)
    for (int c = -2; c <= 2; ++c)
      if (!same(a * h, 0.0, c * h))
        throw StencilOnSingularSet("residual stencil straddles the singular set");
  for (int b = -2; b <= 2; ++b)
    if (!same(0.0, b * h, 0.0))
      throw StencilOnSingularSet("residual stencil straddles the singular set");
}

}  // namespace detail

/// |∂ₓ(f_t + f_xxx + 6 f f_x) + 3α² f_yy| from central differences of field_f:
/// 7-point f_xxxx, 5-point f_x, f_xx, f_yy and a 4×4 cross stencil for f_xt.
/// Real specs are evaluated in quad precision, complex soliton specs in long
/// double; double roundoff would swamp the h⁴ truncation at h ~ 5e-3.
inline double kp_residual(const SolutionSpec& spec, const EvalPoint& pt, double h) {
  if (!(h > 0.0)) throw InputError("residual step must be positive");
  detail::check_stencil_signs(spec, pt, h);
  if (spec.family() == Family::Soliton && spec.has_complex_modes())
    return static_cast<double>(detail::kp_residual_impl<long double>(spec, pt, h));
  return to_double(detail::kp_residual_impl<Quad>(spec, pt, h));
}

struct ResidualReport {
  double max_residual = 0.0;
  double median_residual = 0.0;
  std::size_t points_checked = 0;
  std::size_t points_excluded = 0;
  /// max |f| over the regular samples of the window.
  double normalization = 0.0;
  /// max |f| over the checked samples only.
  double normalization_checked = 0.0;
  EvalPoint max_location{};
  double h = 0.0;
  double exclusion_radius = 0.0;

  double relative() const { return normalization > 0.0 ? max_residual / normalization : 0.0; }
  double relative_checked() const {
    return normalization_checked > 0.0 ? max_residual / normalization_checked : 0.0;
  }
};

/// kp_residual on every sample farther than exclusion_radius from the sampled
/// singular set. Points whose stencil still meets it are counted as excluded.
inline ResidualReport residual_scan(const SolutionSpec& spec, const GridSpec& grid, double t,
                                    double h = 5e-3, double exclusion_radius = 0.5,
                                    std::size_t threads = 0) {
  const ScalarField field = field_f_grid(spec, grid, t, threads);
  const auto band = exclusion_band(grid, singular_cells(field), exclusion_radius);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> res(grid.size(), nan);
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    if (band[k]) return;
    try {
      res[k] = kp_residual(spec, EvalPoint{grid.x(k % grid.nx), grid.y(k / grid.nx), t}, h);
    } catch (const NumericalError&) {
    }
  });

  ResidualReport rep;
  rep.h = h;
  rep.exclusion_radius = exclusion_radius;
  std::vector<double> checked;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (!field.singular(k)) rep.normalization = std::max(rep.normalization, std::abs(field.values[k]));
    if (std::isnan(res[k])) {
      ++rep.points_excluded;
      continue;
    }
    checked.push_back(res[k]);
    rep.normalization_checked = std::max(rep.normalization_checked, std::abs(field.values[k]));
    if (res[k] > rep.max_residual || checked.size() == 1) {
      rep.max_residual = res[k];
      rep.max_location = EvalPoint{grid.x(k % grid.nx), grid.y(k / grid.nx), t};
    }
  }
  rep.points_checked = checked.size();
  if (!checked.empty()) {
    std::sort(checked.begin(), checked.end());
    const std::size_t n = checked.size();
    rep.median_residual = n % 2 ? checked[n / 2] : 0.5 * (checked[n / 2 - 1] + checked[n / 2]);
  }
  return rep;
}

/// Conjugate soliton pair whose ε → 0 limit is the harmonic breather of
/// `mode`: p = iλ + μ + εe^{iχ}, q = iλ − μ + εe^{−iχ},
/// c = 2ε e^{iγ' − iχ + ϱε} with γ' = 2γ + χ and ϱ = 2ρ, plus conjugates.
inline SolutionSpec degeneration_pair(const SpectralMode& mode, double eps, double alpha = 1.0) {
  using C = std::complex<double>;
  const C i(0.0, 1.0);
  const double gamma_rec = 2.0 * mode.gamma + mode.chi;
  const double varrho = 2.0 * mode.rho;
  const C p = i * mode.lambda + mode.mu + eps * std::exp(i * mode.chi);
  const C q = i * mode.lambda - mode.mu + eps * std::exp(-i * mode.chi);
  const C c = 2.0 * eps * std::exp(i * gamma_rec - i * mode.chi + varrho * eps);
  return SolutionSpec::soliton({SolitonMode{p, q, c}, SolitonMode{std::conj(p), std::conj(q),
                                                                  std::conj(c)}},
                               alpha);
}

struct LimitSample {
  double eps = 0.0;
  double error = std::numeric_limits<double>::quiet_NaN();
  bool conditioned = true;
  std::string message;
};

/// For each ε, max over probes of |f_soliton(ε) − f_breather|. A probe that
/// lands on the numerically singular set marks that ε as ill-conditioned.
inline std::vector<LimitSample> soliton_limit_check(const SpectralMode& mode, double alpha,
                                                    const std::vector<double>& eps_list,
                                                    const std::vector<EvalPoint>& probes) {
  const auto breather = SolutionSpec::trigonometric({mode}, alpha);
  std::vector<double> reference;
  reference.reserve(probes.size());
  for (const auto& p : probes) reference.push_back(field_f(breather, p));
  std::vector<LimitSample> out;
  for (double eps : eps_list) {
    LimitSample s;
    s.eps = eps;
    try {
      if (!(eps > 0.0)) throw InputError("eps must be positive");
      const auto pair = degeneration_pair(mode, eps, alpha);
      double err = 0.0;
      for (std::size_t k = 0; k < probes.size(); ++k)
        err = std::max(err, std::abs(field_f(pair, probes[k]) - reference[k]));
      s.error = err;
    } catch (const NumericalError& e) {
      s.conditioned = false;
      s.message = e.what();
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace kpc
