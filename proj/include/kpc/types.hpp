#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "kpc/errors.hpp"

namespace kpc {

enum class Family { Trigonometric, Hyperbolic, Soliton };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::Trigonometric: return "trigonometric";
    case Family::Hyperbolic: return "hyperbolic";
    case Family::Soliton: return "soliton";
  }
  return "?";
}

/// One breather (trigonometric) or dipole (hyperbolic) mode.
struct SpectralMode {
  double lambda = 1.0;
  double mu = 0.0;
  double chi = 0.0;
  double gamma = 0.0;
  double rho = 0.0;

  friend bool operator==(const SpectralMode&, const SpectralMode&) = default;
};

/// One soliton (p, q, c). Complex values are only meaningful inside a
/// conjugate pair.
struct SolitonMode {
  std::complex<double> p{0.5, 0.0};
  std::complex<double> q{0.5, 0.0};
  std::complex<double> c{1.0, 0.0};

  bool is_real() const { return p.imag() == 0.0 && q.imag() == 0.0 && c.imag() == 0.0; }

  friend bool operator==(const SolitonMode&, const SolitonMode&) = default;
};

/// KP dimensionless coordinates.
struct EvalPoint {
  double x = 0.0;
  double y = 0.0;
  double t = 0.0;

  friend bool operator==(const EvalPoint&, const EvalPoint&) = default;
};

/// Largest mode count supported by the dense per-point evaluation.
inline constexpr std::size_t kMaxModes = 32;

namespace detail {

inline bool all_finite(std::initializer_list<double> v) {
  for (double d : v)
    if (!std::isfinite(d)) return false;
  return true;
}

inline std::string mode_field(std::size_t i, const char* name) {
  return "modes[" + std::to_string(i) + "]." + name;
}

}  // namespace detail

/// Family tag plus its modes. Immutable once built; the named constructors
/// enforce every construction-time invariant.
class SolutionSpec {
public:
  static SolutionSpec trigonometric(std::vector<SpectralMode> modes, double alpha = 1.0) {
    return spectral(Family::Trigonometric, std::move(modes), alpha);
  }

  static SolutionSpec hyperbolic(std::vector<SpectralMode> modes, double alpha = 1.0) {
    return spectral(Family::Hyperbolic, std::move(modes), alpha);
  }

  static SolutionSpec soliton(std::vector<SolitonMode> modes, double alpha = 1.0) {
    check_common(modes.size(), alpha);
    bool complex_modes = false;
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const auto& m = modes[i];
      if (!detail::all_finite({m.p.real(), m.p.imag(), m.q.real(), m.q.imag(), m.c.real(),
                               m.c.imag()}))
        throw ValidationError("modes[" + std::to_string(i) + "]", "non-finite soliton parameter");
    }
    for (std::size_t i = 0; i < modes.size();) {
      if (modes[i].is_real()) {
        ++i;
        continue;
      }
      complex_modes = true;
      if (i + 1 >= modes.size() || !is_conjugate(modes[i], modes[i + 1]))
        throw ValidationError("modes[" + std::to_string(i) + "]",
                              "complex soliton modes must come in adjacent conjugate pairs");
      i += 2;
    }
    for (std::size_t n = 0; n < modes.size(); ++n)
      for (std::size_t m = 0; m < modes.size(); ++m)
        if (modes[n].p + modes[m].q == std::complex<double>(0.0, 0.0))
          throw SingularDenominator("p[" + std::to_string(n) + "] + q[" + std::to_string(m) +
                                    "] = 0");
    SolutionSpec s;
    s.family_ = Family::Soliton;
    s.alpha_ = alpha;
    s.solitons_ = std::move(modes);
    s.complex_ = complex_modes;
    return s;
  }

  Family family() const { return family_; }
  double alpha() const { return alpha_; }
  std::size_t size() const {
    return family_ == Family::Soliton ? solitons_.size() : spectral_.size();
  }
  const std::vector<SpectralMode>& spectral_modes() const { return spectral_; }
  const std::vector<SolitonMode>& soliton_modes() const { return solitons_; }
  /// True when a soliton spec carries conjugate-paired complex modes.
  bool has_complex_modes() const { return complex_; }

private:
  SolutionSpec() = default;

  static void check_common(std::size_t n, double alpha) {
    if (n == 0) throw ValidationError("modes", "at least one mode is required");
    if (n > kMaxModes)
      throw ValidationError("modes", "at most " + std::to_string(kMaxModes) + " modes supported");
    if (alpha != 1.0) throw ValidationError("alpha", "only alpha = 1 is supported");
  }

  static bool is_conjugate(const SolitonMode& a, const SolitonMode& b) {
    auto close = [](std::complex<double> u, std::complex<double> v) {
      return std::abs(u - std::conj(v)) <= 1e-12 * (1.0 + std::abs(u));
    };
    return close(a.p, b.p) && close(a.q, b.q) && close(a.c, b.c);
  }

  static SolutionSpec spectral(Family family, std::vector<SpectralMode> modes, double alpha) {
    check_common(modes.size(), alpha);
    for (std::size_t i = 0; i < modes.size(); ++i) {
      const auto& m = modes[i];
      if (!std::isfinite(m.lambda)) throw ValidationError(detail::mode_field(i, "lambda"), "not finite");
      if (!std::isfinite(m.mu)) throw ValidationError(detail::mode_field(i, "mu"), "not finite");
      if (!std::isfinite(m.chi)) throw ValidationError(detail::mode_field(i, "chi"), "not finite");
      if (!std::isfinite(m.gamma)) throw ValidationError(detail::mode_field(i, "gamma"), "not finite");
      if (!std::isfinite(m.rho)) throw ValidationError(detail::mode_field(i, "rho"), "not finite");
      if (m.lambda == 0.0) throw ValidationError(detail::mode_field(i, "lambda"), "must be nonzero");
    }
    // Off-diagonal denominators a^2 (mu_n - mu_k)^2 +/- (lambda_n -/+ lambda_k)^2.
    const double sign = family == Family::Trigonometric ? 1.0 : -1.0;
    const double a2 = alpha * alpha;
    for (std::size_t n = 0; n < modes.size(); ++n) {
      for (std::size_t k = n + 1; k < modes.size(); ++k) {
        const double dm = modes[n].mu - modes[k].mu;
        const double dl = modes[n].lambda - modes[k].lambda;
        const double sl = modes[n].lambda + modes[k].lambda;
        for (double l : {dl, sl}) {
          const double d = a2 * dm * dm + sign * l * l;
          const double scale = a2 * dm * dm + l * l;
          if (scale == 0.0 || std::abs(d) <= 1e-12 * scale)
            throw DegenerateModes("modes " + std::to_string(n) + " and " + std::to_string(k) +
                                  " give a vanishing interaction denominator");
        }
      }
    }
    SolutionSpec s;
    s.family_ = family;
    s.alpha_ = alpha;
    s.spectral_ = std::move(modes);
    return s;
  }

  Family family_ = Family::Trigonometric;
  double alpha_ = 1.0;
  std::vector<SpectralMode> spectral_;
  std::vector<SolitonMode> solitons_;
  bool complex_ = false;
};

/// Rectangular sampling window. Samples sit at cell centers, stored row-major
/// with y increasing by row.
struct GridSpec {
  double x_min = -1.0;
  double x_max = 1.0;
  double y_min = -1.0;
  double y_max = 1.0;
  std::size_t nx = 2;
  std::size_t ny = 2;

  void validate() const {
    if (!(x_max > x_min)) throw ValidationError("grid.x_max", "must exceed x_min");
    if (!(y_max > y_min)) throw ValidationError("grid.y_max", "must exceed y_min");
    if (nx < 1) throw ValidationError("grid.nx", "must be positive");
    if (ny < 1) throw ValidationError("grid.ny", "must be positive");
  }

  double dx() const { return (x_max - x_min) / static_cast<double>(nx); }
  double dy() const { return (y_max - y_min) / static_cast<double>(ny); }
  double x(std::size_t i) const { return x_min + (static_cast<double>(i) + 0.5) * dx(); }
  double y(std::size_t j) const { return y_min + (static_cast<double>(j) + 0.5) * dy(); }
  std::size_t size() const { return nx * ny; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Mask values carried by a ScalarField.
enum class Cell : std::uint8_t { Regular = 0, Singular = 1 };

/// Sampled values over a GridSpec. Singular cells hold -inf and are flagged in
/// the mask.
struct ScalarField {
  GridSpec grid;
  std::vector<double> values;
  std::vector<Cell> mask;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g)
      : grid(g), values(g.size(), 0.0), mask(g.size(), Cell::Regular) {}

  double& at(std::size_t i, std::size_t j) { return values[grid.index(i, j)]; }
  double at(std::size_t i, std::size_t j) const { return values[grid.index(i, j)]; }
  bool singular(std::size_t k) const { return mask[k] == Cell::Singular; }
  std::size_t singular_count() const {
    std::size_t n = 0;
    for (Cell c : mask) n += c == Cell::Singular;
    return n;
  }
};

inline constexpr double kSingularValue = -std::numeric_limits<double>::infinity();

}  // namespace kpc
