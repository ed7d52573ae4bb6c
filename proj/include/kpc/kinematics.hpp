#pragma once

// Physical layer: depth/surface-tension constant, coordinate maps, surface
// elevation and leading-order fluid velocities.

#include <algorithm>
#include <cmath>
#include <vector>

#include "kpc/errors.hpp"
#include "kpc/solution_kernel.hpp"
#include "kpc/types.hpp"

namespace kpc {

struct FluidParams {
  double g = 9.8;            // m/s^2
  double h = 1.0;            // depth, m
  double epsilon = 0.1;      // amplitude/depth ratio
  double rho_fluid = 1000.0; // kg/m^3
  double S = 0.0;            // surface tension, s/(rho h^2 g)

  void validate() const {
    if (!(g > 0.0) || !std::isfinite(g)) throw ValidationError("fluid.g", "must be positive");
    if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("fluid.h", "must be positive");
    if (!(epsilon > 0.0 && epsilon <= 1.0))
      throw ValidationError("fluid.epsilon", "must lie in (0, 1]");
    if (!(rho_fluid > 0.0) || !std::isfinite(rho_fluid))
      throw ValidationError("fluid.rho_fluid", "must be positive");
    if (!(S >= 0.0) || !std::isfinite(S)) throw ValidationError("fluid.S", "must be non-negative");
  }

  friend bool operator==(const FluidParams&, const FluidParams&) = default;
};

struct PhysicalPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double t = 0.0;
};

/// α² = 2ρg / (ρgh² − 3S). Its sign picks the KP sign case; the KP-side
/// computations always run at α = 1.
inline double alpha_squared(const FluidParams& fluid) {
  const double denom = fluid.rho_fluid * fluid.g * fluid.h * fluid.h - 3.0 * fluid.S;
  if (denom == 0.0) throw DegenerateDepth("rho g h^2 = 3 S makes alpha^2 undefined");
  return 2.0 * fluid.rho_fluid * fluid.g / denom;
}

/// t' = 3α²t/√(gh), x' = x + 3α²t, y' = y/√2. z is left at 0.
inline PhysicalPoint to_physical(const EvalPoint& pt, const FluidParams& fluid, double alpha2) {
  PhysicalPoint p;
  p.t = 3.0 * alpha2 * pt.t / std::sqrt(fluid.g * fluid.h);
  p.x = pt.x + 3.0 * alpha2 * pt.t;
  p.y = pt.y / std::sqrt(2.0);
  return p;
}

inline EvalPoint to_kp(const PhysicalPoint& p, const FluidParams& fluid, double alpha2) {
  EvalPoint pt;
  pt.t = p.t * std::sqrt(fluid.g * fluid.h) / (3.0 * alpha2);
  pt.x = p.x - 3.0 * alpha2 * pt.t;
  pt.y = p.y * std::sqrt(2.0);
  return pt;
}

/// Dimensionless elevation η₀ = 4f / (3εα²).
inline double elevation(double f, const FluidParams& fluid, double alpha2) {
  return 4.0 * f / (3.0 * fluid.epsilon * alpha2);
}

/// Elevation in meters, εh·η₀.
inline double elevation_m(double f, const FluidParams& fluid, double alpha2) {
  return fluid.epsilon * fluid.h * elevation(f, fluid, alpha2);
}

inline double velocity_x(double f, const FluidParams& fluid, double alpha2) {
  return 4.0 * std::sqrt(fluid.g * fluid.h) / (3.0 * alpha2) * f;
}

inline double velocity_z(double f_x, double z_phys, const FluidParams& fluid, double alpha2) {
  if (z_phys < -fluid.h) throw ValidationError("z", "below the bottom");
  return -(fluid.h + z_phys) * 4.0 * std::sqrt(fluid.g * fluid.h) / (3.0 * alpha2) * f_x;
}

enum class FxPath { FiniteDifference, Analytic };

/// ∂ₓf at a point: fourth-order central differences of field_f (default),
/// or the analytic third log-determinant derivative.
inline double f_x(const SolutionSpec& spec, const EvalPoint& pt,
                  FxPath path = FxPath::FiniteDifference, double h = 1e-3) {
  if (path == FxPath::Analytic) return field_f_x(spec, pt);
  auto at = [&](double dx) { return field_f(spec, EvalPoint{pt.x + dx, pt.y, pt.t}); };
  return (at(-2 * h) - 8 * at(-h) + 8 * at(h) - at(2 * h)) / (12 * h);
}

/// +1 where f drives flow to the right, −1 to the left, 0 inside the band
/// |f| < 1e-6 · max |f|. Singular cells count as −1 (f → −∞ there).
inline std::vector<int> undertow_map(const ScalarField& field) {
  double peak = 0.0;
  for (std::size_t k = 0; k < field.values.size(); ++k)
    if (!field.singular(k) && std::isfinite(field.values[k]))
      peak = std::max(peak, std::abs(field.values[k]));
  const double band = 1e-6 * peak;
  std::vector<int> out(field.values.size(), 0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (field.singular(k)) {
      out[k] = -1;
      continue;
    }
    const double v = field.values[k];
    out[k] = (v == 0.0 || std::abs(v) < band) ? 0 : (v > 0.0 ? 1 : -1);
  }
  return out;
}

}  // namespace kpc
