#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "kpc/types.hpp"

namespace kpc {

/// Lower bound of the regularized amplitude, −ln(ln 2 + 1).
inline const double kRegularizedFloor = -std::log1p(std::numbers::ln2);

/// F = sign(f) ln[ln(|e^f − 1| + 1) + 1], with F(0) = 0.
///
/// For f > 0 the inner term is exactly f, so F = log1p(f) and no exponential
/// is formed. For f < 0, ln(2 − e^f) = ln 2 + log1p(−e^f / 2), which stays
/// accurate as f → −∞.
inline double regularize(double f) {
  if (f == 0.0) return 0.0;
  if (f > 0.0) return std::log1p(f);
  if (f == -std::numeric_limits<double>::infinity()) return kRegularizedFloor;
  const double inner = std::numbers::ln2 + std::log1p(-0.5 * std::exp(f));
  return -std::log1p(inner);
}

/// Elementwise regularize; singular cells take the floor value.
inline ScalarField regularize_field(const ScalarField& field) {
  ScalarField out = field;
  for (std::size_t k = 0; k < out.values.size(); ++k)
    out.values[k] = field.singular(k) ? kRegularizedFloor : regularize(field.values[k]);
  return out;
}

enum class ClipMode {
  Saturating,  // min(f, cap)
  Literal      // max(f, cap), as printed
};

/// Display map for positive amplitudes; negative values go through regularize.
inline double clip_display(double f, double cap = 10.0, ClipMode mode = ClipMode::Saturating) {
  if (f <= 0.0) return regularize(f);
  return mode == ClipMode::Saturating ? std::min(f, cap) : std::max(f, cap);
}

inline ScalarField clip_field(const ScalarField& field, double cap = 10.0,
                              ClipMode mode = ClipMode::Saturating) {
  ScalarField out = field;
  for (std::size_t k = 0; k < out.values.size(); ++k)
    out.values[k] = field.singular(k) ? kRegularizedFloor : clip_display(field.values[k], cap, mode);
  return out;
}

}  // namespace kpc
