#pragma once

// Byte-exact CSV/PGM writers and JSON/CSV report encoders.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kpc/config.hpp"
#include "kpc/errors.hpp"
#include "kpc/geometry.hpp"
#include "kpc/regularization.hpp"
#include "kpc/rogue_scan.hpp"
#include "kpc/types.hpp"
#include "kpc/verification.hpp"

namespace kpc {

/// 17 significant digits, enough to read every double back exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// The display map chosen by a scenario. Singular cells keep their mask.
inline ScalarField display_field(const ScalarField& f, Regularization reg,
                                 const ClipOptions& clip = {}) {
  switch (reg) {
    case Regularization::None: return f;
    case Regularization::LogLog: return regularize_field(f);
    case Regularization::Clipped: return clip_field(f, clip.cap, clip.mode);
  }
  return f;
}

inline void write_csv(std::ostream& os, const ScalarField& f, const ScalarField& F) {
  os << "x,y,f,F,mask\n";
  const auto& g = f.grid;
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      os << format_double(g.x(i)) << ',' << format_double(g.y(j)) << ','
         << format_double(f.values[k]) << ',' << format_double(F.values[k]) << ','
         << (f.singular(k) ? 1 : 0) << '\n';
    }
}

namespace detail {

template <class Fn>
void write_file(const std::string& path, Fn&& body) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(path, "cannot open for writing");
  body(os);
  os.flush();
  if (!os) throw IoError(path, "write failed");
}

}  // namespace detail

/// Header "x,y,f,F,mask", one row per sample in row-major order, LF endings.
inline void export_csv(const ScalarField& field, const std::string& path,
                       Regularization reg = Regularization::LogLog, const ClipOptions& clip = {}) {
  const ScalarField F = display_field(field, reg, clip);
  detail::write_file(path, [&](std::ostream& os) { write_csv(os, field, F); });
}

struct PgmResult {
  double lo = 0.0;
  double hi = 0.0;
  bool degenerate = false;  // hi == lo: every pixel written as 128
};

/// Binary P5 image, maxval 255, top row = largest y. Singular or non-finite
/// samples are written as 0. The default range is the min/max of the remaining
/// samples.
inline PgmResult write_pgm(std::ostream& os, const ScalarField& field,
                           std::optional<std::pair<double, double>> range = std::nullopt) {
  const auto& g = field.grid;
  auto usable = [&](std::size_t k) { return !field.singular(k) && std::isfinite(field.values[k]); };
  PgmResult r;
  if (range) {
    r.lo = range->first;
    r.hi = range->second;
  } else {
    bool any = false;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (!usable(k)) continue;
      const double v = field.values[k];
      r.lo = any ? std::min(r.lo, v) : v;
      r.hi = any ? std::max(r.hi, v) : v;
      any = true;
    }
  }
  r.degenerate = !(r.hi > r.lo);
  std::string pixels(g.size(), '\0');
  std::size_t o = 0;
  for (std::size_t jj = g.ny; jj-- > 0;)
    for (std::size_t i = 0; i < g.nx; ++i, ++o) {
      const std::size_t k = g.index(i, jj);
      if (r.degenerate) {
        pixels[o] = static_cast<char>(128);
      } else if (usable(k)) {
        const double v = std::clamp(field.values[k], r.lo, r.hi);
        pixels[o] = static_cast<char>(std::lround(255.0 * (v - r.lo) / (r.hi - r.lo)));
      }
    }
  os << "P5\n" << g.nx << ' ' << g.ny << "\n255\n";
  os.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
  return r;
}

inline PgmResult export_pgm(const ScalarField& field, const std::string& path,
                            std::optional<std::pair<double, double>> range = std::nullopt) {
  PgmResult r;
  detail::write_file(path, [&](std::ostream& os) { r = write_pgm(os, field, range); });
  return r;
}

inline void write_trace_csv(std::ostream& os, const SingularTrace& trace) {
  os << "segment,x,y\n";
  for (std::size_t s = 0; s < trace.segments.size(); ++s)
    for (const auto& p : trace.segments[s])
      os << s << ',' << format_double(p.x) << ',' << format_double(p.y) << '\n';
}

inline void write_series_csv(std::ostream& os, const ExtremeSeries& s) {
  os << "t,max_value,max_x,max_y,min_value,min_x,min_y\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    os << format_double(s.times[i]) << ',' << format_double(s.max_value[i]) << ','
       << format_double(s.max_location[i].x) << ',' << format_double(s.max_location[i].y) << ','
       << format_double(s.min_value[i]) << ',' << format_double(s.min_location[i].x) << ','
       << format_double(s.min_location[i].y) << '\n';
}

inline void write_limit_csv(std::ostream& os, const std::vector<LimitSample>& rows) {
  os << "eps,error,conditioned\n";
  for (const auto& r : rows)
    os << format_double(r.eps) << ',' << format_double(r.error) << ',' << (r.conditioned ? 1 : 0)
       << '\n';
}

namespace detail {

// JSON has no infinities or NaN; those go out as null.
inline nlohmann::json num(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline nlohmann::json to_json(const ResidualReport& r) {
  using detail::num;
  return {{"max_residual", num(r.max_residual)},
          {"median_residual", num(r.median_residual)},
          {"points_checked", r.points_checked},
          {"points_excluded", r.points_excluded},
          {"normalization", num(r.normalization)},
          {"normalization_checked", num(r.normalization_checked)},
          {"relative", num(r.relative())},
          {"relative_checked", num(r.relative_checked())},
          {"max_location", {num(r.max_location.x), num(r.max_location.y), num(r.max_location.t)}},
          {"h", num(r.h)},
          {"exclusion_radius", num(r.exclusion_radius)}};
}

inline nlohmann::json to_json(const RogueEvent& e) {
  using detail::num;
  nlohmann::json tops = nlohmann::json::array();
  for (const auto& p : e.tops) tops.push_back({num(p.x), num(p.y)});
  return {{"t_peak", num(e.t_peak)},          {"t_max", num(e.t_max)},
          {"t_begin", num(e.t_begin)},        {"t_end", num(e.t_end)},
          {"amplitude", num(e.amplitude)},    {"background", num(e.background)},
          {"prominence_ratio", num(e.prominence_ratio)}, {"tops", tops}};
}

inline std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

}  // namespace kpc
