#pragma once

// Extremes of f over time, transient detection, tops of the peak and the two
// deepest troughs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "kpc/errors.hpp"
#include "kpc/geometry.hpp"
#include "kpc/solution_kernel.hpp"

namespace kpc {

struct ExtremeSeries {
  std::vector<double> times;
  std::vector<double> max_value;
  std::vector<Vec2> max_location;
  std::vector<double> min_value;
  std::vector<Vec2> min_location;
  double exclusion_radius = 0.0;

  std::size_t size() const { return times.size(); }
};

struct RogueEvent {
  double t_peak = 0.0;       // weighted centre of the above-threshold run
  double t_max = 0.0;        // sample time of the largest max_value in the run
  double t_begin = 0.0;
  double t_end = 0.0;
  double amplitude = 0.0;
  double background = 0.0;
  double prominence_ratio = 0.0;
  std::vector<Vec2> tops;
};

namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Nelder–Mead on (x, y) restricted to a box; points outside the box or where
// the objective throws count as +inf.
template <class Fn>
std::pair<Vec2, double> nelder_mead_box(Fn&& objective, Vec2 start, Vec2 lo, Vec2 hi,
                                        int max_iter = 200) {
  auto eval = [&](Vec2 p) {
    if (p.x < lo.x || p.x > hi.x || p.y < lo.y || p.y > hi.y) return kInf;
    try {
      const double v = objective(p);
      return std::isfinite(v) ? v : kInf;
    } catch (const NumericalError&) {
      return kInf;
    }
  };
  const double sx = 0.25 * (hi.x - lo.x), sy = 0.25 * (hi.y - lo.y);
  std::array<Vec2, 3> s{start, Vec2{start.x + sx, start.y}, Vec2{start.x, start.y + sy}};
  std::array<double, 3> v{eval(s[0]), eval(s[1]), eval(s[2])};
  for (int it = 0; it < max_iter; ++it) {
    std::array<int, 3> o{0, 1, 2};
    std::sort(o.begin(), o.end(), [&](int a, int b) { return v[a] < v[b]; });
    const int best = o[0], mid = o[1], worst = o[2];
    if (std::abs(s[worst].x - s[best].x) < 1e-10 && std::abs(s[worst].y - s[best].y) < 1e-10)
      break;
    const Vec2 c{0.5 * (s[best].x + s[mid].x), 0.5 * (s[best].y + s[mid].y)};
    auto along = [&](double k) {
      return Vec2{c.x + k * (s[worst].x - c.x), c.y + k * (s[worst].y - c.y)};
    };
    const Vec2 r = along(-1.0);
    const double vr = eval(r);
    if (vr < v[best]) {
      const Vec2 e = along(-2.0);
      const double ve = eval(e);
      if (ve < vr) {
        s[worst] = e;
        v[worst] = ve;
      } else {
        s[worst] = r;
        v[worst] = vr;
      }
    } else if (vr < v[mid]) {
      s[worst] = r;
      v[worst] = vr;
    } else {
      const Vec2 k = vr < v[worst] ? along(-0.5) : along(0.5);
      const double vk = eval(k);
      if (vk < std::min(vr, v[worst])) {
        s[worst] = k;
        v[worst] = vk;
      } else {
        for (int m : {mid, worst}) {
          s[m] = Vec2{0.5 * (s[m].x + s[best].x), 0.5 * (s[m].y + s[best].y)};
          v[m] = eval(s[m]);
        }
      }
    }
  }
  const auto b = static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
  return {s[b], v[b]};
}

struct Sampled {
  ScalarField field;
  std::vector<bool> excluded;
};

inline Sampled sample(const SolutionSpec& spec, const GridSpec& grid, double t,
                      double exclusion_radius, std::size_t threads) {
  Sampled s{field_f_grid(spec, grid, t, threads), {}};
  s.excluded = exclusion_band(grid, singular_cells(s.field), exclusion_radius);
  return s;
}

// Refines a grid extremum within its own cell; sign = +1 for maxima, −1 for minima.
inline std::pair<Vec2, double> polish(const SolutionSpec& spec, const GridSpec& grid, double t,
                                      std::size_t k, double value, double sign) {
  const Vec2 c{grid.x(k % grid.nx), grid.y(k / grid.nx)};
  const Vec2 lo{c.x - 0.5 * grid.dx(), c.y - 0.5 * grid.dy()};
  const Vec2 hi{c.x + 0.5 * grid.dx(), c.y + 0.5 * grid.dy()};
  auto [p, v] = nelder_mead_box(
      [&](Vec2 q) { return -sign * field_f(spec, EvalPoint{q.x, q.y, t}); }, c, lo, hi);
  const double polished = -sign * v;
  if (!std::isfinite(polished) || sign * polished < sign * value) return {c, value};
  return {p, polished};
}

// Strict local extrema among 8 neighbours, all of them outside the exclusion band.
inline std::vector<std::size_t> local_extrema(const Sampled& s, double sign) {
  const auto& g = s.field.grid;
  std::vector<std::size_t> out;
  for (std::size_t j = 1; j + 1 < g.ny; ++j)
    for (std::size_t i = 1; i + 1 < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (s.excluded[k]) continue;
      const double v = sign * s.field.values[k];
      bool ok = true;
      for (int b = -1; b <= 1 && ok; ++b)
        for (int a = -1; a <= 1 && ok; ++a) {
          if (a == 0 && b == 0) continue;
          const std::size_t n = g.index(i + a, j + b);
          if (s.excluded[n] || sign * s.field.values[n] >= v) ok = false;
        }
      if (ok) out.push_back(k);
    }
  return out;
}

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace detail

/// Per time step: max and min of raw f over the samples farther than
/// `exclusion_radius` from the sampled singular set, each refined within its
/// grid cell by Nelder–Mead. Time steps run in parallel.
inline ExtremeSeries time_series_max(const SolutionSpec& spec, const GridSpec& grid,
                                     const std::vector<double>& times,
                                     double exclusion_radius = 0.5, std::size_t threads = 0) {
  if (times.empty()) throw ValidationError("times", "must not be empty");
  if (!std::is_sorted(times.begin(), times.end()))
    throw ValidationError("times", "must be sorted");
  grid.validate();
  const std::size_t n = times.size();
  ExtremeSeries out;
  out.times = times;
  out.exclusion_radius = exclusion_radius;
  out.max_value.assign(n, -detail::kInf);
  out.min_value.assign(n, detail::kInf);
  out.max_location.assign(n, Vec2{});
  out.min_location.assign(n, Vec2{});
  parallel_for(n, threads, [&](std::size_t ti) {
    const double t = times[ti];
    const auto s = detail::sample(spec, grid, t, exclusion_radius, 1);
    std::size_t kmax = grid.size(), kmin = grid.size();
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (s.excluded[k]) continue;
      const double v = s.field.values[k];
      if (kmax == grid.size() || v > s.field.values[kmax]) kmax = k;
      if (kmin == grid.size() || v < s.field.values[kmin]) kmin = k;
    }
    if (kmax == grid.size()) return;
    auto [pmax, vmax] = detail::polish(spec, grid, t, kmax, s.field.values[kmax], 1.0);
    auto [pmin, vmin] = detail::polish(spec, grid, t, kmin, s.field.values[kmin], -1.0);
    out.max_value[ti] = vmax;
    out.max_location[ti] = pmax;
    out.min_value[ti] = vmin;
    out.min_location[ti] = pmin;
  });
  return out;
}

/// Background: median of max_value over the samples within background_window
/// of either end of the series. An event is a maximal run of consecutive
/// samples with max_value ≥ ratio_threshold · background. Its t_peak is the
/// centre of the run weighted by the excess above that level, so that a
/// single-sample spike sits at its own time.
inline std::vector<RogueEvent> detect_transient(const ExtremeSeries& series,
                                                double background_window = 2.0,
                                                double ratio_threshold = 3.0) {
  const std::size_t n = series.size();
  if (n < 3) throw InsufficientWindow("series has fewer than 3 samples");
  const double t0 = series.times.front(), t1 = series.times.back();
  if (!(t1 - t0 > 2.0 * background_window))
    throw InsufficientWindow("series shorter than twice the background window");
  std::vector<double> outer;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = series.times[i];
    if (t <= t0 + background_window || t >= t1 - background_window)
      outer.push_back(series.max_value[i]);
  }
  if (outer.empty()) throw InsufficientWindow("no samples in the background window");
  std::sort(outer.begin(), outer.end());
  const std::size_t m = outer.size();
  const double background = m % 2 ? outer[m / 2] : 0.5 * (outer[m / 2 - 1] + outer[m / 2]);

  std::vector<RogueEvent> events;
  if (!(background > 0.0)) return events;
  const double level = ratio_threshold * background;
  for (std::size_t i = 0; i < n;) {
    if (!(series.max_value[i] >= level)) {
      ++i;
      continue;
    }
    std::size_t j = i;
    RogueEvent e;
    e.background = background;
    e.t_begin = series.times[i];
    double wsum = 0.0, wt = 0.0, tsum = 0.0;
    e.amplitude = -detail::kInf;
    for (; j < n && series.max_value[j] >= level; ++j) {
      const double v = series.max_value[j];
      const double w = v - level;
      wsum += w;
      wt += w * series.times[j];
      tsum += series.times[j];
      if (v > e.amplitude) {
        e.amplitude = v;
        e.t_max = series.times[j];
      }
    }
    e.t_end = series.times[j - 1];
    e.t_peak = wsum > 0.0 ? wt / wsum : tsum / static_cast<double>(j - i);
    e.prominence_ratio = e.amplitude / background;
    events.push_back(e);
    i = j;
  }
  return events;
}

/// Local maxima of f(·, ·, t) within 90% of the largest one, merged when
/// closer than `min_separation`; at most two, highest first.
inline std::vector<Vec2> locate_tops(const SolutionSpec& spec, const GridSpec& grid, double t,
                                     double exclusion_radius = 0.5, double min_separation = 1.0,
                                     std::size_t threads = 0) {
  const auto s = detail::sample(spec, grid, t, exclusion_radius, threads);
  struct Cand {
    Vec2 p;
    double v;
  };
  std::vector<Cand> cands;
  for (std::size_t k : detail::local_extrema(s, 1.0)) {
    auto [p, v] = detail::polish(spec, grid, t, k, s.field.values[k], 1.0);
    cands.push_back({p, v});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.v > b.v; });
  std::vector<Vec2> tops;
  if (cands.empty()) return tops;
  const double cut = cands.front().v >= 0.0 ? 0.9 * cands.front().v : 1.1 * cands.front().v;
  for (const auto& c : cands) {
    if (c.v < cut || tops.size() == 2) break;
    bool near = false;
    for (const auto& q : tops) near = near || detail::distance(q, c.p) < min_separation;
    if (!near) tops.push_back(c.p);
  }
  return tops;
}

inline void attach_tops(RogueEvent& event, const SolutionSpec& spec, const GridSpec& grid,
                        double exclusion_radius = 0.5, std::size_t threads = 0) {
  event.tops = locate_tops(spec, grid, event.t_peak, exclusion_radius, 1.0, threads);
}

struct Trough {
  Vec2 location;
  double depth = 0.0;
};

/// The two deepest local minima of f at time t that lie below
/// −0.1 · max |f| and are at least `min_separation` apart, deepest first.
inline std::vector<Trough> trough_points(const SolutionSpec& spec, const GridSpec& grid, double t,
                                         double exclusion_radius = 0.5,
                                         double min_separation = 1.0, std::size_t threads = 0) {
  const auto s = detail::sample(spec, grid, t, exclusion_radius, threads);
  double scale = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (!s.excluded[k]) scale = std::max(scale, std::abs(s.field.values[k]));
  const double limit = -0.1 * scale;
  std::vector<Trough> cands;
  for (std::size_t k : detail::local_extrema(s, -1.0)) {
    if (!(s.field.values[k] < limit)) continue;
    auto [p, v] = detail::polish(spec, grid, t, k, s.field.values[k], -1.0);
    cands.push_back({p, v});
  }
  std::sort(cands.begin(), cands.end(),
            [](const Trough& a, const Trough& b) { return a.depth < b.depth; });
  std::vector<Trough> out;
  for (const auto& c : cands) {
    if (out.empty() || detail::distance(out.front().location, c.location) >= min_separation)
      out.push_back(c);
    if (out.size() == 2) break;
  }
  if (out.size() < 2) throw FewerThanTwoTroughs("fewer than two separated troughs at t = " +
                                                std::to_string(t));
  return out;
}

inline double trough_separation(const std::vector<Trough>& troughs) {
  return detail::distance(troughs.at(0).location, troughs.at(1).location);
}

}  // namespace kpc
