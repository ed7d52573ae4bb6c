#pragma once

// Singular curves (zero set of the determinant), sign components and
// half-plane cuts on a sampled window.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "kpc/regularization.hpp"
#include "kpc/solution_kernel.hpp"
#include "kpc/types.hpp"

namespace kpc {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Polylines along D = 0 at fixed t. Each vertex was bisected until
/// |D| < tolerance_factor · (1 + max |D| at the bracketing samples).
struct SingularTrace {
  std::vector<std::vector<Vec2>> segments;
  double tolerance_factor = 1e-10;

  std::size_t vertex_count() const {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.size();
    return n;
  }
  bool empty() const { return segments.empty(); }
};

namespace detail {

inline Vec2 bisect_edge(const SolutionSpec& spec, double t, Vec2 a, Vec2 b, double da, double db,
                        double factor) {
  const double tol = factor * (1.0 + std::max(std::abs(da), std::abs(db)));
  Vec2 mid = a;
  for (int it = 0; it < 60; ++it) {
    mid = {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
    const double dm = singular_indicator(spec, EvalPoint{mid.x, mid.y, t});
    if (std::abs(dm) < tol || dm == 0.0) break;
    if ((dm < 0.0) == (da < 0.0)) {
      a = mid;
      da = dm;
    } else {
      b = mid;
    }
  }
  return mid;
}

}  // namespace detail

/// Marching squares over the sample lattice. Crossings on lattice edges are
/// bisected, then joined cell by cell into polylines; a cell with four
/// crossings is split according to the sign of D at its center. Assumes D
/// changes sign at most once per lattice edge.
inline SingularTrace scan_singular_curve(const SolutionSpec& spec, const GridSpec& grid, double t,
                                         std::size_t threads = 0) {
  grid.validate();
  SingularTrace trace;
  if (grid.nx < 2 || grid.ny < 2) return trace;
  const auto d = indicator_grid(spec, grid, t, threads);
  const std::size_t nx = grid.nx, ny = grid.ny;
  auto neg = [&](std::size_t i, std::size_t j) { return d[grid.index(i, j)] < 0.0; };

  // Edge ids: horizontal (i,j)-(i+1,j) then vertical (i,j)-(i,j+1).
  const std::size_t n_horizontal = (nx - 1) * ny;
  auto h_edge = [&](std::size_t i, std::size_t j) { return j * (nx - 1) + i; };
  auto v_edge = [&](std::size_t i, std::size_t j) { return n_horizontal + j * nx + i; };
  const std::size_t n_edges = n_horizontal + nx * (ny - 1);

  std::vector<std::uint8_t> crosses(n_edges, 0);
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      if (i + 1 < nx && neg(i, j) != neg(i + 1, j)) crosses[h_edge(i, j)] = 1;
      if (j + 1 < ny && neg(i, j) != neg(i, j + 1)) crosses[v_edge(i, j)] = 1;
    }

  std::vector<std::size_t> edge_ids;
  for (std::size_t e = 0; e < n_edges; ++e)
    if (crosses[e]) edge_ids.push_back(e);
  std::vector<Vec2> point(n_edges);
  parallel_for(edge_ids.size(), threads, [&](std::size_t k) {
    const std::size_t e = edge_ids[k];
    std::size_t i0, j0, i1, j1;
    if (e < n_horizontal) {
      j0 = j1 = e / (nx - 1);
      i0 = e % (nx - 1);
      i1 = i0 + 1;
    } else {
      j0 = (e - n_horizontal) / nx;
      i0 = i1 = (e - n_horizontal) % nx;
      j1 = j0 + 1;
    }
    point[e] = detail::bisect_edge(spec, t, {grid.x(i0), grid.y(j0)}, {grid.x(i1), grid.y(j1)},
                                   d[grid.index(i0, j0)], d[grid.index(i1, j1)],
                                   trace.tolerance_factor);
  });

  // Adjacency between crossings; each lattice edge borders at most two cells.
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<std::array<std::size_t, 2>> link(n_edges, {kNone, kNone});
  auto connect = [&](std::size_t a, std::size_t b) {
    auto add = [&](std::size_t from, std::size_t to) {
      auto& l = link[from];
      (l[0] == kNone ? l[0] : l[1]) = to;
    };
    add(a, b);
    add(b, a);
  };
  for (std::size_t j = 0; j + 1 < ny; ++j)
    for (std::size_t i = 0; i + 1 < nx; ++i) {
      // Cell edges in counter-clockwise order: bottom, right, top, left.
      const std::array<std::size_t, 4> e{h_edge(i, j), v_edge(i + 1, j), h_edge(i, j + 1),
                                         v_edge(i, j)};
      std::array<std::size_t, 4> hit{};
      std::size_t n_hit = 0;
      for (std::size_t s = 0; s < 4; ++s)
        if (crosses[e[s]]) hit[n_hit++] = s;
      if (n_hit == 2) {
        connect(e[hit[0]], e[hit[1]]);
      } else if (n_hit == 4) {
        const double xc = 0.5 * (grid.x(i) + grid.x(i + 1));
        const double yc = 0.5 * (grid.y(j) + grid.y(j + 1));
        const bool center_neg = singular_indicator(spec, EvalPoint{xc, yc, t}) < 0.0;
        // Corners around the cell share the center's sign when they are
        // joined through it; the curve pieces then cut off the other pair.
        if (center_neg == neg(i, j)) {
          connect(e[0], e[1]);
          connect(e[2], e[3]);
        } else {
          connect(e[0], e[3]);
          connect(e[1], e[2]);
        }
      }
    }

  std::vector<std::uint8_t> used(n_edges, 0);
  auto walk = [&](std::size_t start) {
    std::vector<Vec2> line;
    std::size_t prev = kNone, cur = start;
    while (cur != kNone && !used[cur]) {
      used[cur] = 1;
      line.push_back(point[cur]);
      const auto& l = link[cur];
      const std::size_t next = l[0] != prev ? l[0] : l[1];
      prev = cur;
      cur = next;
    }
    if (cur != kNone && cur == start) line.push_back(point[start]);
    return line;
  };
  // Open chains start at crossings with a single neighbour, closed loops after.
  for (std::size_t e : edge_ids)
    if (!used[e] && (link[e][0] == kNone || link[e][1] == kNone))
      trace.segments.push_back(walk(e));
  for (std::size_t e : edge_ids)
    if (!used[e]) trace.segments.push_back(walk(e));
  return trace;
}

/// Integer labels over a grid; 0 marks singular cells.
struct ComponentMask {
  GridSpec grid;
  std::vector<int> labels;
  int count = 0;

  std::size_t population(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
  }
};

/// 4-connected flood fill of the cells not on the sampled singular set.
/// `blocked` uses the same convention as field_f_grid's mask.
inline ComponentMask label_components(const GridSpec& grid, const std::vector<bool>& blocked) {
  ComponentMask out{grid, std::vector<int>(grid.size(), -1), 0};
  std::vector<std::size_t> stack;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (blocked[k]) {
      out.labels[k] = 0;
      continue;
    }
    if (out.labels[k] != -1) continue;
    const int label = ++out.count;
    out.labels[k] = label;
    stack.push_back(k);
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      const std::size_t i = c % grid.nx, j = c / grid.nx;
      auto push = [&](std::size_t n) {
        if (!blocked[n] && out.labels[n] == -1) {
          out.labels[n] = label;
          stack.push_back(n);
        }
      };
      if (i > 0) push(c - 1);
      if (i + 1 < grid.nx) push(c + 1);
      if (j > 0) push(c - grid.nx);
      if (j + 1 < grid.ny) push(c + grid.nx);
    }
  }
  return out;
}

/// Sign components of D at time t.
inline ComponentMask component_mask(const SolutionSpec& spec, const GridSpec& grid, double t,
                                    std::size_t threads = 0) {
  const auto d = indicator_grid(spec, grid, t, threads);
  return label_components(grid, sign_change_cells(grid, d));
}

/// Copy of `field` with every cell outside `label` set to `floor`.
inline ScalarField restrict_to_component(const ScalarField& field, const ComponentMask& mask,
                                         int label, double floor = kRegularizedFloor) {
  ScalarField out = field;
  for (std::size_t k = 0; k < out.values.size(); ++k)
    if (mask.labels[k] != label) {
      out.values[k] = floor;
      out.mask[k] = Cell::Regular;
    }
  return out;
}

/// Two-label mask split by the line through `point` with normal `normal`:
/// label 1 where normal·(p − point) ≥ 0, label 2 elsewhere.
inline ComponentMask half_plane_mask(const GridSpec& grid, Vec2 point, Vec2 normal) {
  grid.validate();
  if (normal.x == 0.0 && normal.y == 0.0) throw ValidationError("normal", "must be nonzero");
  ComponentMask out{grid, std::vector<int>(grid.size(), 0), 2};
  for (std::size_t j = 0; j < grid.ny; ++j)
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const double s = normal.x * (grid.x(i) - point.x) + normal.y * (grid.y(j) - point.y);
      out.labels[grid.index(i, j)] = s >= 0.0 ? 1 : 2;
    }
  return out;
}

/// Cells whose centre lies within `radius` of a marked cell centre.
inline std::vector<bool> exclusion_band(const GridSpec& grid, const std::vector<bool>& marked,
                                        double radius) {
  std::vector<bool> band = marked;
  if (radius <= 0.0) return band;
  const double dx = grid.dx(), dy = grid.dy();
  const auto ri = static_cast<long>(std::floor(radius / dx));
  const auto rj = static_cast<long>(std::floor(radius / dy));
  std::vector<std::pair<long, long>> disk;
  for (long b = -rj; b <= rj; ++b)
    for (long a = -ri; a <= ri; ++a)
      if ((a * dx) * (a * dx) + (b * dy) * (b * dy) <= radius * radius) disk.emplace_back(a, b);
  const auto nx = static_cast<long>(grid.nx), ny = static_cast<long>(grid.ny);
  for (long j = 0; j < ny; ++j)
    for (long i = 0; i < nx; ++i) {
      if (!marked[static_cast<std::size_t>(j * nx + i)]) continue;
      for (auto [a, b] : disk) {
        const long u = i + a, v = j + b;
        if (u >= 0 && u < nx && v >= 0 && v < ny) band[static_cast<std::size_t>(v * nx + u)] = true;
      }
    }
  return band;
}

/// Singular-set cells of an evaluated field, as a boolean mask.
inline std::vector<bool> singular_cells(const ScalarField& field) {
  std::vector<bool> m(field.values.size());
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = field.singular(k);
  return m;
}

}  // namespace kpc
