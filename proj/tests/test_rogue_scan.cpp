#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "kpc/rogue_scan.hpp"
#include "oracles.hpp"

using namespace kpc;
using Catch::Matchers::WithinAbs;

namespace {

SolutionSpec soliton(double c) { return SolutionSpec::soliton({SolitonMode{{0.5, 0}, {0.5, 0}, {c, 0}}}); }

SolutionSpec dipole_pair() {
  return SolutionSpec::hyperbolic({SpectralMode{0.5, 0.2, 0.6, 0, 0}, SpectralMode{1.0, 0.5, -0.7, 0, 0}});
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> v;
  for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
  return v;
}

ExtremeSeries synthetic(const std::vector<double>& t, const std::vector<double>& v) {
  ExtremeSeries s;
  s.times = t;
  s.max_value = v;
  s.min_value.assign(v.size(), 0.0);
  s.max_location.assign(v.size(), Vec2{});
  s.min_location.assign(v.size(), Vec2{});
  return s;
}

}  // namespace

TEST_CASE("zero solution has a flat series", "[rogue]") {
  const auto s = time_series_max(soliton(0.0), GridSpec{-5, 5, -5, 5, 20, 20}, linspace(-1, 1, 5));
  REQUIRE(s.size() == 5);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.max_value[i] == 0.0);
    CHECK(s.min_value[i] == 0.0);
  }
}

TEST_CASE("soliton maximum is its amplitude at every time", "[rogue]") {
  // c = 2 puts the crest on x = t − ln 2, off the lattice.
  const GridSpec g{-10, 10, -10, 10, 81, 81};
  const auto s = time_series_max(soliton(2.0), g, linspace(-1, 1, 9));
  for (std::size_t i = 0; i < s.size(); ++i) {
    INFO("t = " << s.times[i]);
    CHECK_THAT(s.max_value[i], WithinAbs(0.5, 1e-9));
    CHECK_THAT(s.max_location[i].x, WithinAbs(s.times[i] - std::log(2.0), 1e-4));
    CHECK(s.min_value[i] > 0.0);
    CHECK(s.min_value[i] < s.max_value[i]);
  }
  // the lattice alone misses the crest by up to half a cell
  const auto lattice = field_f_grid(soliton(2.0), g, 0.0);
  CHECK(*std::max_element(lattice.values.begin(), lattice.values.end()) < 0.5 - 1e-6);
}

TEST_CASE("series input checks", "[rogue]") {
  const GridSpec g{-5, 5, -5, 5, 10, 10};
  CHECK_THROWS_AS(time_series_max(soliton(1.0), g, {}), ValidationError);
  CHECK_THROWS_AS(time_series_max(soliton(1.0), g, {1.0, 0.0}), ValidationError);
}

TEST_CASE("detect_transient on synthetic series", "[rogue]") {
  const auto t = linspace(-5, 5, 101);

  SECTION("constant series has no event") {
    CHECK(detect_transient(synthetic(t, std::vector<double>(t.size(), 2.0))).empty());
  }

  SECTION("single spike") {
    std::vector<double> v(t.size(), 1.0);
    v[50] = 5.0;
    const auto ev = detect_transient(synthetic(t, v));
    REQUIRE(ev.size() == 1);
    CHECK_THAT(ev[0].t_peak, WithinAbs(0.0, 1e-12));
    CHECK(ev[0].t_max == t[50]);
    CHECK(ev[0].background == 1.0);
    CHECK(ev[0].prominence_ratio == 5.0);
    CHECK(ev[0].amplitude == 5.0);
  }

  SECTION("spike below threshold") {
    std::vector<double> v(t.size(), 1.0);
    v[50] = 2.9;
    CHECK(detect_transient(synthetic(t, v)).empty());
    CHECK(detect_transient(synthetic(t, v), 2.0, 2.5).size() == 1);
  }

  SECTION("two separate spikes") {
    std::vector<double> v(t.size(), 1.0);
    v[40] = 4.0;
    v[60] = 6.0;
    const auto ev = detect_transient(synthetic(t, v));
    REQUIRE(ev.size() == 2);
    CHECK_THAT(ev[0].t_peak, WithinAbs(-1.0, 1e-12));
    CHECK_THAT(ev[1].t_peak, WithinAbs(1.0, 1e-12));
  }

  SECTION("time translation shifts t_peak") {
    std::vector<double> v(t.size(), 1.0);
    for (int k = -3; k <= 3; ++k) v[static_cast<std::size_t>(47 + k)] = 6.0 - std::abs(k);
    const auto base = detect_transient(synthetic(t, v));
    REQUIRE(base.size() == 1);
    for (double shift : {-7.25, 0.5, 13.0}) {
      std::vector<double> ts = t;
      for (double& x : ts) x += shift;
      const auto moved = detect_transient(synthetic(ts, v));
      REQUIRE(moved.size() == 1);
      CHECK_THAT(moved[0].t_peak, WithinAbs(base[0].t_peak + shift, 1e-9));
      CHECK(moved[0].prominence_ratio == base[0].prominence_ratio);
    }
  }

  SECTION("window too short") {
    CHECK_THROWS_AS(detect_transient(synthetic({0, 1}, {1, 1})), InsufficientWindow);
    CHECK_THROWS_AS(detect_transient(synthetic(linspace(-1, 1, 11), std::vector<double>(11, 1.0))),
                    InsufficientWindow);
  }
}

TEST_CASE("single soliton has no trough pair", "[rogue]") {
  CHECK_THROWS_AS(trough_points(soliton(1.0), GridSpec{-10, 10, -10, 10, 60, 60}, 0.0), FewerThanTwoTroughs);
}

TEST_CASE("local extrema skip the exclusion band", "[rogue]") {
  const GridSpec g{0, 7, 0, 7, 7, 7};
  detail::Sampled s{ScalarField(g), std::vector<bool>(g.size(), false)};
  s.field.values[g.index(2, 2)] = -3.0;
  s.field.values[g.index(4, 4)] = -2.0;
  s.field.values[g.index(5, 1)] = 1.0;
  auto mins = detail::local_extrema(s, -1.0);
  std::sort(mins.begin(), mins.end());
  CHECK(mins == std::vector<std::size_t>{g.index(2, 2), g.index(4, 4)});
  CHECK(detail::local_extrema(s, 1.0) == std::vector<std::size_t>{g.index(5, 1)});
  s.excluded[g.index(3, 3)] = true;  // neighbour of both wells
  CHECK(detail::local_extrema(s, -1.0).empty());
}

TEST_CASE("Nelder-Mead finds an off-lattice maximum", "[rogue]") {
  auto bump = [](Vec2 p) { return (p.x - 0.31) * (p.x - 0.31) + 2 * (p.y + 0.17) * (p.y + 0.17); };
  auto [p, v] = detail::nelder_mead_box(bump, Vec2{0, 0}, Vec2{-0.5, -0.5}, Vec2{0.5, 0.5});
  CHECK_THAT(p.x, WithinAbs(0.31, 1e-8));
  CHECK_THAT(p.y, WithinAbs(-0.17, 1e-8));
  CHECK(v < 1e-15);
  // optimum outside the box: the result stays inside and improves on the start
  auto [q, w] = detail::nelder_mead_box(bump, Vec2{0, 0}, Vec2{-0.1, -0.1}, Vec2{0.1, 0.1});
  CHECK(std::abs(q.x) <= 0.1);
  CHECK(std::abs(q.y) <= 0.1);
  CHECK(w < bump(Vec2{0, 0}));
}

TEST_CASE("two-dipole field peaks near t = 0", "[rogue]") {
  const GridSpec g{-15, 15, -15, 15, 100, 100};
  const auto s = time_series_max(dipole_pair(), g, {-5, -4, -3, -0.5, -0.25, 0, 0.25, 0.5, 3, 4, 5});
  double inner = 0.0, outer = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    (std::abs(s.times[i]) <= 0.5 ? inner : outer) =
        std::max(std::abs(s.times[i]) <= 0.5 ? inner : outer, s.max_value[i]);
  CHECK(inner > outer);

  const auto a = time_series_max(dipole_pair(), g, {-1, 0, 1}, 0.5, 1);
  const auto b = time_series_max(dipole_pair(), g, {-1, 0, 1}, 0.5, 3);
  CHECK(a.max_value == b.max_value);
  CHECK(a.min_value == b.min_value);
}
