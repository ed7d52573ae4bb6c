#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "kpc/regularization.hpp"
#include "kpc/solution_kernel.hpp"
#include "oracles.hpp"

using namespace kpc;
using Catch::Matchers::WithinAbs;

TEST_CASE("regularize examples", "[regularization]") {
  CHECK(regularize(0.0) == 0.0);
  CHECK_THAT(regularize(1.0), WithinAbs(std::numbers::ln2, 1e-12));
  CHECK_THAT(regularize(-50.0), WithinAbs(-std::log(std::numbers::ln2 + 1.0), 1e-12));
  CHECK_THAT(regularize(-1.0), WithinAbs(-std::log(std::log(2.0 - std::exp(-1.0)) + 1.0), 1e-15));
  CHECK_THAT(regularize(-1.0), WithinAbs(-0.398696, 1e-6));
  CHECK_THAT(kRegularizedFloor, WithinAbs(-0.526589, 1e-6));
}

TEST_CASE("regularize against the literal formula", "[regularization]") {
  for (double f = -30.0; f <= 30.0; f += 0.0137)
    CHECK_THAT(regularize(f), WithinAbs(oracle::regularize_literal(f), 1e-12));
}

TEST_CASE("regularize limits and overflow", "[regularization]") {
  CHECK_THAT(regularize(1e6) - std::log(1e6 + 1.0), WithinAbs(0.0, 1e-12));
  CHECK(std::abs(regularize(1e6) - std::log(1e6)) < 1e-5);
  CHECK(regularize(800.0) == std::log1p(800.0));
  CHECK(std::isfinite(regularize(1e300)));
  CHECK(regularize(-800.0) == kRegularizedFloor);
  CHECK(regularize(-std::numeric_limits<double>::infinity()) == kRegularizedFloor);
  CHECK(std::abs(regularize(1e-9)) < 1e-8);
  CHECK(std::abs(regularize(-1e-9)) < 1e-8);
}

TEST_CASE("regularize is strictly increasing", "[regularization]") {
  // Below f ≈ −36 the step e^f/2 is under half an ulp of ln 2, so strictness
  // is only observable where doubles resolve it; beyond that it must not drop.
  std::vector<double> xs;
  for (int i = 0; i < 10000; ++i) xs.push_back(-30.0 + 60.0 * i / 9999.0);
  for (std::size_t i = 1; i < xs.size(); ++i) {
    INFO("f = " << xs[i - 1] << ", " << xs[i]);
    CHECK(regularize(xs[i]) > regularize(xs[i - 1]));
  }

  std::vector<double> wide;
  for (int i = 0; i < 10000; ++i) {
    const double u = -1.0 + 2.0 * i / 9999.0;
    wide.push_back(u < 0 ? -std::expm1(-40.0 * u) : std::expm1(13.0 * u));
  }
  for (std::size_t i = 1; i < wide.size(); ++i) {
    INFO("f = " << wide[i - 1] << ", " << wide[i]);
    CHECK(regularize(wide[i]) >= regularize(wide[i - 1]));
    if (wide[i] > -30.0) CHECK(regularize(wide[i]) > regularize(wide[i - 1]));
  }
}

TEST_CASE("regularize stays close to f near zero", "[regularization]") {
  // Dense sampling on |f| ≤ 0.1. The deviation peaks at f = −0.1 with
  // 0.012994...; it stays under 0.01 for f > 0 and for f ≥ −0.0869.
  double worst = 0.0, worst_pos = 0.0, worst_inner = 0.0;
  for (int i = -100000; i <= 100000; ++i) {
    const double f = 1e-6 * i;
    const double d = std::abs(regularize(f) - f);
    worst = std::max(worst, d);
    if (f > 0) worst_pos = std::max(worst_pos, d);
    if (f >= -0.0869) worst_inner = std::max(worst_inner, d);
  }
  CHECK(worst <= 0.0130);
  CHECK(worst_pos <= 0.01);
  CHECK(worst_inner <= 0.01);
}

TEST_CASE("regularize_field", "[regularization]") {
  const GridSpec g{0, 1, 0, 1, 2, 2};
  ScalarField zero(g);
  CHECK(regularize_field(zero).values == zero.values);

  ScalarField one(g);
  one.values[3] = kSingularValue;
  one.mask[3] = Cell::Singular;
  const auto r = regularize_field(one);
  CHECK(r.values[3] == kRegularizedFloor);
  CHECK(r.singular(3));

  const auto straight_breather = SolutionSpec::trigonometric({SpectralMode{0.5, -0.1, 0.0, 0.0, 0.0}});
  const auto F = regularize_field(field_f_grid(straight_breather, GridSpec{-15, 15, -15, 15, 150, 150}, 0.0));
  for (double v : F.values) CHECK(v >= -0.5266);
}

TEST_CASE("clip_display", "[regularization]") {
  CHECK(clip_display(-1.0) == regularize(-1.0));
  CHECK(clip_display(3.0) == 3.0);
  CHECK(clip_display(30.0) == 10.0);
  CHECK(clip_display(3.0, 10.0, ClipMode::Literal) == 10.0);
  CHECK(clip_display(30.0, 10.0, ClipMode::Literal) == 30.0);
  CHECK(clip_display(0.0) == 0.0);
}
