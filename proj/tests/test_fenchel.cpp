#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <conjlab/conjlab.hpp>

#include "oracles.hpp"

using Catch::Matchers::WithinAbs;
using namespace conjlab;

namespace {

GriddedFunction sample_1d(double lo, double hi, std::size_t count, double (*fn)(double)) {
  return GriddedFunction::sample({GridAxis{lo, hi, count}},
                                 [fn](std::span<const double> x) { return fn(x[0]); });
}

double half_square(double x) { return 0.5 * x * x; }
double square(double x) { return x * x; }
double abs_value(double x) { return std::abs(x); }
double neg_square(double x) { return -x * x; }
double double_well(double x) { return std::min(std::abs(x - 1.0), std::abs(x + 1.0)); }

double logsumexp2(std::span<const double> x) {
  double hi = std::max(x[0], x[1]);
  return hi + std::log(std::exp(x[0] - hi) + std::exp(x[1] - hi));
}

}  // namespace

TEST_CASE("half-square is its own conjugate up to grid resolution") {
  GriddedFunction f = sample_1d(-3.0, 3.0, 601, half_square);
  GriddedFunction fstar = conjugate_grid(f, {GridAxis{-2.0, 2.0, 401}});
  for (std::size_t i = 0; i < fstar.size(); ++i) {
    double s = fstar.axis(0).node(i);
    REQUIRE_THAT(fstar.value(i), WithinAbs(half_square(s), 1.5e-2));
  }
}

TEST_CASE("two-variable logsumexp conjugates to binary entropy on the simplex") {
  GriddedFunction f =
      GriddedFunction::sample({GridAxis{-4.0, 4.0, 161}, GridAxis{-4.0, 4.0, 161}}, logsumexp2);
  const std::vector<double> p25 = {0.25, 0.75};
  const std::vector<double> p50 = {0.5, 0.5};
  CHECK_THAT(conjugate_at(f, p25), WithinAbs(oracle::kEntropyQuarter, 2e-2));
  CHECK_THAT(conjugate_at(f, p50), WithinAbs(-oracle::kLn2, 2e-2));
}

TEST_CASE("absolute value conjugates to the interval indicator") {
  GriddedFunction f = sample_1d(-1.0, 1.0, 201, abs_value);
  for (double s : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    std::vector<double> sv = {s};
    double got = conjugate_at(f, sv);
    CHECK(got == 0.0);
  }
  std::vector<double> outside = {2.0};
  CHECK_THAT(conjugate_at(f, outside), WithinAbs(1.0, 1e-12));

  std::vector<double> xs(201), fs(201);
  for (std::size_t i = 0; i < 201; ++i) {
    xs[i] = f.axis(0).node(i);
    fs[i] = f.value(i);
  }
  for (double s : {-0.7, 0.3, 1.4}) {
    std::vector<double> sv = {s};
    CHECK_THAT(conjugate_at(f, sv), WithinAbs(oracle::brute_conjugate_1d(xs, fs, s), 1e-15));
  }
}

TEST_CASE("biconjugation restores convex functions and builds convex hulls") {
  SECTION("square is a fixed point up to grid resolution") {
    GriddedFunction f = sample_1d(-3.0, 3.0, 601, square);
    GriddedFunction g = biconjugate_grid(f, {GridAxis{-7.0, 7.0, 701}}, f.axes());
    for (std::size_t i = 0; i < g.size(); ++i)
      REQUIRE_THAT(g.value(i), WithinAbs(square(g.axis(0).node(i)), 3e-2));
  }
  SECTION("double well flattens to its convex hull") {
    GriddedFunction f = sample_1d(-2.0, 2.0, 401, double_well);
    GriddedFunction g = biconjugate_grid(f, {GridAxis{-1.5, 1.5, 301}}, f.axes());
    for (std::size_t i = 0; i < g.size(); ++i) {
      double x = g.axis(0).node(i);
      double hull = std::max(0.0, std::abs(x) - 1.0);
      REQUIRE_THAT(g.value(i), WithinAbs(hull, 2e-2));
    }
    std::vector<double> origin = {0.0};
    CHECK_THAT(g.interpolate(origin), WithinAbs(0.0, 1e-9));
  }
  SECTION("a single finite node keeps its value") {
    std::vector<double> values(21, kPosInf);
    values[7] = 0.42;
    GriddedFunction f({GridAxis{-1.0, 1.0, 21}}, values);
    GriddedFunction g = biconjugate_grid(f, {GridAxis{-3.0, 3.0, 61}}, f.axes());
    CHECK_THAT(g.value(7), WithinAbs(0.42, 1e-12));
  }
}

TEST_CASE("biconjugate never exceeds the original on the grid") {
  Rng rng(21);
  std::vector<double> values(101);
  for (double& v : values) v = rng.uniform() < 0.1 ? kPosInf : rng.uniform(-1.0, 1.0);
  GriddedFunction f({GridAxis{-2.0, 2.0, 101}}, values);
  GriddedFunction g = biconjugate_grid(f, {GridAxis{-60.0, 60.0, 481}}, f.axes());
  for (std::size_t i = 0; i < f.size(); ++i)
    if (is_finite(f.value(i))) REQUIRE(g.value(i) <= f.value(i) + 1e-12);
}

TEST_CASE("fenchel-young gap matches hand-computed values and stays nonnegative") {
  GriddedFunction f = sample_1d(-3.0, 3.0, 601, half_square);
  GriddedFunction fstar = conjugate_grid(f, {GridAxis{-2.0, 2.0, 401}});

  std::vector<double> x1 = {1.0}, s1 = {1.0}, s0 = {0.0}, x2 = {2.0}, sm2 = {-2.0};
  CHECK_THAT(fenchel_young_gap(f, fstar, x1, s1), WithinAbs(0.0, 2e-2));
  CHECK_THAT(fenchel_young_gap(f, fstar, x1, s0), WithinAbs(0.5, 2e-2));
  CHECK_THAT(fenchel_young_gap(f, fstar, x2, sm2), WithinAbs(8.0, 2e-2));

  Rng rng(33);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x = {f.axis(0).node(rng.index(f.axis(0).count))};
    std::vector<double> s = {fstar.axis(0).node(rng.index(fstar.axis(0).count))};
    REQUIRE(fenchel_young_gap(f, fstar, x, s) >= -1e-12);
  }

  std::vector<double> far = {5.0};
  CHECK_THROWS_AS(fenchel_young_gap(f, fstar, far, s1), OutOfBox);
}

TEST_CASE("fenchel-young gap is infinite where the function is") {
  std::vector<double> values(21, kPosInf);
  values[7] = 0.42;
  GriddedFunction f({GridAxis{-1.0, 1.0, 21}}, values);
  GriddedFunction fstar = conjugate_grid(f, {GridAxis{-1.0, 1.0, 11}});
  std::vector<double> between = {f.axis(0).node(7) + 0.5 * f.axis(0).step()};
  std::vector<double> s = {0.0};
  CHECK(fenchel_young_gap(f, fstar, between, s) == kPosInf);
}

TEST_CASE("conjugation reverses pointwise order") {
  Rng rng(45);
  std::vector<GridAxis> axes = {GridAxis{0.0, 1.0, 51}};
  std::vector<double> fv(51), gv(51);
  for (std::size_t i = 0; i < 51; ++i) {
    fv[i] = rng.uniform(-1.0, 1.0);
    gv[i] = fv[i] + rng.uniform(0.0, 0.5);
  }
  GriddedFunction fstar = conjugate_grid(GriddedFunction(axes, fv), {GridAxis{-5.0, 5.0, 101}});
  GriddedFunction gstar = conjugate_grid(GriddedFunction(axes, gv), {GridAxis{-5.0, 5.0, 101}});
  for (std::size_t i = 0; i < fstar.size(); ++i) REQUIRE(fstar.value(i) >= gstar.value(i));
}

TEST_CASE("conjugates of arbitrary functions are convex") {
  Rng rng(57);
  std::vector<double> values(101);
  for (double& v : values) v = rng.uniform(-1.0, 1.0);
  GriddedFunction f({GridAxis{-2.0, 2.0, 101}}, values);
  GriddedFunction fstar = conjugate_grid(f, {GridAxis{-4.0, 4.0, 201}});
  CHECK(convexity_probe(fstar, 200, 9) <= 1e-10);
}

TEST_CASE("fast one-dimensional transform matches the brute-force sweep") {
  struct Case {
    GriddedFunction f;
    GridAxis dual;
  };
  std::vector<Case> cases;
  cases.push_back({sample_1d(-3.0, 3.0, 601, half_square), GridAxis{-2.5, 2.5, 501}});
  cases.push_back({sample_1d(-1.0, 1.0, 201, abs_value), GridAxis{-1.0, 1.0, 81}});
  cases.push_back({sample_1d(-2.0, 2.0, 301, [](double x) { return std::exp(x); }),
                   GridAxis{0.2, 7.0, 69}});
  cases.push_back({sample_1d(-2.0, 2.0, 401, double_well), GridAxis{-1.0, 1.0, 11}});
  for (const Case& c : cases) {
    GriddedFunction fast = conjugate_fast_1d(c.f, c.dual);
    GriddedFunction brute = conjugate_grid(c.f, {c.dual});
    REQUIRE(fast.size() == brute.size());
    for (std::size_t i = 0; i < fast.size(); ++i)
      REQUIRE_THAT(fast.value(i), WithinAbs(brute.value(i), 1e-12));
  }
  GriddedFunction f2 =
      GriddedFunction::sample({GridAxis{0.0, 1.0, 3}, GridAxis{0.0, 1.0, 3}},
                              [](std::span<const double>) { return 0.0; });
  CHECK_THROWS_AS(conjugate_fast_1d(f2, GridAxis{0.0, 1.0, 5}), DimensionMismatch);
}

TEST_CASE("conjugate sweep is independent of the thread count") {
  GriddedFunction f =
      GriddedFunction::sample({GridAxis{-2.0, 2.0, 41}, GridAxis{-2.0, 2.0, 41}},
                              [](std::span<const double> x) { return 0.5 * (x[0] * x[0] + x[1] * x[1]); });
  std::vector<GridAxis> dual = {GridAxis{-1.0, 1.0, 21}, GridAxis{-1.0, 1.0, 21}};
  GriddedFunction one = conjugate_grid(f, dual, 1);
  GriddedFunction four = conjugate_grid(f, dual, 4);
  for (std::size_t i = 0; i < one.size(); ++i) REQUIRE(one.value(i) == four.value(i));
}

TEST_CASE("convexity probe separates convex from concave samples") {
  CHECK(convexity_probe(sample_1d(-2.0, 2.0, 101, square), 200, 3) <= 1e-12);
  CHECK(convexity_probe(sample_1d(-1.0, 1.0, 101, neg_square), 100, 1) > 0.1);
  GriddedFunction flat = sample_1d(0.0, 1.0, 11, [](double) { return 0.7; });
  CHECK(convexity_probe(flat, 50, 5) == 0.0);
}

TEST_CASE("slope range brackets the conjugate's effective domain") {
  GriddedFunction f = sample_1d(-3.0, 3.0, 601, half_square);
  auto [lo, hi] = slope_range(f, 0);
  double h = f.axis(0).step();
  CHECK_THAT(lo, WithinAbs(-3.0 + 0.5 * h, 1e-9));
  CHECK_THAT(hi, WithinAbs(3.0 - 0.5 * h, 1e-9));
  CHECK_THROWS_AS(slope_range(f, 1), DimensionMismatch);
}

TEST_CASE("multilinear interpolation follows node values and sentinel corners") {
  GriddedFunction f = sample_1d(0.0, 1.0, 11, square);
  std::vector<double> node = {0.3};
  CHECK_THAT(f.interpolate(node), WithinAbs(0.09, 1e-15));
  std::vector<double> mid = {0.05};
  CHECK_THAT(f.interpolate(mid), WithinAbs(0.005, 1e-15));

  std::vector<double> vals = {kPosInf, 1.0, 2.0, 3.0};
  GriddedFunction g({GridAxis{0.0, 1.0, 2}, GridAxis{0.0, 1.0, 2}}, vals);
  std::vector<double> inner = {0.5, 0.5};
  CHECK(g.interpolate(inner) == kPosInf);
  std::vector<double> far_edge = {1.0, 0.5};
  CHECK_THAT(g.interpolate(far_edge), WithinAbs(2.5, 1e-15));

  std::vector<double> outside = {1.5, 0.5};
  CHECK_THROWS_AS(g.interpolate(outside), OutOfBox);
  std::vector<double> wrong_dim = {0.5};
  CHECK_THROWS_AS(g.interpolate(wrong_dim), DimensionMismatch);
}

TEST_CASE("grids serialize to csv and back bit-exactly") {
  std::vector<double> vals = {0.1, kPosInf, -1.0 / 3.0, 1e-300, oracle::kInverseSquareFull, 2.5};
  GriddedFunction f({GridAxis{0.0, 1.0, 3}, GridAxis{-1.0, 1.0, 2}}, vals);
  GriddedFunction g = grid_from_csv(grid_header_json(f), grid_to_csv(f));
  REQUIRE(g.size() == f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (is_finite(f.value(i))) {
      REQUIRE(g.value(i) == f.value(i));
    } else {
      REQUIRE(g.value(i) == kPosInf);
    }
  }
  for (double v : {0.1, 1.0 / 3.0, 1e-300, oracle::kInverseSquareFull, kPosInf, kNegInf})
    CHECK(parse_real(format_real(v)) == v);
}

TEST_CASE("grid construction rejects malformed input") {
  std::vector<double> two = {0.0, 1.0};
  CHECK_THROWS_AS(GriddedFunction({GridAxis{0.0, 1.0, 1}}, {0.0}), InvalidGrid);
  CHECK_THROWS_AS(GriddedFunction({GridAxis{1.0, 0.0, 2}}, two), InvalidGrid);
  CHECK_THROWS_AS(GriddedFunction({GridAxis{0.0, 1.0, 2}}, {0.0, 1.0, 2.0}), InvalidGrid);
  CHECK_THROWS_AS(GriddedFunction({GridAxis{0.0, 1.0, 2}}, {0.0, std::nan("")}), InvalidGrid);
  CHECK_THROWS_AS(GriddedFunction({GridAxis{0.0, 1.0, 2}}, {0.0, kNegInf}), InvalidGrid);
  CHECK_THROWS_AS(GriddedFunction(std::vector<GridAxis>{}, std::vector<double>{}), InvalidGrid);

  GriddedFunction empty({GridAxis{0.0, 1.0, 2}}, std::vector<double>{kPosInf, kPosInf});
  CHECK_THROWS_AS(conjugate_grid(empty, {GridAxis{0.0, 1.0, 2}}), EmptyEffectiveDomain);
  std::vector<double> s = {0.0};
  CHECK_THROWS_AS(conjugate_at(empty, s), EmptyEffectiveDomain);
}
