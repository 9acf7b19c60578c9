// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "augment.hpp"
#include "error.hpp"
#include "stl.hpp"
#include "stl_reference.inc"

using namespace bgpad;

namespace {

double max_identity_error(const stl::Decomposition& d) {
  double e = 0;
  for (std::size_t i = 0; i < d.observed.size(); ++i)
    e = std::max(e, std::abs(d.observed[i] - (d.trend[i] + d.seasonal[i] + d.residual[i])));
  return e;
}

stl::StlConfig with_period(std::size_t p, std::size_t outer = 1) {
  stl::StlConfig c;
  c.period = p;
  c.outer_iterations = outer;
  return c;
}

}  // namespace

TEST_SUITE("stl") {

TEST_CASE("default spans") {
  const auto c = with_period(35).resolved();
  CHECK(c.seasonal_span == 7);
  CHECK(c.trend_span == 67);  // smallest odd >= 52.5 / (1 - 1.5/7) = 66.8
  CHECK(c.lowpass_span == 35);
  CHECK(with_period(12).resolved().lowpass_span == 13);
}

TEST_CASE("constant series") {
  const std::vector<double> y(70, 5.0);
  const auto d = stl::decompose(y, with_period(7));
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(std::abs(d.trend[i] - 5.0) < 1e-6);
    CHECK(std::abs(d.seasonal[i]) < 1e-6);
    CHECK(std::abs(d.residual[i]) < 1e-6);
    CHECK(d.weight[i] == 1.0);
  }
}

TEST_CASE("agreement with the reference STL") {
  for (const auto& ref : stl_references()) {
    CAPTURE(ref.name);
    const auto d = stl::decompose(ref.y, with_period(ref.period, ref.outer));
    // Without outliers the robustness weights are numerically 1 on both
    // sides; with outliers the reference's near-0/near-1 weight cutoffs
    // differ from the plain bisquare.
    const double tol = std::string(ref.name) == "outliers_robust" ? 1e-2 : 1e-9;
    for (std::size_t i = 0; i < ref.y.size(); ++i) {
      CHECK(std::abs(d.trend[i] - ref.trend[i]) < tol);
      CHECK(std::abs(d.seasonal[i] - ref.seasonal[i]) < tol);
    }
    CHECK(max_identity_error(d) < 1e-9);
  }
}

TEST_CASE("sinusoid: seasonal tracks the signal, trend stays flat") {
  std::vector<double> y(240);
  for (std::size_t t = 0; t < y.size(); ++t) y[t] = std::sin(2 * std::numbers::pi * static_cast<double>(t) / 12);
  const auto d = stl::decompose(y, with_period(12));
  for (std::size_t t = 60; t < 180; ++t) {
    CHECK(std::abs(d.trend[t]) < 0.05);
    CHECK(std::abs(d.seasonal[t] - y[t]) < 0.05);
  }
}

TEST_CASE("ramp: trend follows, seasonal small") {
  std::vector<double> y(140);
  for (std::size_t t = 0; t < y.size(); ++t) y[t] = static_cast<double>(t);
  const auto d = stl::decompose(y, with_period(7));
  for (std::size_t t = 35; t < 105; ++t) {
    CHECK(std::abs(d.trend[t] - y[t]) < 0.5);
    CHECK(std::abs(d.seasonal[t]) < 0.1);
  }
}

TEST_CASE("identity and weight range on random inputs") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> y(100);
    for (auto& v : y) v = 1000 * n(rng);
    y[17] += 1e5;
    const auto d = stl::decompose(y, with_period(5 + trial % 10));
    CHECK(max_identity_error(d) < 1e-9 * 1e5);
    for (std::size_t i = 0; i < y.size(); ++i) {
      CHECK(d.weight[i] >= 0.0);
      CHECK(d.weight[i] <= 1.0);
      for (std::size_t j = 0; j < y.size(); ++j)
        if (std::abs(d.residual[i]) < std::abs(d.residual[j])) CHECK(d.weight[i] >= d.weight[j]);
    }
    CHECK(d.weight[17] < 0.5);
  }
  std::vector<double> unit(100);
  for (auto& v : unit) v = n(rng);
  CHECK(max_identity_error(stl::decompose(unit, with_period(10))) < 1e-9);
}

TEST_CASE("bisquare weights") {
  const std::vector<double> r = {0, 1, -1, 2, 100};
  const auto w = stl::robustness_weights(r);
  // median |r| = 1 -> h = 6
  CHECK(w[0] == 1.0);
  CHECK(w[1] == doctest::Approx(std::pow(1 - 1.0 / 36, 2)));
  CHECK(w[3] == doctest::Approx(std::pow(1 - 4.0 / 36, 2)));
  CHECK(w[4] == 0.0);
  CHECK(stl::robustness_weights(std::vector<double>(5, 0.0)) == std::vector<double>(5, 1.0));
}

TEST_CASE("errors") {
  CHECK_THROWS_WITH(stl::decompose(std::vector<double>(13, 1.0), with_period(7)), "series too short for period");
  std::vector<double> y(20, 1.0);
  y[3] = std::nan("");
  CHECK_THROWS_AS(stl::decompose(y, with_period(7)), InvalidArgument);
  CHECK_THROWS_AS(stl::decompose(std::vector<double>(20, 1.0), with_period(1)), InvalidArgument);
}

}

TEST_SUITE("augment") {

TEST_CASE("five-block layout") {
  features::FeatureSeries s;
  s.columns = {"x"};
  s.values = Matrix(40, 1);
  for (std::size_t t = 0; t < 40; ++t) s.values(t, 0) = std::sin(static_cast<double>(t)) + 0.1 * static_cast<double>(t);
  s.labels.assign(40, 0);
  s.labels[5] = 2;
  const auto a = augment::augment_series(s, with_period(7));
  CHECK(a.columns == std::vector<std::string>{"x.obs", "x.res", "x.seas", "x.trend", "x.w"});
  CHECK(a.labels == s.labels);
  for (std::size_t t = 0; t < 40; ++t) {
    CHECK(a.values(t, 0) == s.values(t, 0));
    CHECK(std::abs(a.values(t, 0) - (a.values(t, 1) + a.values(t, 2) + a.values(t, 3))) < 1e-9);
  }
}

TEST_CASE("error names the feature") {
  features::FeatureSeries s;
  s.columns = {"a", "b"};
  s.values = Matrix(10, 2, 1.0);
  s.labels.assign(10, 0);
  CHECK_THROWS_WITH_AS(augment::augment_series(s, with_period(7)), doctest::Contains("'a'"), InvalidArgument);
}

TEST_CASE("windows") {
  Matrix rows(10, 1);
  for (std::size_t i = 0; i < 10; ++i) rows(i, 0) = static_cast<double>(i);
  std::vector<int> labels(10, 0);
  labels[9] = 1;
  const auto w = augment::slice_windows(rows, labels, 3);
  REQUIRE(w.windows.size() == 8);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(w.windows[i].start == i);
    for (std::size_t r = 0; r < 3; ++r) CHECK(w.windows[i].values(r, 0) == doctest::Approx((i + r) / 9.0));
  }
  CHECK(w.windows[7].label == 0);
  CHECK_THROWS_AS(augment::slice_windows(rows, labels, 11), InvalidArgument);
}

TEST_CASE("majority label") {
  CHECK(augment::majority_label(std::vector<int>{0, 0, 1}) == 0);
  CHECK(augment::majority_label(std::vector<int>{0, 1}) == 1);
  CHECK(augment::majority_label(std::vector<int>{2, 3, 3, 2}) == 3);
}

TEST_CASE("normalizer") {
  Matrix one(1, 2, std::vector<double>{4, 5});
  const auto s1 = augment::fit_normalizer(one);
  CHECK(s1.apply(0, 4) == 0.0);
  Matrix two(2, 1, std::vector<double>{0, 10});
  const auto s2 = augment::fit_normalizer(two);
  CHECK(s2.min[0] == 0);
  CHECK(s2.max[0] == 10);
  CHECK(s2.apply(0, 5) == 0.5);
  CHECK(s2.apply(0, 12) == 1.0);
  CHECK(s2.apply(0, -3) == 0.0);
  augment::NormalizerStats unit{{0.0}, {1.0}};
  for (double v : {0.0, 0.25, 0.5, 1.0}) CHECK(unit.apply(0, v) == v);
}

}
