#include "rsq/estimators.hpp"

#include <cmath>
#include <random>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "oracles.hpp"

namespace {

using Trace = std::vector<double>;

rsq::ProcessFamily martingale() {
  return rsq::multiplicative_supermartingale(1.0, rsq::FactorDistribution::two_point(0.5, 1.5), 2.0);
}

// Calls f on every trace of length 0..max_len over the grid.
template <class F>
void for_all_traces(const std::vector<double>& grid, std::size_t max_len, F f) {
  Trace t;
  for (std::size_t len = 0; len <= max_len; ++len) {
    std::vector<std::size_t> digits(len, 0);
    t.assign(len, grid[0]);
    while (true) {
      f(t);
      std::size_t k = 0;
      while (k < len && ++digits[k] == grid.size()) {
        digits[k] = 0;
        t[k] = grid[0];
        ++k;
      }
      if (k == len) break;
      t[k] = grid[digits[k]];
    }
  }
}

TEST(CountFluctuations, Examples) {
  EXPECT_EQ(rsq::count_fluctuations(Trace{0, 1, 0, 1}, 1.0), 3u);
  EXPECT_EQ(rsq::count_fluctuations(Trace(10, 0.7), 0.01), 0u);
  EXPECT_EQ(rsq::count_fluctuations(Trace{0, 0.4, 0.8}, 0.5), 1u);
  EXPECT_EQ(rsq::count_fluctuations(Trace{}, 0.5), 0u);
  EXPECT_THROW(rsq::count_fluctuations(Trace{0, 1}, 0.0), std::invalid_argument);
}

TEST(CountFluctuations, OracleOnShortTraces) {
  // Length <= 8 here keeps the unit suite fast; the acceptance binary covers 12.
  const std::vector<double> grid = {0, 0.3, 0.6, 1};
  std::size_t checked = 0;
  for_all_traces(grid, 8, [&](const Trace& t) {
    for (double eps : {0.25, 0.5}) {
      ASSERT_EQ(static_cast<int>(rsq::count_fluctuations(t, eps)), oracle::max_fluctuations(t, eps));
    }
    ++checked;
  });
  EXPECT_EQ(checked, ((std::size_t{1} << 18) - 1) / 3);  // sum_{len<=8} 4^len
}

TEST(CountCrossings, Examples) {
  const auto c = rsq::count_crossings(Trace{0, 2, 0, 2}, 0.5, 1.5);
  EXPECT_EQ(c.crossings, 3u);
  EXPECT_EQ(c.downcrossings, 1u);
  const auto flat = rsq::count_crossings(Trace(5, 1.0), 0.5, 1.5);
  EXPECT_EQ(flat.crossings, 0u);
  EXPECT_EQ(flat.downcrossings, 0u);
  const auto down = rsq::count_crossings(Trace{2, 0}, 0.5, 1.5);
  EXPECT_EQ(down.crossings, 1u);
  EXPECT_EQ(down.downcrossings, 1u);
  EXPECT_THROW(rsq::count_crossings(Trace{0}, 1.0, 1.0), std::invalid_argument);
}

// Boundary values sit inside [a, b] and never change state.
TEST(CountCrossings, StrictBoundaries) {
  const auto c = rsq::count_crossings(Trace{0.5, 1.5, 0.5, 1.5}, 0.5, 1.5);
  EXPECT_EQ(c.crossings, 0u);
  const auto d = rsq::count_crossings(Trace{0, 1, 1.5, 1, 2, 0.5, 0.4}, 0.5, 1.5);
  EXPECT_EQ(d.crossings, 2u);
  EXPECT_EQ(d.downcrossings, 1u);
}

TEST(CountCrossings, OracleOnShortTraces) {
  const std::vector<double> grid = {0, 0.3, 0.6, 1};
  for_all_traces(grid, 8, [&](const Trace& t) {
    for (auto [a, b] : {std::pair{0.25, 0.5}, std::pair{0.1, 0.9}, std::pair{0.3, 0.6}}) {
      const auto got = rsq::count_crossings(t, a, b);
      const auto want = oracle::crossings(t, a, b);
      ASSERT_EQ(static_cast<int>(got.crossings), want.c);
      ASSERT_EQ(static_cast<int>(got.downcrossings), want.d);
      ASSERT_LE(got.crossings, 2 * got.downcrossings + 1);
    }
  });
}

TEST(CountCrossings, RandomTracesSatisfyCrossingBound) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  std::uniform_int_distribution<int> len(0, 200);
  for (int k = 0; k < 2000; ++k) {
    Trace t(len(gen));
    for (auto& v : t) v = u(gen);
    const auto c = rsq::count_crossings(t, 0.7, 1.3);
    ASSERT_LE(c.crossings, 2 * c.downcrossings + 1);
    const auto o = oracle::crossings(t, 0.7, 1.3);
    ASSERT_EQ(static_cast<int>(c.crossings), o.c);
  }
}

TEST(OscillationEvent, Examples) {
  EXPECT_TRUE(rsq::oscillation_event(Trace{0, 1, 0}, 0, 2, 1.0));
  EXPECT_FALSE(rsq::oscillation_event(Trace{0, 5, 0}, 1, 1, 0.1));
  EXPECT_TRUE(rsq::oscillation_event(Trace{0, 0.4, 0.9}, 0, 2, 0.5));
  EXPECT_FALSE(rsq::oscillation_event(Trace{0, 1}, 1, 0, 0.5));
  EXPECT_THROW(rsq::oscillation_event(Trace{0, 1}, 0, 2, 0.5), std::out_of_range);
}

TEST(OscillationEvent, MonotoneInWindowAndEps) {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Trace t(30);
  for (auto& v : t) v = u(gen);
  for (std::size_t a = 0; a < t.size(); ++a)
    for (std::size_t b = a; b < t.size(); ++b)
      for (double eps : {0.1, 0.3, 0.6}) {
        if (!rsq::oscillation_event(t, a, b, eps)) continue;
        if (a > 0) EXPECT_TRUE(rsq::oscillation_event(t, a - 1, b, eps));
        if (b + 1 < t.size()) EXPECT_TRUE(rsq::oscillation_event(t, a, b + 1, eps));
        EXPECT_TRUE(rsq::oscillation_event(t, a, b, eps / 2));
      }
}

TEST(SupOverHorizon, Examples) {
  EXPECT_EQ(rsq::sup_over_horizon(Trace(4, 2.5)), 2.5);
  EXPECT_EQ(rsq::sup_over_horizon(Trace{0, 3, 1}), 3);
  EXPECT_EQ(rsq::sup_over_horizon(Trace{0.1, 0.2, 0.7}), 0.7);
  EXPECT_THROW(rsq::sup_over_horizon(Trace{}), std::invalid_argument);
}

TEST(Intervals, WilsonEdges) {
  const auto all = rsq::wilson_interval(50, 50);
  EXPECT_EQ(all.point, 1.0);
  EXPECT_EQ(all.ci_high, 1.0);
  EXPECT_LT(all.ci_low, 1.0);
  const auto none = rsq::wilson_interval(0, 50);
  EXPECT_EQ(none.point, 0.0);
  EXPECT_EQ(none.ci_low, 0.0);
  EXPECT_GT(none.ci_high, 0.0);
  EXPECT_THROW(rsq::wilson_interval(0, 0), std::invalid_argument);
  EXPECT_THROW(rsq::wilson_interval(3, 2), std::invalid_argument);
}

// Reference values from the closed-form Wilson score interval at z = 3.
TEST(Intervals, WilsonMatchesFormula) {
  for (auto [k, n] : {std::pair{1, 10}, std::pair{37, 200}, std::pair{500, 2000}}) {
    const double p = double(k) / n, z = 3.0;
    const double denom = 1 + z * z / n;
    const double centre = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4.0 * n * n)) / denom;
    const auto e = rsq::wilson_interval(k, n);
    EXPECT_NEAR(e.ci_low, centre - half, 1e-12);
    EXPECT_NEAR(e.ci_high, centre + half, 1e-12);
    EXPECT_LE(e.ci_low, e.point);
    EXPECT_LE(e.point, e.ci_high);
  }
}

TEST(Intervals, ShrinkWithSamples) {
  double prev = 1.0;
  for (std::size_t n : {100u, 400u, 1600u, 6400u}) {
    const auto e = rsq::wilson_interval(n / 4, n);
    EXPECT_LT(e.halfwidth(), prev);
    prev = e.halfwidth();
  }
  EXPECT_NEAR(rsq::wilson_interval(100, 400).halfwidth() / rsq::wilson_interval(1600, 6400).halfwidth(), 4.0,
              0.05);
}

TEST(Intervals, HoeffdingAndNormal) {
  const auto h = rsq::hoeffding_interval(20, 100);
  EXPECT_NEAR(h.halfwidth(), std::sqrt(std::log(2 / 0.0027) / 200), 1e-12);
  const std::vector<double> s = {1, 2, 3, 4};
  const auto n = rsq::normal_interval(s);
  EXPECT_DOUBLE_EQ(n.point, 2.5);
  EXPECT_NEAR(n.halfwidth(), 3 * std::sqrt(5.0 / 3.0) / 2, 1e-12);
  const auto c = rsq::normal_interval(std::vector<double>(9, 7.0));
  EXPECT_EQ(c.point, 7.0);
  EXPECT_EQ(c.ci_low, 7.0);
  EXPECT_EQ(c.ci_high, 7.0);
}

TEST(MonteCarlo, SureAndNullEvents) {
  const auto fam = martingale();
  const rsq::McOptions opt{200, 50, 1, 1};
  const auto sure = rsq::mc_probability(fam, [](const rsq::PathTrace&) { return true; }, opt);
  EXPECT_EQ(sure.point, 1.0);
  EXPECT_EQ(sure.ci_high, 1.0);
  const auto null = rsq::mc_probability(fam, [](const rsq::PathTrace&) { return false; }, opt);
  EXPECT_EQ(null.point, 0.0);
  EXPECT_EQ(null.ci_low, 0.0);
  const auto seven = rsq::mc_expectation(fam, [](const rsq::PathTrace&) { return 7.0; }, opt);
  EXPECT_EQ(seven.point, 7.0);
  EXPECT_EQ(seven.halfwidth(), 0.0);
  const auto u0 = rsq::mc_expectation(fam, [](const rsq::PathTrace& t) { return t.x[0]; }, opt);
  EXPECT_EQ(u0.point, 1.0);
  EXPECT_THROW(rsq::mc_probability(fam, [](const rsq::PathTrace&) { return true; }, {0, 50, 1, 1}),
               std::invalid_argument);
}

TEST(MonteCarlo, VilleOnMartingale) {
  const auto fam = martingale();
  const auto e = rsq::mc_probability(
      fam, [](const rsq::PathTrace& t) { return rsq::sup_over_horizon(t.x) >= 4.0; }, {2000, 1000, 3, 1});
  EXPECT_LE(e.point, 0.25 + e.halfwidth());
}

TEST(MonteCarlo, CrossingsOnMartingale) {
  const auto fam = martingale();
  const double M = 4, p = 8;
  for (int k = 0; k < p; ++k) {
    const double a = k * M / p, b = (k + 1) * M / p;
    const auto e = rsq::mc_expectation(
        fam, [&](const rsq::PathTrace& t) { return double(rsq::count_crossings(t.x, a, b).crossings); },
        {500, 300, 17, 1});
    EXPECT_LE(e.point, 2 * p / M + 1 + e.halfwidth());
  }
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults) {
  const auto fam = rsq::sgd_quadratic({});
  const auto stat = [](const rsq::PathTrace& t) { return t.x.back() + rsq::sup_over_horizon(t.x); };
  const auto one = rsq::mc_expectation(fam, stat, {301, 200, 42, 1});
  for (unsigned threads : {2u, 4u, 8u}) {
    const auto many = rsq::mc_expectation(fam, stat, {301, 200, 42, threads});
    EXPECT_EQ(one.to_json().dump(), many.to_json().dump());
  }
  const auto ev = [](const rsq::PathTrace& t) { return rsq::sup_over_horizon(t.x) > 1.5; };
  EXPECT_EQ(rsq::mc_probability(fam, ev, {301, 200, 42, 1}).to_json(),
            rsq::mc_probability(fam, ev, {301, 200, 42, 8}).to_json());
}

TEST(MonteCarlo, NestedEvents) {
  const auto fam = martingale();
  const rsq::McOptions opt{1000, 200, 77, 2};
  double prev = 1.0;
  for (double level : {1.5, 2.0, 4.0, 8.0}) {
    const auto e = rsq::mc_probability(
        fam, [level](const rsq::PathTrace& t) { return rsq::sup_over_horizon(t.x) >= level; }, opt);
    EXPECT_LE(e.point, prev);
    prev = e.point;
  }
}

TEST(ParallelFor, RethrowsLowestIndex) {
  try {
    rsq::parallel_for(100, 4, [](std::size_t i) {
      if (i == 37 || i == 80) throw std::runtime_error(std::to_string(i));
    });
    FAIL() << "expected an exception";
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "37");
  }
}

TEST(Estimate, Json) {
  const auto j = rsq::wilson_interval(1, 4).to_json();
  for (const char* k : {"point", "ci_low", "ci_high", "n", "method"}) EXPECT_TRUE(j.contains(k)) << k;
  EXPECT_EQ(j.at("method"), "wilson");
}

}  // namespace
