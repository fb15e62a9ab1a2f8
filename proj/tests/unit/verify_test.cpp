#include "rsq/verify.hpp"

#include <cmath>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace {
using ::testing::HasSubstr;
using rsq::Accuracy;
using rsq::BoundednessModulus;
using rsq::Confidence;
using rsq::Schedule;
using rsq::Verdict;

rsq::ProcessFamily martingale() {
  return rsq::multiplicative_supermartingale(1.0, rsq::FactorDistribution::two_point(0.5, 1.5), 2.0);
}

// X_n = x0 for all n, with zero A, B, C tracks.
rsq::ProcessFamily constant_process(double x0) { return rsq::general_rs({.x0 = x0}); }

rsq::ProcessFamily sgd_constant_steps() {
  return rsq::sgd_quadratic({.x0 = 1.0, .steps = Schedule::constant(0.5), .noise_sd = 1.0, .noise_horizon = 16,
                             .K = 2.0});
}

rsq::VerifyOptions opts(std::size_t paths, std::size_t horizon, std::uint64_t seed) {
  rsq::VerifyOptions o;
  o.n_paths = paths;
  o.horizon = horizon;
  o.seed = seed;
  return o;
}

rsq::LiminfModulus constant_liminf(double v) {
  return rsq::LiminfModulus(rsq::make_node("constant", 3, {{"value", v}}, {}));
}

TEST(Verdict, ConservativeSide) {
  rsq::Estimate e{0.1, 0.05, 0.15, 100, rsq::CiMethod::wilson};
  EXPECT_EQ(rsq::verdict_below(e, 0.2), Verdict::pass);
  EXPECT_EQ(rsq::verdict_below(e, 0.15), Verdict::inconclusive);  // tie
  EXPECT_EQ(rsq::verdict_below(e, 0.1), Verdict::inconclusive);
  EXPECT_EQ(rsq::verdict_below(e, 0.05), Verdict::inconclusive);  // tie
  EXPECT_EQ(rsq::verdict_below(e, 0.01), Verdict::fail);
  EXPECT_EQ(rsq::to_string(Verdict::inconclusive), "inconclusive");
}

TEST(Report, FormattingAndCsv) {
  EXPECT_EQ(rsq::format_number(0.1), "0.1");
  EXPECT_EQ(rsq::format_number(1e300), "1e+300");
  EXPECT_EQ(rsq::format_number(INFINITY), "inf");
  EXPECT_EQ(rsq::VerificationReport::csv_header(), "claim,bound,point,ci_low,ci_high,n_paths,horizon,seed,verdict");
  rsq::VerificationReport r;
  r.claim = "x";
  r.bound = 2.5;
  r.estimate = {0.25, 0.125, 0.5, 10, rsq::CiMethod::wilson};
  r.repro = {7, 10, 100, {}};
  r.verdict = Verdict::pass;
  EXPECT_EQ(r.csv_row(), "x,2.5,0.25,0.125,0.5,10,100,7,pass");
  r.bound_saturated = true;
  EXPECT_EQ(r.to_json().at("bound"), "saturated");
}

TEST(IntervalScheme, Construction) {
  const auto d = rsq::IntervalScheme::dyadic(16);
  const std::vector<rsq::IntervalScheme::Window> want = {{0, 1}, {1, 2}, {2, 4}, {4, 8}, {8, 16}};
  EXPECT_EQ(d.windows(), want);
  EXPECT_EQ(rsq::IntervalScheme::sliding(5, 12).windows().size(), 2u);
  EXPECT_THROW(rsq::IntervalScheme("bad", {{2, 2}}), std::invalid_argument);
  EXPECT_THROW(rsq::IntervalScheme("bad", {{0, 3}, {2, 4}}), std::invalid_argument);
  EXPECT_THROW(rsq::IntervalScheme::sliding(0, 10), std::invalid_argument);

  const auto g = rsq::IntervalScheme::greedy_pilot(martingale(), 0.25, 0.5, {100, 200, 3, 1});
  ASSERT_FALSE(g.empty());
  EXPECT_EQ(g.windows().front().first, 0u);
  EXPECT_EQ(g.windows().back().second, 200u);
}

TEST(VerifyBoundedness, Examples) {
  const auto c = rsq::verify_boundedness(constant_process(0.8), BoundednessModulus::constant(1.6), Confidence(0.1),
                                         opts(200, 100, 1));
  EXPECT_EQ(c.estimate.point, 0.0);
  EXPECT_EQ(c.verdict, Verdict::pass);

  const auto ville = rsq::verify_boundedness(martingale(), BoundednessModulus::power(2, -1), Confidence(0.25),
                                             opts(2000, 1000, 1));
  EXPECT_EQ(ville.verdict, Verdict::pass);

  const auto bad = rsq::verify_boundedness(martingale(), BoundednessModulus::constant(0.5), Confidence(0.25),
                                           opts(200, 100, 1));
  EXPECT_EQ(bad.estimate.point, 1.0);
  EXPECT_EQ(bad.verdict, Verdict::fail);
  EXPECT_THROW(rsq::verify_boundedness(martingale(), BoundednessModulus::constant(1), Confidence(0.5),
                                       opts(10, 0, 1)),
               std::invalid_argument);
}

TEST(VerifyLearnable, ConstantProcessPassesAtZero) {
  const auto r = rsq::verify_learnable(constant_process(0.3), rsq::LearnableRate::constant(0), Confidence(0.1),
                                       Accuracy(0.1), rsq::IntervalScheme::dyadic(64), opts(100, 64, 1));
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_EQ(r.details.at("first_pass_window"), 0);
  EXPECT_THROW(rsq::verify_learnable(constant_process(0.3), rsq::LearnableRate::constant(0), Confidence(0.1),
                                     Accuracy(0.1), rsq::IntervalScheme::dyadic(128), opts(100, 64, 1)),
               std::invalid_argument);
}

TEST(VerifyLearnable, MartingaleUnderGreedyScheme) {
  const auto fam = martingale();
  const auto scheme = rsq::IntervalScheme::greedy_pilot(fam, 0.25, 0.5, {200, 1000, rsq::sub_seed(5, 1), 1});
  const auto r = rsq::verify_learnable(fam, rsq::supermartingale_learnable(2), Confidence(0.25), Accuracy(0.25),
                                       scheme, opts(1000, 1000, 5));
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_LE(r.details.at("windows_ci_high_at_least_lambda").get<double>(), r.bound);
}

TEST(VerifyLearnable, SgdDyadicAgainstPipeline) {
  const auto fam = rsq::sgd_quadratic({.x0 = 1.0, .steps = Schedule::harmonic(1.0), .noise_sd = 1.0});
  const auto& cert = fam.certificate();
  const auto phi = rsq::rs_learnable_pipeline(cert.K, *cert.rho, *cert.sigma);
  const auto r = rsq::verify_learnable(fam, phi, Confidence(0.25), Accuracy(0.25), rsq::IntervalScheme::dyadic(4096),
                                       opts(1000, 4096, 9));
  EXPECT_EQ(r.verdict, Verdict::pass);
}

// A larger bound never makes the verdict worse; a pass at k stays a pass above k.
TEST(VerifyLearnable, MonotoneInTheBound) {
  const auto fam = martingale();
  const auto scheme = rsq::IntervalScheme::sliding(5, 300);
  bool passed = false;
  for (double k = 0; k <= 60; k += 4) {
    const auto r = rsq::verify_learnable(fam, rsq::LearnableRate::constant(k), Confidence(0.3), Accuracy(0.5),
                                         scheme, opts(300, 300, 4));
    if (passed) EXPECT_EQ(r.verdict, Verdict::pass) << "k = " << k;
    passed = passed || r.verdict == Verdict::pass;
  }
  EXPECT_TRUE(passed);
}

TEST(VerifyLiminf, Examples) {
  const auto quiet = rsq::sgd_quadratic({.x0 = 1.0, .steps = Schedule::constant(0.5), .noise_sd = 0.0});
  const auto r = rsq::verify_liminf(quiet, constant_liminf(50), Confidence(0.1), Accuracy(0.1), 0, opts(100, 0, 1));
  EXPECT_EQ(r.estimate.point, 0.0);
  EXPECT_EQ(r.verdict, Verdict::pass);

  const auto fam = sgd_constant_steps();
  const auto& cert = fam.certificate();
  const auto Psi = rsq::constant_step_solution_modulus(cert.K, *cert.L, *cert.M, 0.5, *cert.delta);
  const auto psi = rsq::verify_liminf(fam, Psi, Confidence(0.25), Accuracy(0.25), 0, opts(1000, 0, 2));
  EXPECT_EQ(psi.verdict, Verdict::pass);

  const auto zero = rsq::verify_liminf(fam, constant_liminf(0), Confidence(0.25), Accuracy(0.25), 0,
                                       opts(200, 0, 3));
  EXPECT_EQ(zero.estimate.point, 1.0);
  EXPECT_EQ(zero.verdict, Verdict::fail);

  EXPECT_THROW(rsq::verify_liminf(martingale(), constant_liminf(5), Confidence(0.25), Accuracy(0.25), 0,
                                  opts(10, 0, 1)),
               std::invalid_argument);
}

TEST(VerifyLiminf, WindowTooLongIsInconclusive) {
  auto o = opts(10, 0, 1);
  o.max_horizon = 1000;
  const auto r = rsq::verify_liminf(sgd_constant_steps(), constant_liminf(5000), Confidence(0.25), Accuracy(0.25),
                                    0, o);
  EXPECT_EQ(r.verdict, Verdict::inconclusive);
  EXPECT_EQ(r.details.at("required_horizon"), 5000.0);
}

TEST(VerifyMetastable, Examples) {
  const auto zero = rsq::verify_metastable(constant_process(0.0), rsq::ExtendedIndex::finite(10), Confidence(0.1),
                                           Accuracy(0.1), rsq::Counterfunction::identity(), opts(100, 0, 1));
  EXPECT_EQ(zero.verdict, Verdict::pass);
  EXPECT_EQ(zero.details.at("witness_n"), 0);

  const auto fam = sgd_constant_steps();
  const auto& cert = fam.certificate();
  const auto phi = rsq::rs_learnable_pipeline(cert.K, *cert.rho, *cert.sigma);
  const auto Psi = rsq::constant_step_solution_modulus(cert.K, *cert.L, *cert.M, 0.5, *cert.delta);
  const auto g = rsq::Counterfunction::identity();
  const auto gamma = rsq::rm_metastable(phi, Psi, Confidence(0.5), Accuracy(0.5), g);
  const auto r = rsq::verify_metastable(fam, gamma.gamma, Confidence(0.5), Accuracy(0.5), g, opts(500, 0, 4),
                                        gamma.f);
  EXPECT_EQ(r.verdict, Verdict::pass);
}

TEST(VerifyMetastable, SaturatedBoundIsNeverFail) {
  const auto g = rsq::Counterfunction::affine(1, 1);
  const auto bound = rsq::metastable_from_learnable(rsq::supermartingale_learnable(2).at(0.1, 0.1), g);
  ASSERT_TRUE(bound.is_saturated());
  // X_n = 1 >= eps everywhere, so no window can ever be quiet.
  auto o = opts(50, 0, 1);
  o.max_horizon = 4096;
  const auto r = rsq::verify_metastable(constant_process(1.0), bound, Confidence(0.1), Accuracy(0.1), g, o);
  EXPECT_EQ(r.verdict, Verdict::inconclusive);
  EXPECT_TRUE(r.bound_saturated);
}

TEST(VerifyMetastable, ExhaustiveScanCanFail) {
  const auto r = rsq::verify_metastable(constant_process(1.0), rsq::ExtendedIndex::finite(5), Confidence(0.1),
                                        Accuracy(0.1), rsq::Counterfunction::constant(2), opts(50, 0, 1));
  EXPECT_TRUE(r.details.at("exhaustive").get<bool>());
  EXPECT_EQ(r.verdict, Verdict::fail);
}

TEST(VerifyCrossing, Examples) {
  const auto c = rsq::verify_crossing_inequality(constant_process(1.0), 4, 8, opts(100, 100, 1));
  EXPECT_EQ(c.estimate.point, 0.0);
  EXPECT_EQ(c.verdict, Verdict::pass);

  const auto m = rsq::verify_crossing_inequality(martingale(), 4, 8, opts(2000, 1000, 1));
  EXPECT_DOUBLE_EQ(m.bound, 5.0);
  EXPECT_EQ(m.verdict, Verdict::pass);

  const auto wide = rsq::verify_crossing_inequality(martingale(), 1e9, 1, opts(200, 200, 1));
  EXPECT_NEAR(wide.bound, 1.0, 1e-8);
  EXPECT_EQ(wide.estimate.point, 0.0);
  EXPECT_EQ(wide.verdict, Verdict::pass);

  EXPECT_THROW(rsq::verify_crossing_inequality(martingale(), 4, 0, opts(10, 10, 1)), std::invalid_argument);
  EXPECT_THROW(rsq::verify_crossing_inequality(sgd_constant_steps(), 4, 2, opts(10, 10, 1)),
               std::invalid_argument);
}

TEST(VerifyBsum, Examples) {
  const auto zero = rsq::verify_bsum(constant_process(0.5), BoundednessModulus::constant(1), Confidence(0.25),
                                     opts(100, 100, 1));
  EXPECT_EQ(zero.verdict, Verdict::pass);

  const auto fam = sgd_constant_steps();
  const auto& cert = fam.certificate();
  const auto chi = rsq::rs_bsum_boundedness(cert.K, *cert.rho, *cert.sigma);
  EXPECT_EQ(rsq::verify_bsum(fam, chi, Confidence(0.25), opts(1000, 1000, 2)).verdict, Verdict::pass);

  const auto bad = rsq::verify_bsum(fam, BoundednessModulus::constant(0), Confidence(0.25), opts(100, 100, 2));
  EXPECT_EQ(bad.verdict, Verdict::fail);
  EXPECT_THROW(rsq::verify_bsum(martingale(), chi, Confidence(0.25), opts(10, 10, 1)), std::invalid_argument);
}

TEST(VerifySolutionBound, SgdConstantSteps) {
  const auto fam = sgd_constant_steps();
  const auto& cert = fam.certificate();
  const auto N = rsq::constant_step_solution_bound(cert.K, *cert.L, *cert.M, 0.5, *cert.delta, Confidence(0.5),
                                                   Accuracy(0.5));
  const auto r = rsq::verify_solution_bound(fam, N, Confidence(0.5), Accuracy(0.5), opts(1000, 0, 6));
  EXPECT_EQ(r.verdict, Verdict::pass);
  EXPECT_GT(r.details.at("solution_found_probability").get<double>(), 0.5);
}

TEST(VerifyNonstochastic, TightAndLoose) {
  const auto g = Schedule::geometric(0.25, 0.5);
  const auto tight = rsq::deterministic_rs({.alpha = g, .gamma = g, .x0 = 0.5, .K = 1.0});
  for (double eps : {0.5, 0.1, 0.01}) {
    const auto r = rsq::verify_nonstochastic(tight, Accuracy(eps), opts(1, 10000, 0));
    EXPECT_EQ(r.verdict, Verdict::pass);
  }
  EXPECT_THROW(rsq::verify_nonstochastic(martingale(), Accuracy(0.5), opts(1, 10, 0)), std::invalid_argument);
}

TEST(Reports, RerunFromReproIsIdentical) {
  const auto fam = martingale();
  const auto first = rsq::verify_boundedness(fam, BoundednessModulus::power(2, -1), Confidence(0.25),
                                             opts(500, 300, 12345));
  rsq::VerifyOptions again;
  again.seed = first.repro.seed;
  again.n_paths = first.repro.n_paths;
  again.horizon = first.repro.horizon;
  again.threads = 3;
  const auto second = rsq::verify_boundedness(fam, BoundednessModulus::power(2, -1),
                                              Confidence(first.repro.parameters.at("lambda").get<double>()), again);
  EXPECT_EQ(first.to_json().dump(), second.to_json().dump());
  EXPECT_EQ(first.csv_row(), second.csv_row());
}

}  // namespace
