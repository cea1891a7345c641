#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "lds/cramer.hpp"

using namespace lds;

namespace {

double binary_rate(double a, double p) {
  auto term = [](double x, double y) { return x == 0.0 ? 0.0 : x * std::log(x / y); };
  return term(a, p) + term(1.0 - a, 1.0 - p);
}

ScalarDistribution die() {
  std::vector<Atom> atoms;
  for (int v = 1; v <= 6; ++v) atoms.push_back({double(v), 1.0 / 6.0});
  return ScalarDistribution::atomic(atoms);
}

}  // namespace

TEST(ScalarDistribution, NormalizesAtoms) {
  auto d = ScalarDistribution::atomic({{2.0, 0.25}, {1.0, 0.5}, {2.0, 0.25}, {5.0, 0.0}});
  ASSERT_EQ(d.atoms().size(), 2u);
  EXPECT_EQ(d.atoms()[0].value, 1.0);
  EXPECT_EQ(d.atoms()[1].probability, 0.5);
  EXPECT_THROW(ScalarDistribution::atomic({{0.0, 0.5}}), DomainError);
  EXPECT_THROW(ScalarDistribution::atomic({}), StructuralError);
}

TEST(Cgf, BasicIdentities) {
  auto b = ScalarDistribution::bernoulli(0.3);
  EXPECT_NEAR(cgf(b, 0.0), 0.0, 1e-16);
  EXPECT_NEAR(cgf(b, 1.0), std::log(0.7 + 0.3 * std::exp(1.0)), 1e-15);
  EXPECT_NEAR(cgf(b, 800.0), 800.0 + std::log(0.3), 1e-10);  // no overflow
}

TEST(Cgf, SamplerOutsideDeclaredRange) {
  auto s = ScalarDistribution::sampler([](Rng& r) { return r.exponential(); },
                                       ScalarDistribution::DeclaredCgf{[](double t) { return -std::log1p(-t); }, -kInf, 0.99});
  EXPECT_NEAR(cgf(s, 0.5), std::log(2.0), 1e-15);
  EXPECT_THROW(cgf(s, 1.5), DomainError);
  auto bare = ScalarDistribution::sampler([](Rng& r) { return r.uniform(); });
  EXPECT_THROW(cgf(bare, 0.1), DomainError);
}

TEST(RateFunction, BernoulliClosedForm) {
  RateFunctionProfile prof(ScalarDistribution::bernoulli(0.5));
  EXPECT_NEAR(prof.rate(0.7), 0.08228287850505184, 1e-12);
  for (int i = 0; i <= 100; ++i) {
    const double a = i / 100.0;
    EXPECT_NEAR(rate_function(prof, a), binary_rate(a, 0.5), 1e-9) << "a=" << a;
  }
  EXPECT_EQ(prof.rate(1.2), kInf);
  EXPECT_EQ(prof.rate(-0.1), kInf);
  EXPECT_EQ(prof.rate(0.5), 0.0);
}

TEST(RateFunction, SkewedBernoulliAndBoundaryAtoms) {
  RateFunctionProfile prof(ScalarDistribution::bernoulli(0.1));
  EXPECT_NEAR(prof.rate(0.9), binary_rate(0.9, 0.1), 1e-9);
  EXPECT_NEAR(prof.rate(1.0), -std::log(0.1), 1e-15);
  EXPECT_NEAR(prof.rate(0.0), -std::log(0.9), 1e-15);
  EXPECT_EQ(prof.optimizer(1.0), kInf);
  EXPECT_EQ(prof.optimizer(0.0), -kInf);
}

TEST(RateFunction, PointMass) {
  RateFunctionProfile prof(ScalarDistribution::point_mass(2.0));
  EXPECT_EQ(prof.rate(2.0), 0.0);
  EXPECT_EQ(prof.rate(2.0 + 1e-9), kInf);
}

TEST(RateFunction, ConvexNonnegativeZeroAtMean) {
  RateFunctionProfile prof(ScalarDistribution::atomic({{-1.0, 0.3}, {0.5, 0.5}, {2.0, 0.2}}));
  EXPECT_NEAR(prof.rate(prof.mean()), 0.0, 1e-14);
  double prev2 = prof.rate(-0.99), prev1 = prof.rate(-0.98);
  for (int i = 3; i < 299; ++i) {
    const double a = -1.0 + i * 0.01;
    const double cur = prof.rate(a);
    EXPECT_GE(cur, 0.0);
    EXPECT_GE(prev2 + cur - 2.0 * prev1, -1e-10) << "convexity at a=" << a;
    prev2 = prev1;
    prev1 = cur;
  }
}

TEST(RateFunction, LegendreDualityWithCgf) {
  RateFunctionProfile prof(die());
  for (double a : {1.5, 2.7, 3.5, 4.5, 5.9}) {
    const double t = prof.optimizer(a);
    EXPECT_NEAR(prof.cgf_derivative(t), a, 1e-11);
    // I(a) >= a s - c(s) for every s.
    for (double s : {-2.0, -0.5, 0.0, 0.3, 1.0, 3.0}) EXPECT_GE(prof.rate(a) + 1e-12, a * s - prof.cgf(s));
  }
}

TEST(IntervalSet, ParseMergeAndTopology) {
  auto g = IntervalSet::parse("[0.7,1]; (0.9, 2) ; (-inf,-1)");
  ASSERT_EQ(g.parts().size(), 2u);
  EXPECT_EQ(g.parts()[0].lo, -kInf);
  EXPECT_EQ(g.parts()[1].hi, 2.0);
  EXPECT_FALSE(g.parts()[1].hi_closed);
  EXPECT_TRUE(g.contains(0.7));
  EXPECT_FALSE(g.interior().contains(0.7));
  EXPECT_TRUE(g.closure().contains(2.0));
  auto touching = IntervalSet::parse("[0,1);[1,2]");
  EXPECT_EQ(touching.parts().size(), 1u);
  auto same_end = IntervalSet::parse("[0,1);[0.5,1]");
  ASSERT_EQ(same_end.parts().size(), 1u);
  EXPECT_TRUE(same_end.parts()[0].hi_closed);
  EXPECT_THROW(IntervalSet::parse("0.7,1"), ParseError);
  EXPECT_THROW(IntervalSet::parse("[a,1]"), ParseError);
  EXPECT_TRUE(IntervalSet::parse("(1,1)").empty());
}

TEST(RateInfimum, ClosureAndInterior) {
  RateFunctionProfile prof(ScalarDistribution::bernoulli(0.5));
  auto g = IntervalSet::parse("[0.7,1]");
  EXPECT_NEAR(rate_infimum(prof, g).value, 0.08228287850505184, 1e-12);
  EXPECT_NEAR(*rate_infimum(prof, g).argmin, 0.7, 0.0);
  EXPECT_NEAR(rate_infimum(prof, IntervalSet::parse("(0.2,0.8)")).value, 0.0, 0.0);
  EXPECT_EQ(rate_infimum(prof, IntervalSet::parse("[1.5,3]")).value, kInf);
  EXPECT_EQ(rate_infimum(prof, IntervalSet::parse("(1,3]")).value, kInf);
  EXPECT_NEAR(rate_infimum(prof, IntervalSet::parse("[1,3]")).value, std::log(2.0), 1e-15);
}

TEST(ExactMeanTail, BernoulliOracles) {
  auto b = ScalarDistribution::bernoulli(0.5);
  auto g = IntervalSet::parse("[0.7,1]");
  EXPECT_NEAR(exact_mean_tail(b, 10, g).probability, 0.171875, 1e-15);
  EXPECT_NEAR(exact_mean_tail(b, 50, g).log_probability, -5.713764939053789, 1e-11);
  EXPECT_NEAR(exact_mean_tail(b, 200, g).log_probability, -18.703666158089305, 1e-10);
}

TEST(ExactMeanTail, DieSumOracle) {
  auto g = IntervalSet::parse("[4.5,inf)");
  EXPECT_NEAR(exact_mean_tail(die(), 20, g).probability, 0.004931940796689163, 1e-12);
}

TEST(ExactMeanTail, OpenEndpointsOnTheLattice) {
  auto b = ScalarDistribution::bernoulli(0.5);
  // n = 10: mean 0.7 exactly is the sum 7; the open interval excludes it.
  const double closed = exact_mean_tail(b, 10, IntervalSet::parse("[0.7,1]")).probability;
  const double open = exact_mean_tail(b, 10, IntervalSet::parse("(0.7,1]")).probability;
  EXPECT_NEAR(closed - open, 120.0 / 1024.0, 1e-15);
}

TEST(ExactMeanTail, CapacityErrors) {
  auto irregular = ScalarDistribution::atomic({{0.0, 0.3}, {1.0, 0.3}, {std::sqrt(2.0), 0.4}});
  EXPECT_THROW(exact_mean_tail(irregular, 5, IntervalSet::parse("[1,2]")), CapacityError);
  auto wide = ScalarDistribution::atomic({{0.0, 0.5}, {1000.0, 0.25}, {1001.0, 0.25}});
  EXPECT_THROW(exact_mean_tail(wide, 1000, IntervalSet::parse("[500,2000]")), CapacityError);
}

TEST(ChernoffBound, HoldsOnGrid) {
  for (double p : {0.1, 0.5, 0.8}) {
    auto b = ScalarDistribution::bernoulli(p);
    RateFunctionProfile prof(b);
    for (double a : {0.85, 0.9, 0.95}) {
      if (a <= p) continue;
      for (int n : {1, 5, 20, 100, 400}) {
        const double q = exact_mean_tail(b, n, IntervalSet::parse("[" + std::to_string(a) + ",1]")).probability;
        EXPECT_LE(q, std::exp(-n * prof.rate(a)) * (1.0 + 1e-9)) << p << " " << a << " " << n;
      }
    }
  }
}

TEST(CramerBoundCheck, BernoulliSandwich) {
  auto rep = cramer_bound_check(ScalarDistribution::bernoulli(0.5), IntervalSet::parse("[0.7,1]"), {10, 50, 200});
  EXPECT_TRUE(rep.all_ok);
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_NEAR(rep.rows[2].scaled_log_probability + 0.08228287850505184, -0.0112, 1e-3);
  for (const auto& r : rep.rows) EXPECT_TRUE(r.upper_ok);
}

TEST(MonteCarlo, AgreesWithExactAndIsDeterministic) {
  auto b = ScalarDistribution::bernoulli(0.5);
  auto g = IntervalSet::parse("[0.7,1]");
  const double exact = exact_mean_tail(b, 20, g).probability;
  auto run = [&](const char* threads) {
    setenv("LDS_THREADS", threads, 1);
    auto e = mc_mean_tail(b, 20, g, 40000, 7);
    unsetenv("LDS_THREADS");
    return e;
  };
  auto one = run("1"), many = run("6");
  EXPECT_EQ(one.estimate, many.estimate);
  EXPECT_NEAR(one.estimate, exact, 4.0 * one.standard_error);
}

TEST(MonteCarlo, TiltedSamplingReachesRareEvents) {
  auto b = ScalarDistribution::bernoulli(0.5);
  auto g = IntervalSet::parse("[0.7,1]");
  const double exact = exact_mean_tail(b, 200, g).probability;
  auto e = mc_mean_tail(b, 200, g, 20000, 11, McOptions{true, std::nullopt, 64});
  EXPECT_GT(e.tilt, 0.0);
  EXPECT_NEAR(e.estimate / exact, 1.0, 0.1);
  EXPECT_NEAR(e.estimate, exact, 5.0 * e.standard_error);
}

TEST(MonteCarlo, SamplerDistribution) {
  auto s = ScalarDistribution::sampler([](Rng& r) { return r.uniform() < 0.5 ? 1.0 : 0.0; });
  auto e = mc_mean_tail(s, 10, IntervalSet::parse("[0.7,1]"), 50000, 3);
  EXPECT_NEAR(e.estimate, 0.171875, 4.0 * e.standard_error);
}

TEST(RateFunction, DeclaredCgfNormal) {
  ScalarDistribution::DeclaredCgf c{[](double t) { return 1.5 * t + 2.0 * t * t; }};
  auto s = ScalarDistribution::sampler([](Rng& r) { return r.uniform(); }, c);
  RateFunctionProfile prof(s);
  EXPECT_NEAR(prof.mean(), 1.5, 1e-10);
  for (double a : {-3.0, 0.0, 1.5, 2.0, 7.0}) EXPECT_NEAR(prof.rate(a), (a - 1.5) * (a - 1.5) / 8.0, 1e-9) << a;
}

TEST(RateFunction, DeclaredCgfWithFiniteRange) {
  // Exponential law with rate 2: I(a) = 2a - 1 - log(2a) on (0, inf).
  ScalarDistribution::DeclaredCgf c{[](double t) { return -std::log1p(-t / 2.0); }, -kInf, 2.0, 0.0, kInf};
  auto s = ScalarDistribution::sampler([](Rng& r) { return r.exponential() / 2.0; }, c);
  RateFunctionProfile prof(s);
  for (double a : {0.05, 0.3, 0.5, 1.0, 4.0}) EXPECT_NEAR(prof.rate(a), 2 * a - 1 - std::log(2 * a), 1e-8) << a;
  EXPECT_EQ(prof.rate(0.0), kInf);
  EXPECT_EQ(prof.rate(-1.0), kInf);
  EXPECT_THROW(RateFunctionProfile(ScalarDistribution::sampler([](Rng&) { return 0.0; })), DomainError);
}

TEST(CramerBoundCheck, SamplerNeedsMonteCarlo) {
  ScalarDistribution::DeclaredCgf c{[](double t) { return 0.5 * t * t; }};
  auto s = ScalarDistribution::sampler([](Rng& r) { return r.uniform() < 0.5 ? -1.0 : 1.0; }, c);
  auto g = IntervalSet::parse("[0.5,inf)");
  EXPECT_THROW(cramer_bound_check(s, g, {10}), DomainError);
  auto rep = cramer_bound_check(s, g, {10, 20}, CramerOptions{20000, 5, false, std::nullopt});
  EXPECT_EQ(rep.slack_constant, 1.0);
  EXPECT_NEAR(rep.inf_closure.value, 0.125, 1e-10);
  for (const auto& row : rep.rows) {
    EXPECT_FALSE(row.exact);
    ASSERT_TRUE(row.mc);
  }
}
