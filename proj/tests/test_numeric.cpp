#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <set>
#include <vector>

#include "lds/numeric.hpp"

using namespace lds;

TEST(LogSumExp, MatchesDirectSumAndHandlesInfinities) {
  std::vector<double> xs{std::log(0.2), std::log(0.3), std::log(0.5)};
  EXPECT_NEAR(log_sum_exp(xs), 0.0, 1e-15);
  std::vector<double> empty;
  EXPECT_EQ(log_sum_exp(empty), -kInf);
  std::vector<double> minus_inf{-kInf, -kInf};
  EXPECT_EQ(log_sum_exp(minus_inf), -kInf);
  std::vector<double> huge{1000.0, 1000.0};
  EXPECT_NEAR(log_sum_exp(huge), 1000.0 + std::log(2.0), 1e-12);
}

TEST(LogAccumulator, StreamingAndMergedAgreeWithBatch) {
  std::vector<double> xs;
  for (int i = 0; i < 50; ++i) xs.push_back(std::sin(i) * 30.0);
  LogAccumulator all, left, right;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    all.add(xs[i]);
    (i < 20 ? left : right).add(xs[i]);
  }
  left.merge(right);
  EXPECT_NEAR(all.value(), log_sum_exp(xs), 1e-12);
  EXPECT_NEAR(left.value(), log_sum_exp(xs), 1e-12);
  EXPECT_EQ(LogAccumulator{}.value(), -kInf);
}

TEST(Xlogxy, Conventions) {
  EXPECT_EQ(xlogxy(0.0, 0.0), 0.0);
  EXPECT_EQ(xlogxy(0.0, 0.3), 0.0);
  EXPECT_EQ(xlogxy(0.5, 0.0), kInf);
  EXPECT_NEAR(xlogxy(0.5, 0.25), 0.5 * std::log(2.0), 1e-16);
}

TEST(Seeds, FrozenStreams) {
  // Reference values from an independent implementation of the same
  // FNV-1a / splitmix64 / xoshiro256** definitions.
  EXPECT_EQ(derive_seed(7, "mean_tail/partition/0"), 0xeb0587095b9c47baULL);
  Rng rng(42);
  EXPECT_EQ(rng.next(), 0x5c8961e1f2055d33ULL);
  EXPECT_EQ(rng.next(), 0xe182e8e848466886ULL);
  EXPECT_EQ(rng.next(), 0x9f7313650e290a18ULL);
}

TEST(Seeds, PathsSeparateStreams) {
  EXPECT_NE(derive_seed(1, "a/0"), derive_seed(1, "a/1"));
  EXPECT_NE(derive_seed(1, "a/0"), derive_seed(2, "a/0"));
  EXPECT_EQ(derive_seed(1, "a/0"), derive_seed(1, "a/0"));
}

TEST(Rng, UniformInUnitInterval) {
  Rng rng(3);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(CategoricalSampler, FrequenciesAndZeroWeights) {
  std::vector<double> w{0.2, 0.0, 0.5, 0.3};
  CategoricalSampler cat(w);
  Rng rng(11);
  std::vector<int> counts(4, 0);
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) ++counts[cat(rng)];
  EXPECT_EQ(counts[1], 0);
  EXPECT_NEAR(counts[0] / double(draws), 0.2, 0.005);
  EXPECT_NEAR(counts[2] / double(draws), 0.5, 0.005);
  std::vector<double> zero{0.0, 0.0};
  EXPECT_THROW(CategoricalSampler{zero}, DomainError);
}

TEST(RunPartitions, ResultIndependentOfWorkerCount) {
  auto run = [](const char* threads) {
    setenv("LDS_THREADS", threads, 1);
    std::vector<double> slots(37);
    run_partitions(slots.size(), [&](std::size_t p) {
      Rng rng(derive_seed(5, "p/" + std::to_string(p)));
      slots[p] = rng.uniform();
    });
    unsetenv("LDS_THREADS");
    return slots;
  };
  EXPECT_EQ(run("1"), run("8"));
}

TEST(RunPartitions, PropagatesExceptions) {
  EXPECT_THROW(run_partitions(4, [](std::size_t p) {
                 if (p == 2) throw DomainError("boom");
               }),
               DomainError);
}

TEST(SolveIncreasing, FindsRootsFarFromOrigin) {
  auto eval = [](double x) { return std::pair{std::tanh(x / 50.0), (1.0 - std::pow(std::tanh(x / 50.0), 2)) / 50.0}; };
  const auto r = solve_increasing(eval, 0.9, 1e-14);
  EXPECT_NEAR(r.x, 50.0 * std::atanh(0.9), 1e-9);
  auto cubic = [](double x) { return std::pair{x * x * x, 3 * x * x}; };
  EXPECT_NEAR(solve_increasing(cubic, -8.0, 1e-13).x, -2.0, 1e-12);
}

TEST(SolveIncreasing, UnreachableTargetThrows) {
  auto bounded = [](double x) { return std::pair{std::tanh(x), 1.0 - std::tanh(x) * std::tanh(x)}; };
  EXPECT_THROW(solve_increasing(bounded, 2.0, 1e-12), NumericalError);
}

TEST(Compositions, EnumerationMatchesCount) {
  for (int n : {0, 1, 4, 7}) {
    for (std::size_t k : {1u, 2u, 3u, 4u}) {
      std::set<std::vector<int>> seen;
      for_each_composition(n, k, [&](const std::vector<int>& c) {
        int s = 0;
        for (int v : c) {
          EXPECT_GE(v, 0);
          s += v;
        }
        EXPECT_EQ(s, n);
        seen.insert(c);
      });
      EXPECT_EQ(seen.size(), composition_count(n, k, 1u << 30)) << "n=" << n << " k=" << k;
    }
  }
}

TEST(Compositions, CountSaturatesAtCap) {
  EXPECT_EQ(composition_count(1000, 2, 5'000'000), 1001u);
  EXPECT_EQ(composition_count(1000, 10, 100), 101u);
  EXPECT_NEAR(log_binomial(10, 3), std::log(120.0), 1e-12);
}
