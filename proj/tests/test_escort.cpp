#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lds/escort.hpp"

using namespace lds;

namespace {

/// Bernoulli model on labels {0,1} with m = (1,1) and the given grid.
ParametricModel bernoulli_grid(const std::vector<double>& thetas, double beta = 1.0, std::vector<double> prior = {},
                               double m_scale = 1.0) {
  if (prior.empty()) prior.assign(thetas.size(), 1.0 / thetas.size());
  std::vector<GridPoint> grid;
  for (std::size_t i = 0; i < thetas.size(); ++i)
    grid.push_back({{thetas[i]}, prior[i], {(1.0 - thetas[i]) / m_scale, thetas[i] / m_scale}});
  return ParametricModel(Alphabet::indexed(2), {m_scale, m_scale}, grid, beta, "bernoulli");
}

ParametricModel fine_bernoulli(int points) {
  std::vector<double> t;
  for (int i = 0; i < points; ++i) t.push_back((i + 0.5) / points);
  return bernoulli_grid(t);
}

/// Random model with k labels, T grid points and a non-uniform m.
ParametricModel random_model(Rng& rng, std::size_t k, std::size_t T) {
  std::vector<double> m(k);
  for (auto& v : m) v = 0.2 + 2.0 * rng.uniform();
  std::vector<GridPoint> grid;
  double prior_total = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> q(k);
    double s = 0.0;
    for (auto& v : q) s += (v = 0.05 + rng.exponential());
    std::vector<double> dens(k);
    for (std::size_t i = 0; i < k; ++i) dens[i] = q[i] / s / m[i];
    const double pr = rng.exponential();
    prior_total += pr;
    grid.push_back({{double(t)}, pr, dens});
  }
  for (auto& g : grid) g.prior /= prior_total;
  return ParametricModel(Alphabet::indexed(k), m, grid, 0.3 + 2.0 * rng.uniform());
}

const std::vector<std::size_t> kOne{1};

}  // namespace

TEST(ParametricModel, Validation) {
  Alphabet a = Alphabet::indexed(2);
  EXPECT_THROW(ParametricModel(a, {1, 1}, {{{0.5}, 1.0, {0.6, 0.6}}}), DomainError);            // not normalized
  EXPECT_THROW(ParametricModel(a, {1, 1}, {{{0.5}, 0.7, {0.5, 0.5}}}), DomainError);            // prior
  EXPECT_THROW(ParametricModel(a, {1, 1}, {{{0.5}, 1.0, {0.5, 0.5}}}, 0.0), DomainError);       // beta
  EXPECT_THROW(ParametricModel(a, {1, 1}, {{{0.5}, 0.5, {0.5, 0.5}}, {{1.0}, 0.5, {0.0, 1.0}}}),
               DomainError);  // support differs
  EXPECT_THROW(ParametricModel(a, {1, 1}, {}), StructuralError);
  EXPECT_NO_THROW(bernoulli_grid({0.3, 0.7}));
}

TEST(EscortPosterior, TwoPointExample) {
  auto model = bernoulli_grid({0.3, 0.7});
  auto post = escort_posterior(model, kOne);
  EXPECT_NEAR(post.weights[0], 0.3, 1e-15);
  EXPECT_NEAR(post.weights[1], 0.7, 1e-15);
  EXPECT_EQ(post.log_weights[1], 0.0);
  auto prior = escort_posterior(model, std::vector<std::size_t>{});
  EXPECT_NEAR(prior.weights[0], 0.5, 1e-16);
  EXPECT_NEAR(prior.log_z, 0.0, 1e-16);
}

TEST(EscortPosterior, TemperingLimitGivesPrior) {
  auto model = bernoulli_grid({0.2, 0.9}, 1e-9, {0.25, 0.75});
  std::vector<std::size_t> data(50, 1);
  auto post = escort_posterior(model, data);
  EXPECT_NEAR(post.weights[0], 0.25, 1e-6);
}

TEST(EscortPosterior, AppendingDataAddsBetaLogLikelihood) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    auto model = random_model(rng, 3, 5);
    std::vector<std::size_t> data;
    for (int j = 0; j < 6; ++j) data.push_back(static_cast<std::size_t>(rng.uniform() * 3));
    auto before = escort_posterior(model, data);
    const std::size_t x = trial % 3;
    data.push_back(x);
    auto after = escort_posterior(model, data);
    for (std::size_t t = 0; t < model.size(); ++t) {
      const double delta = (std::log(after.weights[t]) + after.log_z) - (std::log(before.weights[t]) + before.log_z);
      EXPECT_NEAR(delta, model.beta() * model.log_density(t, x), 1e-11);
    }
  }
}

TEST(EscortPosterior, ZeroMassIsInferenceError) {
  ParametricModel model(Alphabet::indexed(3), {1, 1, 1}, {{{0.0}, 1.0, {0.5, 0.5, 0.0}}});
  EXPECT_THROW(escort_posterior(model, std::vector<std::size_t>{2}), InferenceError);
}

TEST(EscortPredictive, Oracles) {
  auto model = bernoulli_grid({0.3, 0.7});
  auto p = escort_predictive(model, kOne);
  EXPECT_NEAR(p[1], 0.58, 1e-15);
  EXPECT_NEAR(p[0] + p[1], 1.0, 1e-15);
  auto prior_mix = escort_predictive(model, std::vector<std::size_t>{});
  EXPECT_NEAR(prior_mix[1], 0.5, 1e-15);
}

TEST(EscortPredictive, ConvergesToBetaBernoulli) {
  auto model = fine_bernoulli(2000);
  std::vector<std::size_t> data;
  for (int j = 0; j < 7; ++j) data.push_back(1);
  for (int j = 0; j < 5; ++j) data.push_back(0);
  EXPECT_NEAR(escort_predictive(model, data)[1], 8.0 / 14.0, 1e-3);
  // Refining the grid shrinks the quadrature error.
  const double coarse = std::abs(escort_predictive(fine_bernoulli(20), data)[1] - 8.0 / 14.0);
  const double fine = std::abs(escort_predictive(fine_bernoulli(200), data)[1] - 8.0 / 14.0);
  EXPECT_LT(fine, coarse);
}

TEST(EscortPredictiveState, BarycenterIdentityOnRandomModels) {
  Rng rng(5);
  for (int trial = 0; trial < 500; ++trial) {
    auto model = random_model(rng, 2 + trial % 4, 1 + trial % 6);
    std::vector<std::size_t> data;
    for (int j = 0; j < trial % 9; ++j) data.push_back(static_cast<std::size_t>(rng.uniform() * model.alphabet_size()));
    auto ps = escort_predictive_state(model, data);
    EXPECT_LE(ps.identity_residual, 1e-14);
    double density_mass = 0.0;
    auto pred = escort_predictive(model, data);
    for (std::size_t i = 0; i < pred.size(); ++i) density_mass += pred[i] * model.m()[i];
    EXPECT_NEAR(density_mass, 1.0, 1e-10);
  }
}

TEST(EscortPredictiveState, DegeneratePriorReturnsThatState) {
  auto model = bernoulli_grid({0.3, 0.7}, 1.0, {0.0, 1.0});
  auto ps = escort_predictive_state(model, std::vector<std::size_t>{0, 0, 1});
  EXPECT_NEAR(ps.state.central_measure()[1], 0.7, 1e-15);
}

TEST(PosteriorMean, Examples) {
  auto model = bernoulli_grid({0.3, 0.7});
  EXPECT_NEAR(posterior_mean(model, kOne, [](const GridPoint&) { return 1.0; }), 1.0, 1e-15);
  EXPECT_NEAR(posterior_mean(model, kOne, [](const GridPoint& g) { return g.theta[0] == 0.7 ? 1.0 : 0.0; }), 0.7, 1e-15);
  EXPECT_NEAR(posterior_mean(model, std::vector<std::size_t>{}, [](const GridPoint& g) { return g.theta[0]; }), 0.5,
              1e-15);
}

TEST(PartitionFunction, Examples) {
  auto model = bernoulli_grid({0.3, 0.7});
  auto pf = partition_function(model, kOne);
  EXPECT_NEAR(std::exp(pf.log_z), 0.5, 1e-15);
  EXPECT_NEAR(pf.f, std::log(2.0), 1e-15);
  auto empty = partition_function(model, std::vector<std::size_t>{});
  EXPECT_NEAR(empty.log_z, 0.0, 1e-15);
  EXPECT_THROW(empty.normalized_f(), ConfigurationError);

  auto degenerate = bernoulli_grid({0.3, 0.7}, 2.0, {1.0, 0.0});
  std::vector<std::size_t> data{1, 0, 0};
  EXPECT_NEAR(partition_function(degenerate, data).f, -(std::log(0.3) + 2 * std::log(0.7)), 1e-14);
  std::vector<double> p0{0.7, 0.3};
  EXPECT_NEAR(partition_function(degenerate, data, std::span<const double>(p0)).normalized_f(), 0.0, 1e-14);
}

TEST(ClassicalRisk, TwoPointOracle) {
  auto model = bernoulli_grid({0.3, 0.7});
  const PredictiveMap escort = [&](std::span<const std::size_t> x) { return escort_predictive(model, x); };
  const PredictiveMap uniform = [](std::span<const std::size_t>) { return std::vector<double>{0.5, 0.5}; };
  EXPECT_NEAR(classical_risk(model, escort, 1), 0.06942769813725994, 1e-15);
  EXPECT_NEAR(classical_risk(model, uniform, 1), 0.08228287850505181, 1e-15);
}

TEST(ClassicalRisk, DegeneratePriorTrueCandidateIsZero) {
  auto model = bernoulli_grid({0.3, 0.7}, 1.0, {0.0, 1.0});
  const PredictiveMap truth = [](std::span<const std::size_t>) { return std::vector<double>{0.3, 0.7}; };
  EXPECT_NEAR(classical_risk(model, truth, 3), 0.0, 1e-15);
}

TEST(ClassicalRisk, RelabelingInvariance) {
  auto model = bernoulli_grid({0.2, 0.6, 0.9}, 1.5, {0.2, 0.5, 0.3});
  auto swapped = bernoulli_grid({0.8, 0.4, 0.1}, 1.5, {0.2, 0.5, 0.3});
  const PredictiveMap a = [&](std::span<const std::size_t> x) { return escort_predictive(model, x); };
  const PredictiveMap b = [&](std::span<const std::size_t> x) { return escort_predictive(swapped, x); };
  EXPECT_NEAR(classical_risk(model, a, 3), classical_risk(swapped, b, 3), 1e-14);
}

TEST(ClassicalRisk, NormalizationFlag) {
  auto model = bernoulli_grid({0.3, 0.7}, 2.0);
  const PredictiveMap escort = [&](std::span<const std::size_t> x) { return escort_predictive(model, x); };
  const double raw = classical_risk(model, escort, 2);
  const double normalized = classical_risk(model, escort, 2, RiskOptions{true});
  // A = sum_x sum_theta pi p^beta for beta = 2, n = 2.
  const double a = 0.5 * std::pow(0.3 * 0.3 + 0.7 * 0.7, 2) * 2.0;
  EXPECT_NEAR(raw / normalized, a, 1e-14);
}

TEST(ClassicalRisk, CapacityError) {
  auto model = bernoulli_grid({0.3, 0.7});
  const PredictiveMap u = [](std::span<const std::size_t>) { return std::vector<double>{0.5, 0.5}; };
  EXPECT_THROW(classical_risk(model, u, 21), CapacityError);
}

TEST(QuantumRisk, EscortStateBeatsMaximallyMixed) {
  auto model = bernoulli_grid({0.3, 0.7});
  const StateMap escort = [&](std::span<const std::size_t> x) { return escort_predictive_state(model, x).state; };
  const StateMap mixed = [](std::span<const std::size_t>) { return CentralState(Alphabet::indexed(2), {0.5, 0.5}); };
  // For beta = 1 the data weights integrate to A = 1, so T equals R.
  EXPECT_NEAR(quantum_risk(model, escort, 1), 0.06942769813725994, 1e-14);
  EXPECT_LE(quantum_risk(model, escort, 1), quantum_risk(model, mixed, 1));
}

TEST(QuantumRisk, DegeneratePriorAndUndominatedCandidate) {
  auto model = bernoulli_grid({0.3, 0.7}, 1.0, {1.0, 0.0});
  const StateMap own = [](std::span<const std::size_t>) { return CentralState(Alphabet::indexed(2), {0.7, 0.3}); };
  EXPECT_NEAR(quantum_risk(model, own, 2), 0.0, 1e-15);

  ParametricModel partial(Alphabet::indexed(3), {1, 1, 0}, {{{0.0}, 1.0, {0.5, 0.5, 0.0}}});
  const StateMap outside = [](std::span<const std::size_t>) { return CentralState(Alphabet::indexed(3), {0.4, 0.4, 0.2}); };
  EXPECT_EQ(quantum_risk(partial, outside, 1), kInf);
}

TEST(RiskMinimality, EscortNeverLoses) {
  for (double beta : {0.5, 1.0, 2.0}) {
    auto model = bernoulli_grid({0.1, 0.3, 0.5, 0.7, 0.9}, beta);
    for (int n : {1, 2}) {
      auto rep = risk_minimality_check(model, n, 50, 17);
      EXPECT_TRUE(rep.passed) << "beta=" << beta << " n=" << n << " margin=" << rep.min_margin;
      auto q = risk_minimality_check(model, n, 20, 18, RiskKind::Quantum);
      EXPECT_TRUE(q.passed);
    }
  }
  auto vacuous = risk_minimality_check(bernoulli_grid({0.3, 0.7}), 1, 0, 1);
  EXPECT_TRUE(vacuous.passed);
  EXPECT_EQ(vacuous.min_margin, kInf);
}

TEST(RiskMinimality, ScalingMPreservesOrdering) {
  const double c = 3.0, beta = 2.0;
  auto base = bernoulli_grid({0.3, 0.7}, beta);
  auto scaled = bernoulli_grid({0.3, 0.7}, beta, {}, c);
  const PredictiveMap e1 = [&](std::span<const std::size_t> x) { return escort_predictive(base, x); };
  const PredictiveMap e2 = [&](std::span<const std::size_t> x) { return escort_predictive(scaled, x); };
  const PredictiveMap u1 = [](std::span<const std::size_t>) { return std::vector<double>{0.5, 0.5}; };
  const PredictiveMap u2 = [&](std::span<const std::size_t>) { return std::vector<double>{0.5 / c, 0.5 / c}; };
  const int n = 2;
  const double factor = std::pow(c, n * (1.0 - beta));
  EXPECT_NEAR(classical_risk(scaled, e2, n), factor * classical_risk(base, e1, n), 1e-14);
  EXPECT_NEAR(classical_risk(scaled, u2, n), factor * classical_risk(base, u1, n), 1e-14);
  EXPECT_LT(classical_risk(scaled, e2, n), classical_risk(scaled, u2, n));
}
