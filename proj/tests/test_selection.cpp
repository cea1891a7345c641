#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "lds/selection.hpp"

using namespace lds;

namespace {

ParametricModel bernoulli_grid(const std::vector<double>& thetas, double beta = 1.0, std::string id = "bernoulli",
                               std::optional<std::size_t> dim = std::nullopt) {
  std::vector<GridPoint> grid;
  for (double t : thetas) grid.push_back({{t}, 1.0 / thetas.size(), {1.0 - t, t}});
  return ParametricModel(Alphabet({"0", "1"}), {1.0, 1.0}, std::move(grid), beta, std::move(id), dim);
}

std::vector<double> fine_grid(std::size_t points) {
  std::vector<double> g;
  for (std::size_t i = 1; i <= points; ++i) g.push_back(static_cast<double>(i) / (points + 1));
  return g;
}

TruthSpec bernoulli_truth(double t, std::uint64_t seed = 0) { return {{1.0 - t, t}, seed}; }

std::vector<std::size_t> ones_zeros(int ones, int zeros) {
  std::vector<std::size_t> d(static_cast<std::size_t>(ones), 1);
  d.insert(d.end(), static_cast<std::size_t>(zeros), 0);
  return d;
}

}  // namespace

TEST(BayesLosses, TwoLabelGeneralizationErrorOracle) {
  // A point-mass prior at theta = 0.42 makes the predictive (0.58, 0.42).
  auto model = bernoulli_grid({0.42});
  auto data = ones_zeros(3, 2);
  auto l = bayes_losses(model, data, bernoulli_truth(0.5));
  EXPECT_NEAR(*l.generalization_error, 0.012966691013252263, 1e-15);
  EXPECT_NEAR(*l.generalization_error_state, 0.012966691013252263, 1e-15);
  EXPECT_NEAR(l.training_loss, -(3 * std::log(0.42) + 2 * std::log(0.58)) / 5.0, 1e-15);
}

TEST(BayesLosses, PredictiveEqualToTruthHasZeroError) {
  auto model = bernoulli_grid({0.3});
  auto l = bayes_losses(model, ones_zeros(1, 1), bernoulli_truth(0.3));
  EXPECT_EQ(*l.generalization_error, 0.0);
}

TEST(BayesLosses, IdentitiesOnRandomDraws) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> thetas;
    for (int j = 0; j < 2 + trial % 5; ++j) thetas.push_back(0.02 + 0.96 * rng.uniform());
    auto model = bernoulli_grid(thetas, 0.5 + 1.5 * rng.uniform());
    auto truth = bernoulli_truth(0.05 + 0.9 * rng.uniform());
    auto data = sample_truth(model, truth, 1 + trial % 30, rng);
    auto l = bayes_losses(model, data, truth);
    EXPECT_LE(l.bridge_residual, 1e-12);
    EXPECT_TRUE(l.bridge_ok);
    EXPECT_LE(l.training_identity_residual, 1e-12);
    // E_bg = L_bg - S(q) with S the entropy of q m.
    double entropy = 0.0;
    for (double v : truth.q) entropy -= v * std::log(v);
    EXPECT_NEAR(*l.generalization_error, *l.generalization_loss - entropy, 1e-12);
  }
}

TEST(BayesLosses, MissingTruthIsConfigurationError) {
  auto model = bernoulli_grid({0.3, 0.7});
  auto l = bayes_losses(model, ones_zeros(2, 1));
  EXPECT_FALSE(l.generalization_loss.has_value());
  EXPECT_THROW(l.generalization("waic study"), ConfigurationError);
}

TEST(BayesLosses, TruthValidation) {
  auto model = bernoulli_grid({0.3, 0.7});
  EXPECT_THROW(bayes_losses(model, ones_zeros(1, 1), TruthSpec{{0.5, 0.6}, 0}), DomainError);
  EXPECT_THROW(bayes_losses(model, ones_zeros(1, 1), TruthSpec{{1.0, 0.0}, 0}), DomainError);
  EXPECT_THROW(bayes_losses(model, ones_zeros(1, 1), TruthSpec{{1.0}, 0}), StructuralError);
}

TEST(FunctionalVariance, TwoPointPriorWeighting) {
  auto model = bernoulli_grid({0.3, 0.7});
  const std::vector<int> none{0, 0};
  const auto prior = escort_posterior_from_counts(model, none);
  const std::vector<std::size_t> one{1};
  EXPECT_NEAR(functional_variance(model, prior, one), 0.17947841605418333, 1e-15);
}

TEST(FunctionalVariance, DegeneratePriorAndAdditivity) {
  auto single = bernoulli_grid({0.4});
  EXPECT_EQ(functional_variance(single, ones_zeros(4, 3)), 0.0);

  auto model = bernoulli_grid({0.2, 0.5, 0.9});
  auto all = ones_zeros(5, 4);
  const auto post = escort_posterior(model, all);
  const std::vector<std::size_t> a(all.begin(), all.begin() + 6), b(all.begin() + 6, all.end());
  EXPECT_NEAR(functional_variance(model, post, all),
              functional_variance(model, post, a) + functional_variance(model, post, b), 1e-14);
  EXPECT_GE(functional_variance(model, post, all), 0.0);
}

TEST(Waic, DefiningIdentityIsExact) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto model = bernoulli_grid({0.1, 0.35, 0.6, 0.85}, 0.25 + 2 * rng.uniform());
    auto data = sample_truth(model, bernoulli_truth(0.5), 1 + trial, rng);
    auto w = waic(model, data);
    EXPECT_EQ(w.waic, w.training_loss + (w.beta / static_cast<double>(w.n)) * w.functional_variance);
  }
  auto single = bernoulli_grid({0.6});
  auto w = waic(single, ones_zeros(2, 2));
  EXPECT_EQ(w.waic, w.training_loss);
}

TEST(Aic, Oracles) {
  ParametricModel certain(Alphabet({"x"}), {1.0}, {{{0.0}, 1.0, {1.0}}}, 1.0, "certain");
  const std::vector<std::size_t> data(8, 0);
  EXPECT_DOUBLE_EQ(aic(certain, data).aic, 1.0 / 8.0);

  auto model = bernoulli_grid({0.1, 0.3, 0.5, 0.68, 0.9});
  auto d = ones_zeros(7, 3);
  auto r = aic(model, d);
  EXPECT_EQ(r.mle_index, 3u);
  EXPECT_TRUE(r.log_likelihood_form);
  EXPECT_NEAR(r.aic, -(7 * std::log(0.68) + 3 * std::log(0.32)) / 10.0 + 0.1, 1e-15);

  auto wider = bernoulli_grid({0.1, 0.3, 0.5, 0.68, 0.9}, 1.0, "wider", 2);
  EXPECT_NEAR(aic(wider, d).aic - r.aic, 0.1, 1e-15);
}

TEST(LearningCoefficient, HandComputedTable) {
  struct Case {
    StandardFormExponents exps;
    std::int64_t num, den;
    int order;
  };
  const std::vector<Case> cases{
      {{{{{1, 2}, {0, 3}}}}, 1, 2, 1},
      {{{{{1, 1}, {0, 0}}}}, 1, 2, 2},
      {{{{{1}, {1}}, {{1}, {0}}}}, 1, 2, 1},
      {{{{{1}, {0}}}}, 1, 2, 1},
      {{{{{2}, {0}}}}, 1, 4, 1},
      {{{{{1, 1, 1}, {0, 0, 0}}}}, 1, 2, 3},
      {{{{{0, 2}, {5, 1}}}}, 1, 2, 1},
      {{{{{2, 1}, {1, 0}}, {{1, 3}, {0, 2}}}}, 1, 2, 2},
      {{{{{0, 0}, {0, 0}}, {{3, 0}, {2, 0}}}}, 1, 2, 1},
      {{{{{2, 4}, {2, 6}}}}, 3, 4, 1},
  };
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto lc = learning_coefficient(cases[c].exps);
    EXPECT_EQ(lc.numerator, cases[c].num) << "case " << c;
    EXPECT_EQ(lc.denominator, cases[c].den) << "case " << c;
    EXPECT_EQ(lc.order, cases[c].order) << "case " << c;
    EXPECT_EQ(lc.lambda, static_cast<double>(cases[c].num) / cases[c].den);
  }
}

TEST(LearningCoefficient, Errors) {
  EXPECT_THROW(learning_coefficient({{{{0, 0}, {1, 1}}}}), DegenerateModelError);
  EXPECT_THROW(learning_coefficient({{{{1}, {0, 0}}}}), StructuralError);
  EXPECT_THROW(learning_coefficient({{{{-1}, {0}}}}), DomainError);
  EXPECT_THROW(learning_coefficient({}), StructuralError);
}

TEST(LearningCoefficient, RegularBoundProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + trial % 4;
    StandardFormChart chart;
    for (std::size_t j = 0; j < d; ++j) {
      chart.k.push_back(1 + static_cast<int>(rng.next() % 3));
      chart.h.push_back(0);
    }
    const auto lc = learning_coefficient({{chart}});
    EXPECT_GT(lc.lambda, 0.0);
    EXPECT_LE(lc.lambda, d / 2.0);
    EXPECT_GE(lc.order, 1);
    EXPECT_LE(lc.order, static_cast<int>(d));
  }
}

TEST(OptimalParameter, ThreePointCrossEntropyTable) {
  auto model = bernoulli_grid({0.3, 0.5, 0.7});
  auto opt = optimal_parameter(model, bernoulli_truth(0.6));
  EXPECT_NEAR(opt.expected_loss[1], std::log(2.0), 1e-15);
  EXPECT_NEAR(opt.expected_loss[2], 0.6955940880936138, 1e-15);
  ASSERT_EQ(opt.optimal_set, (std::vector<std::size_t>{1}));
  EXPECT_TRUE(opt.shared_density);
  for (std::size_t t = 0; t < 3; ++t) {
    EXPECT_GE(opt.excess[t], 0.0);
    EXPECT_EQ(opt.excess[t] == 0.0, t == 1);
    EXPECT_NEAR(opt.excess[t], opt.excess_states[t], 1e-12);
  }
}

TEST(OptimalParameter, RealizableTruthGivesEntropy) {
  auto model = bernoulli_grid({0.2, 0.4});
  auto opt = optimal_parameter(model, bernoulli_truth(0.4));
  EXPECT_NEAR(opt.min_loss, -(0.6 * std::log(0.6) + 0.4 * std::log(0.4)), 1e-15);
  EXPECT_EQ(opt.excess[1], 0.0);
}

TEST(OptimalParameter, FlagsDistinctDensitiesAtTheMinimum) {
  // theta = 0.3 and 0.7 tie for q = (0.5, 0.5) but have different densities.
  auto model = bernoulli_grid({0.3, 0.7});
  auto opt = optimal_parameter(model, bernoulli_truth(0.5));
  EXPECT_EQ(opt.optimal_set.size(), 2u);
  EXPECT_FALSE(opt.shared_density);
}

TEST(Coherence, Examples) {
  auto model = bernoulli_grid({0.3, 0.5, 0.7});
  auto rep = coherence_check(model, bernoulli_truth(0.6), {0.1, 0.01});
  EXPECT_NEAR(rep.rows[0].best_constant, 0.02806836820023135, 1e-12);
  EXPECT_EQ(rep.rows[0].admissible, 2u);
  EXPECT_EQ(rep.rows[1].best_constant, kInf);
  EXPECT_TRUE(rep.coherent);

  auto realizable = coherence_check(model, bernoulli_truth(0.5), {1.0});
  EXPECT_NEAR(realizable.rows[0].best_constant, 1.0, 1e-12);

  auto lone = coherence_check(bernoulli_grid({0.5}), bernoulli_truth(0.5), {1.0});
  EXPECT_EQ(lone.rows[0].best_constant, kInf);
  EXPECT_FALSE(lone.coherent);
}

TEST(Asymptotics, DegeneratePriorHasZeroSlope) {
  AsymptoticsOptions opts{{10, 20, 40}, 30, 1, 0.0, std::nullopt};
  auto rep = stochastic_complexity_asymptotics(bernoulli_grid({0.4}), bernoulli_truth(0.4), opts);
  EXPECT_NEAR(rep.lambda_hat, 0.0, 1e-12);
  for (double v : rep.mean_excess) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Asymptotics, ValidatesInputs) {
  auto model = bernoulli_grid({0.4, 0.6});
  EXPECT_THROW(stochastic_complexity_asymptotics(model, bernoulli_truth(0.5), {{10}, 30, 1, {}, {}}), DomainError);
  EXPECT_THROW(stochastic_complexity_asymptotics(model, bernoulli_truth(0.5), {{20, 10}, 30, 1, {}, {}}), DomainError);
  EXPECT_THROW(stochastic_complexity_asymptotics(model, bernoulli_truth(0.5), {{10, 20}, 5, 1, {}, {}}), DomainError);
}

TEST(Asymptotics, RegularModelSlopeAndThreadDeterminism) {
  auto model = bernoulli_grid(fine_grid(999));
  AsymptoticsOptions opts{{25, 50, 100, 200, 400}, 60, 17, 0.5, std::nullopt};
  setenv("LDS_THREADS", "1", 1);
  auto a = stochastic_complexity_asymptotics(model, bernoulli_truth(0.3), opts);
  setenv("LDS_THREADS", "4", 1);
  auto b = stochastic_complexity_asymptotics(model, bernoulli_truth(0.3), opts);
  unsetenv("LDS_THREADS");
  EXPECT_EQ(a.mean_excess, b.mean_excess);
  EXPECT_EQ(a.lambda_hat, b.lambda_hat);
  EXPECT_GT(a.lambda_hat, 0.3);
  EXPECT_LT(a.lambda_hat, 0.7);
  ASSERT_TRUE(a.z_score.has_value());
  EXPECT_GT(a.lambda_se, 0.0);
}

TEST(SelectModel, RankingAndTieBreaks) {
  auto data = ones_zeros(6, 4);
  auto small = bernoulli_grid({0.6}, 1.0, "small", 1);
  auto big = bernoulli_grid({0.6}, 1.0, "big", 3);
  auto rep = select_model({big, small}, data, Criterion::Aic);
  EXPECT_EQ(rep.selected, "small");
  EXPECT_TRUE(rep.selection_is_advisory);

  // Equal scores and dimensions fall back to id order.
  auto b = bernoulli_grid({0.6}, 1.0, "b");
  auto a = bernoulli_grid({0.6}, 1.0, "a");
  auto tie = select_model({b, a}, data, Criterion::Waic);
  EXPECT_EQ(tie.selected, "a");
  ASSERT_EQ(tie.tie_breaks.size(), 1u);

  auto single = select_model({bernoulli_grid({0.2, 0.8}, 1.0, "only")}, data, Criterion::Waic);
  EXPECT_EQ(single.selected, "only");
}

TEST(SelectModel, PermutationInvariance) {
  auto data = ones_zeros(7, 5);
  std::vector<ParametricModel> models{bernoulli_grid({0.5}, 1.0, "m0"), bernoulli_grid({0.6}, 1.0, "m1"),
                                      bernoulli_grid({0.3, 0.6}, 1.0, "m2"), bernoulli_grid({0.6}, 1.0, "m3")};
  std::vector<std::size_t> order{0, 1, 2, 3};
  std::string first;
  do {
    std::vector<ParametricModel> perm;
    for (auto i : order) perm.push_back(models[i]);
    const auto sel = select_model(perm, data, Criterion::Waic).selected;
    if (first.empty()) first = sel;
    EXPECT_EQ(sel, first);
  } while (std::next_permutation(order.begin(), order.end()));
}

TEST(SelectModel, Errors) {
  EXPECT_THROW(select_model({}, ones_zeros(1, 1), Criterion::Waic), StructuralError);
  ParametricModel other(Alphabet({"0", "1"}), {0.5, 1.5}, {{{0.0}, 1.0, {0.5, 0.5}}}, 1.0, "other");
  EXPECT_THROW(select_model({bernoulli_grid({0.5}), other}, ones_zeros(1, 1), Criterion::Waic), StructuralError);
}

TEST(NormalMixture, DegenerateFisherAtOneComponentTruth) {
  NormalMixtureFamily fam;
  EXPECT_EQ(fam.bins(), 280u);
  const auto q = fam.density(0.0, 0.0);
  auto loss = [&](const Eigen::VectorXd& th) { return fam.expected_loss(q, th(0), th(1)); };
  Eigen::VectorXd at(2);
  at << 0.5, 0.0;
  const auto ev = symmetric_eigenvalues(numerical_hessian(loss, at, 1e-4));
  EXPECT_NEAR(ev[0], 0.0, 1e-6);
  EXPECT_NEAR(ev[1], 0.25, 1e-3);
}

TEST(NormalMixture, DensitiesAreNormalizedModel) {
  NormalMixtureFamily fam;
  auto model = fam.model({0.0, 0.5}, {0.0, 1.0});
  EXPECT_EQ(model.size(), 4u);
  EXPECT_EQ(model.dimension(), 2u);
}
