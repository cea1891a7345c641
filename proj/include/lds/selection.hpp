#pragma once

// Information criteria and singular-learning diagnostics on top of the
// escort posterior: Bayes losses, functional variance, WAIC, AIC, learning
// coefficients from standard-form exponents, the optimal parameter set,
// coherence, stochastic-complexity asymptotics and model ranking.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lds/errors.hpp"
#include "lds/escort.hpp"
#include "lds/measures.hpp"
#include "lds/numeric.hpp"

namespace lds {

/// True density q = d mu_psi / dm, with the seed used to draw samples.
struct TruthSpec {
  std::vector<double> q;
  std::uint64_t seed = 0;
};

/// Checks sum q m = 1 and that q is positive exactly on the model support.
inline void validate_truth(const ParametricModel& model, const TruthSpec& truth) {
  if (truth.q.size() != model.alphabet_size()) throw StructuralError("truth: q has wrong length");
  double mass = 0.0;
  for (std::size_t i = 0; i < truth.q.size(); ++i) {
    if (!(truth.q[i] >= 0.0) || !std::isfinite(truth.q[i])) throw DomainError("truth: q must be finite and >= 0");
    mass += truth.q[i] * model.m()[i];
  }
  if (std::abs(mass - 1.0) > ParametricModel::kTolerance) throw DomainError("truth: sum_i q_i m_i must be 1");
  for (std::size_t i = 0; i < truth.q.size(); ++i) {
    if (model.m()[i] == 0.0) continue;
    if ((truth.q[i] > 0.0) != (model.density(0, i) > 0.0))
      throw DomainError("truth: support of q differs from the model support at label '" + model.alphabet()[i] + "'");
  }
}

inline CentralState truth_state(const ParametricModel& model, const TruthSpec& truth) {
  std::vector<double> w(truth.q.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = truth.q[i] * model.m()[i];
  return CentralState::with_tolerance(DiscreteMeasure(model.alphabet(), std::move(w)), ParametricModel::kTolerance);
}

/// n labels drawn i.i.d. from the central measure q m.
inline std::vector<std::size_t> sample_truth(const ParametricModel& model, const TruthSpec& truth, std::size_t n,
                                             Rng& rng) {
  std::vector<double> w(truth.q.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = truth.q[i] * model.m()[i];
  CategoricalSampler cat(w);
  std::vector<std::size_t> out(n);
  for (auto& x : out) x = cat(rng);
  return out;
}

// ---------------------------------------------------------------------------
// Losses

struct BayesLosses {
  std::size_t n = 0;
  double training_loss = 0.0;                        // L_bt
  std::optional<double> training_error;              // E_bt
  std::optional<double> generalization_loss;         // L_bg
  std::optional<double> generalization_error;        // E_bg, direct
  std::optional<double> generalization_error_state;  // E_bg as S(psi || predictive state)
  /// |E_bg direct - E_bg via states|; asserted <= 1e-12.
  double bridge_residual = 0.0;
  /// |E_bt - (L_bt + (1/n) sum log q(x_j))|.
  double training_identity_residual = 0.0;
  bool bridge_ok = true;

  double generalization(const char* what) const {
    if (!generalization_loss) throw ConfigurationError(std::string(what) + ": a truth density q is required");
    return *generalization_loss;
  }
};

inline BayesLosses bayes_losses(const ParametricModel& model, std::span<const std::size_t> data,
                                const std::optional<TruthSpec>& truth = std::nullopt) {
  if (data.empty()) throw DomainError("bayes_losses: n must be >= 1");
  const auto post = escort_posterior(model, data);
  const auto pred = predictive_density(model, post);
  const double n = static_cast<double>(data.size());
  BayesLosses out;
  out.n = data.size();
  double lt = 0.0;
  for (std::size_t x : data) lt -= std::log(pred[x]);
  out.training_loss = lt / n;
  if (!truth) return out;

  validate_truth(model, *truth);
  const auto& q = truth->q;
  const auto m = model.m();
  double lg = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] > 0.0 && m[i] > 0.0) lg -= q[i] * m[i] * std::log(pred[i]);
  out.generalization_loss = lg;
  out.generalization_error = relative_entropy_density(q, pred, m);
  const auto state = predictive_state(model, post).state;
  out.generalization_error_state = quantum_relative_entropy(truth_state(model, *truth), state);
  out.bridge_residual = std::abs(*out.generalization_error - *out.generalization_error_state);
  out.bridge_ok = out.bridge_residual <= 1e-12;

  double et = 0.0, lq = 0.0;
  for (std::size_t x : data) {
    et += std::log(q[x] / pred[x]);
    lq += std::log(q[x]);
  }
  out.training_error = et / n;
  out.training_identity_residual = std::abs(*out.training_error - (out.training_loss + lq / n));
  return out;
}

/// V = sum_j { <(log p(x_j|theta))^2> - <log p(x_j|theta)>^2 } under the
/// escort posterior, evaluated per label with the counts as multiplicities
/// and a two-pass variance.
inline double functional_variance(const ParametricModel& model, const EscortPosterior& post,
                                  std::span<const std::size_t> data) {
  const auto counts = label_counts(data, model.alphabet_size());
  double v = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    double mean = 0.0;
    for (std::size_t t = 0; t < model.size(); ++t)
      if (post.weights[t] > 0.0) mean += post.weights[t] * model.log_density(t, i);
    double var = 0.0;
    for (std::size_t t = 0; t < model.size(); ++t) {
      if (post.weights[t] == 0.0) continue;
      const double d = model.log_density(t, i) - mean;
      var += post.weights[t] * d * d;
    }
    v += counts[i] * var;
  }
  return v;
}

inline double functional_variance(const ParametricModel& model, std::span<const std::size_t> data) {
  return functional_variance(model, escort_posterior(model, data), data);
}

struct WaicResult {
  std::size_t n = 0;
  double beta = 1.0;
  double training_loss = 0.0;
  double functional_variance = 0.0;
  double waic = 0.0;  // L_bt + (beta/n) V
};

inline WaicResult waic(const ParametricModel& model, std::span<const std::size_t> data) {
  if (data.empty()) throw DomainError("waic: n must be >= 1");
  const auto post = escort_posterior(model, data);
  const auto pred = predictive_density(model, post);
  WaicResult r;
  r.n = data.size();
  r.beta = model.beta();
  double lt = 0.0;
  for (std::size_t x : data) lt -= std::log(pred[x]);
  r.training_loss = lt / static_cast<double>(r.n);
  r.functional_variance = functional_variance(model, post, data);
  r.waic = r.training_loss + (r.beta / static_cast<double>(r.n)) * r.functional_variance;
  return r;
}

struct AicResult {
  double aic = 0.0;
  std::size_t mle_index = 0;
  double log_likelihood = 0.0;  // sum_j log p(x_j | theta_hat)
  std::size_t dimension = 0;
  /// The criterion uses the log-likelihood at the grid maximizer.
  bool log_likelihood_form = true;
};

/// AIC = -(1/n) sum_j log p(x_j|theta_hat) + d/n with theta_hat the grid
/// maximizer of the likelihood (first one on ties).
inline AicResult aic(const ParametricModel& model, std::span<const std::size_t> data) {
  if (data.empty()) throw DomainError("aic: n must be >= 1");
  const auto counts = label_counts(data, model.alphabet_size());
  AicResult r;
  r.dimension = model.dimension();
  r.log_likelihood = -kInf;
  for (std::size_t t = 0; t < model.size(); ++t) {
    double ll = 0.0;
    for (std::size_t i = 0; i < counts.size() && ll != -kInf; ++i) {
      if (counts[i] == 0) continue;
      const double l = model.log_density(t, i);
      ll = l == -kInf ? -kInf : ll + counts[i] * l;
    }
    if (ll > r.log_likelihood) {
      r.log_likelihood = ll;
      r.mle_index = t;
    }
  }
  if (r.log_likelihood == -kInf) throw InferenceError("aic: every grid point has zero likelihood");
  const double n = static_cast<double>(data.size());
  r.aic = -r.log_likelihood / n + static_cast<double>(r.dimension) / n;
  return r;
}

// ---------------------------------------------------------------------------
// Learning coefficient

struct StandardFormChart {
  std::vector<int> k;
  std::vector<int> h;
};

struct StandardFormExponents {
  std::vector<StandardFormChart> charts;
};

struct LearningCoefficient {
  double lambda = 0.0;
  std::int64_t numerator = 0;  // lambda = numerator / denominator, reduced
  std::int64_t denominator = 1;
  int order = 1;  // m
};

/// lambda = min over charts and coordinates with k_j > 0 of (h_j+1)/(2k_j);
/// m = max over minimizing charts of the number of coordinates attaining it.
/// Ratios are compared exactly as fractions. Charts whose k is all zero do
/// not constrain lambda.
inline LearningCoefficient learning_coefficient(const StandardFormExponents& exps) {
  if (exps.charts.empty()) throw StructuralError("learning_coefficient: no charts");
  std::int64_t best_num = 0, best_den = 0;  // den == 0 marks "none yet"
  int best_order = 0;
  for (const auto& chart : exps.charts) {
    if (chart.k.size() != chart.h.size() || chart.k.empty())
      throw StructuralError("learning_coefficient: k and h must be nonempty with equal length");
    for (std::size_t j = 0; j < chart.k.size(); ++j)
      if (chart.k[j] < 0 || chart.h[j] < 0) throw DomainError("learning_coefficient: exponents must be >= 0");
    std::int64_t num = 0, den = 0;
    int count = 0;
    for (std::size_t j = 0; j < chart.k.size(); ++j) {
      if (chart.k[j] == 0) continue;
      const std::int64_t a = chart.h[j] + 1, b = 2 * static_cast<std::int64_t>(chart.k[j]);
      if (den == 0 || a * den < num * b) {
        num = a;
        den = b;
        count = 1;
      } else if (a * den == num * b) {
        ++count;
      }
    }
    if (den == 0) continue;
    if (best_den == 0 || num * best_den < best_num * den) {
      best_num = num;
      best_den = den;
      best_order = count;
    } else if (num * best_den == best_num * den) {
      best_order = std::max(best_order, count);
    }
  }
  if (best_den == 0) throw DegenerateModelError("learning_coefficient: every chart has k = 0");
  const std::int64_t g = std::gcd(best_num, best_den);
  return {static_cast<double>(best_num) / static_cast<double>(best_den), best_num / g, best_den / g, best_order};
}

// ---------------------------------------------------------------------------
// Optimal parameter, excess risk and coherence

struct OptimalParameter {
  std::vector<double> expected_loss;  // L(theta) = -sum_i q_i m_i log p(i|theta)
  double min_loss = 0.0;              // L_0
  std::vector<std::size_t> optimal_set;  // Theta_0
  std::vector<double> p0;
  /// All members of Theta_0 share one density within 1e-10.
  bool shared_density = true;
  std::vector<double> excess;         // D(theta) = L(theta) - L_0
  std::vector<double> excess_states;  // S(psi||omega_theta) - S(psi||omega_0)
};

inline OptimalParameter optimal_parameter(const ParametricModel& model, const TruthSpec& truth) {
  validate_truth(model, truth);
  const auto m = model.m();
  OptimalParameter out;
  out.expected_loss.resize(model.size());
  for (std::size_t t = 0; t < model.size(); ++t) {
    double l = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (truth.q[i] > 0.0 && m[i] > 0.0) l -= truth.q[i] * m[i] * model.log_density(t, i);
    out.expected_loss[t] = l;
  }
  out.min_loss = *std::min_element(out.expected_loss.begin(), out.expected_loss.end());
  for (std::size_t t = 0; t < model.size(); ++t)
    if (out.expected_loss[t] - out.min_loss <= 1e-12) out.optimal_set.push_back(t);
  const std::size_t t0 = out.optimal_set.front();
  out.p0 = model.grid()[t0].density;
  for (std::size_t t : out.optimal_set)
    for (std::size_t i = 0; i < m.size(); ++i)
      if (std::abs(model.density(t, i) - out.p0[i]) > 1e-10) out.shared_density = false;

  const CentralState psi = truth_state(model, truth);
  const double s0 = quantum_relative_entropy(psi, model.state(t0));
  out.excess.resize(model.size());
  out.excess_states.resize(model.size());
  for (std::size_t t = 0; t < model.size(); ++t) {
    out.excess[t] = out.expected_loss[t] - out.min_loss;
    out.excess_states[t] = quantum_relative_entropy(psi, model.state(t)) - s0;
  }
  return out;
}

/// Empirical excess D_n(theta) = (1/n) sum_j log(p0(x_j)/p(x_j|theta)).
inline std::vector<double> empirical_excess(const ParametricModel& model, std::span<const double> p0,
                                            std::span<const std::size_t> data) {
  if (data.empty()) throw DomainError("empirical_excess: n must be >= 1");
  const auto counts = label_counts(data, model.alphabet_size());
  std::vector<double> d(model.size(), 0.0);
  for (std::size_t t = 0; t < model.size(); ++t) {
    for (std::size_t i = 0; i < counts.size(); ++i)
      if (counts[i] > 0) d[t] += counts[i] * (std::log(p0[i]) - model.log_density(t, i));
    d[t] /= static_cast<double>(data.size());
  }
  return d;
}

struct CoherenceRow {
  double epsilon = 0.0;
  /// inf over Theta_eps of D(theta) / S(omega_0||omega_theta); +inf when no
  /// admissible theta besides those sharing p0.
  double best_constant = kInf;
  std::size_t admissible = 0;
};

struct CoherenceReport {
  std::vector<CoherenceRow> rows;
  bool coherent = false;
};

inline CoherenceReport coherence_check(const ParametricModel& model, const TruthSpec& truth,
                                       const std::vector<double>& eps_grid) {
  const auto opt = optimal_parameter(model, truth);
  const CentralState omega0 = model.state(opt.optimal_set.front());
  std::vector<double> s_to(model.size());
  for (std::size_t t = 0; t < model.size(); ++t) s_to[t] = quantum_relative_entropy(omega0, model.state(t));
  CoherenceReport rep;
  for (double eps : eps_grid) {
    if (!(eps > 0.0)) throw DomainError("coherence_check: epsilon must be > 0");
    CoherenceRow row;
    row.epsilon = eps;
    for (std::size_t t = 0; t < model.size(); ++t) {
      if (s_to[t] > eps || s_to[t] == 0.0) continue;
      ++row.admissible;
      row.best_constant = std::min(row.best_constant, opt.excess_states[t] / s_to[t]);
    }
    if (row.admissible > 0 && row.best_constant > 0.0) rep.coherent = true;
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Stochastic complexity asymptotics

struct AsymptoticsOptions {
  std::vector<int> n_grid;
  std::size_t replications = 200;
  std::uint64_t seed = 0;
  std::optional<double> lambda_expected;
  std::optional<int> order_expected;
};

struct AsymptoticsReport {
  std::vector<int> n_grid;
  std::vector<double> mean_excess;  // mean over replications of F_n - n L_n
  std::vector<double> residual;     // F_n^R: mean_excess minus the fitted log terms
  double lambda_hat = 0.0;
  double lambda_se = 0.0;
  std::optional<double> order_hat;  // fitted m when the log log n term is included
  std::optional<double> z_score;
  double intercept = 0.0;
  std::size_t replications = 0;
  double beta = 1.0;
};

namespace detail {

/// Least squares y ~ X b for a small dense design.
inline std::vector<double> least_squares(const std::vector<std::vector<double>>& x, const std::vector<double>& y) {
  const std::size_t rows = x.size(), cols = x.front().size();
  Eigen::MatrixXd a(rows, cols);
  Eigen::VectorXd b(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) a(r, c) = x[r][c];
    b(r) = y[r];
  }
  Eigen::VectorXd sol = a.colPivHouseholderQr().solve(b);
  return std::vector<double>(sol.data(), sol.data() + sol.size());
}

}  // namespace detail

/// Fits mean(F_n - n L_n) = c + lambda (log n)/beta [- (m-1)(log log n)/beta]
/// with L_n the empirical loss at p0. Replication r uses nested prefixes of
/// one sample of size max(n_grid) drawn with a seed derived from (seed, r).
/// The standard error comes from the spread of per-replication slopes.
inline AsymptoticsReport stochastic_complexity_asymptotics(const ParametricModel& model, const TruthSpec& truth,
                                                           const AsymptoticsOptions& opts) {
  if (opts.n_grid.size() < 2) throw DomainError("asymptotics: need at least two sample sizes");
  for (std::size_t i = 0; i < opts.n_grid.size(); ++i) {
    if (opts.n_grid[i] < 2) throw DomainError("asymptotics: sample sizes must be >= 2");
    if (i && opts.n_grid[i] <= opts.n_grid[i - 1]) throw DomainError("asymptotics: n_grid must be increasing");
  }
  if (opts.replications < 30) throw DomainError("asymptotics: need at least 30 replications");
  const bool with_loglog = opts.order_expected && *opts.order_expected > 1;
  if (with_loglog && opts.n_grid.size() < 3) throw DomainError("asymptotics: the log log n fit needs three sizes");

  const auto opt = optimal_parameter(model, truth);
  const std::vector<double>& p0 = opt.p0;
  const double beta = model.beta();
  const std::size_t k = model.alphabet_size();
  const std::size_t n_max = static_cast<std::size_t>(opts.n_grid.back());
  const std::size_t G = opts.n_grid.size();

  std::vector<std::vector<double>> design(G);
  for (std::size_t g = 0; g < G; ++g) {
    const double ln = std::log(static_cast<double>(opts.n_grid[g]));
    design[g] = {1.0, ln / beta};
    if (with_loglog) design[g].push_back(std::log(ln) / beta);
  }

  std::vector<std::vector<double>> excess(opts.replications, std::vector<double>(G));
  run_partitions(opts.replications, [&](std::size_t r) {
    Rng rng(derive_seed(opts.seed, "asymptotics/replication/" + std::to_string(r)));
    const auto sample = sample_truth(model, truth, n_max, rng);
    std::vector<int> counts(k, 0);
    std::size_t used = 0;
    for (std::size_t g = 0; g < G; ++g) {
      for (; used < static_cast<std::size_t>(opts.n_grid[g]); ++used) ++counts[sample[used]];
      excess[r][g] = partition_function_from_counts(model, counts, std::span<const double>(p0)).normalized_f();
    }
  });

  AsymptoticsReport rep;
  rep.n_grid = opts.n_grid;
  rep.replications = opts.replications;
  rep.beta = beta;
  rep.mean_excess.assign(G, 0.0);
  for (const auto& row : excess)
    for (std::size_t g = 0; g < G; ++g) rep.mean_excess[g] += row[g];
  for (auto& v : rep.mean_excess) v /= static_cast<double>(opts.replications);

  const auto coef = detail::least_squares(design, rep.mean_excess);
  rep.intercept = coef[0];
  rep.lambda_hat = coef[1];
  if (with_loglog) rep.order_hat = 1.0 - coef[2];

  // OLS is linear in y, so the fitted slope is the mean of per-replication
  // slopes and their spread gives a standard error robust to the unequal
  // variances across n.
  double mean_slope = 0.0, sq = 0.0;
  std::vector<double> slopes(opts.replications);
  for (std::size_t r = 0; r < opts.replications; ++r) {
    slopes[r] = detail::least_squares(design, excess[r])[1];
    mean_slope += slopes[r];
  }
  mean_slope /= static_cast<double>(opts.replications);
  for (double s : slopes) sq += (s - mean_slope) * (s - mean_slope);
  const double reps = static_cast<double>(opts.replications);
  rep.lambda_se = std::sqrt(sq / (reps - 1.0) / reps);
  if (opts.lambda_expected && rep.lambda_se > 0.0) rep.z_score = (rep.lambda_hat - *opts.lambda_expected) / rep.lambda_se;

  rep.residual.resize(G);
  for (std::size_t g = 0; g < G; ++g) {
    double fitted = rep.lambda_hat * design[g][1];
    if (with_loglog) fitted += coef[2] * design[g][2];
    rep.residual[g] = rep.mean_excess[g] - fitted;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Model selection

enum class Criterion { Waic, Aic };

struct CandidateScore {
  std::string id;
  std::size_t dimension = 0;
  double beta = 1.0;
  std::size_t n = 0;
  double training_loss = 0.0;
  double functional_variance = 0.0;
  double waic = 0.0;
  double aic = 0.0;
  double score = 0.0;  // value of the chosen criterion
};

struct SelectionReport {
  Criterion criterion = Criterion::Waic;
  std::vector<CandidateScore> ranking;  // ascending by score, ties by dimension then id
  std::vector<std::string> tie_breaks;  // human-readable trace of tie resolutions
  std::string selected;
  /// The winner is a recommendation to be weighed against other predictive
  /// states, not an absolute choice.
  bool selection_is_advisory = true;
};

namespace detail {

/// Scores equal to 12 significant digits compare as tied.
inline std::int64_t quantize_score(double v) { return std::llround(v * 1e12); }

}  // namespace detail

inline SelectionReport select_model(const std::vector<ParametricModel>& candidates, std::span<const std::size_t> data,
                                    Criterion criterion) {
  if (candidates.empty()) throw StructuralError("select_model: no candidates");
  for (const auto& c : candidates) {
    require_same_alphabet(c.alphabet(), candidates.front().alphabet(), "select_model");
    if (!std::equal(c.m().begin(), c.m().end(), candidates.front().m().begin(), candidates.front().m().end()))
      throw StructuralError("select_model: candidates must share the reference measure m");
  }
  SelectionReport rep;
  rep.criterion = criterion;
  for (const auto& c : candidates) {
    CandidateScore s;
    s.id = c.id();
    s.dimension = c.dimension();
    s.beta = c.beta();
    const auto w = waic(c, data);
    s.n = w.n;
    s.training_loss = w.training_loss;
    s.functional_variance = w.functional_variance;
    s.waic = w.waic;
    s.aic = aic(c, data).aic;
    s.score = criterion == Criterion::Waic ? s.waic : s.aic;
    rep.ranking.push_back(s);
  }
  std::sort(rep.ranking.begin(), rep.ranking.end(), [](const CandidateScore& a, const CandidateScore& b) {
    const auto qa = detail::quantize_score(a.score), qb = detail::quantize_score(b.score);
    if (qa != qb) return qa < qb;
    if (a.dimension != b.dimension) return a.dimension < b.dimension;
    return a.id < b.id;
  });
  for (std::size_t i = 1; i < rep.ranking.size(); ++i) {
    const auto& a = rep.ranking[i - 1];
    const auto& b = rep.ranking[i];
    if (detail::quantize_score(a.score) != detail::quantize_score(b.score)) continue;
    rep.tie_breaks.push_back(a.id + " before " + b.id + (a.dimension != b.dimension ? " (fewer parameters)" : " (id order)"));
  }
  rep.selected = rep.ranking.front().id;
  return rep;
}

// ---------------------------------------------------------------------------
// Discretized two-component normal mixture

/// f(x|a,b) = (1-a) N(x; 0, 1) + a N(x; b, 1) tabulated at bin centers and
/// renormalized over the bins; m is the bin width.
class NormalMixtureFamily {
 public:
  NormalMixtureFamily(double lo = -6.0, double hi = 8.0, std::size_t bins = 280) {
    if (!(hi > lo) || bins < 2) throw DomainError("normal mixture: invalid bin grid");
    width_ = (hi - lo) / static_cast<double>(bins);
    for (std::size_t i = 0; i < bins; ++i) centers_.push_back(lo + (i + 0.5) * width_);
  }

  std::size_t bins() const noexcept { return centers_.size(); }
  double width() const noexcept { return width_; }
  const std::vector<double>& centers() const noexcept { return centers_; }
  std::vector<double> m() const { return std::vector<double>(centers_.size(), width_); }
  Alphabet alphabet() const { return Alphabet::indexed(centers_.size()); }

  std::vector<double> density(double a, double b) const {
    std::vector<double> p(centers_.size());
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double x = centers_[i];
      p[i] = (1.0 - a) * phi(x) + a * phi(x - b);
      total += p[i] * width_;
    }
    for (auto& v : p) v /= total;
    return p;
  }

  /// L(a, b) = -sum_i q_i m_i log p(i|a,b).
  double expected_loss(std::span<const double> q, double a, double b) const {
    const auto p = density(a, b);
    double l = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      if (q[i] > 0.0) l -= q[i] * width_ * std::log(p[i]);
    return l;
  }

  /// Grid model over (a, b) pairs with a uniform prior.
  ParametricModel model(const std::vector<double>& a_values, const std::vector<double>& b_values, double beta = 1.0,
                        std::string id = "normal_mixture") const {
    std::vector<GridPoint> grid;
    const double prior = 1.0 / static_cast<double>(a_values.size() * b_values.size());
    for (double a : a_values)
      for (double b : b_values) grid.push_back({{a, b}, prior, density(a, b)});
    return ParametricModel(alphabet(), m(), std::move(grid), beta, std::move(id));
  }

 private:
  static double phi(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846); }
  double width_ = 0.0;
  std::vector<double> centers_;
};

/// Central-difference Hessian of f at x with step h.
inline Eigen::MatrixXd numerical_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                         const Eigen::VectorXd& x, double h) {
  const Eigen::Index d = x.size();
  Eigen::MatrixXd hess(d, d);
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < d; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    hess(i, i) = (f(xp) - 2.0 * f0 + f(xm)) / (h * h);
    for (Eigen::Index j = i + 1; j < d; ++j) {
      Eigen::VectorXd pp = x, pm = x, mp = x, mm = x;
      pp(i) += h; pp(j) += h;
      pm(i) += h; pm(j) -= h;
      mp(i) -= h; mp(j) += h;
      mm(i) -= h; mm(j) -= h;
      hess(i, j) = hess(j, i) = (f(pp) - f(pm) - f(mp) + f(mm)) / (4.0 * h * h);
    }
  }
  return hess;
}

/// Eigenvalues of a symmetric matrix in ascending order.
inline std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  return std::vector<double>(ev.data(), ev.data() + ev.size());
}

}  // namespace lds
