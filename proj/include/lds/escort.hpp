#pragma once

// Tempered ("escort") Bayesian inference over a finite parameter grid:
// posteriors at inverse temperature beta, predictive densities and states,
// partition functions, and exhaustive risk evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lds/errors.hpp"
#include "lds/measures.hpp"
#include "lds/numeric.hpp"

namespace lds {

/// One grid point of the parameter space. `prior` already includes the
/// quadrature weight of the point; `density` is p(.|theta) relative to m.
struct GridPoint {
  std::vector<double> theta;
  double prior = 0.0;
  std::vector<double> density;
};

class ParametricModel {
 public:
  static constexpr double kTolerance = 1e-10;

  ParametricModel(Alphabet alphabet, std::vector<double> m, std::vector<GridPoint> grid, double beta = 1.0,
                  std::string id = "model", std::optional<std::size_t> dimension = std::nullopt)
      : alphabet_(std::move(alphabet)), m_(std::move(m)), grid_(std::move(grid)), beta_(beta), id_(std::move(id)) {
    const std::size_t k = alphabet_.size();
    if (m_.size() != k) throw StructuralError("model: reference measure m has wrong length");
    for (double v : m_)
      if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("model: m must be finite and >= 0");
    if (grid_.empty()) throw StructuralError("model: parameter grid is empty");
    if (!(beta_ > 0.0) || !std::isfinite(beta_)) throw DomainError("model: beta must be in (0, inf)");
    double prior_total = 0.0;
    for (const auto& g : grid_) {
      if (g.density.size() != k) throw StructuralError("model: density has wrong length");
      if (!(g.prior >= 0.0) || !std::isfinite(g.prior)) throw DomainError("model: prior weights must be >= 0");
      prior_total += g.prior;
      double mass = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        if (!(g.density[i] >= 0.0) || !std::isfinite(g.density[i])) throw DomainError("model: densities must be >= 0");
        mass += g.density[i] * m_[i];
      }
      if (std::abs(mass - 1.0) > kTolerance)
        throw DomainError("model: sum_i p(i|theta) m_i = " + std::to_string(mass) + ", expected 1");
      if (g.theta.size() != grid_.front().theta.size())
        throw StructuralError("model: parameter points have different dimensions");
    }
    if (std::abs(prior_total - 1.0) > kTolerance) throw DomainError("model: prior must sum to 1");
    for (std::size_t i = 0; i < k; ++i) {
      if (m_[i] == 0.0) continue;
      const bool pos = grid_.front().density[i] > 0.0;
      for (const auto& g : grid_)
        if ((g.density[i] > 0.0) != pos)
          throw DomainError("model: densities do not share a common support (label '" + alphabet_[i] + "')");
    }
    dimension_ = dimension.value_or(grid_.front().theta.size());
    log_density_.resize(grid_.size());
    for (std::size_t t = 0; t < grid_.size(); ++t) {
      log_density_[t].resize(k);
      for (std::size_t i = 0; i < k; ++i)
        log_density_[t][i] = grid_[t].density[i] > 0.0 ? std::log(grid_[t].density[i]) : -kInf;
    }
  }

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  std::span<const double> m() const noexcept { return m_; }
  const std::vector<GridPoint>& grid() const noexcept { return grid_; }
  double beta() const noexcept { return beta_; }
  const std::string& id() const noexcept { return id_; }
  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return grid_.size(); }
  std::size_t alphabet_size() const noexcept { return alphabet_.size(); }

  double density(std::size_t theta, std::size_t label) const { return grid_[theta].density[label]; }
  double log_density(std::size_t theta, std::size_t label) const { return log_density_[theta][label]; }

  /// Labels with positive density (and positive m).
  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < alphabet_.size(); ++i)
      if (m_[i] > 0.0 && grid_.front().density[i] > 0.0) s.push_back(i);
    return s;
  }

  /// Central measure p(.|theta) m of the state omega_theta.
  DiscreteMeasure central_measure(std::size_t theta) const {
    std::vector<double> w(alphabet_.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = grid_[theta].density[i] * m_[i];
    return DiscreteMeasure(alphabet_, std::move(w));
  }

  CentralState state(std::size_t theta) const { return CentralState::with_tolerance(central_measure(theta), kTolerance); }

  /// Same model at another inverse temperature.
  ParametricModel with_beta(double beta) const {
    return ParametricModel(alphabet_, m_, grid_, beta, id_, dimension_);
  }

 private:
  Alphabet alphabet_;
  std::vector<double> m_;
  std::vector<GridPoint> grid_;
  double beta_ = 1.0;
  std::string id_;
  std::size_t dimension_ = 0;
  std::vector<std::vector<double>> log_density_;
};

/// Label counts of a data sequence.
inline std::vector<int> label_counts(std::span<const std::size_t> data, std::size_t k) {
  std::vector<int> c(k, 0);
  for (std::size_t x : data) {
    if (x >= k) throw StructuralError("data label index out of range");
    ++c[x];
  }
  return c;
}

struct EscortPosterior {
  std::size_t n = 0;
  /// log[pi(theta) prod_j p(x_j|theta)^beta] shifted so that the max is 0.
  std::vector<double> log_weights;
  std::vector<double> weights;  // normalized
  /// log of sum_theta pi(theta) prod_j p(x_j|theta)^beta.
  double log_z = 0.0;
};

/// Posterior from sufficient counts. Every grid point's log weight is
/// log pi + beta * sum_i c_i log p(i|theta).
inline EscortPosterior escort_posterior_from_counts(const ParametricModel& model, std::span<const int> counts) {
  if (counts.size() != model.alphabet_size()) throw StructuralError("escort_posterior: counts have wrong length");
  EscortPosterior post;
  for (int c : counts) {
    if (c < 0) throw DomainError("escort_posterior: negative count");
    post.n += static_cast<std::size_t>(c);
  }
  const std::size_t T = model.size();
  std::vector<double> raw(T);
  for (std::size_t t = 0; t < T; ++t) {
    const double prior = model.grid()[t].prior;
    double lw = prior > 0.0 ? std::log(prior) : -kInf;
    if (lw != -kInf) {
      double ll = 0.0;
      for (std::size_t i = 0; i < counts.size() && ll != -kInf; ++i) {
        if (counts[i] == 0) continue;
        const double l = model.log_density(t, i);
        ll = l == -kInf ? -kInf : ll + counts[i] * l;
      }
      lw = ll == -kInf ? -kInf : lw + model.beta() * ll;
    }
    raw[t] = lw;
  }
  post.log_z = log_sum_exp(raw);
  if (post.log_z == -kInf)
    throw InferenceError("escort_posterior: zero total posterior mass (data outside the model support)");
  const double mx = *std::max_element(raw.begin(), raw.end());
  post.log_weights.resize(T);
  post.weights.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    post.log_weights[t] = raw[t] - mx;
    post.weights[t] = std::exp(raw[t] - post.log_z);
  }
  return post;
}

inline EscortPosterior escort_posterior(const ParametricModel& model, std::span<const std::size_t> data) {
  const auto c = label_counts(data, model.alphabet_size());
  return escort_posterior_from_counts(model, c);
}

/// p_{pi,beta}(x|data) = sum_theta w(theta) p(x|theta), a density w.r.t. m.
inline std::vector<double> predictive_density(const ParametricModel& model, const EscortPosterior& post) {
  std::vector<double> p(model.alphabet_size(), 0.0);
  for (std::size_t t = 0; t < model.size(); ++t) {
    const double w = post.weights[t];
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += w * model.density(t, i);
  }
  return p;
}

inline std::vector<double> escort_predictive(const ParametricModel& model, std::span<const std::size_t> data) {
  return predictive_density(model, escort_posterior(model, data));
}

/// Predictive state built as the posterior barycenter of the model states,
/// together with the same weights computed from the predictive density.
struct EscortPredictiveState {
  CentralState state;
  std::vector<double> barycenter_weights;   // sum_theta w(theta) p(i|theta) m_i
  std::vector<double> predictive_weights;   // p_{pi,beta}(i|data) m_i
  double identity_residual = 0.0;           // max_i |difference|
};

inline EscortPredictiveState predictive_state(const ParametricModel& model, const EscortPosterior& post) {
  const std::size_t k = model.alphabet_size();
  EscortPredictiveState out;
  out.barycenter_weights.assign(k, 0.0);
  for (std::size_t t = 0; t < model.size(); ++t) {
    const double w = post.weights[t];
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < k; ++i) out.barycenter_weights[i] += w * (model.density(t, i) * model.m()[i]);
  }
  const auto pred = predictive_density(model, post);
  out.predictive_weights.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.predictive_weights[i] = pred[i] * model.m()[i];
    out.identity_residual =
        std::max(out.identity_residual, std::abs(out.predictive_weights[i] - out.barycenter_weights[i]));
  }
  out.state = CentralState::with_tolerance(DiscreteMeasure(model.alphabet(), out.barycenter_weights),
                                           ParametricModel::kTolerance);
  return out;
}

inline EscortPredictiveState escort_predictive_state(const ParametricModel& model,
                                                     std::span<const std::size_t> data) {
  return predictive_state(model, escort_posterior(model, data));
}

/// sum_theta w(theta) G(theta) with G given per grid point.
inline double posterior_mean(const EscortPosterior& post, std::span<const double> g) {
  if (g.size() != post.weights.size()) throw StructuralError("posterior_mean: G has wrong length");
  double s = 0.0;
  for (std::size_t t = 0; t < g.size(); ++t)
    if (post.weights[t] != 0.0) s += post.weights[t] * g[t];
  return s;
}

inline double posterior_mean(const ParametricModel& model, std::span<const std::size_t> data,
                             const std::function<double(const GridPoint&)>& g) {
  const auto post = escort_posterior(model, data);
  std::vector<double> values(model.size());
  for (std::size_t t = 0; t < model.size(); ++t) values[t] = g(model.grid()[t]);
  return posterior_mean(post, values);
}

// ---------------------------------------------------------------------------
// Partition function and stochastic complexity

struct PartitionFunction {
  double beta = 1.0;
  double log_z = 0.0;  // log Z_n
  double f = 0.0;      // F_n = -(1/beta) log Z_n
  std::optional<double> log_z0;  // log Z_n / prod_j p0(x_j)^beta
  std::optional<double> f0;

  double normalized_log_z() const {
    if (!log_z0) throw ConfigurationError("partition function: no optimal density p0 was supplied");
    return *log_z0;
  }
  double normalized_f() const {
    if (!f0) throw ConfigurationError("partition function: no optimal density p0 was supplied");
    return *f0;
  }
};

inline PartitionFunction partition_function_from_counts(const ParametricModel& model, std::span<const int> counts,
                                                        std::optional<std::span<const double>> p0 = std::nullopt) {
  PartitionFunction pf;
  pf.beta = model.beta();
  pf.log_z = escort_posterior_from_counts(model, counts).log_z;
  pf.f = -pf.log_z / pf.beta;
  if (p0) {
    if (p0->size() != counts.size()) throw StructuralError("partition_function: p0 has wrong length");
    double ll = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] == 0) continue;
      if (!((*p0)[i] > 0.0)) throw DomainError("partition_function: data outside the support of p0");
      ll += counts[i] * std::log((*p0)[i]);
    }
    pf.log_z0 = pf.log_z - pf.beta * ll;
    pf.f0 = -*pf.log_z0 / pf.beta;
  }
  return pf;
}

inline PartitionFunction partition_function(const ParametricModel& model, std::span<const std::size_t> data,
                                            std::optional<std::span<const double>> p0 = std::nullopt) {
  const auto c = label_counts(data, model.alphabet_size());
  return partition_function_from_counts(model, c, p0);
}

// ---------------------------------------------------------------------------
// Risk by exhaustive enumeration of data tuples

inline constexpr std::uint64_t kRiskTupleCap = 1'000'000;

/// Candidate predictive density for a data tuple.
using PredictiveMap = std::function<std::vector<double>(std::span<const std::size_t>)>;
/// Candidate predictive state for a data tuple.
using StateMap = std::function<CentralState(std::span<const std::size_t>)>;

struct RiskOptions {
  /// Divide by A = sum_x sum_theta prod_j p(x_j|theta)^beta m_{x_j} pi(theta).
  bool normalize = false;
};

namespace detail {

inline std::uint64_t tuple_count(std::size_t k, int n) {
  std::uint64_t total = 1;
  for (int j = 0; j < n; ++j) {
    total *= k;
    if (total > kRiskTupleCap) return kRiskTupleCap + 1;
  }
  return total;
}

/// Decodes tuple index `idx` (base k, first symbol most significant).
inline void decode_tuple(std::uint64_t idx, std::size_t k, std::vector<std::size_t>& out) {
  for (std::size_t j = out.size(); j-- > 0;) {
    out[j] = static_cast<std::size_t>(idx % k);
    idx /= k;
  }
}

struct RiskSums {
  double weighted = 0.0;  // sum of D * weight
  double mass = 0.0;      // A
};

/// Sums over tuples x^n and grid points of D_m(p_theta || r(x^n)) times
/// pi(theta) prod_j p(x_j|theta)^beta m_{x_j}. `candidate` returns the
/// density r for a tuple. Partitioned by leading symbol; the partial sums
/// are reduced in partition order.
inline RiskSums risk_sums(const ParametricModel& model, int n,
                          const std::function<std::vector<double>(std::span<const std::size_t>)>& candidate) {
  if (n < 0) throw DomainError("risk: n must be >= 0");
  const std::size_t k = model.alphabet_size();
  const std::uint64_t total = tuple_count(k, n);
  if (total > kRiskTupleCap)
    throw CapacityError("risk: alphabet^n exceeds " + std::to_string(kRiskTupleCap) + " data tuples");
  const std::size_t parts = n == 0 ? 1 : k;
  const std::uint64_t per_part = total / parts;
  const auto m = model.m();

  // D_m(p_theta || r) is needed for every theta per tuple.
  std::vector<RiskSums> partial(parts);
  run_partitions(parts, [&](std::size_t p) {
    std::vector<std::size_t> tuple(static_cast<std::size_t>(n));
    std::vector<double> logw(model.size());
    RiskSums acc;
    for (std::uint64_t idx = p * per_part; idx < (p + 1) * per_part; ++idx) {
      decode_tuple(idx, k, tuple);
      bool any = false;
      for (std::size_t t = 0; t < model.size(); ++t) {
        const double prior = model.grid()[t].prior;
        double lw = prior > 0.0 ? std::log(prior) : -kInf;
        for (std::size_t j = 0; j < tuple.size() && lw != -kInf; ++j) {
          const std::size_t x = tuple[j];
          const double ld = model.log_density(t, x);
          if (ld == -kInf || m[x] == 0.0) lw = -kInf;
          else lw += model.beta() * ld + std::log(m[x]);
        }
        logw[t] = lw;
        any = any || lw != -kInf;
      }
      if (!any) continue;
      const std::vector<double> r = candidate(tuple);
      if (r.size() != k) throw StructuralError("risk: candidate density has wrong length");
      for (std::size_t t = 0; t < model.size(); ++t) {
        if (logw[t] == -kInf) continue;
        const double w = std::exp(logw[t]);
        acc.mass += w;
        const double d = relative_entropy_density(model.grid()[t].density, r, m);
        acc.weighted = d == kInf ? kInf : acc.weighted + w * d;
      }
    }
    partial[p] = acc;
  });
  RiskSums out;
  for (const auto& p : partial) {
    out.weighted += p.weighted;
    out.mass += p.mass;
  }
  return out;
}

}  // namespace detail

/// R^n(p||r) = sum_{x^n} sum_theta D_m(p_theta || r(.|x^n)) prod_j p(x_j|theta)^beta m_{x_j} pi(theta).
/// The data weighting is unnormalized unless `opts.normalize` is set.
inline double classical_risk(const ParametricModel& model, const PredictiveMap& candidate, int n,
                             const RiskOptions& opts = {}) {
  const auto sums = detail::risk_sums(model, n, candidate);
  return opts.normalize ? sums.weighted / sums.mass : sums.weighted;
}

/// T^n = (1/A) sum sum S(omega_theta || phi(x^n)) prod_j p_theta(x_j)^beta m_{x_j} pi(theta),
/// evaluated through S(omega_theta||phi) = D(p_theta m || phi). A candidate
/// state charging a label with m = 0 has no density and gives +inf.
inline double quantum_risk(const ParametricModel& model, const StateMap& candidate, int n) {
  const auto m = model.m();
  const auto sums = detail::risk_sums(model, n, [&](std::span<const std::size_t> x) {
    const CentralState s = candidate(x);
    require_same_alphabet(s.alphabet(), model.alphabet(), "quantum_risk");
    const auto w = s.central_measure().weights();
    std::vector<double> r(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (m[i] > 0.0) r[i] = w[i] / m[i];
      else if (w[i] > 0.0) return std::vector<double>(w.size(), 0.0);  // every term becomes +inf
    }
    return r;
  });
  return sums.weighted / sums.mass;
}

// ---------------------------------------------------------------------------
// Risk minimality

enum class RiskKind { Classical, Quantum };

struct RiskMinimalityReport {
  RiskKind kind = RiskKind::Classical;
  int n = 0;
  std::size_t candidates = 0;
  double escort_risk = 0.0;
  double min_margin = kInf;  // min over candidates of risk(candidate) - risk(escort)
  std::size_t violations = 0;
  bool passed = true;
};

namespace detail {

/// Random density w.r.t. m on labels with m > 0: a Dirichlet(1) draw
/// divided by m.
inline std::vector<double> random_density(Rng& rng, std::span<const double> m) {
  std::vector<double> q(m.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] == 0.0) continue;
    q[i] = rng.exponential();
    total += q[i];
  }
  for (std::size_t i = 0; i < m.size(); ++i) q[i] = m[i] == 0.0 ? 0.0 : q[i] / total / m[i];
  return q;
}

}  // namespace detail

/// Compares the escort predictive against `perturbations` random candidate
/// maps: even-numbered candidates mix the escort with a Dirichlet(1) draw at
/// a uniform mixing weight, odd-numbered ones are Dirichlet(1) draws alone.
/// Each tuple gets its own draw. Passes when every margin is >= -1e-12.
inline RiskMinimalityReport risk_minimality_check(const ParametricModel& model, int n, std::size_t perturbations,
                                                  std::uint64_t seed, RiskKind kind = RiskKind::Classical) {
  const std::size_t k = model.alphabet_size();
  const std::uint64_t tuples = detail::tuple_count(k, n);
  if (tuples > kRiskTupleCap) throw CapacityError("risk_minimality_check: too many data tuples");
  const auto m = model.m();

  // Escort predictive per tuple; nullopt where the tuple has zero mass.
  std::vector<std::optional<std::vector<double>>> escort(tuples);
  std::vector<std::size_t> tuple(static_cast<std::size_t>(n));
  for (std::uint64_t idx = 0; idx < tuples; ++idx) {
    detail::decode_tuple(idx, k, tuple);
    try {
      escort[idx] = escort_predictive(model, tuple);
    } catch (const InferenceError&) {
    }
  }
  auto index_of = [k](std::span<const std::size_t> x) {
    std::uint64_t idx = 0;
    for (std::size_t v : x) idx = idx * k + v;
    return idx;
  };
  auto escort_map = [&](std::span<const std::size_t> x) { return *escort[index_of(x)]; };
  auto to_state = [&](const std::vector<double>& density) {
    std::vector<double> w(k);
    for (std::size_t i = 0; i < k; ++i) w[i] = density[i] * m[i];
    return CentralState::with_tolerance(DiscreteMeasure(model.alphabet(), std::move(w)), ParametricModel::kTolerance);
  };
  auto risk_of = [&](const std::function<std::vector<double>(std::span<const std::size_t>)>& map) {
    if (kind == RiskKind::Classical) return classical_risk(model, map, n);
    return quantum_risk(model, [&](std::span<const std::size_t> x) { return to_state(map(x)); }, n);
  };

  RiskMinimalityReport rep;
  rep.kind = kind;
  rep.n = n;
  rep.candidates = perturbations;
  rep.escort_risk = risk_of(escort_map);
  for (std::size_t c = 0; c < perturbations; ++c) {
    Rng rng(derive_seed(seed, "risk/candidate/" + std::to_string(c)));
    std::vector<std::vector<double>> table(tuples);
    for (std::uint64_t idx = 0; idx < tuples; ++idx) {
      auto draw = detail::random_density(rng, m);
      if (c % 2 == 0 && escort[idx]) {
        const double u = rng.uniform();
        for (std::size_t i = 0; i < k; ++i) draw[i] = (1.0 - u) * (*escort[idx])[i] + u * draw[i];
      }
      table[idx] = std::move(draw);
    }
    const double r = risk_of([&](std::span<const std::size_t> x) { return table[index_of(x)]; });
    const double margin = r - rep.escort_risk;
    rep.min_margin = std::min(rep.min_margin, margin);
    if (margin < -1e-12) ++rep.violations;
  }
  rep.passed = rep.violations == 0;
  return rep;
}

}  // namespace lds
