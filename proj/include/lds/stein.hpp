#pragma once

// Neyman-Pearson testing between diagonal product states and the Stein
// error exponent. Tests act on type classes of the outcome tuple; symbols
// sharing a log-likelihood ratio are merged first since the counts of the
// merged symbols are a sufficient statistic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lds/errors.hpp"
#include "lds/measures.hpp"
#include "lds/numeric.hpp"

namespace lds {

inline constexpr std::uint64_t kSteinTypeClassCap = 5'000'000;

/// Null state psi against alternative phi on a shared alphabet.
class HypothesisPair {
 public:
  HypothesisPair(DiscreteMeasure psi, DiscreteMeasure phi) : psi_(std::move(psi)), phi_(std::move(phi)) {
    require_same_alphabet(psi_.alphabet(), phi_.alphabet(), "hypothesis pair");
    if (!psi_.is_normalized() || !phi_.is_normalized()) throw DomainError("hypothesis pair: states must be normalized");
    for (std::size_t i = 0; i < psi_.size(); ++i)
      if (!(psi_[i] > 0.0 && psi_[i] < 1.0) || !(phi_[i] > 0.0 && phi_[i] < 1.0))
        throw DomainError("hypothesis pair: weights must lie strictly inside (0, 1)");
  }

  const DiscreteMeasure& psi() const noexcept { return psi_; }
  const DiscreteMeasure& phi() const noexcept { return phi_; }
  std::size_t alphabet_size() const noexcept { return psi_.size(); }

  /// S(psi || phi).
  double relative_entropy() const { return quantum_relative_entropy(CentralState(psi_), CentralState(phi_)); }

  /// Standard deviation of log(psi_i / phi_i) under psi.
  double log_ratio_sd() const {
    double mean = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < psi_.size(); ++i) mean += psi_[i] * std::log(psi_[i] / phi_[i]);
    for (std::size_t i = 0; i < psi_.size(); ++i) {
      const double d = std::log(psi_[i] / phi_[i]) - mean;
      sq += psi_[i] * d * d;
    }
    return std::sqrt(sq);
  }

 private:
  DiscreteMeasure psi_, phi_;
};

/// Pair obtained by merging symbols i and j into one (kept at position i).
inline HypothesisPair merge_symbols(const HypothesisPair& pair, std::size_t i, std::size_t j) {
  const std::size_t k = pair.alphabet_size();
  if (i == j || i >= k || j >= k) throw DomainError("merge_symbols: need two distinct valid indices");
  std::vector<std::string> labels;
  std::vector<double> a, b;
  for (std::size_t s = 0; s < k; ++s) {
    if (s == j) continue;
    labels.push_back(s == i ? pair.psi().alphabet()[i] + "+" + pair.psi().alphabet()[j] : pair.psi().alphabet()[s]);
    a.push_back(pair.psi()[s] + (s == i ? pair.psi()[j] : 0.0));
    b.push_back(pair.phi()[s] + (s == i ? pair.phi()[j] : 0.0));
  }
  Alphabet alpha(labels);
  return HypothesisPair(DiscreteMeasure::probability(alpha, a), DiscreteMeasure::probability(alpha, b));
}

/// Rejects psi when T < threshold, and with probability gamma when T ties
/// the threshold, where T = sum_j log(psi(x_j)/phi(x_j)). A threshold of
/// -inf never rejects; +inf always rejects.
struct NPTest {
  int n = 1;
  double threshold = 0.0;
  double gamma = 0.0;
};

struct ErrorProbabilities {
  double alpha = 0.0;  // P_psi(reject)
  double beta = 0.0;   // P_phi(accept)
  double log_beta = 0.0;
};

namespace detail {

inline bool stat_ties(double a, double b) { return std::abs(a - b) <= 1e-11 * (1.0 + std::abs(a)); }

/// Level set of the statistic with its probabilities under both states.
struct StatLevel {
  double t = 0.0;
  double log_p_psi = -kInf;
  double log_p_phi = -kInf;
};

/// Groups of symbols with a common log-likelihood ratio.
struct RatioGroups {
  std::vector<double> log_ratio;
  std::vector<double> log_psi;
  std::vector<double> log_phi;
};

inline RatioGroups ratio_groups(const HypothesisPair& pair) {
  const std::size_t k = pair.alphabet_size();
  std::vector<std::size_t> order(k);
  std::vector<double> lr(k);
  for (std::size_t i = 0; i < k; ++i) {
    order[i] = i;
    lr[i] = std::log(pair.psi()[i]) - std::log(pair.phi()[i]);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lr[a] < lr[b]; });
  RatioGroups g;
  std::vector<double> psi_mass, phi_mass;
  for (std::size_t idx : order) {
    if (g.log_ratio.empty() || !stat_ties(g.log_ratio.back(), lr[idx])) {
      g.log_ratio.push_back(lr[idx]);
      psi_mass.push_back(0.0);
      phi_mass.push_back(0.0);
    }
    psi_mass.back() += pair.psi()[idx];
    phi_mass.back() += pair.phi()[idx];
  }
  for (std::size_t s = 0; s < psi_mass.size(); ++s) {
    g.log_psi.push_back(std::log(psi_mass[s]));
    g.log_phi.push_back(std::log(phi_mass[s]));
    g.log_ratio[s] = g.log_psi[s] - g.log_phi[s];
  }
  return g;
}

/// Level sets of T over all type classes, sorted by ascending T.
inline std::vector<StatLevel> stat_levels(const HypothesisPair& pair, int n) {
  if (n < 1) throw DomainError("stein: n must be >= 1");
  const auto g = ratio_groups(pair);
  const std::size_t G = g.log_ratio.size();
  if (composition_count(static_cast<std::uint64_t>(n), G, kSteinTypeClassCap) > kSteinTypeClassCap)
    throw CapacityError("stein: more than " + std::to_string(kSteinTypeClassCap) + " type classes at n = " +
                        std::to_string(n));
  std::vector<StatLevel> classes;
  const double log_nfact = std::lgamma(n + 1.0);
  for_each_composition(n, G, [&](const std::vector<int>& c) {
    StatLevel s;
    double lm = log_nfact, a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < G; ++i) {
      if (c[i] == 0) continue;
      lm -= std::lgamma(c[i] + 1.0);
      s.t += c[i] * g.log_ratio[i];
      a += c[i] * g.log_psi[i];
      b += c[i] * g.log_phi[i];
    }
    s.log_p_psi = lm + a;
    s.log_p_phi = lm + b;
    classes.push_back(s);
  });
  std::sort(classes.begin(), classes.end(), [](const StatLevel& x, const StatLevel& y) { return x.t < y.t; });
  std::vector<StatLevel> levels;
  for (const auto& c : classes) {
    if (levels.empty() || !stat_ties(levels.back().t, c.t)) {
      levels.push_back(c);
      continue;
    }
    auto& l = levels.back();
    l.log_p_psi = log_sum_exp(std::vector<double>{l.log_p_psi, c.log_p_psi});
    l.log_p_phi = log_sum_exp(std::vector<double>{l.log_p_phi, c.log_p_phi});
  }
  return levels;
}

inline ErrorProbabilities errors_on_levels(const std::vector<StatLevel>& levels, double threshold, double gamma) {
  double alpha = 0.0;
  LogAccumulator accept;
  for (const auto& l : levels) {
    if (threshold != kInf && threshold != -kInf && stat_ties(l.t, threshold)) {
      alpha += gamma * std::exp(l.log_p_psi);
      if (gamma < 1.0) accept.add(std::log1p(-gamma) + l.log_p_phi);
    } else if (l.t < threshold) {
      alpha += std::exp(l.log_p_psi);
    } else {
      accept.add(l.log_p_phi);
    }
  }
  ErrorProbabilities e;
  e.alpha = std::min(1.0, alpha);
  e.log_beta = std::min(0.0, accept.value());
  e.beta = std::exp(e.log_beta);
  return e;
}

/// The NP frontier: smallest beta over randomized tests with P_psi(reject) = alpha.
struct NpFrontierPoint {
  NPTest test;
  double log_beta = 0.0;
};

inline NpFrontierPoint np_frontier(const std::vector<StatLevel>& levels, int n, double alpha) {
  double cum = 0.0;
  std::size_t boundary = levels.size() - 1;
  double gamma = 1.0;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const double p = std::exp(levels[l].log_p_psi);
    if (cum + p >= alpha || l + 1 == levels.size()) {
      boundary = l;
      gamma = p > 0.0 ? std::clamp((alpha - cum) / p, 0.0, 1.0) : 1.0;
      break;
    }
    cum += p;
  }
  LogAccumulator accept;
  for (std::size_t l = boundary + 1; l < levels.size(); ++l) accept.add(levels[l].log_p_phi);
  if (gamma < 1.0) accept.add(std::log1p(-gamma) + levels[boundary].log_p_phi);
  return {{n, levels[boundary].t, gamma}, std::min(0.0, accept.value())};
}

}  // namespace detail

inline ErrorProbabilities error_probabilities(const HypothesisPair& pair, const NPTest& test) {
  if (!(test.gamma >= 0.0 && test.gamma <= 1.0)) throw DomainError("NP test: randomization must lie in [0, 1]");
  if (std::isnan(test.threshold)) throw DomainError("NP test: threshold is NaN");
  return detail::errors_on_levels(detail::stat_levels(pair, test.n), test.threshold, test.gamma);
}

struct NpOptimum {
  double beta = 0.0;  // beta*_n(eps)
  double log_beta = 0.0;
  double alpha = 0.0;  // first-kind error of the returned test
  NPTest test;
};

/// Minimal second-kind error over tests with first-kind error <= eps,
/// attained by the randomized likelihood-ratio test with alpha = eps.
inline NpOptimum np_optimal_beta(const HypothesisPair& pair, int n, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("np_optimal_beta: epsilon must lie in (0, 1)");
  const auto levels = detail::stat_levels(pair, n);
  const auto point = detail::np_frontier(levels, n, eps);
  const auto check = detail::errors_on_levels(levels, point.test.threshold, point.test.gamma);
  NpOptimum out;
  out.test = point.test;
  out.log_beta = point.log_beta;
  out.beta = std::exp(point.log_beta);
  out.alpha = check.alpha;
  return out;
}

struct SteinRow {
  int n = 0;
  double epsilon = 0.0;
  double beta_star = 0.0;
  double log_beta_star = 0.0;
  double exponent = 0.0;   // e_n = (1/n) log beta*_n
  double deviation = 0.0;  // |e_n + S|
  double bound = 0.0;      // C / sqrt(n) * (1 + |log eps|)
  double alpha = 0.0;
  bool ok = false;
};

struct SteinReport {
  double relative_entropy = 0.0;  // S(psi||phi)
  double target_exponent = 0.0;   // -S
  double constant = 0.0;          // C
  std::vector<double> epsilons;
  std::vector<SteinRow> rows;     // grouped by epsilon, then n
  /// max_eps e_n - min_eps e_n per n.
  std::vector<double> epsilon_spread;
  bool spread_nonincreasing = true;
  bool all_ok = true;
};

/// e_n for each (eps, n) with the bound |e_n + S| <= C/sqrt(n) (1 + |log eps|),
/// C = 1 + 2 sd_psi(log psi/phi), plus the eps-spread trend across n.
inline SteinReport stein_exponent_check(const HypothesisPair& pair, const std::vector<double>& epsilons,
                                        const std::vector<int>& n_list, std::optional<double> constant = std::nullopt) {
  if (n_list.empty() || epsilons.empty()) throw DomainError("stein_exponent_check: empty n or epsilon list");
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1]) throw DomainError("stein_exponent_check: n list must be increasing");
  SteinReport rep;
  rep.relative_entropy = pair.relative_entropy();
  rep.target_exponent = -rep.relative_entropy;
  rep.constant = constant.value_or(1.0 + 2.0 * pair.log_ratio_sd());
  rep.epsilons = epsilons;
  std::vector<std::vector<detail::StatLevel>> levels;
  for (int n : n_list) levels.push_back(detail::stat_levels(pair, n));
  for (double eps : epsilons) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("stein_exponent_check: epsilon must lie in (0, 1)");
    for (std::size_t j = 0; j < n_list.size(); ++j) {
      const int n = n_list[j];
      const auto point = detail::np_frontier(levels[j], n, eps);
      SteinRow row;
      row.n = n;
      row.epsilon = eps;
      row.log_beta_star = point.log_beta;
      row.beta_star = std::exp(point.log_beta);
      row.alpha = detail::errors_on_levels(levels[j], point.test.threshold, point.test.gamma).alpha;
      row.exponent = point.log_beta / n;
      row.deviation = std::abs(row.exponent + rep.relative_entropy);
      row.bound = rep.constant / std::sqrt(static_cast<double>(n)) * (1.0 + std::abs(std::log(eps)));
      row.ok = row.deviation <= row.bound;
      rep.all_ok = rep.all_ok && row.ok;
      rep.rows.push_back(row);
    }
  }
  for (std::size_t j = 0; j < n_list.size(); ++j) {
    double lo = kInf, hi = -kInf;
    for (std::size_t e = 0; e < epsilons.size(); ++e) {
      const double v = rep.rows[e * n_list.size() + j].exponent;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    rep.epsilon_spread.push_back(hi - lo);
    if (j > 0 && rep.epsilon_spread[j] > rep.epsilon_spread[j - 1] + 1e-12) rep.spread_nonincreasing = false;
  }
  rep.all_ok = rep.all_ok && rep.spread_nonincreasing;
  return rep;
}

// ---------------------------------------------------------------------------
// Brute-force oracle over deterministic tests

inline constexpr std::uint64_t kBruteForceTestCap = 5'000'000;

struct BruteForceReport {
  std::uint64_t tests = 0;
  /// Smallest beta among deterministic tests with alpha <= eps.
  double min_beta = 1.0;
  double np_beta = 1.0;
  /// max over tests of beta*(alpha_test) - beta_test; positive means a
  /// deterministic test beat the NP frontier.
  double frontier_violation = -kInf;
  bool ok = false;
};

/// Enumerates every deterministic test on outcome tuples. Tuples in one type
/// class of the raw alphabet are exchangeable, so a test is determined by
/// how many tuples of each class it rejects.
inline BruteForceReport brute_force_min_beta(const HypothesisPair& pair, int n, double eps) {
  if (n < 1) throw DomainError("brute_force_min_beta: n must be >= 1");
  const std::size_t k = pair.alphabet_size();
  struct Cls {
    int size;
    double p_psi, p_phi;  // per tuple
  };
  std::vector<Cls> classes;
  long double tests = 1.0L;
  for_each_composition(n, k, [&](const std::vector<int>& c) {
    double lm = std::lgamma(n + 1.0), a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      lm -= std::lgamma(c[i] + 1.0);
      a += c[i] * std::log(pair.psi()[i]);
      b += c[i] * std::log(pair.phi()[i]);
    }
    const int size = static_cast<int>(std::llround(std::exp(lm)));
    classes.push_back({size, std::exp(a), std::exp(b)});
    tests *= size + 1;
  });
  if (tests > static_cast<long double>(kBruteForceTestCap))
    throw CapacityError("brute_force_min_beta: more than " + std::to_string(kBruteForceTestCap) + " tests");

  const auto levels = detail::stat_levels(pair, n);
  BruteForceReport rep;
  rep.np_beta = std::exp(detail::np_frontier(levels, n, eps).log_beta);
  std::vector<int> reject(classes.size(), 0);
  while (true) {
    double alpha = 0.0, beta = 0.0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
      alpha += reject[c] * classes[c].p_psi;
      beta += (classes[c].size - reject[c]) * classes[c].p_phi;
    }
    ++rep.tests;
    if (alpha <= eps + 1e-12) rep.min_beta = std::min(rep.min_beta, beta);
    const double frontier = alpha >= 1.0 ? 0.0 : std::exp(detail::np_frontier(levels, n, alpha).log_beta);
    rep.frontier_violation = std::max(rep.frontier_violation, frontier - beta);
    std::size_t c = 0;
    while (c < classes.size() && reject[c] == classes[c].size) reject[c++] = 0;
    if (c == classes.size()) break;
    ++reject[c];
  }
  rep.ok = rep.min_beta >= rep.np_beta - 1e-12 && rep.frontier_violation <= 1e-12;
  return rep;
}

}  // namespace lds
