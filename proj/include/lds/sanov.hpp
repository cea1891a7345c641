#pragma once

// Level-2 large deviations: empirical measures of i.i.d. factor-state draws,
// the relative-entropy rate over constraint sets of measures, exact
// type-class probabilities, and the finite-n Sanov check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "lds/cramer.hpp"
#include "lds/errors.hpp"
#include "lds/measures.hpp"
#include "lds/numeric.hpp"

namespace lds {

struct EmpiricalMeasure {
  Alphabet alphabet;
  std::vector<int> counts;
  int n = 0;

  DiscreteMeasure normalized() const {
    std::vector<double> w(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) w[i] = static_cast<double>(counts[i]) / n;
    return DiscreteMeasure(alphabet, std::move(w));
  }
};

inline EmpiricalMeasure empirical_measure(std::span<const std::size_t> samples, const Alphabet& alphabet) {
  if (samples.empty()) throw DomainError("empirical_measure: at least one sample is required");
  EmpiricalMeasure e{alphabet, std::vector<int>(alphabet.size(), 0), static_cast<int>(samples.size())};
  for (std::size_t s : samples) {
    if (s >= alphabet.size()) throw StructuralError("empirical_measure: sample index out of range");
    ++e.counts[s];
  }
  return e;
}

inline EmpiricalMeasure empirical_measure(std::span<const std::string> samples, const Alphabet& alphabet) {
  std::vector<std::size_t> idx;
  idx.reserve(samples.size());
  for (const auto& s : samples) idx.push_back(alphabet.index_of(s));
  return empirical_measure(std::span<const std::size_t>(idx), alphabet);
}

/// Which version of a constraint set a query refers to.
enum class Topology { AsGiven, Interior, Closure };

/// {nu : sum_i nu_i f_i >= c}, or > c when strict.
struct MomentHalfSpace {
  std::vector<double> f;
  double c = 0.0;
  bool strict = false;
};

/// {nu : TV(nu, center) <= radius}, or < radius when strict.
/// TV(a, b) = (1/2) sum_i |a_i - b_i|.
struct TotalVariationBall {
  std::vector<double> center;
  double radius = 0.0;
  bool strict = false;
};

/// A finite list of measures, each given by its weights.
struct ExplicitMeasures {
  std::vector<std::vector<double>> measures;
};

class MeasureConstraintSet {
 public:
  using Kind = std::variant<MomentHalfSpace, TotalVariationBall, ExplicitMeasures>;

  MeasureConstraintSet(Kind kind, std::size_t alphabet_size) : kind_(std::move(kind)), k_(alphabet_size) {
    std::visit([this](const auto& s) { validate(s); }, kind_);
  }

  /// The whole simplex, as the half-space {sum nu_i * 0 >= 0}.
  static MeasureConstraintSet everything(std::size_t k) {
    return MeasureConstraintSet(MomentHalfSpace{std::vector<double>(k, 0.0), 0.0, false}, k);
  }

  const Kind& kind() const noexcept { return kind_; }
  std::size_t alphabet_size() const noexcept { return k_; }

  /// Membership of counts / n; the weights case is n = 1.
  template <class Number>
  bool contains(std::span<const Number> counts, double n, Topology topo = Topology::AsGiven) const {
    if (counts.size() != k_) throw StructuralError("constraint set: measure size mismatch");
    return std::visit([&](const auto& s) { return member(s, counts, n, topo); }, kind_);
  }

  bool contains(const DiscreteMeasure& nu, Topology topo = Topology::AsGiven) const {
    return contains<double>(nu.weights(), 1.0, topo);
  }

 private:
  void validate(const MomentHalfSpace& s) const {
    if (s.f.size() != k_) throw StructuralError("moment half-space: f has wrong length");
    for (double v : s.f)
      if (!std::isfinite(v)) throw DomainError("moment half-space: f must be finite");
    if (!std::isfinite(s.c)) throw DomainError("moment half-space: c must be finite");
  }
  void validate(const TotalVariationBall& s) const {
    if (s.center.size() != k_) throw StructuralError("TV ball: center has wrong length");
    double t = 0.0;
    for (double v : s.center) {
      if (!(v >= 0.0)) throw DomainError("TV ball: center weights must be >= 0");
      t += v;
    }
    if (std::abs(t - 1.0) > 1e-12) throw DomainError("TV ball: center must be normalized");
    if (!(s.radius >= 0.0)) throw DomainError("TV ball: radius must be >= 0");
  }
  void validate(const ExplicitMeasures& s) const {
    for (const auto& m : s.measures) {
      if (m.size() != k_) throw StructuralError("explicit measure has wrong length");
      double t = 0.0;
      for (double v : m) {
        if (!(v >= 0.0)) throw DomainError("explicit measures must have weights >= 0");
        t += v;
      }
      if (std::abs(t - 1.0) > 1e-12) throw DomainError("explicit measures must be normalized");
    }
  }

  static double tol(double scale) { return 1e-12 * std::max(1.0, std::abs(scale)); }

  template <class Number>
  bool member(const MomentHalfSpace& s, std::span<const Number> counts, double n, Topology topo) const {
    double lhs = 0.0, mag = 0.0;
    for (std::size_t i = 0; i < k_; ++i) {
      lhs += static_cast<double>(counts[i]) * s.f[i];
      mag += std::abs(static_cast<double>(counts[i]) * s.f[i]);
    }
    const double rhs = s.c * n;
    const double eps = tol(std::max(mag, rhs));
    bool strict = s.strict;
    const bool constant_f = std::all_of(s.f.begin(), s.f.end(), [&](double v) { return v == s.f.front(); });
    if (!constant_f) {
      if (topo == Topology::Interior) strict = true;
      if (topo == Topology::Closure) strict = false;
    }
    return strict ? lhs > rhs + eps : lhs >= rhs - eps;
  }

  template <class Number>
  bool member(const TotalVariationBall& s, std::span<const Number> counts, double n, Topology topo) const {
    double l1 = 0.0;
    for (std::size_t i = 0; i < k_; ++i) l1 += std::abs(static_cast<double>(counts[i]) - n * s.center[i]);
    const double rhs = 2.0 * n * s.radius;
    const double eps = tol(rhs);
    bool strict = s.strict;
    if (topo == Topology::Interior) strict = true;
    if (topo == Topology::Closure) strict = false;
    return strict ? l1 < rhs - eps : l1 <= rhs + eps;
  }

  template <class Number>
  bool member(const ExplicitMeasures& s, std::span<const Number> counts, double n, Topology topo) const {
    if (topo == Topology::Interior && k_ > 1) return false;
    for (const auto& m : s.measures) {
      bool same = true;
      for (std::size_t i = 0; i < k_ && same; ++i) same = std::abs(static_cast<double>(counts[i]) / n - m[i]) <= 1e-12;
      if (same) return true;
    }
    return false;
  }

  Kind kind_;
  std::size_t k_;
};

// ---------------------------------------------------------------------------
// Rate over a constraint set

struct SanovRate {
  double value = kInf;
  std::optional<DiscreteMeasure> argmin;
  /// Exponential tilt of the minimizer for moment half-spaces.
  std::optional<double> tilt;
};

namespace detail {

inline SanovRate moment_rate(const MomentHalfSpace& s, const DiscreteMeasure& mu, Topology topo) {
  const std::size_t k = mu.size();
  const bool constant_f = std::all_of(s.f.begin(), s.f.end(), [&](double v) { return v == s.f.front(); });
  bool strict = s.strict;
  if (!constant_f) {
    if (topo == Topology::Interior) strict = true;
    if (topo == Topology::Closure) strict = false;
  }
  const auto support = mu.support();
  double fmax = -kInf;
  for (std::size_t i : support) fmax = std::max(fmax, s.f[i]);
  const double mean = mu.integrate(s.f);
  const double eps = 1e-12 * std::max({1.0, std::abs(s.c), std::abs(fmax)});

  const bool feasible = strict ? fmax > s.c + eps : fmax >= s.c - eps;
  if (!feasible) return {};
  // mu itself, or measures arbitrarily close to it, satisfy the constraint.
  if (mean >= s.c - eps && (!strict || mean > s.c + eps || fmax > s.c + eps)) return {0.0, mu, 0.0};

  if (std::abs(fmax - s.c) <= eps) {
    // Only the top face of f is feasible: condition mu on it.
    std::vector<double> w(k, 0.0);
    double mass = 0.0;
    for (std::size_t i : support)
      if (s.f[i] == fmax) mass += mu[i];
    for (std::size_t i : support)
      if (s.f[i] == fmax) w[i] = mu[i] / mass;
    return {-std::log(mass), DiscreteMeasure(mu.alphabet(), std::move(w)), kInf};
  }

  std::vector<Atom> atoms;
  for (std::size_t i : support) atoms.push_back({s.f[i], mu[i]});
  auto eval = [&](double t) {
    auto p = cgf_point(atoms, t);
    return std::pair{p.mean, p.variance};
  };
  const double t = solve_increasing(eval, s.c, 1e-13 * (1.0 + std::abs(s.c))).x;
  std::vector<double> logw(k, -kInf);
  for (std::size_t i : support) logw[i] = std::log(mu[i]) + t * s.f[i];
  const double lz = log_sum_exp(logw);
  std::vector<double> w(k, 0.0);
  for (std::size_t i : support) w[i] = std::exp(logw[i] - lz);
  DiscreteMeasure nu(mu.alphabet(), std::move(w));
  const double d = relative_entropy(nu, mu);
  return {d, std::move(nu), t};
}

/// Minimizer of D(nu||mu) over a TV ball. The stationarity conditions give
/// nu_i = clamp(center_i, K mu_i, K mu_i e^{2a}) with a = lambda/2 the
/// multiplier of the TV constraint and K fixed by normalization; a is then
/// chosen so that the constraint is active. a = inf is the water-filling
/// limit nu_i = max(center_i, K mu_i) on supp(mu).
class TvProjection {
 public:
  TvProjection(const TotalVariationBall& ball, const DiscreteMeasure& mu) : ball_(ball), mu_(mu) {}

  std::vector<double> measure(double a) const {
    const double K = solve_scale(a);
    return clamp_all(K, a);
  }

  double tv(const std::vector<double>& nu) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) s += std::abs(nu[i] - ball_.center[i]);
    return 0.5 * s;
  }

 private:
  std::vector<double> clamp_all(double K, double a) const {
    std::vector<double> nu(mu_.size(), 0.0);
    for (std::size_t i = 0; i < nu.size(); ++i) {
      if (mu_[i] == 0.0) continue;
      const double lo = K * mu_[i];
      const double hi = a == kInf ? kInf : K * mu_[i] * std::exp(2.0 * a);
      nu[i] = std::clamp(ball_.center[i], lo, hi);
    }
    return nu;
  }

  double total(double K, double a) const {
    double s = 0.0;
    for (double v : clamp_all(K, a)) s += v;
    return s;
  }

  double solve_scale(double a) const {
    double lo = 1.0, hi = 1.0;
    while (total(lo, a) > 1.0) lo *= 0.5;
    while (total(hi, a) < 1.0) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-17 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (total(mid, a) < 1.0 ? lo : hi) = mid;
    }
    // Interpolate within the final bracket; total() is piecewise linear in K.
    const double tl = total(lo, a), th = total(hi, a);
    return th > tl ? lo + (1.0 - tl) * (hi - lo) / (th - tl) : hi;
  }

  const TotalVariationBall& ball_;
  const DiscreteMeasure& mu_;
};

inline SanovRate tv_rate(const TotalVariationBall& s, const DiscreteMeasure& mu, Topology topo) {
  bool strict = s.strict;
  if (topo == Topology::Interior) strict = true;
  if (topo == Topology::Closure) strict = false;
  const double eps = 1e-13;
  double outside = 0.0;  // center mass off supp(mu): unavoidable TV
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] == 0.0) outside += s.center[i];
  const bool feasible = strict ? outside < s.radius - eps : outside <= s.radius + eps;
  if (!feasible) return {};

  TvProjection proj(s, mu);
  const std::vector<double> at_mu(mu.weights().begin(), mu.weights().end());
  if (proj.tv(at_mu) <= s.radius + eps) return {0.0, mu, std::nullopt};

  std::vector<double> nu;
  if (outside >= s.radius - eps) {
    nu = proj.measure(kInf);
  } else {
    double lo = 0.0, hi = 1.0;
    while (proj.tv(proj.measure(hi)) > s.radius && hi < 300.0) hi *= 2.0;
    if (proj.tv(proj.measure(hi)) > s.radius) {
      nu = proj.measure(kInf);
    } else {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double tv = proj.tv(proj.measure(mid));
        if (std::abs(tv - s.radius) <= 1e-15) {
          lo = hi = mid;
          break;
        }
        (tv > s.radius ? lo : hi) = mid;
        if (hi - lo <= 1e-16 * std::max(1.0, hi)) break;
      }
      nu = proj.measure(hi);
    }
  }
  double total = 0.0;
  for (double v : nu) total += v;
  for (double& v : nu) v /= total;
  DiscreteMeasure m(mu.alphabet(), std::move(nu));
  const double d = relative_entropy(m, mu);
  return {d, std::move(m), std::nullopt};
}

inline SanovRate explicit_rate(const ExplicitMeasures& s, const DiscreteMeasure& mu, Topology topo) {
  if (topo == Topology::Interior && mu.size() > 1) return {};
  SanovRate best;
  for (const auto& w : s.measures) {
    DiscreteMeasure nu(mu.alphabet(), w);
    const double d = relative_entropy(nu, mu);
    if (d < best.value) best = {d, std::move(nu), std::nullopt};
  }
  return best;
}

}  // namespace detail

/// inf { D(nu||mu) : nu in gamma (interior / closure / as given), nu << mu }
/// with a minimizer; +inf when no admissible nu exists.
inline SanovRate sanov_rate(const MeasureConstraintSet& gamma, const DiscreteMeasure& mu,
                            Topology topo = Topology::Closure) {
  if (!mu.is_normalized()) throw DomainError("sanov_rate: mu must be normalized");
  if (gamma.alphabet_size() != mu.size()) throw StructuralError("sanov_rate: alphabet size mismatch");
  return std::visit(
      [&](const auto& s) -> SanovRate {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, MomentHalfSpace>) return detail::moment_rate(s, mu, topo);
        else if constexpr (std::is_same_v<T, TotalVariationBall>) return detail::tv_rate(s, mu, topo);
        else return detail::explicit_rate(s, mu, topo);
      },
      gamma.kind());
}

// ---------------------------------------------------------------------------
// Exact and Monte Carlo probabilities of L_n in gamma

inline constexpr std::uint64_t kTypeClassCap = 2'000'000;

/// P(L_n in gamma) as a sum of multinomial type-class probabilities.
inline TailProbability exact_empirical_prob(const DiscreteMeasure& mu, int n, const MeasureConstraintSet& gamma) {
  if (n < 1) throw DomainError("exact_empirical_prob: n must be >= 1");
  if (gamma.alphabet_size() != mu.size()) throw StructuralError("exact_empirical_prob: alphabet size mismatch");
  const std::size_t k = mu.size();
  if (composition_count(static_cast<std::uint64_t>(n), k, kTypeClassCap) > kTypeClassCap)
    throw CapacityError("exact_empirical_prob: more than " + std::to_string(kTypeClassCap) +
                        " type classes; use mc_empirical_prob");
  std::vector<double> logmu(k);
  for (std::size_t i = 0; i < k; ++i) logmu[i] = mu[i] > 0.0 ? std::log(mu[i]) : -kInf;
  const double log_nfact = std::lgamma(n + 1.0);
  LogAccumulator acc;
  for_each_composition(n, k, [&](const std::vector<int>& c) {
    double lp = log_nfact;
    for (std::size_t i = 0; i < k; ++i) {
      if (c[i] == 0) continue;
      if (logmu[i] == -kInf) return;
      lp += c[i] * logmu[i] - std::lgamma(c[i] + 1.0);
    }
    if (gamma.contains<int>(c, n)) acc.add(lp);
  });
  TailProbability out;
  out.log_probability = std::min(0.0, acc.value());
  out.probability = std::exp(out.log_probability);
  return out;
}

inline McEstimate mc_empirical_prob(const DiscreteMeasure& mu, int n, const MeasureConstraintSet& gamma,
                                    std::uint64_t replications, std::uint64_t seed, std::size_t partitions = 64) {
  if (replications < 1) throw DomainError("mc_empirical_prob: replications must be >= 1");
  if (n < 1) throw DomainError("mc_empirical_prob: n must be >= 1");
  CategoricalSampler cat(mu.weights());
  const std::size_t parts = std::max<std::size_t>(1, std::min<std::uint64_t>(partitions, replications));
  std::vector<std::uint64_t> hits(parts, 0);
  run_partitions(parts, [&](std::size_t p) {
    const std::uint64_t count = replications / parts + (p < replications % parts ? 1 : 0);
    Rng rng(derive_seed(seed, "empirical/partition/" + std::to_string(p)));
    std::vector<int> c(mu.size());
    std::uint64_t h = 0;
    for (std::uint64_t r = 0; r < count; ++r) {
      std::fill(c.begin(), c.end(), 0);
      for (int j = 0; j < n; ++j) ++c[cat(rng)];
      if (gamma.contains<int>(c, n)) ++h;
    }
    hits[p] = h;
  });
  std::uint64_t total = 0;
  for (auto h : hits) total += h;
  McEstimate out;
  out.replications = replications;
  out.estimate = static_cast<double>(total) / static_cast<double>(replications);
  out.standard_error = std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(replications));
  return out;
}

// ---------------------------------------------------------------------------
// Bound check

enum class SanovMode { Central, Generic };

struct SanovOptions {
  std::uint64_t replications = 0;  // Monte Carlo fallback / companion; 0 disables
  std::uint64_t seed = 0;
  std::optional<double> lower_slack_constant;  // default: alphabet size
};

struct SanovRow {
  int n = 0;
  std::optional<TailProbability> exact;
  std::optional<McEstimate> mc;
  double scaled_log_probability = -kInf;
  double upper_exponent = 0.0;  // (1/n) log[(n+1)^k e^{-n inf D}]
  double lower_exponent = 0.0;
  bool upper_ok = false;
  bool lower_ok = false;
  bool bound_ok = false;
};

struct SanovReport {
  SanovMode mode = SanovMode::Central;
  SanovRate inf_closure;
  SanovRate inf_interior;
  double slack_constant = 0.0;
  /// Central mode: S(b(nu*)||psi) at the closure minimizer.
  std::optional<double> bridge_value;
  bool bridge_ok = true;
  std::vector<SanovRow> rows;
  bool all_ok = true;
};

inline SanovReport sanov_bound_check(const DiscreteMeasure& mu, const MeasureConstraintSet& gamma,
                                     const std::vector<int>& n_list, SanovMode mode, const SanovOptions& opts = {}) {
  SanovReport rep;
  rep.mode = mode;
  rep.inf_closure = sanov_rate(gamma, mu, Topology::Closure);
  rep.inf_interior = sanov_rate(gamma, mu, Topology::Interior);
  const double k = static_cast<double>(mu.size());
  rep.slack_constant = opts.lower_slack_constant.value_or(k);

  if (mode == SanovMode::Central && rep.inf_closure.argmin) {
    const double s = quantum_relative_entropy(CentralState(*rep.inf_closure.argmin), CentralState(mu));
    rep.bridge_value = s;
    rep.bridge_ok = std::abs(s - rep.inf_closure.value) <= 1e-12;
  }

  for (int n : n_list) {
    SanovRow row;
    row.n = n;
    try {
      row.exact = exact_empirical_prob(mu, n, gamma);
    } catch (const CapacityError&) {
      if (opts.replications == 0) throw;
    }
    if (opts.replications > 0)
      row.mc = mc_empirical_prob(mu, n, gamma, opts.replications, derive_seed(opts.seed, "sanov/n/" + std::to_string(n)));
    const double log_q = row.exact ? row.exact->log_probability
                                   : std::log(row.mc->estimate);
    row.scaled_log_probability = log_q / n;
    row.upper_exponent = std::min(0.0, k * std::log(n + 1.0) / n - rep.inf_closure.value);
    row.upper_ok = log_q <= n * row.upper_exponent + std::log1p(1e-9);
    row.lower_exponent = -rep.inf_interior.value - rep.slack_constant * std::log(n + 1.0) / n;
    row.lower_ok = rep.inf_interior.value == kInf || row.scaled_log_probability >= row.lower_exponent;
    row.bound_ok = row.upper_ok && row.lower_ok;
    rep.all_ok = rep.all_ok && row.bound_ok;
    rep.rows.push_back(row);
  }
  rep.all_ok = rep.all_ok && rep.bridge_ok;
  return rep;
}

}  // namespace lds
