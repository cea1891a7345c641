#pragma once

// Finite measures over labeled alphabets, states given by their central
// measures, relative entropies, and the correspondence between a central
// measure and its diagonal density matrix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lds/errors.hpp"
#include "lds/numeric.hpp"

namespace lds {

/// Ordered list of distinct labels. Labels stand for factor states or
/// outcome symbols; only their identity and order matter.
class Alphabet {
 public:
  Alphabet() = default;

  explicit Alphabet(std::vector<std::string> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) throw StructuralError("alphabet must have at least one label");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (!index_.emplace(labels_[i], i).second)
        throw StructuralError("duplicate alphabet label '" + labels_[i] + "'");
    }
  }

  /// Alphabet "0", "1", ..., "k-1".
  static Alphabet indexed(std::size_t k) {
    std::vector<std::string> labels;
    labels.reserve(k);
    for (std::size_t i = 0; i < k; ++i) labels.push_back(std::to_string(i));
    return Alphabet(std::move(labels));
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& operator[](std::size_t i) const { return labels_.at(i); }

  std::optional<std::size_t> find(const std::string& label) const {
    auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t index_of(const std::string& label) const {
    if (auto i = find(label)) return *i;
    throw StructuralError("unknown label '" + label + "'");
  }

  friend bool operator==(const Alphabet& a, const Alphabet& b) { return a.labels_ == b.labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline void require_same_alphabet(const Alphabet& a, const Alphabet& b, const char* where) {
  if (!(a == b)) throw StructuralError(std::string(where) + ": alphabet mismatch");
}

/// Nonnegative weights on an alphabet. Used for probability measures and for
/// unnormalized reference measures alike.
class DiscreteMeasure {
 public:
  static constexpr double kNormalizationTolerance = 1e-12;

  DiscreteMeasure() = default;

  DiscreteMeasure(Alphabet alphabet, std::vector<double> weights)
      : alphabet_(std::move(alphabet)), weights_(std::move(weights)) {
    if (weights_.size() != alphabet_.size())
      throw StructuralError("measure has " + std::to_string(weights_.size()) + " weights for " +
                            std::to_string(alphabet_.size()) + " labels");
    for (double w : weights_) {
      if (!std::isfinite(w) || w < 0.0) throw DomainError("measure weights must be finite and >= 0");
    }
  }

  /// Probability measure; the weights must sum to 1 within 1e-12.
  static DiscreteMeasure probability(Alphabet alphabet, std::vector<double> weights) {
    DiscreteMeasure m(std::move(alphabet), std::move(weights));
    if (!m.is_normalized()) throw DomainError("probability weights must sum to 1 (got " + std::to_string(m.total()) + ")");
    return m;
  }

  /// Probability measure obtained by dividing the weights by their sum.
  static DiscreteMeasure normalize(Alphabet alphabet, std::vector<double> weights) {
    DiscreteMeasure m(std::move(alphabet), std::move(weights));
    const double t = m.total();
    if (!(t > 0.0)) throw DomainError("cannot normalize a zero measure");
    for (double& w : m.weights_) w /= t;
    return m;
  }

  const Alphabet& alphabet() const noexcept { return alphabet_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double operator[](std::size_t i) const { return weights_.at(i); }
  std::size_t size() const noexcept { return weights_.size(); }

  double total() const { return std::accumulate(weights_.begin(), weights_.end(), 0.0); }
  bool is_normalized() const { return std::abs(total() - 1.0) <= kNormalizationTolerance; }

  /// Labels carrying positive weight.
  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < weights_.size(); ++i)
      if (weights_[i] > 0.0) s.push_back(i);
    return s;
  }

  /// Exact-zero absolute continuity test: every label charged by *this is
  /// charged by `other`.
  bool absolutely_continuous_wrt(const DiscreteMeasure& other) const {
    require_same_alphabet(alphabet_, other.alphabet_, "absolutely_continuous_wrt");
    for (std::size_t i = 0; i < weights_.size(); ++i)
      if (weights_[i] > 0.0 && other.weights_[i] == 0.0) return false;
    return true;
  }

  /// Integral of f against the measure.
  double integrate(std::span<const double> f) const {
    if (f.size() != weights_.size()) throw StructuralError("integrand size does not match alphabet");
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += weights_[i] * f[i];
    return s;
  }

  friend bool operator==(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    return a.alphabet_ == b.alphabet_ && a.weights_ == b.weights_;
  }

 private:
  Alphabet alphabet_;
  std::vector<double> weights_;
};

/// A state represented as the barycenter of a finite central measure over
/// factor-state labels.
class CentralState {
 public:
  CentralState() = default;

  explicit CentralState(DiscreteMeasure central_measure) : measure_(std::move(central_measure)) {
    if (!measure_.is_normalized()) throw DomainError("central measure of a state must be normalized");
  }

  CentralState(Alphabet alphabet, std::vector<double> weights)
      : CentralState(DiscreteMeasure::probability(std::move(alphabet), std::move(weights))) {}

  /// Accepts a central measure whose total is 1 only up to `tolerance`, as
  /// produced from model densities validated at a looser tolerance. The
  /// weights are kept as given.
  static CentralState with_tolerance(DiscreteMeasure central_measure, double tolerance) {
    if (std::abs(central_measure.total() - 1.0) > tolerance)
      throw DomainError("central measure of a state must be normalized");
    CentralState s;
    s.measure_ = std::move(central_measure);
    return s;
  }

  const DiscreteMeasure& central_measure() const noexcept { return measure_; }
  const Alphabet& alphabet() const noexcept { return measure_.alphabet(); }

  /// Expectation of a diagonal observable with the given eigenvalues.
  double expect(std::span<const double> diagonal_observable) const {
    return measure_.integrate(diagonal_observable);
  }

 private:
  DiscreteMeasure measure_;
};

/// Relative entropy D(nu||mu) = sum nu_i log(nu_i/mu_i); +inf unless nu << mu.
inline double relative_entropy(const DiscreteMeasure& nu, const DiscreteMeasure& mu) {
  require_same_alphabet(nu.alphabet(), mu.alphabet(), "relative_entropy");
  double d = 0.0;
  for (std::size_t i = 0; i < nu.size(); ++i) {
    const double term = xlogxy(nu[i], mu[i]);
    if (term == kInf) return kInf;
    d += term;
  }
  return d;
}

/// Relative entropy of densities w.r.t. a reference weight vector m:
/// sum_i m_i p_i log(p_i / r_i).
inline double relative_entropy_density(std::span<const double> p, std::span<const double> r,
                                       std::span<const double> m) {
  if (p.size() != r.size() || p.size() != m.size()) throw StructuralError("density sizes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (m[i] == 0.0) continue;
    const double term = xlogxy(p[i], r[i]);
    if (term == kInf) return kInf;
    d += m[i] * term;
  }
  return d;
}

/// S(psi||omega) for states sharing one factor alphabet. With the counting
/// measure on that alphabet as common dominating measure this is the
/// relative entropy of the central measures.
inline double quantum_relative_entropy(const CentralState& psi, const CentralState& omega) {
  require_same_alphabet(psi.alphabet(), omega.alphabet(), "quantum_relative_entropy");
  return relative_entropy(psi.central_measure(), omega.central_measure());
}

/// Diagonal density matrix in the basis of factor labels.
class DiagonalMatrix {
 public:
  explicit DiagonalMatrix(std::vector<double> diagonal) : diag_(std::move(diagonal)) {}

  std::size_t dimension() const noexcept { return diag_.size(); }
  std::span<const double> diagonal() const noexcept { return diag_; }
  double operator()(std::size_t i, std::size_t j) const { return i == j ? diag_.at(i) : 0.0; }
  double trace() const { return std::accumulate(diag_.begin(), diag_.end(), 0.0); }

  /// Matrix logarithm on the support; -inf marks the kernel.
  DiagonalMatrix log() const {
    std::vector<double> out(diag_.size());
    std::transform(diag_.begin(), diag_.end(), out.begin(),
                   [](double x) { return x > 0.0 ? std::log(x) : -kInf; });
    return DiagonalMatrix(std::move(out));
  }

 private:
  std::vector<double> diag_;
};

inline DiagonalMatrix to_density_matrix(const CentralState& state) {
  const auto w = state.central_measure().weights();
  return DiagonalMatrix(std::vector<double>(w.begin(), w.end()));
}

/// Tr[s(log s - log w)] evaluated as Tr[s log s] - Tr[s log w] on the matrix
/// side. Uses the support projection of s: terms with s_ii = 0 vanish; a
/// positive s_ii against w_ii = 0 gives +inf.
inline double matrix_relative_entropy(const DiagonalMatrix& s, const DiagonalMatrix& w) {
  if (s.dimension() != w.dimension()) throw StructuralError("matrix_relative_entropy: dimension mismatch");
  const DiagonalMatrix log_s = s.log();
  const DiagonalMatrix log_w = w.log();
  double s_log_s = 0.0, s_log_w = 0.0;
  for (std::size_t i = 0; i < s.dimension(); ++i) {
    const double si = s(i, i);
    if (si == 0.0) continue;
    if (log_w(i, i) == -kInf) return kInf;
    s_log_s += si * log_s(i, i);
    s_log_w += si * log_w(i, i);
  }
  return s_log_s - s_log_w;
}

/// A diagonal observable with a stated operator norm.
struct Observable {
  std::vector<double> eigenvalues;
  double norm = 1.0;
};

/// Finite family of observables defining the weak* metric on states.
class StateMetricBasis {
 public:
  explicit StateMetricBasis(std::vector<Observable> observables) : obs_(std::move(observables)) {
    if (obs_.empty()) throw StructuralError("state metric basis must not be empty");
    for (const auto& a : obs_)
      if (!(a.norm > 0.0) || !std::isfinite(a.norm)) throw DomainError("observable norms must be positive");
  }

  /// Elementary projections onto each label, norm 1.
  static StateMetricBasis projections(std::size_t k) {
    std::vector<Observable> obs;
    for (std::size_t i = 0; i < k; ++i) {
      Observable a{std::vector<double>(k, 0.0), 1.0};
      a.eigenvalues[i] = 1.0;
      obs.push_back(std::move(a));
    }
    return StateMetricBasis(std::move(obs));
  }

  const std::vector<Observable>& observables() const noexcept { return obs_; }

 private:
  std::vector<Observable> obs_;
};

/// d(w1, w2) = sum_j 2^{-j} |w1(A_j) - w2(A_j)| / ||A_j||, j = 1, 2, ...
inline double state_distance(const CentralState& w1, const CentralState& w2, const StateMetricBasis& basis) {
  require_same_alphabet(w1.alphabet(), w2.alphabet(), "state_distance");
  double d = 0.0, scale = 0.5;
  for (const auto& a : basis.observables()) {
    d += scale * std::abs(w1.expect(a.eigenvalues) - w2.expect(a.eigenvalues)) / a.norm;
    scale *= 0.5;
  }
  return d;
}

}  // namespace lds
