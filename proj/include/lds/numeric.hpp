#pragma once

// Shared numerical plumbing: log-domain accumulation, seeded randomness,
// deterministic work partitioning and a safeguarded monotone root finder.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "lds/errors.hpp"

namespace lds {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log(sum(exp(x))) with max shift. Empty input or all -inf gives -inf.
inline double log_sum_exp(std::span<const double> xs) {
  double mx = -kInf;
  for (double x : xs) mx = std::max(mx, x);
  if (mx == -kInf) return -kInf;
  if (mx == kInf) return kInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

/// Streaming log-sum-exp. Rescales when a larger term arrives.
class LogAccumulator {
 public:
  void add(double log_term) {
    if (log_term == -kInf) return;
    if (log_term <= max_) {
      sum_ += std::exp(log_term - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    }
  }
  void merge(const LogAccumulator& other) {
    if (other.max_ == -kInf) return;
    add_scaled(other.max_, other.sum_);
  }
  double value() const { return max_ == -kInf ? -kInf : max_ + std::log(sum_); }

 private:
  void add_scaled(double log_scale, double mass) {
    if (log_scale <= max_) {
      sum_ += mass * std::exp(log_scale - max_);
    } else {
      sum_ = sum_ * std::exp(max_ - log_scale) + mass;
      max_ = log_scale;
    }
  }
  double max_ = -kInf;
  double sum_ = 0.0;
};

/// x*log(x/y) with 0*log(0/y) = 0 and x*log(x/0) = +inf for x > 0.
inline double xlogxy(double x, double y) {
  if (x == 0.0) return 0.0;
  if (y == 0.0) return kInf;
  return x * std::log(x / y);
}

// ---------------------------------------------------------------------------
// Randomness

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stable per-task seed from a root seed and a task path such as
/// "sanov/mc/partition/3". Independent of thread scheduling.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view path) {
  std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
  for (unsigned char c : path) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(root ^ splitmix64(h));
}

/// xoshiro256** with our own uniform/categorical draws so that sample
/// streams do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) {
      s = splitmix64(s);
      w = s;
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Exp(1) draw.
  double exponential() { return -std::log1p(-uniform()); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4]{};
};

/// Inverse-CDF sampler over a finite set of weights (need not be normalized).
class CategoricalSampler {
 public:
  explicit CategoricalSampler(std::span<const double> weights) {
    cumulative_.reserve(weights.size());
    double acc = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("categorical weights must be finite and >= 0");
      acc += w;
      cumulative_.push_back(acc);
    }
    if (!(acc > 0.0)) throw DomainError("categorical weights sum to zero");
    total_ = acc;
  }

  std::size_t operator()(Rng& rng) const {
    const double u = rng.uniform() * total_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
    if (i >= cumulative_.size()) i = cumulative_.size() - 1;
    // Skip zero-width bins that upper_bound can land on through rounding.
    while (i > 0 && cumulative_[i] == cumulative_[i - 1]) --i;
    return i;
  }

 private:
  std::vector<double> cumulative_;
  double total_ = 0.0;
};

// ---------------------------------------------------------------------------
// Parallelism

/// Worker cap from LDS_THREADS, else hardware concurrency.
inline unsigned worker_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LDS_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<unsigned>(std::min<long>(v, 1024));
  }
  return hw;
}

/// Runs body(p) for p in [0, partitions). Each partition writes only its own
/// slot, so callers merge results by partition index and the outcome does
/// not depend on the number of workers.
inline void run_partitions(std::size_t partitions, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(worker_count(), partitions);
  if (workers <= 1) {
    for (std::size_t p = 0; p < partitions; ++p) body(p);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t p = w; p < partitions; p += workers) body(p);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Root finding

struct RootResult {
  double x = 0.0;
  int iterations = 0;
};

/// Solves g(x) = target for an increasing g using Newton steps guarded by a
/// bisection bracket. The bracket starts at [-1, 1] and grows geometrically.
/// `eval` returns {g(x), g'(x)}. Converges when |g(x) - target| <= tol or the
/// bracket has collapsed to machine resolution.
template <class Eval>
RootResult solve_increasing(Eval&& eval, double target, double tol, int max_iter = 500) {
  double lo = -1.0, hi = 1.0;
  int grow = 0;
  while (eval(lo).first > target) {
    hi = lo;
    lo *= 2.0;
    if (++grow > 1100) throw NumericalError("solve_increasing: cannot bracket root from below");
  }
  while (eval(hi).first < target) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 1100) throw NumericalError("solve_increasing: cannot bracket root from above");
  }
  double x = 0.5 * (lo + hi);
  if (lo <= 0.0 && hi >= 0.0) x = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    auto [g, dg] = eval(x);
    const double r = g - target;
    if (std::abs(r) <= tol) return {x, it};
    if (r < 0.0) lo = x; else hi = x;
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(x)))
      return {x, it};
    double next = (dg > 0.0 && std::isfinite(dg)) ? x - r / dg : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
  }
  throw NumericalError("solve_increasing: no convergence after " + std::to_string(max_iter) +
                       " iterations (bracket [" + std::to_string(lo) + ", " + std::to_string(hi) + "])");
}

/// log C(n, k) via lgamma.
inline double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

/// Number of compositions of n into k nonnegative parts, C(n+k-1, k-1),
/// saturated at `cap + 1` so callers can compare against a cap safely.
inline std::uint64_t composition_count(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
  if (k == 0) return n == 0 ? 1 : 0;
  // C(n+k-1, k-1) computed incrementally; each partial product is exact.
  const std::uint64_t r = k - 1;
  long double acc = 1.0L;
  for (std::uint64_t i = 1; i <= r; ++i) {
    acc = acc * static_cast<long double>(n + i) / static_cast<long double>(i);
    if (acc > static_cast<long double>(cap)) return cap + 1;
  }
  return static_cast<std::uint64_t>(std::llround(static_cast<double>(acc)));
}

/// Calls visit(counts) for every composition of n into counts.size() parts,
/// in lexicographic order of the counts vector (first coordinate descending).
template <class Visit>
void for_each_composition(int n, std::size_t k, Visit&& visit) {
  std::vector<int> c(k, 0);
  if (k == 0) return;
  c[0] = n;
  while (true) {
    visit(static_cast<const std::vector<int>&>(c));
    const int tail = c[k - 1];
    c[k - 1] = 0;
    std::size_t j = k - 1;
    while (j > 0 && c[j - 1] == 0) --j;
    if (j == 0) return;
    --j;
    c[j] -= 1;
    c[j + 1] = tail + 1;
  }
}

}  // namespace lds
