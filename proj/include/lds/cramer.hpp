#pragma once

// Level-1 large deviations for sample means of a scalar observable:
// cumulant generating function, its Legendre transform, exact and Monte
// Carlo tail probabilities, and the finite-n check of the Cramer bounds.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lds/errors.hpp"
#include "lds/numeric.hpp"

namespace lds {

struct Atom {
  double value = 0.0;
  double probability = 0.0;
};

/// Distribution of a real observable: finitely many atoms, or a seeded
/// sampler that may declare its cumulant generating function on a range.
class ScalarDistribution {
 public:
  using Sampler = std::function<double(Rng&)>;

  struct DeclaredCgf {
    std::function<double(double)> cgf;
    double t_min = -kInf;
    double t_max = kInf;
    double support_min = -kInf;
    double support_max = kInf;
  };

  /// Atoms are sorted by value; equal values are merged and zero-probability
  /// atoms dropped, so the first/last atom give the essential range.
  static ScalarDistribution atomic(std::vector<Atom> atoms) {
    if (atoms.empty()) throw StructuralError("distribution needs at least one atom");
    double total = 0.0;
    for (const auto& a : atoms) {
      if (!std::isfinite(a.value)) throw DomainError("atom values must be finite");
      if (!(a.probability >= 0.0) || !std::isfinite(a.probability)) throw DomainError("atom probabilities must be >= 0");
      total += a.probability;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("atom probabilities must sum to 1");
    std::sort(atoms.begin(), atoms.end(), [](const Atom& a, const Atom& b) { return a.value < b.value; });
    std::vector<Atom> merged;
    for (const auto& a : atoms) {
      if (a.probability == 0.0) continue;
      if (!merged.empty() && merged.back().value == a.value) merged.back().probability += a.probability;
      else merged.push_back(a);
    }
    ScalarDistribution d;
    d.atoms_ = std::move(merged);
    return d;
  }

  static ScalarDistribution bernoulli(double p) { return atomic({{0.0, 1.0 - p}, {1.0, p}}); }
  static ScalarDistribution point_mass(double v) { return atomic({{v, 1.0}}); }

  static ScalarDistribution sampler(Sampler draw, std::optional<DeclaredCgf> cgf = std::nullopt) {
    if (!draw) throw StructuralError("sampler must be callable");
    ScalarDistribution d;
    d.sampler_ = std::move(draw);
    d.declared_ = std::move(cgf);
    return d;
  }

  bool is_atomic() const noexcept { return !sampler_; }
  const std::vector<Atom>& atoms() const {
    if (!is_atomic()) throw StructuralError("distribution is sampler-based, not atomic");
    return atoms_;
  }
  const Sampler& draw() const noexcept { return sampler_; }
  const std::optional<DeclaredCgf>& declared_cgf() const noexcept { return declared_; }

  double mean() const {
    double m = 0.0;
    for (const auto& a : atoms()) m += a.value * a.probability;
    return m;
  }

 private:
  std::vector<Atom> atoms_;
  Sampler sampler_;
  std::optional<DeclaredCgf> declared_;
};

namespace detail {

/// log E[e^{tX}], tilted mean and tilted variance for an atomic law.
struct CgfPoint {
  double value;
  double mean;
  double variance;
};

inline CgfPoint cgf_point(const std::vector<Atom>& atoms, double t) {
  double mx = -kInf;
  for (const auto& a : atoms) mx = std::max(mx, std::log(a.probability) + t * a.value);
  double z = 0.0, m1 = 0.0;
  for (const auto& a : atoms) {
    const double w = std::exp(std::log(a.probability) + t * a.value - mx);
    z += w;
    m1 += w * a.value;
  }
  const double mean = m1 / z;
  double var = 0.0;
  for (const auto& a : atoms) {
    const double w = std::exp(std::log(a.probability) + t * a.value - mx);
    var += w * (a.value - mean) * (a.value - mean);
  }
  return {mx + std::log(z), mean, var / z};
}

}  // namespace detail

/// c(t) = log E[e^{tX}]. Sampler laws need a declared CGF valid at t.
inline double cgf(const ScalarDistribution& dist, double t) {
  if (dist.is_atomic()) return detail::cgf_point(dist.atoms(), t).value;
  const auto& d = dist.declared_cgf();
  if (!d || !(t >= d->t_min && t <= d->t_max))
    throw DomainError("cgf: t = " + std::to_string(t) + " outside the declared MGF validity range");
  return d->cgf(t);
}

/// Legendre transform of the CGF. Atomic laws use the exact CGF; sampler
/// laws use their declared CGF with a numerical derivative.
class RateFunctionProfile {
 public:
  static constexpr int kMaxIterations = 500;

  explicit RateFunctionProfile(ScalarDistribution dist) : dist_(std::move(dist)) {
    if (dist_.is_atomic()) {
      const auto& atoms = dist_.atoms();
      ess_min_ = atoms.front().value;
      ess_max_ = atoms.back().value;
      mean_ = dist_.mean();
      return;
    }
    const auto& d = dist_.declared_cgf();
    if (!d) throw DomainError("rate function: sampler distribution has no declared CGF");
    if (!(d->t_min < 0.0 && d->t_max > 0.0)) throw DomainError("rate function: declared CGF must be valid around 0");
    ess_min_ = d->support_min;
    ess_max_ = d->support_max;
    mean_ = cgf_derivative(0.0);
  }

  const ScalarDistribution& distribution() const noexcept { return dist_; }
  double ess_min() const noexcept { return ess_min_; }
  double ess_max() const noexcept { return ess_max_; }
  double mean() const noexcept { return mean_; }
  bool degenerate() const noexcept { return ess_min_ == ess_max_; }

  double cgf(double t) const {
    if (dist_.is_atomic()) return detail::cgf_point(dist_.atoms(), t).value;
    return lds::cgf(dist_, t);
  }

  double cgf_derivative(double t) const {
    if (dist_.is_atomic()) return detail::cgf_point(dist_.atoms(), t).mean;
    const auto& d = *dist_.declared_cgf();
    // Five-point central stencil, shrunk to stay inside the validity range.
    double h = 1e-3 * (1.0 + std::abs(t));
    h = std::min({h, 0.25 * (d.t_max - t), 0.25 * (t - d.t_min)});
    return (d.cgf(t - 2 * h) - 8 * d.cgf(t - h) + 8 * d.cgf(t + h) - d.cgf(t + 2 * h)) / (12.0 * h);
  }

  /// The maximizing t of a t - c(t); infinite at the boundary atoms.
  double optimizer(double a) const {
    if (a < ess_min_ || a > ess_max_) throw DomainError("optimizer: a outside the essential range");
    if (degenerate()) return 0.0;
    if (a == ess_min_) return -kInf;
    if (a == ess_max_) return kInf;
    if (!dist_.is_atomic()) return declared_optimizer(a);
    const auto& atoms = dist_.atoms();
    auto eval = [&](double t) {
      auto p = detail::cgf_point(atoms, t);
      return std::pair{p.mean, p.variance};
    };
    return solve_increasing(eval, a, 1e-12 * (1.0 + std::abs(a)), kMaxIterations).x;
  }

  /// I(a) = sup_t {a t - c(t)}; +inf outside [ess-min, ess-max].
  double rate(double a) const {
    if (std::isnan(a)) throw DomainError("rate: a is NaN");
    if (a < ess_min_ || a > ess_max_) return kInf;
    if (degenerate()) return 0.0;
    if (!dist_.is_atomic()) {
      // Sampler laws are treated as having no atom at a finite support end.
      if (a == ess_min_ || a == ess_max_) return kInf;
      const double t = optimizer(a);
      return std::max(0.0, a * t - cgf(t));
    }
    const auto& atoms = dist_.atoms();
    if (a == ess_min_) return -std::log(atoms.front().probability);
    if (a == ess_max_) return -std::log(atoms.back().probability);
    const double t = optimizer(a);
    return std::max(0.0, a * t - cgf(t));
  }

 private:
  // Bisection on c'(t) = a inside the declared validity range.
  double declared_optimizer(double a) const {
    const auto& d = *dist_.declared_cgf();
    auto step_out = [](double from, double bound, double dir, int k) {
      const double span = std::ldexp(1.0, k);
      return std::isfinite(bound) ? bound - (bound - from) * std::ldexp(1.0, -k) : from + dir * span;
    };
    double lo = 0.0, hi = 0.0;
    if (a > mean_) {
      for (int k = 0;; ++k) {
        if (k > 1100) throw NumericalError("rate: cannot bracket the optimizer");
        hi = step_out(0.0, d.t_max, 1.0, k);
        if (cgf_derivative(hi) >= a) break;
        lo = hi;
      }
    } else if (a < mean_) {
      for (int k = 0;; ++k) {
        if (k > 1100) throw NumericalError("rate: cannot bracket the optimizer");
        lo = step_out(0.0, d.t_min, -1.0, k);
        if (cgf_derivative(lo) <= a) break;
        hi = lo;
      }
    } else {
      return 0.0;
    }
    for (int it = 0; it < kMaxIterations && hi - lo > 1e-13 * (1.0 + std::abs(lo)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (cgf_derivative(mid) < a ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  ScalarDistribution dist_;
  double ess_min_ = 0.0, ess_max_ = 0.0, mean_ = 0.0;
};

inline double rate_function(const RateFunctionProfile& profile, double a) { return profile.rate(a); }

// ---------------------------------------------------------------------------
// Interval sets

struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool lo_closed = false;
  bool hi_closed = false;

  bool empty() const { return lo > hi || (lo == hi && !(lo_closed && hi_closed)); }
};

/// Finite union of real intervals kept in sorted, disjoint form.
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(std::vector<Interval> parts) : parts_(canonical(std::move(parts))) {}

  static IntervalSet whole_line() { return IntervalSet({Interval{}}); }
  static IntervalSet closed(double lo, double hi) { return IntervalSet({Interval{lo, hi, true, true}}); }

  /// Parses "[0.7,1]", "(0.2,0.5);[0.7,inf)" and similar. Infinite
  /// endpoints are written inf/-inf and are always open.
  static IntervalSet parse(const std::string& text) {
    std::vector<Interval> parts;
    std::stringstream ss(text);
    std::string piece;
    while (std::getline(ss, piece, ';')) {
      piece.erase(std::remove_if(piece.begin(), piece.end(), [](unsigned char c) { return std::isspace(c); }),
                  piece.end());
      if (piece.empty()) continue;
      if (piece.size() < 5) throw ParseError("malformed interval '" + piece + "'");
      const char open = piece.front(), close = piece.back();
      if ((open != '[' && open != '(') || (close != ']' && close != ')'))
        throw ParseError("interval must be bracketed: '" + piece + "'");
      const auto comma = piece.find(',');
      if (comma == std::string::npos) throw ParseError("interval needs a comma: '" + piece + "'");
      Interval iv;
      iv.lo = parse_endpoint(piece.substr(1, comma - 1));
      iv.hi = parse_endpoint(piece.substr(comma + 1, piece.size() - comma - 2));
      iv.lo_closed = open == '[' && std::isfinite(iv.lo);
      iv.hi_closed = close == ']' && std::isfinite(iv.hi);
      parts.push_back(iv);
    }
    return IntervalSet(std::move(parts));
  }

  const std::vector<Interval>& parts() const noexcept { return parts_; }
  bool empty() const noexcept { return parts_.empty(); }

  /// Membership; `tol` widens closed endpoints and shrinks open ones.
  bool contains(double x, double tol = 0.0) const {
    for (const auto& iv : parts_) {
      const bool above = iv.lo_closed ? x >= iv.lo - tol : x > iv.lo + tol;
      const bool below = iv.hi_closed ? x <= iv.hi + tol : x < iv.hi - tol;
      if (above && below) return true;
    }
    return false;
  }

  IntervalSet interior() const {
    std::vector<Interval> out;
    for (auto iv : parts_) {
      iv.lo_closed = iv.hi_closed = false;
      if (!iv.empty()) out.push_back(iv);
    }
    return IntervalSet(std::move(out));
  }

  IntervalSet closure() const {
    std::vector<Interval> out;
    for (auto iv : parts_) {
      iv.lo_closed = std::isfinite(iv.lo);
      iv.hi_closed = std::isfinite(iv.hi);
      out.push_back(iv);
    }
    return IntervalSet(std::move(out));
  }

  /// Shortest round-trip form, e.g. "[0.7,1];(2,inf)".
  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      const auto& iv = parts_[i];
      if (i) out += ';';
      out += iv.lo_closed ? '[' : '(';
      out += format_endpoint(iv.lo) + ',' + format_endpoint(iv.hi);
      out += iv.hi_closed ? ']' : ')';
    }
    return out;
  }

 private:
  static std::string format_endpoint(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }

  static double parse_endpoint(const std::string& s) {
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size() || !std::isfinite(v)) throw ParseError("bad endpoint '" + s + "'");
      return v;
    } catch (const std::logic_error&) {
      throw ParseError("bad endpoint '" + s + "'");
    }
  }

  static std::vector<Interval> canonical(std::vector<Interval> parts) {
    std::erase_if(parts, [](const Interval& iv) { return iv.empty(); });
    std::sort(parts.begin(), parts.end(), [](const Interval& a, const Interval& b) {
      if (a.lo != b.lo) return a.lo < b.lo;
      return a.lo_closed && !b.lo_closed;
    });
    std::vector<Interval> out;
    for (const auto& iv : parts) {
      if (!out.empty()) {
        auto& last = out.back();
        const bool overlaps = iv.lo < last.hi || (iv.lo == last.hi && (iv.lo_closed || last.hi_closed));
        if (overlaps) {
          if (iv.hi > last.hi) {
            last.hi = iv.hi;
            last.hi_closed = iv.hi_closed;
          } else if (iv.hi == last.hi) {
            last.hi_closed = last.hi_closed || iv.hi_closed;
          }
          continue;
        }
      }
      out.push_back(iv);
    }
    return out;
  }

  std::vector<Interval> parts_;
};

// ---------------------------------------------------------------------------
// Infima of the rate function over interval sets

struct RateInfimum {
  double value = kInf;
  std::optional<double> argmin;
};

namespace detail {

/// inf of the convex rate over one interval. For open ends the infimum is
/// the limit value, which continuity of I on its domain makes equal to the
/// endpoint value whenever the clipped interval has nonempty interior.
inline RateInfimum rate_inf_interval(const RateFunctionProfile& prof, const Interval& iv) {
  const double lo = std::max(iv.lo, prof.ess_min());
  const double hi = std::min(iv.hi, prof.ess_max());
  const bool closed_lo = iv.lo_closed || iv.lo < prof.ess_min();
  const bool closed_hi = iv.hi_closed || iv.hi > prof.ess_max();
  if (prof.degenerate()) {
    Interval probe = iv;
    if (IntervalSet({probe}).contains(prof.mean())) return {0.0, prof.mean()};
    return {};
  }
  if (lo > hi) return {};
  if (lo == hi) {
    if (!(closed_lo && closed_hi)) return {};
    return {prof.rate(lo), lo};
  }
  // Nonempty interior: convexity puts the minimizer at the mean or at the
  // endpoint nearest to it.
  const double a = std::clamp(prof.mean(), lo, hi);
  return {prof.rate(a), a};
}

}  // namespace detail

inline RateInfimum rate_infimum(const RateFunctionProfile& prof, const IntervalSet& gamma) {
  RateInfimum best;
  for (const auto& iv : gamma.parts()) {
    auto r = detail::rate_inf_interval(prof, iv);
    if (r.value < best.value) best = r;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Exact tails by lattice convolution

struct TailProbability {
  double probability = 0.0;
  double log_probability = -kInf;
};

/// Atom values as origin + step * index with integer indices.
struct Lattice {
  double origin = 0.0;
  double step = 1.0;
  std::vector<long long> index;
  long long span = 0;
};

namespace detail {

inline std::optional<Lattice> find_lattice(const std::vector<Atom>& atoms) {
  Lattice lat;
  lat.origin = atoms.front().value;
  if (atoms.size() == 1) {
    lat.index = {0};
    return lat;
  }
  const double dmax = atoms.back().value - lat.origin;
  const double tol = 1e-9 * dmax;
  double g = 0.0;
  for (std::size_t i = 1; i < atoms.size(); ++i) {
    double a = atoms[i].value - lat.origin, b = g;
    if (a < b) std::swap(a, b);
    while (b > tol) {
      double r = std::fmod(a, b);
      if (r > b - tol) r = 0.0;
      a = b;
      b = r;
    }
    g = a;
  }
  if (!(g > tol)) return std::nullopt;
  lat.step = g;
  for (const auto& at : atoms) {
    const double r = (at.value - lat.origin) / g;
    const double k = std::round(r);
    if (std::abs(r - k) > 1e-6) return std::nullopt;
    lat.index.push_back(static_cast<long long>(k));
  }
  lat.span = lat.index.back();
  return lat;
}

/// Lattice sum indices s in [0, n*span] whose mean lies in gamma, as a
/// predicate. Endpoints are snapped to the lattice when within 1e-9.
class LatticeMembership {
 public:
  LatticeMembership(const Lattice& lat, long long n, const IntervalSet& gamma) {
    for (const auto& iv : gamma.parts()) {
      Range r;
      r.lo = bound(lat, n, iv.lo, iv.lo_closed, true);
      r.hi = bound(lat, n, iv.hi, iv.hi_closed, false);
      ranges_.push_back(r);
    }
  }
  bool operator()(long long s) const {
    for (const auto& r : ranges_)
      if (s >= r.lo && s <= r.hi) return true;
    return false;
  }

 private:
  struct Range {
    long long lo, hi;
  };
  static long long bound(const Lattice& lat, long long n, double e, bool closed, bool lower) {
    constexpr long long kFar = std::numeric_limits<long long>::max() / 4;
    if (e == -kInf) return lower ? -kFar : -kFar;
    if (e == kInf) return lower ? kFar : kFar;
    const double r = (e - lat.origin) * static_cast<double>(n) / lat.step;
    if (std::abs(r) > 4e18) return r > 0 ? kFar : -kFar;
    const double k = std::round(r);
    if (std::abs(r - k) <= 1e-9 * std::max(1.0, std::abs(r))) {
      const auto ki = static_cast<long long>(k);
      if (lower) return closed ? ki : ki + 1;
      return closed ? ki : ki - 1;
    }
    return lower ? static_cast<long long>(std::ceil(r)) : static_cast<long long>(std::floor(r));
  }
  std::vector<Range> ranges_;
};

}  // namespace detail

inline constexpr std::uint64_t kMeanTailAtomCap = 10'000'000;      // n * atoms
inline constexpr std::uint64_t kMeanTailTableCap = 100'000'000;   // n * (n * span + 1)

/// P(M_n in gamma) exactly, by n-fold log-domain convolution over the
/// lattice generated by the atom values.
inline TailProbability exact_mean_tail(const ScalarDistribution& dist, int n, const IntervalSet& gamma) {
  if (n < 1) throw DomainError("exact_mean_tail: n must be >= 1");
  const auto& atoms = dist.atoms();
  const std::uint64_t nn = static_cast<std::uint64_t>(n);
  if (nn * atoms.size() > kMeanTailAtomCap)
    throw CapacityError("exact_mean_tail: n*atoms exceeds " + std::to_string(kMeanTailAtomCap) + "; use mc_mean_tail");
  auto lat = detail::find_lattice(atoms);
  if (!lat)
    throw CapacityError("exact_mean_tail: atom values do not lie on a resolvable lattice; use mc_mean_tail");
  const long double cells = static_cast<long double>(nn) * (static_cast<long double>(nn) * lat->span + 1.0L);
  if (cells > static_cast<long double>(kMeanTailTableCap))
    throw CapacityError("exact_mean_tail: convolution table exceeds " + std::to_string(kMeanTailTableCap) +
                        " cells; use mc_mean_tail");

  std::vector<double> logp(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) logp[i] = std::log(atoms[i].probability);

  std::vector<double> cur{0.0}, next;
  for (int step = 1; step <= n; ++step) {
    const long long width = static_cast<long long>(step) * lat->span + 1;
    next.assign(static_cast<std::size_t>(width), -kInf);
    const long long prev_width = static_cast<long long>(cur.size());
    for (long long s = 0; s < width; ++s) {
      double mx = -kInf;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        const long long src = s - lat->index[i];
        if (src < 0 || src >= prev_width) continue;
        mx = std::max(mx, cur[static_cast<std::size_t>(src)] + logp[i]);
      }
      if (mx == -kInf) continue;
      double acc = 0.0;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        const long long src = s - lat->index[i];
        if (src < 0 || src >= prev_width) continue;
        acc += std::exp(cur[static_cast<std::size_t>(src)] + logp[i] - mx);
      }
      next[static_cast<std::size_t>(s)] = mx + std::log(acc);
    }
    cur.swap(next);
  }

  detail::LatticeMembership member(*lat, n, gamma);
  LogAccumulator acc;
  for (std::size_t s = 0; s < cur.size(); ++s)
    if (member(static_cast<long long>(s))) acc.add(cur[s]);
  TailProbability out;
  out.log_probability = std::min(0.0, acc.value());
  out.probability = std::exp(out.log_probability);
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo tails

struct McEstimate {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::uint64_t replications = 0;
  double tilt = 0.0;  // exponential tilt used; 0 for plain sampling
};

struct McOptions {
  bool tilted = false;
  /// Overrides the automatically chosen tilt when set.
  std::optional<double> tilt;
  std::size_t partitions = 64;
};

namespace detail {

inline double membership_tolerance(double x) { return 1e-12 * std::max(1.0, std::abs(x)); }

/// Tilt at the rate-function optimizer of the closest point of the closure
/// of gamma; boundary atoms are pulled slightly inside the essential range.
inline double auto_tilt(const RateFunctionProfile& prof, const IntervalSet& gamma) {
  auto inf = rate_infimum(prof, gamma.closure());
  if (!inf.argmin || prof.degenerate()) return 0.0;
  double a = *inf.argmin;
  const double pad = 1e-3 * (prof.ess_max() - prof.ess_min());
  a = std::clamp(a, prof.ess_min() + pad, prof.ess_max() - pad);
  return prof.optimizer(a);
}

}  // namespace detail

/// Frequency estimate of P(M_n in gamma). Replications are split into a
/// fixed number of partitions with derived seeds, so the result is
/// independent of the worker count. With `tilted`, samples come from the
/// exponentially tilted law and carry likelihood-ratio weights.
inline McEstimate mc_mean_tail(const ScalarDistribution& dist, int n, const IntervalSet& gamma,
                               std::uint64_t replications, std::uint64_t seed, const McOptions& opts = {}) {
  if (replications < 1) throw DomainError("mc_mean_tail: replications must be >= 1");
  if (n < 1) throw DomainError("mc_mean_tail: n must be >= 1");

  double tilt = 0.0;
  std::vector<double> values;
  std::optional<CategoricalSampler> cat;
  double log_mgf = 0.0;
  if (dist.is_atomic()) {
    const auto& atoms = dist.atoms();
    if (opts.tilted) tilt = opts.tilt ? *opts.tilt : detail::auto_tilt(RateFunctionProfile(dist), gamma);
    if (tilt != 0.0) log_mgf = detail::cgf_point(atoms, tilt).value;
    // Tilted weights p_i e^{t x_i - c(t)}.
    std::vector<double> weights;
    for (const auto& a : atoms) {
      values.push_back(a.value);
      weights.push_back(std::exp(std::log(a.probability) + tilt * a.value - log_mgf));
    }
    cat.emplace(weights);
  } else if (opts.tilted) {
    throw DomainError("mc_mean_tail: tilted sampling needs an atomic distribution");
  }

  const std::size_t parts = std::max<std::size_t>(1, std::min<std::uint64_t>(opts.partitions, replications));
  struct Partial {
    double sum = 0.0, sum_sq = 0.0;
  };
  std::vector<Partial> partial(parts);
  run_partitions(parts, [&](std::size_t p) {
    const std::uint64_t count = replications / parts + (p < replications % parts ? 1 : 0);
    Rng rng(derive_seed(seed, "mean_tail/partition/" + std::to_string(p)));
    Partial acc;
    for (std::uint64_t r = 0; r < count; ++r) {
      double sum = 0.0;
      for (int j = 0; j < n; ++j) sum += cat ? values[(*cat)(rng)] : dist.draw()(rng);
      const double mean = sum / n;
      if (!gamma.contains(mean, detail::membership_tolerance(mean))) continue;
      const double w = tilt == 0.0 ? 1.0 : std::exp(-tilt * sum + n * log_mgf);
      acc.sum += w;
      acc.sum_sq += w * w;
    }
    partial[p] = acc;
  });

  double sum = 0.0, sum_sq = 0.0;
  for (const auto& p : partial) {
    sum += p.sum;
    sum_sq += p.sum_sq;
  }
  const double reps = static_cast<double>(replications);
  McEstimate out;
  out.replications = replications;
  out.tilt = tilt;
  out.estimate = sum / reps;
  if (tilt == 0.0) {
    out.standard_error = std::sqrt(std::max(0.0, out.estimate * (1.0 - out.estimate) / reps));
  } else if (replications > 1) {
    const double var = std::max(0.0, (sum_sq - reps * out.estimate * out.estimate) / (reps - 1.0));
    out.standard_error = std::sqrt(var / reps);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bound check

struct CramerOptions {
  std::uint64_t replications = 0;  // 0 disables Monte Carlo
  std::uint64_t seed = 0;
  bool tilted = false;
  /// Lower-bound slack constant C in C*log(n+1)/n; defaults to the atom
  /// count, or 1 for sampler laws.
  std::optional<double> lower_slack_constant;
};

struct CramerRow {
  int n = 0;
  std::optional<TailProbability> exact;
  std::optional<McEstimate> mc;
  double scaled_log_probability = -kInf;  // (1/n) log Q_n
  double upper_exponent = 0.0;            // (1/n) log of the Chernoff bound
  double lower_exponent = 0.0;            // -inf I over the interior minus slack
  bool upper_ok = false;
  bool lower_ok = false;
  bool bound_ok = false;
};

struct CramerReport {
  std::string gamma;
  double mean = 0.0;
  RateInfimum inf_closure;
  RateInfimum inf_interior;
  double slack_constant = 0.0;
  std::vector<CramerRow> rows;
  bool all_ok = true;
};

/// For each n: (1/n) log Q_n against the Cramer sandwich. The upper side is
/// the non-asymptotic Chernoff bound sum_J exp(-n inf_J I) over the
/// intervals J of the closure; the lower side allows slack C log(n+1)/n.
inline CramerReport cramer_bound_check(const ScalarDistribution& dist, const IntervalSet& gamma,
                                       const std::vector<int>& n_list, const CramerOptions& opts = {}) {
  RateFunctionProfile prof(dist);
  CramerReport rep;
  rep.gamma = gamma.to_string();
  rep.mean = prof.mean();
  const IntervalSet closed = gamma.closure();
  rep.inf_closure = rate_infimum(prof, closed);
  rep.inf_interior = rate_infimum(prof, gamma.interior());
  rep.slack_constant =
      opts.lower_slack_constant.value_or(dist.is_atomic() ? static_cast<double>(dist.atoms().size()) : 1.0);

  for (int n : n_list) {
    CramerRow row;
    row.n = n;
    if (dist.is_atomic()) {
      try {
        row.exact = exact_mean_tail(dist, n, gamma);
      } catch (const CapacityError&) {
        if (opts.replications == 0) throw;
      }
    } else if (opts.replications == 0) {
      throw DomainError("cramer_bound_check: sampler distributions need Monte Carlo replications");
    }
    if (opts.replications > 0)
      row.mc = mc_mean_tail(dist, n, gamma, opts.replications, derive_seed(opts.seed, "cramer/n/" + std::to_string(n)),
                            McOptions{opts.tilted, std::nullopt, 64});

    double log_q;
    if (row.exact) {
      log_q = row.exact->log_probability;
    } else {
      log_q = std::log(row.mc->estimate);
    }
    row.scaled_log_probability = log_q / n;

    LogAccumulator bound;
    for (const auto& iv : closed.parts()) bound.add(-n * detail::rate_inf_interval(prof, iv).value);
    row.upper_exponent = std::min(0.0, bound.value()) / n;
    row.upper_ok = log_q <= n * row.upper_exponent + std::log1p(1e-9);

    row.lower_exponent = -rep.inf_interior.value - rep.slack_constant * std::log(n + 1.0) / n;
    row.lower_ok = rep.inf_interior.value == kInf || row.scaled_log_probability >= row.lower_exponent;
    row.bound_ok = row.upper_ok && row.lower_ok;
    rep.all_ok = rep.all_ok && row.bound_ok;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace lds
