#pragma once

// JSON codecs for the engine's domain objects and CSV sample ingestion.
// Extended reals are written as numbers or the strings "inf" / "-inf".

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "lds/cramer.hpp"
#include "lds/errors.hpp"
#include "lds/escort.hpp"
#include "lds/measures.hpp"
#include "lds/sanov.hpp"
#include "lds/selection.hpp"
#include "lds/stein.hpp"

namespace lds::io {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Scalars

inline Json real_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  if (std::isnan(v)) return "nan";
  return v;
}

inline double real_from_json(const Json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw SchemaError(what + ": expected a number or \"inf\"/\"-inf\"");
}

inline Json reals_to_json(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(real_to_json(x));
  return a;
}

inline std::vector<double> reals_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw SchemaError(what + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(real_from_json(v, what));
  return out;
}

/// Finite number with an optional open/closed range check.
inline double number_field(const Json& obj, const std::string& key, std::optional<double> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    throw SchemaError("missing field \"" + key + "\"");
  }
  const double v = real_from_json(obj.at(key), key);
  if (!std::isfinite(v)) throw SchemaError("field \"" + key + "\" must be finite");
  return v;
}

inline bool is_nonnegative_integer(const Json& j) {
  return j.is_number_unsigned() || (j.is_number_integer() && j.get<long long>() >= 0);
}

inline std::vector<int> int_list(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw SchemaError(what + ": expected a nonempty array of integers");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw SchemaError(what + ": expected integers");
    out.push_back(v.get<int>());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alphabets and measures

inline Alphabet alphabet_from_json(const Json& j) {
  if (is_nonnegative_integer(j)) return Alphabet::indexed(j.get<std::size_t>());
  if (!j.is_array()) throw SchemaError("alphabet: expected a size or an array of labels");
  std::vector<std::string> labels;
  for (const auto& v : j) {
    if (v.is_string()) labels.push_back(v.get<std::string>());
    else if (v.is_number_integer()) labels.push_back(std::to_string(v.get<long long>()));
    else throw SchemaError("alphabet: labels must be strings or integers");
  }
  return Alphabet(std::move(labels));
}

inline Json alphabet_to_json(const Alphabet& a) {
  Json out = Json::array();
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(a[i]);
  return out;
}

/// {"alphabet": [...], "weights": [...]} or a bare weight array.
inline DiscreteMeasure measure_from_json(const Json& j, bool probability = true) {
  std::vector<double> w;
  std::optional<Alphabet> alpha;
  if (j.is_array()) {
    w = reals_from_json(j, "weights");
  } else if (j.is_object()) {
    if (!j.contains("weights")) throw SchemaError("measure: missing \"weights\"");
    w = reals_from_json(j.at("weights"), "weights");
    if (j.contains("alphabet")) alpha = alphabet_from_json(j.at("alphabet"));
  } else {
    throw SchemaError("measure: expected an object or an array");
  }
  for (double v : w)
    if (!(v >= 0.0) || !std::isfinite(v)) throw SchemaError("measure: weights must be finite and >= 0");
  if (!alpha) alpha = Alphabet::indexed(w.size());
  if (alpha->size() != w.size()) throw SchemaError("measure: alphabet and weights differ in length");
  return probability ? DiscreteMeasure::probability(*alpha, std::move(w)) : DiscreteMeasure(*alpha, std::move(w));
}

inline Json measure_to_json(const DiscreteMeasure& m) {
  return {{"alphabet", alphabet_to_json(m.alphabet())},
          {"weights", reals_to_json(m.weights())}};
}

// ---------------------------------------------------------------------------
// Scalar distributions

namespace detail {

inline double standard_normal(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

}  // namespace detail

/// {"type": "bernoulli", "p"}, {"type": "atomic", "values", "probabilities"},
/// {"type": "point_mass", "value"}, {"type": "normal", "mean", "sd"} or
/// {"type": "exponential", "rate"}. The last two are sampler-backed.
inline ScalarDistribution distribution_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
    throw SchemaError("distribution: expected an object with a \"type\"");
  const auto type = j.at("type").get<std::string>();
  if (type == "bernoulli") {
    const double p = number_field(j, "p");
    if (p < 0.0 || p > 1.0) throw SchemaError("distribution: p must lie in [0, 1]");
    return ScalarDistribution::bernoulli(p);
  }
  if (type == "point_mass") return ScalarDistribution::point_mass(number_field(j, "value"));
  if (type == "atomic") {
    if (!j.contains("values") || !j.contains("probabilities"))
      throw SchemaError("distribution: atomic needs \"values\" and \"probabilities\"");
    const auto v = reals_from_json(j.at("values"), "values");
    const auto p = reals_from_json(j.at("probabilities"), "probabilities");
    if (v.size() != p.size()) throw SchemaError("distribution: values and probabilities differ in length");
    std::vector<Atom> atoms;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i])) throw SchemaError("distribution: atom values must be finite");
      if (!(p[i] >= 0.0)) throw SchemaError("distribution: negative probability");
      atoms.push_back({v[i], p[i]});
    }
    return ScalarDistribution::atomic(std::move(atoms));
  }
  if (type == "normal") {
    const double mean = number_field(j, "mean"), sd = number_field(j, "sd");
    if (!(sd > 0.0)) throw SchemaError("distribution: sd must be > 0");
    return ScalarDistribution::sampler([=](Rng& rng) { return mean + sd * detail::standard_normal(rng); },
                                       ScalarDistribution::DeclaredCgf{
                                           [=](double t) { return mean * t + 0.5 * sd * sd * t * t; }, -kInf, kInf});
  }
  if (type == "exponential") {
    const double rate = number_field(j, "rate");
    if (!(rate > 0.0)) throw SchemaError("distribution: rate must be > 0");
    return ScalarDistribution::sampler([=](Rng& rng) { return rng.exponential() / rate; },
                                       ScalarDistribution::DeclaredCgf{
                                           [=](double t) { return -std::log1p(-t / rate); }, -kInf, rate, 0.0, kInf});
  }
  throw SchemaError("distribution: unknown type \"" + type + "\"");
}

inline IntervalSet interval_set_from_json(const Json& j) {
  if (!j.is_string()) throw SchemaError("gamma: expected an interval string such as \"[0.7,1]\"");
  try {
    return IntervalSet::parse(j.get<std::string>());
  } catch (const ParseError& e) {
    throw SchemaError(std::string("gamma: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Measure constraint sets

/// {"type": "moment", "f", "c", "strict"}, {"type": "tv_ball", "center",
/// "radius", "strict"} or {"type": "list", "measures"}.
inline MeasureConstraintSet constraint_from_json(const Json& j, std::size_t k) {
  if (!j.is_object() || !j.contains("type")) throw SchemaError("constraint: expected an object with a \"type\"");
  const auto type = j.at("type").get<std::string>();
  const bool strict = j.value("strict", false);
  if (type == "moment") {
    if (!j.contains("f")) throw SchemaError("constraint: moment needs \"f\"");
    return MeasureConstraintSet(MomentHalfSpace{reals_from_json(j.at("f"), "f"), number_field(j, "c"), strict}, k);
  }
  if (type == "tv_ball") {
    if (!j.contains("center")) throw SchemaError("constraint: tv_ball needs \"center\"");
    return MeasureConstraintSet(
        TotalVariationBall{reals_from_json(j.at("center"), "center"), number_field(j, "radius"), strict}, k);
  }
  if (type == "list") {
    if (!j.contains("measures") || !j.at("measures").is_array())
      throw SchemaError("constraint: list needs \"measures\"");
    std::vector<std::vector<double>> ms;
    for (const auto& m : j.at("measures")) ms.push_back(reals_from_json(m, "measures"));
    return MeasureConstraintSet(ExplicitMeasures{std::move(ms)}, k);
  }
  throw SchemaError("constraint: unknown type \"" + type + "\"");
}

// ---------------------------------------------------------------------------
// Models, truths, hypothesis pairs

/// Tabulated model {"id", "alphabet", "m", "theta_grid": [{"theta",
/// "prior", "density"}], "beta", "dimension"}, or a Bernoulli family
/// {"family": "bernoulli_grid", "thetas" | "points", "beta", "id",
/// "dimension"} with a uniform prior; "points": P means theta = i/(P+1).
inline ParametricModel model_from_json(const Json& j) {
  if (!j.is_object()) throw SchemaError("model: expected an object");
  const double beta = number_field(j, "beta", 1.0);
  if (!(beta > 0.0)) throw SchemaError("model: beta must be > 0");
  const std::string id = j.value("id", std::string("model"));
  std::optional<std::size_t> dim;
  if (j.contains("dimension")) {
    if (!is_nonnegative_integer(j.at("dimension"))) throw SchemaError("model: dimension must be a nonnegative integer");
    dim = j.at("dimension").get<std::size_t>();
  }
  if (j.value("family", std::string()) == "bernoulli_grid") {
    std::vector<double> thetas;
    if (j.contains("points")) {
      if (!is_nonnegative_integer(j.at("points"))) throw SchemaError("model: points must be a positive integer");
      const auto points = j.at("points").get<std::size_t>();
      for (std::size_t i = 1; i <= points; ++i) thetas.push_back(static_cast<double>(i) / static_cast<double>(points + 1));
    } else if (j.contains("thetas")) {
      thetas = reals_from_json(j.at("thetas"), "thetas");
    } else {
      throw SchemaError("model: bernoulli_grid needs \"thetas\" or \"points\"");
    }
    if (thetas.empty()) throw SchemaError("model: thetas is empty");
    std::vector<GridPoint> grid;
    for (double t : thetas) {
      if (!(t > 0.0 && t < 1.0)) throw SchemaError("model: Bernoulli parameters must lie in (0, 1)");
      grid.push_back({{t}, 1.0 / thetas.size(), {1.0 - t, t}});
    }
    return ParametricModel(Alphabet({"0", "1"}), {1.0, 1.0}, std::move(grid), beta, id, dim);
  }
  if (j.contains("family")) throw SchemaError("model: unknown family \"" + j.at("family").get<std::string>() + "\"");
  if (!j.contains("alphabet") || !j.contains("theta_grid")) throw SchemaError("model: needs \"alphabet\" and \"theta_grid\"");
  Alphabet alpha = alphabet_from_json(j.at("alphabet"));
  std::vector<double> m = j.contains("m") ? reals_from_json(j.at("m"), "m") : std::vector<double>(alpha.size(), 1.0);
  for (double v : m)
    if (!(v >= 0.0) || !std::isfinite(v)) throw SchemaError("model: m must be finite and >= 0");
  std::vector<GridPoint> grid;
  for (const auto& g : j.at("theta_grid")) {
    GridPoint p;
    if (g.contains("theta")) p.theta = g.at("theta").is_array() ? reals_from_json(g.at("theta"), "theta")
                                                                 : std::vector<double>{number_field(g, "theta")};
    p.prior = number_field(g, "prior");
    if (p.prior < 0.0) throw SchemaError("model: prior weights must be >= 0");
    p.density = reals_from_json(g.at("density"), "density");
    for (double v : p.density)
      if (!(v >= 0.0)) throw SchemaError("model: densities must be >= 0");
    grid.push_back(std::move(p));
  }
  return ParametricModel(std::move(alpha), std::move(m), std::move(grid), beta, id, dim);
}

inline Json model_to_json(const ParametricModel& model) {
  Json grid = Json::array();
  for (const auto& g : model.grid())
    grid.push_back({{"theta", reals_to_json(g.theta)}, {"prior", g.prior}, {"density", reals_to_json(g.density)}});
  return {{"id", model.id()},
          {"alphabet", alphabet_to_json(model.alphabet())},
          {"m", reals_to_json(model.m())},
          {"theta_grid", std::move(grid)},
          {"beta", model.beta()},
          {"dimension", model.dimension()}};
}

inline TruthSpec truth_from_json(const Json& j) {
  if (j.is_array()) return {reals_from_json(j, "q"), 0};
  if (!j.is_object() || !j.contains("q")) throw SchemaError("truth: expected {\"q\": [...]}");
  TruthSpec t{reals_from_json(j.at("q"), "q"), j.value("seed", std::uint64_t{0})};
  for (double v : t.q)
    if (!(v >= 0.0) || !std::isfinite(v)) throw SchemaError("truth: q must be finite and >= 0");
  return t;
}

inline Json truth_to_json(const TruthSpec& t) { return {{"q", reals_to_json(t.q)}, {"seed", t.seed}}; }

inline HypothesisPair hypotheses_from_json(const Json& psi, const Json& phi) {
  return HypothesisPair(measure_from_json(psi), measure_from_json(phi));
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path + ": invalid JSON: " + e.what());
  }
}

/// Inline JSON text or, when the argument names a readable file, its contents.
inline Json json_argument(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[' || arg[first] == '"')) {
    try {
      return Json::parse(arg);
    } catch (const Json::parse_error& e) {
      throw SchemaError(std::string("invalid JSON argument: ") + e.what());
    }
  }
  return read_json_file(arg);
}

// ---------------------------------------------------------------------------
// Sample ingestion

struct LabelSamples {
  Alphabet alphabet;
  std::vector<std::size_t> indices;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(trim(part));
  return out;
}

}  // namespace detail

/// One label per line. An optional "# alphabet: a,b,c" header fixes the
/// alphabet; otherwise `alphabet` is used, and failing both the labels are
/// indexed in order of first appearance. Other '#' lines are comments.
inline LabelSamples parse_labels(std::istream& in, std::optional<Alphabet> alphabet = std::nullopt) {
  std::vector<std::string> seen;
  std::unordered_map<std::string, std::size_t> seen_index;
  std::vector<std::size_t> indices;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (!t.empty() && t[0] == '#') {
      const std::string body = detail::trim(t.substr(1));
      if (body.rfind("alphabet:", 0) == 0) {
        if (!indices.empty()) throw ParseError("alphabet header must precede the samples", lineno);
        Alphabet header(detail::split_commas(body.substr(9)));
        if (alphabet && !(header == *alphabet)) throw StructuralError("line " + std::to_string(lineno) + ": alphabet header differs from the supplied alphabet");
        alphabet = std::move(header);
      }
      continue;
    }
    if (t.empty()) throw ParseError("empty sample", lineno);
    if (t.find(',') != std::string::npos) throw ParseError("expected one sample per line", lineno);
    if (alphabet) {
      const auto idx = alphabet->find(t);
      if (!idx) throw StructuralError("line " + std::to_string(lineno) + ": unknown label '" + t + "'");
      indices.push_back(*idx);
    } else {
      auto it = seen_index.find(t);
      if (it == seen_index.end()) {
        it = seen_index.emplace(t, seen.size()).first;
        seen.push_back(t);
      }
      indices.push_back(it->second);
    }
  }
  if (indices.empty()) throw ParseError("no samples");
  return {alphabet ? *alphabet : Alphabet(seen), std::move(indices)};
}

inline LabelSamples ingest_labels(const std::string& path, std::optional<Alphabet> alphabet = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path);
  return parse_labels(in, std::move(alphabet));
}

/// One finite decimal number per line; '#' lines are comments.
inline std::vector<double> parse_reals(std::istream& in) {
  std::vector<double> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (!t.empty() && t[0] == '#') continue;
    double v = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    const auto res = std::from_chars(begin, end, v);
    if (t.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
      throw ParseError("malformed number '" + t + "'", lineno);
    out.push_back(v);
  }
  if (out.empty()) throw ParseError("no samples");
  return out;
}

inline std::vector<double> ingest_reals(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open " + path);
  return parse_reals(in);
}

}  // namespace lds::io
