#pragma once

// Experiment configs, dispatch to the owning module and JSON reports.
// A report's "results" and "assertions" depend only on the config; run
// metadata lives under "provenance".

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lds/io.hpp"

namespace lds {

inline constexpr const char* kEngineVersion = "0.1.0";

struct ExperimentConfig {
  std::string kind;
  io::Json params;
  std::uint64_t seed = 0;
  std::optional<std::string> output;
};

struct Assertion {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Report {
  io::Json config;
  io::Json results;
  std::vector<Assertion> assertions;
  io::Json provenance;

  bool passed() const {
    for (const auto& a : assertions)
      if (!a.passed) return false;
    return true;
  }

  io::Json to_json() const {
    io::Json as = io::Json::array();
    for (const auto& a : assertions) {
      io::Json j{{"name", a.name}, {"passed", a.passed}};
      if (!a.detail.empty()) j["detail"] = a.detail;
      as.push_back(std::move(j));
    }
    return {{"config", config}, {"results", results}, {"assertions", std::move(as)}, {"passed", passed()},
            {"provenance", provenance}};
  }
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"cramer", "sanov", "escort", "waic", "select", "asymptotics", "stein"};
  return kinds;
}

namespace detail {

inline void require_keys(const io::Json& obj, const std::string& where, const std::vector<std::string>& required,
                         const std::vector<std::string>& optional) {
  if (!obj.is_object()) throw SchemaError(where + ": expected an object");
  for (const auto& k : required)
    if (!obj.contains(k)) throw SchemaError(where + ": missing \"" + k + "\"");
  std::set<std::string> allowed(required.begin(), required.end());
  allowed.insert(optional.begin(), optional.end());
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) throw SchemaError(where + ": unknown field \"" + k + "\"");
}

inline std::vector<double> epsilon_list(const io::Json& j) {
  std::vector<double> eps = j.is_array() ? io::reals_from_json(j, "eps") : std::vector<double>{io::real_from_json(j, "eps")};
  if (eps.empty()) throw SchemaError("eps: empty list");
  for (double e : eps)
    if (!(e > 0.0 && e < 1.0)) throw SchemaError("eps: every epsilon must lie in (0, 1)");
  return eps;
}

inline std::vector<int> sample_sizes(const io::Json& j) {
  auto n = io::int_list(j, "n");
  for (std::size_t i = 0; i < n.size(); ++i) {
    if (n[i] < 1) throw SchemaError("n: sample sizes must be >= 1");
    if (i && n[i] <= n[i - 1]) throw SchemaError("n: sample sizes must be increasing");
  }
  return n;
}

/// Required fields per kind, checked before any object is built.
inline void validate_params(const std::string& kind, const io::Json& p) {
  const std::string where = "params";
  if (kind == "cramer") {
    require_keys(p, where, {"distribution", "gamma", "n"}, {"replications", "tilted", "lower_slack_constant"});
  } else if (kind == "sanov") {
    require_keys(p, where, {"mu", "gamma", "n"}, {"mode", "replications", "lower_slack_constant"});
    const auto mode = p.value("mode", std::string("central"));
    if (mode != "central" && mode != "generic") throw SchemaError("params.mode: expected \"central\" or \"generic\"");
  } else if (kind == "escort") {
    require_keys(p, where, {"model", "data"}, {"truth"});
  } else if (kind == "waic") {
    require_keys(p, where, {"model", "data"}, {"truth"});
  } else if (kind == "select") {
    require_keys(p, where, {"models", "data"}, {"criterion", "truth"});
    const auto c = p.value("criterion", std::string("waic"));
    if (c != "waic" && c != "aic") throw SchemaError("params.criterion: expected \"waic\" or \"aic\"");
    if (!p.at("models").is_array()) throw SchemaError("params.models: expected an array");
  } else if (kind == "asymptotics") {
    require_keys(p, where, {"model", "truth", "n"}, {"replications", "lambda_expected", "order_expected"});
  } else if (kind == "stein") {
    require_keys(p, where, {"psi", "phi", "eps", "n"}, {"brute_force_n"});
  }
  if (p.contains("n")) sample_sizes(p.at("n"));
  if (p.contains("eps")) epsilon_list(p.at("eps"));
  if (p.contains("replications") && !io::is_nonnegative_integer(p.at("replications")))
    throw SchemaError("params.replications: expected a nonnegative integer");
}

}  // namespace detail

/// Schema validation of the top-level config and the kind's parameters.
inline ExperimentConfig parse_config(const io::Json& j) {
  detail::require_keys(j, "config", {"kind", "params"}, {"seed", "output"});
  if (!j.at("kind").is_string()) throw SchemaError("config.kind: expected a string");
  ExperimentConfig c;
  c.kind = j.at("kind").get<std::string>();
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end())
    throw SchemaError("config.kind: unknown experiment kind \"" + c.kind + "\"");
  if (j.contains("seed") && !io::is_nonnegative_integer(j.at("seed")))
    throw SchemaError("config.seed: expected a nonnegative integer");
  c.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("output")) {
    if (!j.at("output").is_string()) throw SchemaError("config.output: expected a path string");
    c.output = j.at("output").get<std::string>();
  }
  c.params = j.at("params");
  detail::validate_params(c.kind, c.params);
  return c;
}

inline io::Json config_to_json(const ExperimentConfig& c) {
  io::Json j{{"kind", c.kind}, {"seed", c.seed}, {"params", c.params}};
  if (c.output) j["output"] = *c.output;
  return j;
}

// ---------------------------------------------------------------------------
// Report fragments

inline io::Json tail_to_json(const TailProbability& t) {
  return {{"probability", io::real_to_json(t.probability)}, {"log_probability", io::real_to_json(t.log_probability)}};
}

inline io::Json mc_to_json(const McEstimate& m) {
  return {{"estimate", m.estimate}, {"standard_error", m.standard_error}, {"replications", m.replications},
          {"tilt", m.tilt}};
}

template <class Row>
io::Json bound_rows_to_json(const std::vector<Row>& rows) {
  io::Json out = io::Json::array();
  for (const auto& r : rows) {
    io::Json j{{"n", r.n},
               {"scaled_log_probability", io::real_to_json(r.scaled_log_probability)},
               {"upper_exponent", io::real_to_json(r.upper_exponent)},
               {"lower_exponent", io::real_to_json(r.lower_exponent)},
               {"upper_ok", r.upper_ok},
               {"lower_ok", r.lower_ok}};
    if (r.exact) j["exact"] = tail_to_json(*r.exact);
    if (r.mc) j["monte_carlo"] = mc_to_json(*r.mc);
    out.push_back(std::move(j));
  }
  return out;
}

inline io::Json cramer_report_to_json(const CramerReport& r) {
  auto inf = [](const RateInfimum& v) {
    io::Json j{{"value", io::real_to_json(v.value)}};
    if (v.argmin) j["argmin"] = io::real_to_json(*v.argmin);
    return j;
  };
  return {{"gamma", r.gamma},        {"mean", r.mean},
          {"inf_closure", inf(r.inf_closure)}, {"inf_interior", inf(r.inf_interior)},
          {"slack_constant", r.slack_constant}, {"rows", bound_rows_to_json(r.rows)},
          {"all_ok", r.all_ok}};
}

inline io::Json sanov_report_to_json(const SanovReport& r) {
  auto rate = [](const SanovRate& v) {
    io::Json j{{"value", io::real_to_json(v.value)}};
    if (v.argmin) j["argmin"] = io::reals_to_json(v.argmin->weights());
    if (v.tilt) j["tilt"] = *v.tilt;
    return j;
  };
  io::Json j{{"mode", r.mode == SanovMode::Central ? "central" : "generic"},
             {"inf_closure", rate(r.inf_closure)},
             {"inf_interior", rate(r.inf_interior)},
             {"slack_constant", r.slack_constant},
             {"rows", bound_rows_to_json(r.rows)},
             {"all_ok", r.all_ok}};
  if (r.bridge_value) {
    j["bridge_value"] = io::real_to_json(*r.bridge_value);
    j["bridge_ok"] = r.bridge_ok;
  }
  return j;
}

inline io::Json losses_to_json(const BayesLosses& l) {
  io::Json j{{"n", l.n}, {"training_loss", l.training_loss}};
  if (l.generalization_loss) {
    j["training_error"] = *l.training_error;
    j["generalization_loss"] = *l.generalization_loss;
    j["generalization_error"] = *l.generalization_error;
    j["generalization_error_state"] = *l.generalization_error_state;
    j["bridge_residual"] = l.bridge_residual;
    j["training_identity_residual"] = l.training_identity_residual;
  }
  return j;
}

inline io::Json waic_to_json(const WaicResult& w) {
  return {{"n", w.n}, {"beta", w.beta}, {"training_loss", w.training_loss},
          {"functional_variance", w.functional_variance}, {"waic", w.waic}};
}

inline io::Json selection_to_json(const SelectionReport& r) {
  io::Json ranking = io::Json::array();
  for (const auto& s : r.ranking)
    ranking.push_back({{"id", s.id}, {"dimension", s.dimension}, {"beta", s.beta}, {"n", s.n},
                       {"training_loss", s.training_loss}, {"functional_variance", s.functional_variance},
                       {"waic", s.waic}, {"aic", s.aic}, {"score", s.score}});
  return {{"criterion", r.criterion == Criterion::Waic ? "waic" : "aic"},
          {"ranking", std::move(ranking)},
          {"tie_breaks", r.tie_breaks},
          {"selected", r.selected},
          {"metadata",
           {{"selection_is_advisory", r.selection_is_advisory},
            {"aic_uses_log_likelihood", true}}}};
}

inline io::Json asymptotics_to_json(const AsymptoticsReport& r) {
  io::Json j{{"n", r.n_grid},
             {"replications", r.replications},
             {"beta", r.beta},
             {"mean_excess", io::reals_to_json(r.mean_excess)},
             {"residual", io::reals_to_json(r.residual)},
             {"lambda_hat", r.lambda_hat},
             {"lambda_se", r.lambda_se},
             {"intercept", r.intercept}};
  if (r.order_hat) j["order_hat"] = *r.order_hat;
  if (r.z_score) j["z_score"] = *r.z_score;
  return j;
}

inline io::Json stein_to_json(const SteinReport& r) {
  io::Json rows = io::Json::array();
  for (const auto& x : r.rows)
    rows.push_back({{"n", x.n}, {"epsilon", x.epsilon}, {"beta_star", x.beta_star},
                    {"log_beta_star", io::real_to_json(x.log_beta_star)}, {"e_n", x.exponent},
                    {"deviation", x.deviation}, {"bound", x.bound}, {"alpha", x.alpha}, {"ok", x.ok}});
  return {{"relative_entropy", r.relative_entropy},
          {"target_exponent", r.target_exponent},
          {"constant", r.constant},
          {"per_n", std::move(rows)},
          {"epsilon_spread", io::reals_to_json(r.epsilon_spread)},
          {"spread_nonincreasing", r.spread_nonincreasing}};
}

// ---------------------------------------------------------------------------
// Running

namespace detail {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Data source: {"labels": [...]}, {"file": path} or {"sample": {"n"}}
/// drawn from the truth with a seed derived from the experiment seed.
inline std::vector<std::size_t> load_data(const io::Json& src, const ParametricModel& model,
                                          const std::optional<TruthSpec>& truth, std::uint64_t seed) {
  if (src.is_array()) return load_data(io::Json{{"labels", src}}, model, truth, seed);
  if (!src.is_object()) throw SchemaError("data: expected an object");
  if (src.contains("labels")) {
    std::vector<std::size_t> out;
    for (const auto& v : src.at("labels")) {
      const std::string label = v.is_string() ? v.get<std::string>() : v.dump();
      const auto idx = model.alphabet().find(label);
      if (!idx) throw StructuralError("data: unknown label '" + label + "'");
      out.push_back(*idx);
    }
    if (out.empty()) throw SchemaError("data: labels are empty");
    return out;
  }
  if (src.contains("file")) return io::ingest_labels(src.at("file").get<std::string>(), model.alphabet()).indices;
  if (src.contains("sample")) {
    if (!truth) throw ConfigurationError("data: sampling requires a truth");
    const auto& s = src.at("sample");
    if (!s.contains("n") || !io::is_nonnegative_integer(s.at("n")) || s.at("n").get<std::size_t>() == 0)
      throw SchemaError("data.sample.n: expected a positive integer");
    Rng rng(derive_seed(seed, "data/sample"));
    return sample_truth(model, *truth, s.at("n").get<std::size_t>(), rng);
  }
  throw SchemaError("data: expected \"labels\", \"file\" or \"sample\"");
}

inline io::Json data_summary(const std::vector<std::size_t>& data, const ParametricModel& model) {
  io::Json counts = io::Json::object();
  const auto c = label_counts(data, model.alphabet_size());
  for (std::size_t i = 0; i < c.size(); ++i) counts[model.alphabet()[i]] = c[i];
  return {{"n", data.size()}, {"counts", std::move(counts)}};
}

/// Builds domain objects, turning their validation failures into schema
/// errors with the offending field named.
template <class F>
auto build(const std::string& field, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const SchemaError& e) {
    throw SchemaError("params." + field + ": " + e.what());
  } catch (const DomainError& e) {
    throw SchemaError("params." + field + ": " + e.what());
  } catch (const StructuralError& e) {
    throw SchemaError("params." + field + ": " + e.what());
  }
}

inline void run_cramer(const ExperimentConfig& c, Report& rep) {
  const auto& p = c.params;
  const auto dist = build("distribution", [&] { return io::distribution_from_json(p.at("distribution")); });
  const auto gamma = build("gamma", [&] { return io::interval_set_from_json(p.at("gamma")); });
  CramerOptions opts;
  opts.replications = p.value("replications", std::uint64_t{0});
  opts.seed = c.seed;
  opts.tilted = p.value("tilted", false);
  if (p.contains("lower_slack_constant")) opts.lower_slack_constant = io::number_field(p, "lower_slack_constant");
  const auto r = cramer_bound_check(dist, gamma, detail::sample_sizes(p.at("n")), opts);
  rep.results = cramer_report_to_json(r);
  bool up = true, low = true;
  for (const auto& row : r.rows) {
    up = up && row.upper_ok;
    low = low && row.lower_ok;
  }
  rep.assertions.push_back({"chernoff_upper_bound", up, ""});
  rep.assertions.push_back({"cramer_lower_bound", low, "slack C log(n+1)/n"});
}

inline void run_sanov(const ExperimentConfig& c, Report& rep) {
  const auto& p = c.params;
  const auto mu = build("mu", [&] { return io::measure_from_json(p.at("mu")); });
  const auto gamma = build("gamma", [&] { return io::constraint_from_json(p.at("gamma"), mu.size()); });
  SanovOptions opts;
  opts.replications = p.value("replications", std::uint64_t{0});
  opts.seed = c.seed;
  if (p.contains("lower_slack_constant")) opts.lower_slack_constant = io::number_field(p, "lower_slack_constant");
  const auto mode = p.value("mode", std::string("central")) == "generic" ? SanovMode::Generic : SanovMode::Central;
  const auto r = sanov_bound_check(mu, gamma, detail::sample_sizes(p.at("n")), mode, opts);
  rep.results = sanov_report_to_json(r);
  bool up = true, low = true;
  for (const auto& row : r.rows) {
    up = up && row.upper_ok;
    low = low && row.lower_ok;
  }
  rep.assertions.push_back({"method_of_types_upper_bound", up, ""});
  rep.assertions.push_back({"sanov_lower_bound", low, ""});
  if (r.bridge_value) rep.assertions.push_back({"bridge_identity", r.bridge_ok, "S(b(nu*)||psi) = D(nu*||mu)"});
}

struct ModelData {
  ParametricModel model;
  std::optional<TruthSpec> truth;
  std::vector<std::size_t> data;
};

inline ModelData model_and_data(const ExperimentConfig& c) {
  const auto& p = c.params;
  auto model = build("model", [&] { return io::model_from_json(p.at("model")); });
  std::optional<TruthSpec> truth;
  if (p.contains("truth")) {
    truth = build("truth", [&] { return io::truth_from_json(p.at("truth")); });
    build("truth", [&] {
      validate_truth(model, *truth);
      return 0;
    });
  }
  auto data = build("data", [&] { return load_data(p.at("data"), model, truth, c.seed); });
  return {std::move(model), std::move(truth), std::move(data)};
}

inline void run_escort(const ExperimentConfig& c, Report& rep) {
  const auto md = model_and_data(c);
  const auto post = escort_posterior(md.model, md.data);
  const auto ps = predictive_state(md.model, post);
  const auto pf = partition_function(md.model, md.data);
  const auto pred = predictive_density(md.model, post);
  double total = 0.0;
  for (double w : ps.state.central_measure().weights()) total += w;
  rep.results = {{"model", md.model.id()},
                 {"data", data_summary(md.data, md.model)},
                 {"posterior_weights", io::reals_to_json(post.weights)},
                 {"predictive_density", io::reals_to_json(pred)},
                 {"predictive_state", io::reals_to_json(ps.state.central_measure().weights())},
                 {"identity_residual", ps.identity_residual},
                 {"log_z", post.log_z},
                 {"stochastic_complexity", pf.f}};
  rep.assertions.push_back({"barycenter_identity", ps.identity_residual <= 1e-14,
                            "predictive state equals the posterior barycenter within 1e-14"});
  rep.assertions.push_back({"predictive_state_normalized", std::abs(total - 1.0) <= 1e-10, ""});
  if (md.truth) {
    const auto l = bayes_losses(md.model, md.data, md.truth);
    rep.results["losses"] = losses_to_json(l);
    rep.assertions.push_back({"bridge_identity", l.bridge_ok, "E_bg direct vs S(psi||predictive state) within 1e-12"});
  }
}

inline void run_waic(const ExperimentConfig& c, Report& rep) {
  const auto md = model_and_data(c);
  const auto w = waic(md.model, md.data);
  const auto a = aic(md.model, md.data);
  rep.results = {{"model", md.model.id()},
                 {"data", data_summary(md.data, md.model)},
                 {"waic", waic_to_json(w)},
                 {"aic", a.aic},
                 {"metadata", {{"aic_uses_log_likelihood", a.log_likelihood_form}}}};
  const bool identity = w.waic == w.training_loss + (w.beta / static_cast<double>(w.n)) * w.functional_variance;
  rep.assertions.push_back({"waic_identity", identity, "WAIC = L_bt + (beta/n) V"});
  rep.assertions.push_back({"functional_variance_nonnegative", w.functional_variance >= 0.0, ""});
  if (md.truth) {
    const auto l = bayes_losses(md.model, md.data, md.truth);
    rep.results["losses"] = losses_to_json(l);
    rep.assertions.push_back({"bridge_identity", l.bridge_ok, "E_bg direct vs S(psi||predictive state) within 1e-12"});
  }
}

inline void run_select(const ExperimentConfig& c, Report& rep) {
  const auto& p = c.params;
  std::vector<ParametricModel> models;
  for (std::size_t i = 0; i < p.at("models").size(); ++i)
    models.push_back(build("models[" + std::to_string(i) + "]", [&] { return io::model_from_json(p.at("models")[i]); }));
  if (models.empty()) throw StructuralError("select: no candidate models");
  std::optional<TruthSpec> truth;
  if (p.contains("truth")) truth = build("truth", [&] { return io::truth_from_json(p.at("truth")); });
  const auto data = build("data", [&] { return load_data(p.at("data"), models.front(), truth, c.seed); });
  const auto crit = p.value("criterion", std::string("waic")) == "aic" ? Criterion::Aic : Criterion::Waic;
  const auto r = select_model(models, data, crit);
  rep.results = selection_to_json(r);
  rep.results["data"] = data_summary(data, models.front());
  bool identity = true;
  for (const auto& s : r.ranking)
    identity = identity && s.waic == s.training_loss + (s.beta / static_cast<double>(s.n)) * s.functional_variance;
  rep.assertions.push_back({"waic_identity", identity, ""});
}

inline void run_asymptotics(const ExperimentConfig& c, Report& rep) {
  const auto& p = c.params;
  const auto model = build("model", [&] { return io::model_from_json(p.at("model")); });
  const auto truth = build("truth", [&] { return io::truth_from_json(p.at("truth")); });
  AsymptoticsOptions opts;
  opts.n_grid = detail::sample_sizes(p.at("n"));
  opts.replications = p.value("replications", std::size_t{200});
  opts.seed = c.seed;
  if (p.contains("lambda_expected")) opts.lambda_expected = io::number_field(p, "lambda_expected");
  if (p.contains("order_expected")) opts.order_expected = p.at("order_expected").get<int>();
  const auto r = build("asymptotics", [&] { return stochastic_complexity_asymptotics(model, truth, opts); });
  rep.results = asymptotics_to_json(r);
  if (r.z_score)
    rep.assertions.push_back({"lambda_within_three_standard_errors", std::abs(*r.z_score) <= 3.0, ""});
}

inline void run_stein(const ExperimentConfig& c, Report& rep) {
  const auto& p = c.params;
  const auto pair = build("psi/phi", [&] { return io::hypotheses_from_json(p.at("psi"), p.at("phi")); });
  const auto r = stein_exponent_check(pair, detail::epsilon_list(p.at("eps")), detail::sample_sizes(p.at("n")));
  rep.results = stein_to_json(r);
  bool bound = true, exact = true;
  for (const auto& row : r.rows) {
    bound = bound && row.ok;
    exact = exact && std::abs(row.alpha - row.epsilon) <= 1e-12;
  }
  rep.assertions.push_back({"stein_exponent_bound", bound, "|e_n + S| <= C/sqrt(n) (1 + |log eps|)"});
  rep.assertions.push_back({"randomization_exact", exact, "alpha_n = eps within 1e-12"});
  if (r.epsilons.size() > 1 && r.rows.size() > r.epsilons.size())
    rep.assertions.push_back({"epsilon_spread_nonincreasing", r.spread_nonincreasing, ""});
  if (p.contains("brute_force_n")) {
    const int max_n = p.at("brute_force_n").get<int>();
    bool ok = true;
    for (int n = 1; n <= max_n; ++n)
      for (double eps : r.epsilons) ok = ok && brute_force_min_beta(pair, n, eps).ok;
    rep.assertions.push_back({"np_brute_force_optimality", ok, ""});
  }
}

}  // namespace detail

inline Report run_experiment(const ExperimentConfig& c) {
  Report rep;
  rep.config = config_to_json(c);
  const std::string started = detail::utc_timestamp();
  if (c.kind == "cramer") detail::run_cramer(c, rep);
  else if (c.kind == "sanov") detail::run_sanov(c, rep);
  else if (c.kind == "escort") detail::run_escort(c, rep);
  else if (c.kind == "waic") detail::run_waic(c, rep);
  else if (c.kind == "select") detail::run_select(c, rep);
  else if (c.kind == "asymptotics") detail::run_asymptotics(c, rep);
  else if (c.kind == "stein") detail::run_stein(c, rep);
  else throw SchemaError("unknown experiment kind \"" + c.kind + "\"");
  rep.provenance = {{"engine_version", kEngineVersion},
                    {"seed", c.seed},
                    {"threads", worker_count()},
                    {"started_at", started},
                    {"finished_at", detail::utc_timestamp()}};
  return rep;
}

inline Report run_experiment(const io::Json& config) { return run_experiment(parse_config(config)); }

/// Reads a config file; a relative params.data.file is taken relative to
/// the config's directory.
inline io::Json load_config_file(const std::string& path) {
  io::Json j = io::read_json_file(path);
  if (j.is_object() && j.contains("params") && j["params"].is_object() && j["params"].contains("data")) {
    auto& data = j["params"]["data"];
    if (data.is_object() && data.contains("file") && data["file"].is_string()) {
      const std::filesystem::path file = data["file"].get<std::string>();
      if (file.is_relative()) data["file"] = (std::filesystem::path(path).parent_path() / file).lexically_normal().string();
    }
  }
  return j;
}

/// Writes the report to path (serialized per call).
inline void write_report(const Report& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigurationError("cannot write " + path);
  out << rep.to_json().dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// KMS-mixture demo

struct KmsGrid {
  std::vector<double> betas{0.5, 1.0, 1.5, 2.0, 2.5};
  std::vector<double> mus{-1.0, -0.5, 0.0, 0.5, 1.0};
  double width = 0.5;
};

/// Gaussian bump over the (beta, mu) label grid centered at (b0, m0),
/// normalized as a probability vector (m = 1 on every label).
inline std::vector<double> kms_bump(const KmsGrid& g, double b0, double m0) {
  std::vector<double> w;
  double total = 0.0;
  for (double b : g.betas)
    for (double m : g.mus) {
      const double v = std::exp(-((b - b0) * (b - b0) + (m - m0) * (m - m0)) / (2.0 * g.width * g.width));
      w.push_back(v);
      total += v;
    }
  for (auto& v : w) v /= total;
  return w;
}

inline std::vector<std::string> kms_labels(const KmsGrid& g) {
  std::vector<std::string> labels;
  for (double b : g.betas)
    for (double m : g.mus) {
      std::ostringstream os;
      os << "beta=" << b << "/mu=" << m;
      labels.push_back(os.str());
    }
  return labels;
}

/// Model of states over a 5x5 grid of KMS parameters: one Gaussian-bump
/// weight family per grid center, uniform prior.
inline io::Json kms_model_json(const KmsGrid& g = {}, const std::vector<std::pair<double, double>>& exclude = {}) {
  io::Json grid = io::Json::array();
  std::vector<std::pair<double, double>> centers;
  for (double b : g.betas)
    for (double m : g.mus)
      if (std::find(exclude.begin(), exclude.end(), std::make_pair(b, m)) == exclude.end()) centers.emplace_back(b, m);
  for (const auto& [b, m] : centers)
    grid.push_back({{"theta", {b, m}}, {"prior", 1.0 / centers.size()}, {"density", kms_bump(g, b, m)}});
  return {{"id", exclude.empty() ? "kms_bumps" : "kms_bumps_reduced"},
          {"alphabet", kms_labels(g)},
          {"m", std::vector<double>(g.betas.size() * g.mus.size(), 1.0)},
          {"theta_grid", std::move(grid)},
          {"beta", 1.0},
          {"dimension", 2}};
}

/// Ready-to-run escort or waic config on the KMS demo: the truth is the
/// fixed mixture 0.6 bump(1.0, 0) + 0.4 bump(2.0, 0.5) and the data are
/// n draws from it.
inline io::Json kms_demo_config(const std::string& kind = "escort", std::size_t n = 200, std::uint64_t seed = 2024) {
  if (kind != "escort" && kind != "waic") throw SchemaError("kms demo: kind must be \"escort\" or \"waic\"");
  const KmsGrid g;
  const auto a = kms_bump(g, 1.0, 0.0), b = kms_bump(g, 2.0, 0.5);
  std::vector<double> q(a.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = 0.6 * a[i] + 0.4 * b[i];
  double total = 0.0;
  for (double v : q) total += v;
  for (auto& v : q) v /= total;
  return {{"kind", kind},
          {"seed", seed},
          {"params",
           {{"model", kms_model_json(g)}, {"truth", {{"q", q}, {"seed", seed}}}, {"data", {{"sample", {{"n", n}}}}}}}};
}

}  // namespace lds
