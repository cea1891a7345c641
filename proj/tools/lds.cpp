// Command-line front end: each subcommand assembles an experiment config,
// runs it and prints the JSON report.
//
// Exit codes: 0 all assertions pass, 1 an assertion failed, 2 usage,
// schema or input error, 3 capacity exceeded.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lds/lds.hpp"

namespace {

using lds::io::Json;

constexpr int kExitAssertion = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCapacity = 3;

struct Emit {
  std::string output;
  bool results_only = false;
};

void add_emit_options(CLI::App* cmd, Emit& emit) {
  cmd->add_option("-o,--output", emit.output, "Write the report to this file instead of stdout");
  cmd->add_flag("--results-only", emit.results_only, "Print only the results object");
}

int finish(const lds::Report& rep, const Emit& emit) {
  const Json out = emit.results_only ? rep.results : rep.to_json();
  if (emit.output.empty()) {
    std::cout << out.dump(2) << '\n';
  } else {
    if (emit.results_only) {
      std::ofstream f(emit.output);
      if (!f) throw lds::ConfigurationError("cannot write " + emit.output);
      f << out.dump(2) << '\n';
    } else {
      lds::write_report(rep, emit.output);
    }
  }
  return rep.passed() ? 0 : kExitAssertion;
}

int run_config(const Json& config, Emit emit) {
  const auto cfg = lds::parse_config(config);
  if (emit.output.empty() && cfg.output) emit.output = *cfg.output;
  return finish(lds::run_experiment(cfg), emit);
}

Json data_source(const std::string& file, const std::vector<std::string>& labels,
                 std::optional<std::size_t> sample_n) {
  if (!file.empty()) return {{"file", file}};
  if (!labels.empty()) return {{"labels", labels}};
  if (sample_n) return {{"sample", {{"n", *sample_n}}}};
  throw CLI::ValidationError("data", "one of --data, --labels or --sample is required");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large-deviation, escort-Bayes and Stein-exponent engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lds::kEngineVersion));
  Emit emit;
  std::uint64_t seed = 0;
  std::vector<int> n_list;
  std::uint64_t reps = 0;
  std::function<int()> action;

  // cramer
  auto* cramer = app.add_subcommand("cramer", "Cramer bound check for the sample mean");
  std::string dist, gamma;
  bool tilted = false;
  std::optional<double> slack;
  cramer->add_option("--dist", dist, "Distribution JSON (inline or file)")->required();
  cramer->add_option("--gamma", gamma, "Interval set, e.g. \"[0.7,1]\"")->required();
  cramer->add_option("--n", n_list, "Sample sizes")->delimiter(',')->required();
  cramer->add_option("--reps", reps, "Monte Carlo replications (0 = exact only)");
  cramer->add_option("--seed", seed, "Root seed");
  cramer->add_option("--slack", slack, "Lower-bound slack constant C");
  cramer->add_flag("--tilted", tilted, "Use exponentially tilted importance sampling");
  add_emit_options(cramer, emit);
  cramer->callback([&] {
    action = [&] {
      Json p{{"distribution", lds::io::json_argument(dist)}, {"gamma", gamma}, {"n", n_list},
             {"replications", reps}, {"tilted", tilted}};
      if (slack) p["lower_slack_constant"] = *slack;
      return run_config({{"kind", "cramer"}, {"seed", seed}, {"params", p}}, emit);
    };
  });

  // sanov
  auto* sanov = app.add_subcommand("sanov", "Sanov bound check for empirical measures");
  std::string mu, constraint, mode = "central";
  sanov->add_option("--state,--mu", mu, "Reference measure JSON (inline or file)")->required();
  sanov->add_option("--gamma", constraint, "Constraint set JSON (inline or file)")->required();
  sanov->add_option("--n", n_list, "Sample sizes")->delimiter(',')->required();
  sanov->add_option("--mode", mode, "central or generic")->check(CLI::IsMember({"central", "generic"}));
  sanov->add_option("--reps", reps, "Monte Carlo replications");
  sanov->add_option("--seed", seed, "Root seed");
  add_emit_options(sanov, emit);
  sanov->callback([&] {
    action = [&] {
      Json p{{"mu", lds::io::json_argument(mu)}, {"gamma", lds::io::json_argument(constraint)}, {"n", n_list},
             {"mode", mode}, {"replications", reps}};
      return run_config({{"kind", "sanov"}, {"seed", seed}, {"params", p}}, emit);
    };
  });

  // escort / waic share their inputs
  std::string model, truth, data_file;
  std::vector<std::string> labels;
  std::optional<std::size_t> sample_n;
  auto add_model_inputs = [&](CLI::App* cmd) {
    cmd->add_option("--model", model, "Model JSON (inline or file)")->required();
    cmd->add_option("--data", data_file, "CSV file with one label per line");
    cmd->add_option("--labels", labels, "Inline labels")->delimiter(',');
    cmd->add_option("--sample", sample_n, "Draw this many labels from the truth");
    cmd->add_option("--truth", truth, "Truth JSON {\"q\": [...]} (inline or file)");
    cmd->add_option("--seed", seed, "Root seed");
    add_emit_options(cmd, emit);
  };
  auto model_params = [&] {
    Json p{{"model", lds::io::json_argument(model)}, {"data", data_source(data_file, labels, sample_n)}};
    if (!truth.empty()) p["truth"] = lds::io::json_argument(truth);
    return p;
  };
  auto* escort = app.add_subcommand("escort", "Escort posterior, predictive distribution and state");
  add_model_inputs(escort);
  escort->callback([&] {
    action = [&] { return run_config({{"kind", "escort"}, {"seed", seed}, {"params", model_params()}}, emit); };
  });
  auto* waic = app.add_subcommand("waic", "WAIC, AIC and Bayes losses");
  add_model_inputs(waic);
  waic->callback([&] {
    action = [&] { return run_config({{"kind", "waic"}, {"seed", seed}, {"params", model_params()}}, emit); };
  });

  // select
  auto* select = app.add_subcommand("select", "Rank candidate models by an information criterion");
  std::vector<std::string> models;
  std::string criterion = "waic";
  select->add_option("--models", models, "Model JSON files")->delimiter(',')->required();
  select->add_option("--criterion", criterion, "waic or aic")->check(CLI::IsMember({"waic", "aic"}));
  select->add_option("--data", data_file, "CSV file with one label per line");
  select->add_option("--labels", labels, "Inline labels")->delimiter(',');
  select->add_option("--sample", sample_n, "Draw this many labels from the truth");
  select->add_option("--truth", truth, "Truth JSON (needed with --sample)");
  select->add_option("--seed", seed, "Root seed");
  add_emit_options(select, emit);
  select->callback([&] {
    action = [&] {
      Json ms = Json::array();
      for (const auto& m : models) ms.push_back(lds::io::json_argument(m));
      Json p{{"models", ms}, {"criterion", criterion}, {"data", data_source(data_file, labels, sample_n)}};
      if (!truth.empty()) p["truth"] = lds::io::json_argument(truth);
      return run_config({{"kind", "select"}, {"seed", seed}, {"params", p}}, emit);
    };
  });

  // asymptotics
  auto* asym = app.add_subcommand("asymptotics", "Fit the log n coefficient of the stochastic complexity");
  std::optional<double> lambda_expected;
  std::optional<int> order_expected;
  std::uint64_t asym_reps = 200;
  asym->add_option("--model", model, "Model JSON (inline or file)")->required();
  asym->add_option("--truth", truth, "Truth JSON (inline or file)")->required();
  asym->add_option("--n", n_list, "Sample sizes")->delimiter(',')->required();
  asym->add_option("--reps", asym_reps, "Replications (>= 30)");
  asym->add_option("--lambda", lambda_expected, "Expected learning coefficient");
  asym->add_option("--order", order_expected, "Expected order m");
  asym->add_option("--seed", seed, "Root seed");
  add_emit_options(asym, emit);
  asym->callback([&] {
    action = [&] {
      Json p{{"model", lds::io::json_argument(model)}, {"truth", lds::io::json_argument(truth)}, {"n", n_list},
             {"replications", asym_reps}};
      if (lambda_expected) p["lambda_expected"] = *lambda_expected;
      if (order_expected) p["order_expected"] = *order_expected;
      return run_config({{"kind", "asymptotics"}, {"seed", seed}, {"params", p}}, emit);
    };
  });

  // stein
  auto* stein = app.add_subcommand("stein", "Neyman-Pearson error exponent against S(psi||phi)");
  std::string psi, phi;
  std::vector<double> eps;
  std::optional<int> brute_n;
  stein->add_option("--psi", psi, "Null state JSON (inline or file)")->required();
  stein->add_option("--phi", phi, "Alternative state JSON (inline or file)")->required();
  stein->add_option("--eps", eps, "First-kind error levels")->delimiter(',')->required();
  stein->add_option("--n", n_list, "Sample sizes")->delimiter(',')->required();
  stein->add_option("--brute-force-n", brute_n, "Confirm NP optimality by exhaustive search up to this n");
  add_emit_options(stein, emit);
  stein->callback([&] {
    action = [&] {
      Json p{{"psi", lds::io::json_argument(psi)}, {"phi", lds::io::json_argument(phi)}, {"eps", eps},
             {"n", n_list}};
      if (brute_n) p["brute_force_n"] = *brute_n;
      return run_config({{"kind", "stein"}, {"seed", 0}, {"params", p}}, emit);
    };
  });

  // run
  auto* run = app.add_subcommand("run", "Run an experiment config file");
  std::string config_path;
  run->add_option("--config", config_path, "Config JSON file")->required();
  add_emit_options(run, emit);
  run->callback([&] { action = [&] { return run_config(lds::load_config_file(config_path), emit); }; });

  // demo
  auto* demo = app.add_subcommand("demo", "Print the KMS-mixture demo config");
  std::string demo_kind = "escort";
  std::size_t demo_n = 200;
  std::uint64_t demo_seed = 2024;
  bool demo_run = false;
  demo->add_option("--kind", demo_kind, "escort or waic")->check(CLI::IsMember({"escort", "waic"}));
  demo->add_option("--n", demo_n, "Sample size");
  demo->add_option("--seed", demo_seed, "Root seed");
  demo->add_flag("--run", demo_run, "Run the config instead of printing it");
  add_emit_options(demo, emit);
  demo->callback([&] {
    action = [&] {
      const Json cfg = lds::kms_demo_config(demo_kind, demo_n, demo_seed);
      if (demo_run) return run_config(cfg, emit);
      std::cout << cfg.dump(2) << '\n';
      return 0;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    return action();
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const lds::CapacityError& e) {
    std::cerr << "capacity: " << e.what() << '\n';
    return kExitCapacity;
  } catch (const lds::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "schema: " << e.what() << '\n';
    return kExitUsage;
  }
}
