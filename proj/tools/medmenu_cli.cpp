// medmenu: batch front end for the estimator menu.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "medmenu/balance.hpp"
#include "medmenu/config.hpp"
#include "medmenu/report.hpp"

namespace fs = std::filesystem;
using namespace medmenu;

namespace {

enum Exit { kOk = 0, kConfig = 2, kEstimation = 3, kIo = 4 };

int fail(Exit code, const std::string& kind, const std::vector<std::string>& problems) {
  nlohmann::ordered_json j{{"error", kind}, {"exit_code", static_cast<int>(code)}, {"problems", problems}};
  std::cerr << j.dump() << '\n';
  return code;
}

struct EstimationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Provenance provenance_of(const RunConfig& cfg, Command cmd) {
  return {std::string(to_string(cmd)), cfg.hash, cfg.seed, cfg.workers};
}

Ingested load_data(const RunConfig& cfg) {
  const auto& path = cfg.data->path;
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw std::ios_base::failure("data file '" + path.string() + "' not found");
  try {
    return ingest_csv(path, cfg.data->schema);
  } catch (const DataError& e) {
    throw EstimationFailure(std::string("data: ") + e.what());
  }
}

template <class F>
std::optional<WeightSet> try_weights(F&& f, std::vector<std::string>& warnings, const char* name) {
  try {
    return f();
  } catch (const std::exception& e) {
    warnings.push_back(std::string(name) + " weights unavailable: " + e.what());
    return std::nullopt;
  }
}

std::vector<WeightSummary> weight_summaries(Components& c, std::vector<std::string>& warnings,
                                            std::optional<WeightSet>* keep = nullptr) {
  std::vector<WeightSummary> out;
  std::optional<WeightSet> sets[4];
  sets[0] = try_weights([&] { return c.w1(); }, warnings, "p1");
  sets[1] = try_weights([&] { return c.w0(); }, warnings, "p0");
  const auto& f = c.formulas();
  const bool px = f.exposure_cm || (c.options().crossworld == WeightMethod::density_ratio && !f.mediators.empty());
  if (px) sets[2] = try_weights([&] { return c.wx(); }, warnings, "px");
  if (f.exposure_cm) sets[3] = try_weights([&] { return c.wsx(); }, warnings, "sx");
  for (int k = 0; k < 4; ++k) {
    if (sets[k]) out.push_back(summarize(*sets[k]));
    if (keep) keep[k] = sets[k];
  }
  return out;
}

int cmd_estimate(const RunConfig& cfg) {
  const auto in = load_data(cfg);
  const auto& ds = in.data;
  MenuConfig menu = cfg.menu;
  const auto reports = run_menu(menu, ds);

  std::vector<std::string> warnings;
  std::vector<EffectInterval> intervals;
  if (cfg.bootstrap) {
    BootstrapConfig bc = *cfg.bootstrap;
    bc.workers = cfg.workers;
    intervals = bootstrap_menu(menu, ds, reports, bc);
    for (const auto& iv : intervals) {
      if (!iv.interval.reliable) {
        warnings.push_back(iv.estimator + " " + iv.effect + ": interval unreliable (" +
                           std::to_string(iv.interval.failures) + " failed replicates)");
      }
    }
  }
  Components comps(ds, menu.formulas, menu.options);
  const auto weights = weight_summaries(comps, warnings);
  if (comps.formulas().propensity) {
    try {
      for (const auto& w : comps.propensity().warnings) warnings.push_back(w);
    } catch (const std::exception&) {
      // already reported per estimator
    }
  }
  std::size_t failed = 0;
  for (const auto& r : reports) {
    if (!r.ok()) {
      ++failed;
      warnings.push_back(r.estimator + ": " + *r.error);
    }
  }

  const auto prov = provenance_of(cfg, Command::estimate);
  const auto* ivp = cfg.bootstrap ? &intervals : nullptr;
  write_file(cfg.output_dir / "estimates.csv", estimates_csv(prov, reports, ivp));
  write_file(cfg.output_dir / "report.json", report_json(prov, reports, ivp, weights, in.report, warnings));
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "estimate: " << reports.size() - failed << "/" << reports.size() << " estimators ok; wrote "
            << (cfg.output_dir / "estimates.csv").string() << '\n';
  if (failed == reports.size()) throw EstimationFailure("every selected estimator failed");
  return kOk;
}

int cmd_balance(const RunConfig& cfg) {
  const auto in = load_data(cfg);
  const auto& ds = in.data;
  Components comps(ds, cfg.menu.formulas, cfg.menu.options);
  try {
    comps.propensity();
  } catch (const std::exception& e) {
    throw EstimationFailure(e.what());
  }
  std::vector<std::string> warnings;
  std::optional<WeightSet> sets[4];
  weight_summaries(comps, warnings, sets);
  if (!sets[0] || !sets[1]) throw EstimationFailure("p1/p0 weights could not be computed");
  const auto report = balance_table(ds, *sets[0], *sets[1], sets[2] ? &*sets[2] : nullptr, sets[3] ? &*sets[3] : nullptr);
  const auto prov = provenance_of(cfg, Command::balance);
  write_file(cfg.output_dir / "balance.csv", balance_csv(prov, report));
  write_file(cfg.output_dir / "weights.csv", weights_csv(prov, report.weights));
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "balance: " << report.comparisons.size() << " comparisons; wrote "
            << (cfg.output_dir / "balance.csv").string() << '\n';
  return kOk;
}

int cmd_simulate(const RunConfig& cfg) {
  const auto& sc = *cfg.simulate;
  ExperimentConfig ec;
  ec.n = sc.n;
  ec.reps = sc.reps;
  ec.seed = cfg.seed;
  ec.workers = cfg.workers;
  ec.options = cfg.menu.options;
  ec.estimators = cfg.menu.estimators;
  if (sc.coverage) ec.bootstrap = cfg.bootstrap;
  const auto prov = provenance_of(cfg, Command::simulate);

  std::vector<ExperimentRow> rows;
  std::vector<std::pair<std::string, Effects>> truths;
  if (sc.preset == "robustness") {
    ec.estimators.clear();
    for (const auto& info : registry()) ec.estimators.push_back(info.id);
    const auto truth = truth_for(sc.dgp);
    ec.truth = truth;
    truths.emplace_back("all scenarios", truth);
    std::vector<RobustnessVerdict> verdicts;
    const auto suite = robustness_suite();
    std::size_t k = 0;
    for (auto c : suite) {
      c.scenario.dgp = sc.dgp;
      c.scenario.correct = cfg.menu.formulas;
      c.scenario.drop = sc.drop;
      std::cerr << "[" << ++k << "/" << suite.size() << "] " << c.scenario.name << '\n';
      const auto result = run_experiment(c.scenario, ec);
      rows.insert(rows.end(), result.rows.begin(), result.rows.end());
      const auto v = judge(c, result);
      verdicts.insert(verdicts.end(), v.begin(), v.end());
    }
    write_file(cfg.output_dir / "robustness.csv", robustness_csv(prov, verdicts));
    std::size_t passed = 0;
    for (const auto& v : verdicts) passed += v.pass;
    std::cout << "robustness: " << passed << "/" << verdicts.size() << " checks as expected\n";
  } else {
    ScenarioSpec s;
    s.name = sc.corrupted.empty() ? "all-correct" : "custom";
    s.dgp = sc.dgp;
    s.correct = cfg.menu.formulas;
    s.drop = sc.drop;
    s.corrupted = sc.corrupted;
    const auto result = run_experiment(s, ec);
    rows = result.rows;
    truths.emplace_back(s.name, result.truth);
  }
  write_file(cfg.output_dir / "experiment.csv", experiment_csv(prov, rows));
  write_file(cfg.output_dir / "truth.json", truth_json(prov, truths));
  std::cout << "simulate: " << rows.size() << " rows; wrote " << (cfg.output_dir / "experiment.csv").string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"medmenu: natural direct/indirect effect estimator menu"};
  app.require_subcommand(1);
  struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out;
  } flags;
  for (const char* name : {"estimate", "balance", "simulate"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " command");
    sub->add_option("--config", flags.config, "JSON run configuration")->required();
    sub->add_option("--seed", flags.seed, "master seed (overrides the config)");
    sub->add_option("--workers", flags.workers, "worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", flags.out, "output directory (overrides the config)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  const auto* sub = app.get_subcommands().front();
  const Command cmd = sub->get_name() == "estimate"  ? Command::estimate
                      : sub->get_name() == "balance" ? Command::balance
                                                     : Command::simulate;
  RunConfig cfg;
  try {
    cfg = load_config(flags.config, cmd);
  } catch (const ConfigError& e) {
    return fail(kConfig, "config", e.problems());
  } catch (const std::ios_base::failure& e) {
    return fail(kIo, "io", {e.what()});
  }
  if (flags.seed) override_seed(cfg, *flags.seed);
  if (flags.workers) cfg.workers = *flags.workers;
  if (flags.out) cfg.output_dir = *flags.out;
  if (cfg.output_dir.is_relative()) cfg.output_dir = fs::current_path() / cfg.output_dir;

  try {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw std::ios_base::failure("cannot create output directory '" + cfg.output_dir.string() + "'");
    switch (cmd) {
      case Command::estimate: return cmd_estimate(cfg);
      case Command::balance: return cmd_balance(cfg);
      case Command::simulate: return cmd_simulate(cfg);
    }
  } catch (const std::ios_base::failure& e) {
    return fail(kIo, "io", {e.what()});
  } catch (const ConfigError& e) {
    return fail(kConfig, "config", e.problems());
  } catch (const std::exception& e) {
    return fail(kEstimation, "estimation", {e.what()});
  }
  return kOk;
}
