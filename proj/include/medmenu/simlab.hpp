#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "medmenu/data.hpp"
#include "medmenu/estimators.hpp"
#include "medmenu/inference.hpp"

namespace medmenu {

/// eta = intercept + sum coef * prod(vars). Variables are covariates, the
/// exposure (named by DgpSpec::exposure) and earlier mediators.
struct LinearLaw {
  struct Term {
    double coef = 0.0;
    std::vector<std::string> vars;
  };
  double intercept = 0.0;
  std::vector<Term> terms;
};

struct CovariateLaw {
  enum class Kind { bernoulli, normal, uniform };
  std::string name;
  Kind kind = Kind::bernoulli;
  double a = 0.5;  // bernoulli: p; normal: mean; uniform: lower
  double b = 1.0;  // normal: sd; uniform: upper
};

struct MediatorLaw {
  std::string name;
  bool binary = true;  // logit law, else linear-normal
  LinearLaw law;
  double sd = 1.0;
};

struct DgpSpec {
  std::vector<CovariateLaw> covariates;  // independent
  LinearLaw propensity;                  // logit P(A=1|C)
  std::vector<MediatorLaw> mediators;    // in order; laws hold for both arms via the exposure variable
  LinearLaw outcome;                     // logit (binary) or mean (normal)
  bool binary_outcome = true;
  double outcome_sd = 1.0;
  std::string exposure = "A";
  std::string outcome_name = "Y";

  /// Throws std::invalid_argument for unknown variables, references to later
  /// mediators, or propensities outside [0.05, 0.95] on the covariate
  /// support grid (binary values, 21-point grids over uniform ranges and
  /// +-3 sd for normals).
  void validate() const;
  bool all_binary_covariates() const;
  Roles roles() const;
};

/// n iid rows drawn C -> A -> M -> Y; row i uses its own substream of seed.
Dataset generate(const DgpSpec& dgp, std::size_t n, std::uint64_t seed);

struct Effects {
  double ey1 = 0.0;
  double ey0 = 0.0;
  double ey1m0 = 0.0;
  double nde = 0.0;
  double nie = 0.0;
  double te = 0.0;
  /// Monte-Carlo standard errors (zero for the exact oracle).
  double se_nde = 0.0;
  double se_nie = 0.0;
  double se_te = 0.0;
};

/// Monte-Carlo truth: per draw of C, mediators under both arms and the
/// outcome-law means E[Y|C,1,M1], E[Y|C,0,M0], E[Y|C,1,M0]. n_mc >= 1e5.
Effects true_effects(const DgpSpec& dgp, std::size_t n_mc, std::uint64_t seed);

/// Exact truth for all-binary covariates: enumeration over covariates and
/// binary mediators, Gauss-Hermite quadrature over normal mediators.
Effects exact_effects(const DgpSpec& dgp, int quadrature_nodes = 40);

/// Gauss-Hermite rule for the standard normal (probabilists' weights sum 1).
std::pair<std::vector<double>, std::vector<double>> gauss_hermite(int nodes);

/// Analyst-side misspecification: every corrupted formula slot loses all
/// terms involving `drop`.
struct ScenarioSpec {
  std::string name;
  DgpSpec dgp;
  ModelFormulas correct;
  std::string drop;
  std::set<FormulaRole> corrupted;
};

ModelFormulas analyst_formulas(const ScenarioSpec& s);

/// Model slots a component's consistency depends on (odds cross-world
/// weights).
std::set<FormulaRole> component_models(Component c);

/// All formula slots that a scenario may corrupt.
const std::set<FormulaRole>& corruptible_models();

struct ExperimentConfig {
  std::vector<std::string> estimators;  // empty = default menu
  std::size_t n = 1000;
  int reps = 100;
  std::uint64_t seed = 1;
  int workers = 1;
  MenuOptions options;
  std::optional<BootstrapConfig> bootstrap;  // coverage when set
  std::optional<Effects> truth;             // computed when absent
};

struct ExperimentRow {
  std::string scenario;
  std::string estimator;
  std::string effect;  // NDE0, NIE1, TE
  double truth = 0.0;
  double mean = 0.0;
  double bias = 0.0;
  double emp_se = 0.0;
  double rmse = 0.0;
  double std_bias = 0.0;  // |bias| / (emp_se / sqrt(successful reps))
  int reps = 0;
  int failures = 0;
  std::optional<double> coverage;
};

struct ExperimentResult {
  Effects truth;
  std::vector<ExperimentRow> rows;
  /// estimates[estimator][rep] = (nde, nie, te); NaN for failures
  std::vector<std::vector<std::array<double, 3>>> estimates;
};

/// Replication r analyses generate(dgp, n, substream(seed, r)).
ExperimentResult run_experiment(const ScenarioSpec& scenario, const ExperimentConfig& cfg);

/// Truth for a DGP: exact when covariates are all binary, else Monte Carlo
/// with 1e6 draws.
Effects truth_for(const DgpSpec& dgp, std::uint64_t seed = 7);

// Presets -------------------------------------------------------------------

/// Desk-scale DGP: two binary covariates and one continuous covariate,
/// binary exposure, one binary and one continuous mediator, binary outcome.
DgpSpec desk_dgp();
ModelFormulas desk_formulas();

/// All-binary-covariate DGP for the robustness matrix: the listed formulas
/// are exactly correct, and dropping C1 misspecifies any of them.
DgpSpec robustness_dgp();
ModelFormulas robustness_formulas();

enum class Expectation { unbiased, biased };

std::string_view to_string(Expectation e);

struct RobustnessCase {
  ScenarioSpec scenario;
  /// (estimator, expected behaviour) judged in this scenario.
  std::vector<std::pair<std::string, Expectation>> checks;
  std::string origin;  // which registry entry and model subset generated it
};

/// One scenario per (row, component subset) with exactly that subset's
/// models correct, plus one per not-allowed component with only that
/// component corrupted; duplicates merged.
std::vector<RobustnessCase> robustness_suite();

inline constexpr double kUnbiasedBelow = 4.0;
inline constexpr double kBiasedAbove = 3.0;

/// One judged check: the largest standardized bias over NDE0/NIE1/TE must be
/// below kUnbiasedBelow (unbiased) or above kBiasedAbove (biased).
struct RobustnessVerdict {
  std::string scenario;
  std::string origin;
  std::string estimator;
  Expectation expected = Expectation::unbiased;
  std::string worst_effect;
  double max_std_bias = 0.0;
  bool pass = false;
};

std::vector<RobustnessVerdict> judge(const RobustnessCase& c, const ExperimentResult& result);

}  // namespace medmenu
