#pragma once

#include <array>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "medmenu/data.hpp"
#include "medmenu/formula.hpp"
#include "medmenu/glm.hpp"
#include "medmenu/meddensity.hpp"
#include "medmenu/weights.hpp"

namespace medmenu {

/// Named formula slots of a run. Responses of the cross-world and NDE
/// formulas are placeholders: those models are fitted to pseudo responses.
enum class FormulaRole {
  propensity,    // A ~ C
  exposure_cm,   // A ~ C + M (odds weights; its right-hand side also drives the stacked method)
  outcome_c1,    // Y ~ C on treated
  outcome_c0,    // Y ~ C on controls
  outcome_cm1,   // Y ~ C + M on treated
  crossworld_c,  // E[Y1M0 | C]
  nde_c,         // E[NDE0 | C]
  working,       // covariate-adjustment working model, must contain `arm`
  mediators      // one formula per mediator, in role order
};

std::string_view to_string(FormulaRole role);
std::optional<FormulaRole> parse_formula_role(std::string_view text);

struct ModelFormulas {
  std::optional<FormulaSpec> propensity;
  std::optional<FormulaSpec> exposure_cm;
  std::optional<FormulaSpec> outcome_c1;
  std::optional<FormulaSpec> outcome_c0;
  std::optional<FormulaSpec> outcome_cm1;
  std::optional<FormulaSpec> crossworld_c;
  std::optional<FormulaSpec> nde_c;
  std::optional<FormulaSpec> working;
  std::vector<FormulaSpec> mediators;

  bool has(FormulaRole role) const;
};

enum class MediatorIntegration { simulate, exact };

struct MenuOptions {
  WeightMethod crossworld = WeightMethod::odds;
  int n_sim = 100;
  MediatorIntegration integration = MediatorIntegration::simulate;
  /// Working-model family; unset picks logit for binary outcomes and
  /// gaussian otherwise.
  std::optional<Family> working_family;
  std::uint64_t seed = 1;
  /// Positive factors applied to the p1, p0, px and sx weight sets. Every
  /// estimator normalizes its weights, so results do not depend on them.
  std::array<double, 4> weight_scale{1.0, 1.0, 1.0, 1.0};
};

/// Estimation components whose consistency the robustness sets refer to.
enum class Component {
  w1,        // omega1
  w0,        // omega0
  wx,        // omega_x (whole)
  wx_mpart,  // mediator-related part of omega_x (odds factor)
  wsx,       // omega_sx
  y_c1,      // E[Y | C, A=1]
  y_c0,      // E[Y | C, A=0]
  y_cm1,     // E[Y | C, M, A=1]
  y1m0_c,    // E[Y1M0 | C]
  med0,      // P(M | C, A=0)
  nde_c      // E[NDE0 | C]
};

std::string_view to_string(Component c);

enum class Robustness { nonrobust, more_robust, robust };

std::string_view to_string(Robustness r);

enum class EstimatorKind { potential_outcomes, effect };

struct EstimatorInfo {
  std::string id;
  EstimatorKind kind = EstimatorKind::potential_outcomes;
  Robustness robustness = Robustness::nonrobust;
  /// Component sets any one of which, if consistent, makes the estimator
  /// consistent.
  std::vector<std::vector<Component>> subsets;
  /// Components whose inconsistency makes the estimator inconsistent.
  std::vector<Component> not_allowed;
  /// Part of the default ("all") menu.
  bool in_default_menu = true;
};

/// The closed estimator registry: 11 potential-outcome combinations, the
/// six effect-approach rows, and the separate-fit psxCadj variant.
const std::vector<EstimatorInfo>& registry();
const EstimatorInfo& estimator_info(std::string_view id);
std::vector<std::string> default_menu();

/// Formula slots an estimator needs under the chosen cross-world method.
std::vector<FormulaRole> required_formulas(std::string_view id, WeightMethod crossworld);

struct EstimateReport {
  std::string estimator;
  Robustness robustness = Robustness::nonrobust;
  std::optional<double> ey1;
  std::optional<double> ey0;
  std::optional<double> ey1m0;
  double nde = 0.0;
  double nie = 0.0;
  double te = 0.0;
  std::vector<std::string> components;  // shared fits consumed
  std::map<std::string, double> diagnostics;
  std::optional<std::string> error;

  bool ok() const { return !error.has_value(); }
};

/// Shared fitted components of one run, computed on first use and reused
/// across estimators. Observation weights (one per dataset row, e.g.
/// bootstrap weights) multiply every weighted fit and mean. Failures are
/// cached and rethrown to every consumer.
class Components {
 public:
  Components(const Dataset& ds, const ModelFormulas& formulas, const MenuOptions& options,
             std::vector<double> obs_weights = {});

  const Dataset& data() const { return ds_; }
  const ModelFormulas& formulas() const { return formulas_; }
  const MenuOptions& options() const { return options_; }
  bool binary_outcome() const { return binary_outcome_; }
  Family outcome_family() const { return binary_outcome_ ? Family::binomial_logit : Family::gaussian_identity; }

  /// Observation weight of a dataset row.
  double obs(std::size_t row) const { return obs_.empty() ? 1.0 : obs_[row]; }
  std::span<const double> obs_weights() const { return obs_; }

  const PropensityFit& propensity();
  const WeightSet& w1();
  const WeightSet& w0();
  const WeightSet& wx();
  const WeightSet& wsx();
  /// P(A=1 | C, M) per dataset row.
  const std::vector<double>& exposure_given_cm();

  /// Outcome models; `pseudo` selects the pseudo-sample fitting sample.
  const FittedModel& outcome_c1(bool pseudo);
  const FittedModel& outcome_c0(bool pseudo);
  const FittedModel& outcome_cm1(bool pseudo);
  /// Control-arm mediator density on the control subsample or pseudo control.
  const FactorizedDensity& density_control(bool pseudo);

  /// Names of components accessed since the last call.
  std::vector<std::string> take_log();

 private:
  template <class T>
  struct Slot {
    std::optional<T> value;
    std::exception_ptr error;
    std::vector<std::string> deps;  // components used while building this one
  };
  template <class T, class F>
  const T& get(Slot<T>& slot, const char* name, F&& make);

  const FormulaSpec& need(const std::optional<FormulaSpec>& f, FormulaRole role) const;
  const std::pair<WeightSet, WeightSet>& ipw();
  WeightSet make_wx();
  SampleView weighted(const std::vector<std::size_t>& rows, const std::vector<double>* analysis) const;

  const Dataset& ds_;
  const ModelFormulas& formulas_;
  MenuOptions options_;
  std::vector<double> obs_;
  bool binary_outcome_ = false;
  std::vector<std::string> log_;

  Slot<PropensityFit> propensity_;
  Slot<std::pair<WeightSet, WeightSet>> ipw_;
  Slot<WeightSet> wx_;
  Slot<WeightSet> wsx_;
  Slot<std::vector<double>> acm_;
  Slot<FittedModel> yc1_[2];
  Slot<FittedModel> yc0_[2];
  Slot<FittedModel> ycm1_[2];
  Slot<FactorizedDensity> dens0_[2];
  Slot<FactorizedDensity> dens1_;
};

// Building blocks. Each returns a potential-outcome mean (or effect) and
// multiplies observation weights into every fit and mean.
std::pair<double, double> reg_psYobs(Components& c);
std::pair<double, double> reg_fuYpred(Components& c, bool pseudo);
double cross_pxYobs(Components& c);
double cross_p0Ypred(Components& c, bool pseudo);
double cross_fuYpred(Components& c, bool use_px);
double cross_fuY2pred(Components& c, bool pseudo);
double cross_fuMsimYpred(Components& c, bool pseudo, std::uint64_t stream);
double nde_fuNDEpred(Components& c, bool pseudo);

/// One arm of a covariate-adjustment stack: dataset rows, analysis weights
/// (aligned with rows) and outcomes (observed or substituted).
struct CadjArm {
  std::string level;
  std::vector<std::size_t> rows;
  std::vector<double> weights;
  std::vector<double> outcome;
};

/// Fits the working model on the stacked arms (first arm is the reference)
/// and returns the effect of every other arm relative to it: the arm
/// coefficient for a gaussian working model, else the difference of
/// full-sample mean predictions. Each arm's weights are normalized to the
/// full-sample observation-weight total.
std::vector<double> cadj_effects(Components& c, const std::vector<CadjArm>& arms, const FormulaSpec& working,
                                 Family family);

/// Evaluates one registry estimator; errors are captured in the report.
EstimateReport evaluate(const std::string& id, Components& c);

struct MenuConfig {
  ModelFormulas formulas;
  MenuOptions options;
  std::vector<std::string> estimators;  // empty = default menu
};

/// Runs the selected estimators over shared components.
std::vector<EstimateReport> run_menu(const MenuConfig& config, const Dataset& ds,
                                     std::vector<double> obs_weights = {});

}  // namespace medmenu
