#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "medmenu/data.hpp"
#include "medmenu/formula.hpp"
#include "medmenu/glm.hpp"

namespace medmenu {

/// Target pseudo sample of a weight set: p1/p0 mimic the full sample's
/// covariates, px additionally mimics the controls' mediator-given-covariates
/// law, sx mimics the control subsample's joint (C, M).
enum class WeightTarget { p1, p0, px, sx };

enum class WeightMethod { ipw, density_ratio, odds, stacked };

std::string_view to_string(WeightTarget target);
std::string_view to_string(WeightMethod method);

struct WeightSet {
  WeightTarget target = WeightTarget::p1;
  WeightMethod method = WeightMethod::ipw;
  std::vector<std::size_t> rows;  // dataset rows the weights live on
  std::vector<double> values;
  bool stabilized = false;
  std::vector<std::string> models;  // provenance

  double mean() const;
};

/// Quantile points reported for every weight set.
inline constexpr std::array<double, 7> kWeightQuantiles{0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0};

struct WeightSummary {
  WeightTarget target = WeightTarget::p1;
  std::size_t count = 0;
  double mean = 0.0;
  double max = 0.0;
  double ess = 0.0;
  std::array<double, 7> quantiles{};
  bool capped = false;
};

enum class PseudoIdentity { pseudo_treated, pseudo_control, pseudo_crossworld, pseudo_crossworld_subsample };

/// Subsample view carrying its weights (optionally multiplied by observation
/// weights).
struct PseudoSample {
  SampleView view;
  PseudoIdentity identity = PseudoIdentity::pseudo_treated;
};

struct PropensityFit {
  FittedModel model;
  std::vector<double> prob;  // P(A=1|C) for every dataset row
  std::vector<std::string> warnings;
};

/// Logit model of exposure on covariates over the full sample.
PropensityFit fit_propensity(const FormulaSpec& spec, const Dataset& ds, std::span<const double> obs_weights = {});

/// omega1 = 1/P(A=1|C) on treated rows, omega0 = 1/P(A=0|C) on control rows.
std::pair<WeightSet, WeightSet> ipw_weights(std::span<const double> propensity, const Dataset& ds);

/// Cross-world weights from the density-ratio expression:
/// [1/P(A=1|C)] * P(M|C,A=0)/P(M|C,A=1). Inputs are per dataset row.
WeightSet crossworld_density_ratio(std::span<const double> propensity, std::span<const double> density_control,
                                   std::span<const double> density_treated, const Dataset& ds);

/// Cross-world weights from the odds expression:
/// [P(A=0|C,M)/P(A=1|C,M)] * [1/P(A=0|C)]. Inputs are per dataset row.
WeightSet crossworld_odds(std::span<const double> propensity, std::span<const double> prob_treated_given_cm,
                          const Dataset& ds);

/// Cross-world weights from the stacked fit: the treated subsample (weight 1)
/// is stacked with the pseudo control sample (weights omega0), a weighted logit
/// of pseudo-control membership on (C, M) is fitted with `membership_spec`'s
/// right-hand side, and the predicted membership odds on treated rows are the
/// weights.
struct StackedCrossworld {
  WeightSet weights;
  FittedModel membership_model;
};
StackedCrossworld crossworld_stacked(const FormulaSpec& membership_spec, const WeightSet& omega0, const Dataset& ds,
                                     std::span<const double> obs_weights = {});

/// Odds weights P(A=0|C,M)/P(A=1|C,M) on treated rows.
WeightSet sx_weights(std::span<const double> prob_treated_given_cm, const Dataset& ds);

/// Rescales to mean 1 over the weight set's rows.
WeightSet stabilize(WeightSet w);

/// Truncates weights above `cap` (applied to stabilized scale).
WeightSet cap_weights(WeightSet w, double cap);

double effective_sample_size(std::span<const double> w);

WeightSummary summarize(const WeightSet& w);

/// The weight set's subsample with weights attached, times observation
/// weights (indexed by dataset row) when given.
PseudoSample make_pseudo_sample(const Dataset& ds, const WeightSet& w, std::span<const double> obs_weights = {});

/// Per dataset row P(A=1 | C, M) from a fitted exposure-given-(C,M) model.
std::vector<double> predict_full(const FittedModel& model, const Dataset& ds);

}  // namespace medmenu
