#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "medmenu/data.hpp"
#include "medmenu/weights.hpp"

namespace medmenu {

inline constexpr std::array<double, 5> kBalanceQuantiles{0.05, 0.25, 0.5, 0.75, 0.95};

/// A named weighted sample for balance checking. Weights are aligned with
/// `rows`; an empty weight vector means unit weights.
struct BalanceSample {
  std::string name;
  std::vector<std::size_t> rows;
  std::vector<double> weights;
};

BalanceSample full_sample(const Dataset& ds);
BalanceSample pseudo_sample(const std::string& name, const WeightSet& w);

struct BalanceComparison {
  std::string sample_a;
  std::string sample_b;
  std::string variable;  // level indicators are named "var[level]"
  double mean_a = 0.0;
  double mean_b = 0.0;
  double smd = 0.0;
  std::array<double, 5> quantiles_a{};
  std::array<double, 5> quantiles_b{};
};

struct BalanceReport {
  std::vector<BalanceComparison> comparisons;
  std::vector<std::pair<std::string, double>> anchor_sd;  // per variable, full sample
  std::vector<WeightSummary> weights;

  /// Largest |smd| over comparisons of (a, b); optionally restricted to the
  /// given variables.
  double max_abs_smd(const std::string& a, const std::string& b,
                     const std::vector<std::string>& variables = {}) const;
};

/// Compares two samples on the listed variables (categorical variables are
/// expanded to level indicators). The standardized difference is anchored
/// on the unweighted full-sample SD; 0/0 is 0 and x/0 is infinite.
std::vector<BalanceComparison> compare_samples(const Dataset& ds, const BalanceSample& a, const BalanceSample& b,
                                               const std::vector<std::string>& variables);

/// Standard table: p1, p0 (and px when given) against the full sample on
/// covariates, p1 vs p0 on covariates, and px vs p0 on covariates and
/// mediators. An sx weight set adds sx vs the control subsample.
BalanceReport balance_table(const Dataset& ds, const WeightSet& w1, const WeightSet& w0, const WeightSet* wx = nullptr,
                            const WeightSet* wsx = nullptr);

/// Weighted quantile: smallest value whose cumulative normalized weight
/// reaches p.
double weighted_quantile(std::span<const double> values, std::span<const double> weights, double p);

}  // namespace medmenu
