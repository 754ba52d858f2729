#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "medmenu/data.hpp"
#include "medmenu/estimators.hpp"
#include "medmenu/rng.hpp"

namespace medmenu {

enum class BootstrapScheme { dirichlet, multinomial };

std::string_view to_string(BootstrapScheme s);

struct BootstrapConfig {
  int replicates = 1000;
  double level = 0.95;
  std::uint64_t seed = 1;
  BootstrapScheme scheme = BootstrapScheme::dirichlet;
  int workers = 1;

  /// Throws std::invalid_argument on B < 2 or level outside (0, 1).
  void validate() const;
};

inline constexpr const char* kQuantileRule = "linear interpolation between order statistics (type 7)";
inline constexpr double kMaxFailureShare = 0.2;

/// Observation weights for one replicate. Dirichlet: normalized standard
/// exponentials times n (sum n, mean 1, variance (n-1)/(n+1)). Multinomial:
/// resampling counts.
std::vector<double> draw_bootstrap_weights(std::size_t n, BootstrapScheme scheme, SplitMix64& rng);

/// Weights of replicate b, from its own substream of the master seed.
std::vector<double> replicate_weights(std::size_t n, const BootstrapConfig& cfg, int b);

struct Interval {
  double estimate = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t failures = 0;
  bool reliable = true;
};

/// Re-runs the pipeline under each replicate's observation weights (the
/// replicate index is passed for keyed substreams). The pipeline returns one
/// value per statistic (NaN marks a failed statistic) or throws (every
/// statistic of that replicate failed). Results do not depend on the worker
/// count.
using Pipeline = std::function<std::vector<double>(const std::vector<double>& obs_weights, int replicate)>;

struct BootstrapResult {
  std::vector<Interval> intervals;
  std::vector<std::vector<double>> replicates;  // [b][statistic]
};

BootstrapResult bootstrap_ci(const Pipeline& pipeline, std::size_t n, std::span<const double> point,
                             const BootstrapConfig& cfg);

/// Percentile interval of the finite values at the configured level.
Interval percentile_interval(std::vector<double> values, double estimate, double level, std::size_t failures,
                             std::size_t replicates);

struct EffectInterval {
  std::string estimator;
  std::string effect;  // NDE0, NIE1, TE
  Interval interval;
};

/// Bootstrap of every estimator in the menu: each replicate re-fits all
/// shared components under the replicate's weights. Simulation draws in a
/// replicate use a further substream.
std::vector<EffectInterval> bootstrap_menu(const MenuConfig& config, const Dataset& ds,
                                           const std::vector<EstimateReport>& point, const BootstrapConfig& cfg);

}  // namespace medmenu
