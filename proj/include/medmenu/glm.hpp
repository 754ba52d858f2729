#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "medmenu/data.hpp"
#include "medmenu/formula.hpp"

namespace medmenu {

enum class Family { gaussian_identity, binomial_logit };

std::string_view to_string(Family family);

class GlmError : public std::runtime_error {
 public:
  enum class Kind { rank_deficient, not_converged, separation, zero_weights, bad_response };

  GlmError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct FitOptions {
  int max_iterations = 100;
  double coefficient_tolerance = 1e-8;
  /// Deviance change per unit of total weight; scale-free so that rescaling
  /// the weights never changes the stopping iteration.
  double deviance_tolerance = 1e-12;
  /// Largest admissible absolute logit-scale coefficient before the fit is
  /// declared separated.
  double separation_bound = 30.0;
};

struct FitSummary {
  std::size_t rows = 0;         // rows with positive weight
  double weight_sum = 0.0;
  bool converged = false;
  int iterations = 0;
  double deviance = 0.0;
  /// |sum w*fitted - sum w*y| / max(1, |sum w*y|) on the fitting sample.
  double mean_recovery_residual = 0.0;
};

/// Response mapping for bounded fractional responses: fitted on
/// (y - lower) / (upper - lower), predictions mapped back.
struct BoundedScale {
  double lower = -1.0;
  double upper = 1.0;

  double to_unit(double y) const { return (y - lower) / (upper - lower); }
  double from_unit(double u) const { return u * (upper - lower) + lower; }
};

struct FittedModel {
  FormulaSpec spec;
  Family family = Family::gaussian_identity;
  Eigen::VectorXd coefficients;
  DesignInfo design;
  /// Weighted residual sum of squares / sum of weights (gaussian only).
  double residual_variance = 0.0;
  std::optional<BoundedScale> bounded;
  FitSummary summary;
};

/// Core weighted GLM solve on an explicit design. Rows with zero weight are
/// ignored for fitting.
struct MatrixFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd fitted;
  FitSummary summary;
};

MatrixFit fit_matrix(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, Family family,
                     const std::vector<std::string>& column_names = {}, const FitOptions& options = {});

/// Fits the formula on the view; the response column comes from the formula.
FittedModel fit(const FormulaSpec& spec, const SampleView& sample, Family family, const FitOptions& options = {});

/// Fits with an explicit response (one value per selected row), e.g. a
/// predicted potential outcome used as a pseudo response.
FittedModel fit(const FormulaSpec& spec, const SampleView& sample, Family family, std::span<const double> response,
                const FitOptions& options = {});

/// Response-scale predictions, one per row of the view.
std::vector<double> predict(const FittedModel& model, const SampleView& sample);

/// Logit fit of a response bounded in [lower, upper], treated as fractional
/// after mapping to [0, 1]; predictions are returned on the original scale.
FittedModel fit_transformed_bounded(const FormulaSpec& spec, const SampleView& sample, double lower = -1.0,
                                    double upper = 1.0, const FitOptions& options = {});
FittedModel fit_transformed_bounded(const FormulaSpec& spec, const SampleView& sample, std::span<const double> response,
                                    double lower = -1.0, double upper = 1.0, const FitOptions& options = {});

inline double expit(double eta) {
  return eta >= 0 ? 1.0 / (1.0 + std::exp(-eta)) : std::exp(eta) / (1.0 + std::exp(eta));
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace medmenu
