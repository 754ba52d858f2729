#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace medmenu {

/// Knot set of a natural cubic spline term. Recorded at fit time and reused
/// verbatim at prediction time.
struct SplineKnots {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<double> interior;

  bool operator==(const SplineKnots&) const = default;
};

/// Boundary knots at the sample range, df-1 interior knots at equally spaced
/// sample quantiles. Throws FormulaError for df < 1 or a constant sample.
SplineKnots natural_spline_knots(std::span<const double> x, int df);

/// Natural cubic spline basis without intercept: one column per basis
/// function (interior knots + 1 columns). Linear beyond the boundary knots.
Eigen::MatrixXd natural_spline_basis(std::span<const double> x, const SplineKnots& knots);

/// Sample quantile with linear interpolation between order statistics.
double quantile_linear(std::vector<double> values, double p);

}  // namespace medmenu
