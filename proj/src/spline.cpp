#include "medmenu/spline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "medmenu/formula.hpp"

namespace medmenu {

namespace {

constexpr int kOrder = 4;

std::vector<double> augmented_knots(const SplineKnots& k) {
  std::vector<double> t(kOrder, k.lower);
  t.insert(t.end(), k.interior.begin(), k.interior.end());
  t.insert(t.end(), kOrder, k.upper);
  return t;
}

// Index mu with t[mu] <= x < t[mu+1], restricted to the spline's domain; the
// upper boundary belongs to the last nonempty span.
std::size_t find_span(const std::vector<double>& t, double x) {
  const std::size_t lo = kOrder - 1;
  const std::size_t hi = t.size() - kOrder - 1;
  if (x >= t[hi + 1]) {
    std::size_t mu = hi;
    while (mu > lo && t[mu] == t[mu + 1]) --mu;
    return mu;
  }
  auto it = std::upper_bound(t.begin() + lo, t.begin() + hi + 1, x);
  std::size_t mu = static_cast<std::size_t>(it - t.begin()) - 1;
  return std::max(mu, lo);
}

// Nonzero cubic B-spline values at x; entry r belongs to basis mu-3+r.
std::array<double, kOrder> span_values(const std::vector<double>& t, std::size_t mu, double x) {
  std::array<double, kOrder> n{1.0, 0.0, 0.0, 0.0};
  std::array<double, kOrder> left{};
  std::array<double, kOrder> right{};
  for (int j = 1; j < kOrder; ++j) {
    left[j] = x - t[mu + 1 - j];
    right[j] = t[mu + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = denom == 0.0 ? 0.0 : n[r] / denom;
      n[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    n[j] = saved;
  }
  return n;
}

// d-th derivative of B_{i,k} at x by the standard recursion; used only at the
// boundary knots.
double bspline_derivative(const std::vector<double>& t, std::size_t i, int k, int d, double x, std::size_t mu) {
  if (d == 0) {
    if (k == 1) return i == mu ? 1.0 : 0.0;
    const double d1 = t[i + k - 1] - t[i];
    const double d2 = t[i + k] - t[i + 1];
    double v = 0.0;
    if (d1 > 0.0) v += (x - t[i]) / d1 * bspline_derivative(t, i, k - 1, 0, x, mu);
    if (d2 > 0.0) v += (t[i + k] - x) / d2 * bspline_derivative(t, i + 1, k - 1, 0, x, mu);
    return v;
  }
  const double d1 = t[i + k - 1] - t[i];
  const double d2 = t[i + k] - t[i + 1];
  double v = 0.0;
  if (d1 > 0.0) v += bspline_derivative(t, i, k - 1, d - 1, x, mu) / d1;
  if (d2 > 0.0) v -= bspline_derivative(t, i + 1, k - 1, d - 1, x, mu) / d2;
  return (k - 1) * v;
}

Eigen::VectorXd full_basis_row(const std::vector<double>& t, double x, int deriv) {
  const std::size_t nb = t.size() - kOrder;
  Eigen::VectorXd row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(nb));
  const std::size_t mu = find_span(t, x);
  if (deriv == 0) {
    const auto n = span_values(t, mu, x);
    for (int r = 0; r < kOrder; ++r) row(static_cast<Eigen::Index>(mu - 3 + r)) = n[r];
    return row;
  }
  for (std::size_t i = mu - 3; i <= mu; ++i) {
    row(static_cast<Eigen::Index>(i)) = bspline_derivative(t, i, kOrder, deriv, x, mu);
  }
  return row;
}

}  // namespace

double quantile_linear(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

SplineKnots natural_spline_knots(std::span<const double> x, int df) {
  if (df < 1) throw FormulaError("spline df must be positive", 0);
  if (x.empty()) throw FormulaError("spline variable has no observations", 0);
  std::vector<double> v(x.begin(), x.end());
  const auto [mn, mx] = std::minmax_element(v.begin(), v.end());
  SplineKnots k;
  k.lower = *mn;
  k.upper = *mx;
  if (!(k.upper > k.lower)) throw FormulaError("degenerate spline knots: variable is constant", 0);
  for (int j = 1; j < df; ++j) {
    const double q = quantile_linear(v, static_cast<double>(j) / df);
    if (!(q > k.lower && q < k.upper)) {
      throw FormulaError("degenerate spline knots: interior knot falls on a boundary", 0);
    }
    k.interior.push_back(q);
  }
  return k;
}

Eigen::MatrixXd natural_spline_basis(std::span<const double> x, const SplineKnots& knots) {
  const auto t = augmented_knots(knots);
  const Eigen::Index nb = static_cast<Eigen::Index>(t.size()) - kOrder;  // interior + 4
  const Eigen::Index df = nb - 3;

  // Second-derivative constraints at both boundaries, first basis dropped.
  Eigen::MatrixXd cons(nb - 1, 2);
  cons.col(0) = full_basis_row(t, knots.lower, 2).tail(nb - 1);
  cons.col(1) = full_basis_row(t, knots.upper, 2).tail(nb - 1);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(cons);
  const Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd proj = q.rightCols(df);

  const Eigen::VectorXd lo_val = full_basis_row(t, knots.lower, 0);
  const Eigen::VectorXd lo_der = full_basis_row(t, knots.lower, 1);
  const Eigen::VectorXd hi_val = full_basis_row(t, knots.upper, 0);
  const Eigen::VectorXd hi_der = full_basis_row(t, knots.upper, 1);

  Eigen::MatrixXd out(static_cast<Eigen::Index>(x.size()), df);
  Eigen::VectorXd row(nb);
  for (std::size_t r = 0; r < x.size(); ++r) {
    const double xv = x[r];
    if (xv < knots.lower) {
      row = lo_val + (xv - knots.lower) * lo_der;
    } else if (xv > knots.upper) {
      row = hi_val + (xv - knots.upper) * hi_der;
    } else {
      row.setZero();
      const std::size_t mu = find_span(t, xv);
      const auto n = span_values(t, mu, xv);
      for (int j = 0; j < kOrder; ++j) row(static_cast<Eigen::Index>(mu - 3 + j)) = n[j];
    }
    out.row(static_cast<Eigen::Index>(r)) = row.tail(nb - 1).transpose() * proj;
  }
  return out;
}

}  // namespace medmenu
