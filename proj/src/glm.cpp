#include "medmenu/glm.hpp"

#include <algorithm>
#include <cmath>

namespace medmenu {

std::string_view to_string(Family family) {
  return family == Family::gaussian_identity ? "gaussian-identity" : "binomial-logit";
}

namespace {

double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu, const Eigen::VectorXd& w) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double yi = y(i);
    const double mi = mu(i);
    double d = 0.0;
    if (yi > 0.0) d += yi * std::log(yi / mi);
    if (yi < 1.0) d += (1.0 - yi) * std::log((1.0 - yi) / (1.0 - mi));
    dev += 2.0 * w(i) * d;
  }
  return dev;
}

Eigen::VectorXd expit_vec(const Eigen::VectorXd& eta) {
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) mu(i) = expit(eta(i));
  return mu;
}

}  // namespace

MatrixFit fit_matrix(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w, Family family,
                     const std::vector<std::string>& column_names, const FitOptions& options) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (y.size() != n || w.size() != n) throw GlmError(GlmError::Kind::bad_response, "design/response/weight size mismatch");

  std::vector<Eigen::Index> active;
  double wsum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(w(i)) || w(i) < 0.0) throw GlmError(GlmError::Kind::zero_weights, "weights must be finite and nonnegative");
    if (!std::isfinite(y(i))) throw GlmError(GlmError::Kind::bad_response, "non-finite response");
    if (w(i) > 0.0) {
      active.push_back(i);
      wsum += w(i);
    }
  }
  if (active.empty() || !(wsum > 0.0)) throw GlmError(GlmError::Kind::zero_weights, "all fit weights are zero");

  const auto na = static_cast<Eigen::Index>(active.size());
  Eigen::MatrixXd xa(na, p);
  Eigen::VectorXd ya(na), wa(na);
  for (Eigen::Index k = 0; k < na; ++k) {
    xa.row(k) = x.row(active[static_cast<std::size_t>(k)]);
    ya(k) = y(active[static_cast<std::size_t>(k)]);
    wa(k) = w(active[static_cast<std::size_t>(k)]);
  }
  if (family == Family::binomial_logit) {
    for (Eigen::Index k = 0; k < na; ++k) {
      if (ya(k) < 0.0 || ya(k) > 1.0) throw GlmError(GlmError::Kind::bad_response, "binomial response outside [0, 1]");
    }
  }

  const Eigen::VectorXd sw = wa.cwiseSqrt();
  const Eigen::MatrixXd xw = xa.array().colwise() * sw.array();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xw);
  qr.setThreshold(1e-10);
  if (na < p || qr.rank() < p) {
    std::string names;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index j = qr.rank(); j < p; ++j) {
      const auto col = static_cast<std::size_t>(perm(j));
      if (!names.empty()) names += ", ";
      names += col < column_names.size() ? column_names[col] : "column " + std::to_string(col);
    }
    throw GlmError(GlmError::Kind::rank_deficient, "rank-deficient design; collinear columns: " + names);
  }

  MatrixFit out;
  out.summary.rows = active.size();
  out.summary.weight_sum = wsum;
  const double ysum = wa.dot(ya);

  if (family == Family::gaussian_identity) {
    out.coefficients = qr.solve((ya.array() * sw.array()).matrix());
    const Eigen::VectorXd fitted_a = xa * out.coefficients;
    const Eigen::VectorXd r = ya - fitted_a;
    out.summary.deviance = (wa.array() * r.array().square()).sum();
    out.summary.converged = true;
    out.summary.iterations = 1;
    out.summary.mean_recovery_residual = std::abs(wa.dot(fitted_a) - ysum) / std::max(1.0, std::abs(ysum));
    out.fitted = x * out.coefficients;
    return out;
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const double ybar = std::clamp(ysum / wsum, 1e-10, 1.0 - 1e-10);
  beta(0) = logit(ybar);
  Eigen::VectorXd mu = expit_vec(xa * beta);
  double dev = binomial_deviance(ya, mu, wa);
  bool converged = false;
  int iter = 0;
  for (iter = 1; iter <= options.max_iterations; ++iter) {
    const Eigen::VectorXd var = (mu.array() * (1.0 - mu.array())).matrix();
    const Eigen::VectorXd wv = wa.cwiseProduct(var);
    const Eigen::MatrixXd xtwx = xa.transpose() * (xa.array().colwise() * wv.array()).matrix();
    const Eigen::VectorXd score = xa.transpose() * wa.cwiseProduct(ya - mu);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtwx);
    Eigen::VectorXd step = ldlt.solve(score);
    if (!step.allFinite()) throw GlmError(GlmError::Kind::separation, "IRLS step is not finite (separation)");

    double scale = 1.0;
    Eigen::VectorXd candidate;
    double new_dev = 0.0;
    for (int halving = 0; halving < 30; ++halving) {
      candidate = beta + scale * step;
      mu = expit_vec(xa * candidate);
      new_dev = binomial_deviance(ya, mu, wa);
      if (std::isfinite(new_dev) && new_dev <= dev + 1e-12 * (std::abs(dev) + wsum)) break;
      scale *= 0.5;
    }
    const double change = (scale * step).cwiseAbs().maxCoeff();
    const double dev_change = std::abs(new_dev - dev);
    beta = candidate;
    dev = new_dev;
    if (beta.cwiseAbs().maxCoeff() > options.separation_bound) {
      throw GlmError(GlmError::Kind::separation,
                     "logit coefficients diverge (|coef| > " + std::to_string(options.separation_bound) +
                         "); the data appear separated");
    }
    if (change < options.coefficient_tolerance || dev_change < options.deviance_tolerance * wsum) {
      converged = true;
      break;
    }
  }
  if (!converged) throw GlmError(GlmError::Kind::not_converged, "IRLS did not converge within the iteration cap");
  // a deviance that vanishes with fitted probabilities pinned at 0/1 means the optimum is at infinity
  const Eigen::VectorXd eta_a = xa * beta;
  for (Eigen::Index k = 0; k < na; ++k) {
    if (wa(k) > 0.0 && std::abs(eta_a(k)) > options.separation_bound) {
      throw GlmError(GlmError::Kind::separation, "fitted probabilities are numerically 0 or 1; the data appear separated");
    }
  }

  out.coefficients = beta;
  out.summary.converged = true;
  out.summary.iterations = iter;
  out.summary.deviance = dev;
  out.summary.mean_recovery_residual = std::abs(wa.dot(mu) - ysum) / std::max(1.0, std::abs(ysum));
  out.fitted = expit_vec(x * beta);
  return out;
}

namespace {

FittedModel fit_design(const FormulaSpec& spec, const SampleView& sample, Family family,
                       std::span<const double> response, const FitOptions& options) {
  if (response.size() != sample.size()) {
    throw GlmError(GlmError::Kind::bad_response, "response length does not match the fitting sample");
  }
  DesignMatrix dm = build_design(spec, sample);
  const auto n = static_cast<Eigen::Index>(sample.size());
  Eigen::VectorXd y(n), w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = response[static_cast<std::size_t>(i)];
    w(i) = sample.weight(static_cast<std::size_t>(i));
  }
  MatrixFit mf = fit_matrix(dm.matrix, y, w, family, dm.column_names, options);
  FittedModel model;
  model.spec = spec;
  model.family = family;
  model.coefficients = std::move(mf.coefficients);
  model.design = std::move(dm.info);
  model.summary = mf.summary;
  if (family == Family::gaussian_identity) model.residual_variance = mf.summary.deviance / mf.summary.weight_sum;
  return model;
}

}  // namespace

FittedModel fit(const FormulaSpec& spec, const SampleView& sample, Family family, const FitOptions& options) {
  const std::vector<double> y = sample.gather(spec.response);
  return fit_design(spec, sample, family, y, options);
}

FittedModel fit(const FormulaSpec& spec, const SampleView& sample, Family family, std::span<const double> response,
                const FitOptions& options) {
  return fit_design(spec, sample, family, response, options);
}

std::vector<double> predict(const FittedModel& model, const SampleView& sample) {
  const DesignMatrix dm = build_design(model.spec, sample, model.design);
  const Eigen::VectorXd eta = dm.matrix * model.coefficients;
  std::vector<double> out(static_cast<std::size_t>(eta.size()));
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    double v = model.family == Family::binomial_logit ? expit(eta(i)) : eta(i);
    if (model.bounded) v = model.bounded->from_unit(v);
    out[static_cast<std::size_t>(i)] = v;
  }
  return out;
}

FittedModel fit_transformed_bounded(const FormulaSpec& spec, const SampleView& sample, double lower, double upper,
                                    const FitOptions& options) {
  return fit_transformed_bounded(spec, sample, sample.gather(spec.response), lower, upper, options);
}

FittedModel fit_transformed_bounded(const FormulaSpec& spec, const SampleView& sample, std::span<const double> response,
                                    double lower, double upper, const FitOptions& options) {
  if (!(upper > lower)) throw GlmError(GlmError::Kind::bad_response, "bounded fit needs lower < upper");
  const BoundedScale scale{lower, upper};
  std::vector<double> unit(response.size());
  for (std::size_t i = 0; i < response.size(); ++i) {
    if (response[i] < lower || response[i] > upper) {
      throw GlmError(GlmError::Kind::bad_response, "response out of bounds [" + std::to_string(lower) + ", " +
                                                       std::to_string(upper) + "]");
    }
    unit[i] = scale.to_unit(response[i]);
  }
  FittedModel model = fit_design(spec, sample, Family::binomial_logit, unit, options);
  model.bounded = scale;
  return model;
}

}  // namespace medmenu
