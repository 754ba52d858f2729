#include "medmenu/weights.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "medmenu/spline.hpp"

namespace medmenu {

std::string_view to_string(WeightTarget target) {
  switch (target) {
    case WeightTarget::p1: return "p1";
    case WeightTarget::p0: return "p0";
    case WeightTarget::px: return "px";
    case WeightTarget::sx: return "sx";
  }
  return "?";
}

std::string_view to_string(WeightMethod method) {
  switch (method) {
    case WeightMethod::ipw: return "ipw";
    case WeightMethod::density_ratio: return "expr1-density-ratio";
    case WeightMethod::odds: return "expr2-odds";
    case WeightMethod::stacked: return "expr3-stacked";
  }
  return "?";
}

double WeightSet::mean() const {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

namespace {

void check_per_row(std::span<const double> v, const Dataset& ds, const char* what) {
  if (v.size() != ds.n()) {
    throw DataError(std::string(what) + ": expected one value per dataset row");
  }
}

void check_weights(const WeightSet& w) {
  for (double v : w.values) {
    if (!std::isfinite(v) || !(v > 0.0)) {
      throw DataError("weight set " + std::string(to_string(w.target)) + " has a non-finite or non-positive weight");
    }
  }
}

}  // namespace

PropensityFit fit_propensity(const FormulaSpec& spec, const Dataset& ds, std::span<const double> obs_weights) {
  if (spec.response != ds.roles().exposure) {
    throw DataError("propensity formula response must be the exposure '" + ds.roles().exposure + "'");
  }
  SampleView view = full_view(ds);
  if (!obs_weights.empty()) view = view.with_weights({obs_weights.begin(), obs_weights.end()});
  PropensityFit out;
  out.model = fit(spec, view, Family::binomial_logit);
  out.prob = predict(out.model, full_view(ds));
  std::size_t extreme = 0;
  for (double p : out.prob) {
    if (p >= 1.0 - 1e-12 || p <= 1e-12) ++extreme;
  }
  if (extreme > 0) {
    out.warnings.push_back("positivity: " + std::to_string(extreme) + " unit(s) with propensity within 1e-12 of 0 or 1");
  }
  return out;
}

std::pair<WeightSet, WeightSet> ipw_weights(std::span<const double> propensity, const Dataset& ds) {
  check_per_row(propensity, ds, "ipw_weights");
  WeightSet w1{WeightTarget::p1, WeightMethod::ipw, ds.treated_rows(), {}, false, {"propensity"}};
  WeightSet w0{WeightTarget::p0, WeightMethod::ipw, ds.control_rows(), {}, false, {"propensity"}};
  for (std::size_t r : w1.rows) w1.values.push_back(1.0 / propensity[r]);
  for (std::size_t r : w0.rows) w0.values.push_back(1.0 / (1.0 - propensity[r]));
  check_weights(w1);
  check_weights(w0);
  return {std::move(w1), std::move(w0)};
}

WeightSet crossworld_density_ratio(std::span<const double> propensity, std::span<const double> density_control,
                                   std::span<const double> density_treated, const Dataset& ds) {
  check_per_row(propensity, ds, "crossworld_density_ratio");
  check_per_row(density_control, ds, "crossworld_density_ratio");
  check_per_row(density_treated, ds, "crossworld_density_ratio");
  WeightSet wx{WeightTarget::px, WeightMethod::density_ratio, ds.treated_rows(), {}, false,
               {"propensity", "mediator-density(control)", "mediator-density(treated)"}};
  for (std::size_t r : wx.rows) {
    if (!(density_treated[r] > 0.0)) throw DataError("density ratio: zero treated-arm mediator density");
    wx.values.push_back(density_control[r] / density_treated[r] / propensity[r]);
  }
  check_weights(wx);
  return wx;
}

WeightSet crossworld_odds(std::span<const double> propensity, std::span<const double> prob_treated_given_cm,
                          const Dataset& ds) {
  check_per_row(propensity, ds, "crossworld_odds");
  check_per_row(prob_treated_given_cm, ds, "crossworld_odds");
  WeightSet wx{WeightTarget::px, WeightMethod::odds, ds.treated_rows(), {}, false,
               {"propensity", "exposure-given-cm"}};
  for (std::size_t r : wx.rows) {
    const double q = prob_treated_given_cm[r];
    wx.values.push_back((1.0 - q) / q / (1.0 - propensity[r]));
  }
  check_weights(wx);
  return wx;
}

StackedCrossworld crossworld_stacked(const FormulaSpec& membership_spec, const WeightSet& omega0, const Dataset& ds,
                                     std::span<const double> obs_weights) {
  if (omega0.target != WeightTarget::p0) throw DataError("stacked cross-world weights need pseudo-control weights");
  if (!obs_weights.empty()) check_per_row(obs_weights, ds, "crossworld_stacked");
  const auto& treated = ds.treated_rows();
  std::vector<std::size_t> rows = treated;
  rows.insert(rows.end(), omega0.rows.begin(), omega0.rows.end());
  Frame stacked = ds.frame().select_rows(rows);
  const std::string member = ".pseudo_control";
  Column m{member, ColumnType::numeric, std::vector<double>(rows.size(), 0.0), {}};
  std::fill(m.values.begin() + static_cast<std::ptrdiff_t>(treated.size()), m.values.end(), 1.0);
  stacked.add(std::move(m));

  std::vector<double> w;
  w.reserve(rows.size());
  for (std::size_t r : treated) w.push_back(obs_weights.empty() ? 1.0 : obs_weights[r]);
  // pseudo-controls carry the full-sample mass, so the fit ignores the scale of omega0
  double total = 0.0, pseudo = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) total += obs_weights.empty() ? 1.0 : obs_weights[i];
  for (std::size_t k = 0; k < omega0.rows.size(); ++k) {
    const double o = obs_weights.empty() ? 1.0 : obs_weights[omega0.rows[k]];
    w.push_back(o * omega0.values[k]);
    pseudo += w.back();
  }
  if (!(pseudo > 0.0)) throw DataError("pseudo-control weights have zero mass");
  for (std::size_t k = treated.size(); k < w.size(); ++k) w[k] *= total / pseudo;
  FormulaSpec spec = membership_spec;
  spec.response = member;
  auto frame = std::make_shared<const Frame>(std::move(stacked));
  SampleView view = full_view(frame).with_weights(std::move(w));

  StackedCrossworld out;
  out.membership_model = fit(spec, view, Family::binomial_logit);
  SampleView treated_part = full_view(frame);
  treated_part.rows.resize(treated.size());
  const auto p = predict(out.membership_model, treated_part);
  out.weights = WeightSet{WeightTarget::px, WeightMethod::stacked, treated, {}, false,
                          {"propensity", "stacked-membership"}};
  out.weights.values.reserve(p.size());
  for (double v : p) out.weights.values.push_back(v / (1.0 - v));
  check_weights(out.weights);
  return out;
}

WeightSet sx_weights(std::span<const double> prob_treated_given_cm, const Dataset& ds) {
  check_per_row(prob_treated_given_cm, ds, "sx_weights");
  WeightSet w{WeightTarget::sx, WeightMethod::odds, ds.treated_rows(), {}, false, {"exposure-given-cm"}};
  for (std::size_t r : w.rows) {
    const double q = prob_treated_given_cm[r];
    w.values.push_back((1.0 - q) / q);
  }
  check_weights(w);
  return w;
}

WeightSet stabilize(WeightSet w) {
  const double m = w.mean();
  if (!(m > 0.0)) throw DataError("cannot stabilize an empty or zero weight set");
  for (double& v : w.values) v /= m;
  w.stabilized = true;
  return w;
}

WeightSet cap_weights(WeightSet w, double cap) {
  if (!(cap > 0.0)) throw DataError("weight cap must be positive");
  const double m = w.mean();
  const double limit = w.stabilized ? cap : cap * m;
  for (double& v : w.values) v = std::min(v, limit);
  return w;
}

double effective_sample_size(std::span<const double> w) {
  double s = 0.0;
  double s2 = 0.0;
  for (double v : w) {
    s += v;
    s2 += v * v;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

WeightSummary summarize(const WeightSet& w) {
  WeightSummary s;
  s.target = w.target;
  s.count = w.values.size();
  if (w.values.empty()) return s;
  s.mean = w.mean();
  s.max = *std::max_element(w.values.begin(), w.values.end());
  s.ess = effective_sample_size(w.values);
  for (std::size_t i = 0; i < kWeightQuantiles.size(); ++i) s.quantiles[i] = quantile_linear(w.values, kWeightQuantiles[i]);
  return s;
}

PseudoSample make_pseudo_sample(const Dataset& ds, const WeightSet& w, std::span<const double> obs_weights) {
  PseudoSample ps;
  ps.view.frame = ds.frame_ptr();
  ps.view.rows = w.rows;
  std::vector<double> values = w.values;
  if (!obs_weights.empty()) {
    check_per_row(obs_weights, ds, "make_pseudo_sample");
    for (std::size_t k = 0; k < values.size(); ++k) values[k] *= obs_weights[w.rows[k]];
  }
  ps.view.weights = std::move(values);
  switch (w.target) {
    case WeightTarget::p1:
      ps.view.selector = Selector::treated;
      ps.identity = PseudoIdentity::pseudo_treated;
      break;
    case WeightTarget::p0:
      ps.view.selector = Selector::control;
      ps.identity = PseudoIdentity::pseudo_control;
      break;
    case WeightTarget::px:
      ps.view.selector = Selector::treated;
      ps.identity = PseudoIdentity::pseudo_crossworld;
      break;
    case WeightTarget::sx:
      ps.view.selector = Selector::treated;
      ps.identity = PseudoIdentity::pseudo_crossworld_subsample;
      break;
  }
  return ps;
}

std::vector<double> predict_full(const FittedModel& model, const Dataset& ds) { return predict(model, full_view(ds)); }

}  // namespace medmenu
