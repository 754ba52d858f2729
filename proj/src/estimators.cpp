#include "medmenu/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "medmenu/rng.hpp"

namespace medmenu {

std::string_view to_string(FormulaRole role) {
  switch (role) {
    case FormulaRole::propensity: return "propensity";
    case FormulaRole::exposure_cm: return "exposure_cm";
    case FormulaRole::outcome_c1: return "outcome_c1";
    case FormulaRole::outcome_c0: return "outcome_c0";
    case FormulaRole::outcome_cm1: return "outcome_cm1";
    case FormulaRole::crossworld_c: return "crossworld_c";
    case FormulaRole::nde_c: return "nde_c";
    case FormulaRole::working: return "working";
    case FormulaRole::mediators: return "mediators";
  }
  return "?";
}

std::optional<FormulaRole> parse_formula_role(std::string_view text) {
  for (auto r : {FormulaRole::propensity, FormulaRole::exposure_cm, FormulaRole::outcome_c1, FormulaRole::outcome_c0,
                 FormulaRole::outcome_cm1, FormulaRole::crossworld_c, FormulaRole::nde_c, FormulaRole::working,
                 FormulaRole::mediators}) {
    if (to_string(r) == text) return r;
  }
  return std::nullopt;
}

bool ModelFormulas::has(FormulaRole role) const {
  switch (role) {
    case FormulaRole::propensity: return propensity.has_value();
    case FormulaRole::exposure_cm: return exposure_cm.has_value();
    case FormulaRole::outcome_c1: return outcome_c1.has_value();
    case FormulaRole::outcome_c0: return outcome_c0.has_value();
    case FormulaRole::outcome_cm1: return outcome_cm1.has_value();
    case FormulaRole::crossworld_c: return crossworld_c.has_value();
    case FormulaRole::nde_c: return nde_c.has_value();
    case FormulaRole::working: return working.has_value();
    case FormulaRole::mediators: return !mediators.empty();
  }
  return false;
}

std::string_view to_string(Component c) {
  switch (c) {
    case Component::w1: return "omega1";
    case Component::w0: return "omega0";
    case Component::wx: return "omega_x";
    case Component::wx_mpart: return "omega_x_mediator_part";
    case Component::wsx: return "omega_sx";
    case Component::y_c1: return "E[Y|C,A=1]";
    case Component::y_c0: return "E[Y|C,A=0]";
    case Component::y_cm1: return "E[Y|C,M,A=1]";
    case Component::y1m0_c: return "E[Y1M0|C]";
    case Component::med0: return "P(M|C,A=0)";
    case Component::nde_c: return "E[NDE0|C]";
  }
  return "?";
}

std::string_view to_string(Robustness r) {
  switch (r) {
    case Robustness::nonrobust: return "nonrobust";
    case Robustness::more_robust: return "more-robust";
    case Robustness::robust: return "robust";
  }
  return "?";
}

namespace {

using C = Component;

EstimatorInfo po(std::string id, Robustness r, std::vector<std::vector<C>> subsets, std::vector<C> not_allowed) {
  return {std::move(id), EstimatorKind::potential_outcomes, r, std::move(subsets), std::move(not_allowed), true};
}

EstimatorInfo eff(std::string id, Robustness r, std::vector<std::vector<C>> subsets, std::vector<C> not_allowed,
                  bool in_default = true) {
  return {std::move(id), EstimatorKind::effect, r, std::move(subsets), std::move(not_allowed), in_default};
}

std::vector<EstimatorInfo> make_registry() {
  const auto N = Robustness::nonrobust;
  const auto MR = Robustness::more_robust;
  const auto R = Robustness::robust;
  return {
      po("POs|psYobs-pxYobs", N, {{C::w1, C::w0, C::wx}}, {C::w1, C::w0, C::wx}),
      po("POs|psYobs-p0Ypred(s1)", N, {{C::w1, C::w0, C::y_cm1}}, {C::w1, C::w0, C::y_cm1}),
      po("POs|psYobs-p0Ypred(px)", MR, {{C::w1, C::w0, C::y_cm1}, {C::w1, C::w0, C::wx}}, {C::w1, C::w0}),
      po("POs|fuYpred(ss)-p0Ypred(s1)", N, {{C::w0, C::y_c1, C::y_c0, C::y_cm1}}, {C::w0, C::y_c1, C::y_c0, C::y_cm1}),
      po("POs|fuYpred(ps)-p0Ypred(px)", MR,
         {{C::w0, C::y_c1, C::y_cm1}, {C::w1, C::w0, C::y_cm1}, {C::w1, C::w0, C::wx}}, {C::w0}),
      po("POs|fuYpred(ss)-fuYpred(sx)", N, {{C::wsx, C::y_c1, C::y_c0, C::y1m0_c}},
         {C::wsx, C::y_c1, C::y_c0, C::y1m0_c}),
      po("POs|fuYpred(ps)-fuYpred(px)", MR, {{C::wx_mpart, C::y_c1, C::y_c0, C::y1m0_c}, {C::w1, C::w0, C::wx}},
         {C::wx_mpart}),
      po("POs|fuYpred(ss)-fuY2pred(s1s0)", N, {{C::y_c1, C::y_c0, C::y_cm1, C::y1m0_c}},
         {C::y_c1, C::y_c0, C::y_cm1, C::y1m0_c}),
      po("POs|fuYpred(ps)-fuY2pred(pxp0)", R,
         {{C::y_c1, C::y_c0, C::y_cm1, C::y1m0_c}, {C::w1, C::w0, C::y_cm1}, {C::w1, C::w0, C::wx}}, {}),
      po("POs|fuYpred(ss)-fuMsimYpred(s0s1)", N, {{C::med0, C::y_c1, C::y_c0, C::y_cm1}},
         {C::med0, C::y_c1, C::y_c0, C::y_cm1}),
      po("POs|fuYpred(ps)-fuMsimYpred(p0px)", MR,
         {{C::med0, C::y_c1, C::y_c0, C::y_cm1}, {C::w1, C::w0, C::med0, C::y_cm1}, {C::w1, C::w0, C::wx, C::med0}},
         {C::med0}),
      eff("NDE&NIE|psxCadj", N, {{C::w1, C::w0, C::wx}}, {C::w1, C::w0, C::wx}),
      eff("NDE|fuNDEpred(s1s0)+TE|psCadj", N, {{C::w1, C::w0, C::y_cm1, C::nde_c}},
          {C::w1, C::w0, C::y_cm1, C::nde_c}),
      eff("NDE|fuNDEpred(s1s0)+NIE|psYpred(s1)Cadj", N, {{C::w1, C::w0, C::y_cm1, C::nde_c}},
          {C::w1, C::w0, C::y_cm1, C::nde_c}),
      eff("NDE|fuNDEpred(pxp0)+NIE|psYpred(px)Cadj", MR, {{C::w1, C::w0, C::y_cm1}, {C::w1, C::w0, C::wx}},
          {C::w1, C::w0}),
      eff("NDE|fuNDEpred(s1s0)+TE|fuYpred(ss)", N, {{C::y_c1, C::y_c0, C::y_cm1, C::nde_c}},
          {C::y_c1, C::y_c0, C::y_cm1, C::nde_c}),
      eff("NDE|fuNDEpred(pxp0)+TE|fuYpred(ps)", R,
          {{C::y_c1, C::y_c0, C::y_cm1, C::nde_c}, {C::w1, C::w0, C::y_cm1}, {C::w1, C::w0, C::wx}}, {}),
      eff("NDE&NIE|psxCadj(separate)", N, {{C::w1, C::w0, C::wx}}, {C::w1, C::w0, C::wx}, false),
  };
}

}  // namespace

const std::vector<EstimatorInfo>& registry() {
  static const std::vector<EstimatorInfo> reg = make_registry();
  return reg;
}

const EstimatorInfo& estimator_info(std::string_view id) {
  for (const auto& e : registry()) {
    if (e.id == id) return e;
  }
  throw std::invalid_argument("unknown estimator '" + std::string(id) + "'");
}

std::vector<std::string> default_menu() {
  std::vector<std::string> out;
  for (const auto& e : registry()) {
    if (e.in_default_menu) out.push_back(e.id);
  }
  return out;
}

std::vector<FormulaRole> required_formulas(std::string_view id, WeightMethod crossworld) {
  using F = FormulaRole;
  estimator_info(id);  // validates the id
  std::set<F> need;
  auto wx = [&] {
    need.insert(F::propensity);
    need.insert(crossworld == WeightMethod::density_ratio ? F::mediators : F::exposure_cm);
  };
  auto has = [&](std::string_view part) { return id.find(part) != std::string_view::npos; };
  // reg part
  if (has("psYobs-") || has("Cadj")) need.insert(F::propensity);
  if (has("fuYpred(ss)") || has("fuYpred(ps)")) {
    need.insert(F::outcome_c1);
    need.insert(F::outcome_c0);
  }
  if (has("fuYpred(ps)")) need.insert(F::propensity);
  // cross / effect parts
  if (has("pxYobs") || has("(px)") || has("(pxp0)") || has("(p0px)") || has("psxCadj")) wx();
  if (has("p0Ypred") || has("fuY2pred") || has("fuMsimYpred") || has("fuNDEpred") || has("psYpred(")) {
    need.insert(F::outcome_cm1);
  }
  if (has("p0Ypred") || has("(pxp0)") || has("(p0px)")) need.insert(F::propensity);
  if (has("fuYpred(sx)")) {
    need.insert(F::crossworld_c);
    need.insert(F::exposure_cm);
  }
  if (has("fuYpred(px)") || has("fuY2pred")) need.insert(F::crossworld_c);
  if (has("fuMsimYpred")) need.insert(F::mediators);
  if (has("fuNDEpred")) need.insert(F::nde_c);
  if (has("Cadj")) need.insert(F::working);
  return {need.begin(), need.end()};
}

// ---------------------------------------------------------------------------
// Components

Components::Components(const Dataset& ds, const ModelFormulas& formulas, const MenuOptions& options,
                       std::vector<double> obs_weights)
    : ds_(ds), formulas_(formulas), options_(options), obs_(std::move(obs_weights)) {
  if (!obs_.empty() && obs_.size() != ds.n()) throw DataError("observation weights must have one entry per row");
  for (double w : obs_) {
    if (!std::isfinite(w) || w < 0.0) throw DataError("observation weights must be finite and nonnegative");
  }
  binary_outcome_ = ds.frame().column(ds.roles().outcome).is_binary();
  for (double f : options_.weight_scale) {
    if (!std::isfinite(f) || f <= 0.0) throw DataError("weight scale factors must be positive");
  }
}

namespace {

WeightSet scaled(WeightSet w, double factor) {
  if (factor != 1.0)
    for (auto& v : w.values) v *= factor;
  return w;
}

}  // namespace

template <class T, class F>
const T& Components::get(Slot<T>& slot, const char* name, F&& make) {
  log_.emplace_back(name);
  if (slot.value || slot.error) {
    log_.insert(log_.end(), slot.deps.begin(), slot.deps.end());
    if (slot.error) std::rethrow_exception(slot.error);
    return *slot.value;
  }
  const auto mark = log_.size();
  try {
    slot.value.emplace(make());
    slot.deps.assign(log_.begin() + static_cast<std::ptrdiff_t>(mark), log_.end());
  } catch (const std::exception& e) {
    slot.deps.assign(log_.begin() + static_cast<std::ptrdiff_t>(mark), log_.end());
    slot.error = std::make_exception_ptr(std::runtime_error(std::string(name) + ": " + e.what()));
    std::rethrow_exception(slot.error);
  }
  return *slot.value;
}

const FormulaSpec& Components::need(const std::optional<FormulaSpec>& f, FormulaRole role) const {
  if (!f) throw DataError("missing formula '" + std::string(to_string(role)) + "'");
  return *f;
}

SampleView Components::weighted(const std::vector<std::size_t>& rows, const std::vector<double>* analysis) const {
  SampleView v;
  v.frame = ds_.frame_ptr();
  v.rows = rows;
  if (analysis || !obs_.empty()) {
    std::vector<double> w(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) w[k] = (analysis ? (*analysis)[k] : 1.0) * obs(rows[k]);
    v.weights = std::move(w);
  }
  return v;
}

const PropensityFit& Components::propensity() {
  return get(propensity_, "propensity", [&] {
    return fit_propensity(need(formulas_.propensity, FormulaRole::propensity), ds_, obs_);
  });
}

const std::pair<WeightSet, WeightSet>& Components::ipw() {
  return get(ipw_, "ipw", [&] {
    auto w = ipw_weights(propensity().prob, ds_);
    return std::pair{scaled(std::move(w.first), options_.weight_scale[0]),
                     scaled(std::move(w.second), options_.weight_scale[1])};
  });
}

const WeightSet& Components::w1() {
  log_.emplace_back("omega1");
  return ipw().first;
}

const WeightSet& Components::w0() {
  log_.emplace_back("omega0");
  return ipw().second;
}

const std::vector<double>& Components::exposure_given_cm() {
  return get(acm_, "exposure_given_cm", [&] {
    const auto& spec = need(formulas_.exposure_cm, FormulaRole::exposure_cm);
    if (spec.response != ds_.roles().exposure) {
      throw DataError("exposure_cm formula must model the exposure '" + ds_.roles().exposure + "'");
    }
    const auto model = fit(spec, weighted(full_view(ds_).rows, nullptr), Family::binomial_logit);
    return predict_full(model, ds_);
  });
}

const WeightSet& Components::wx() {
  return get(wx_, "omega_x", [&] { return scaled(make_wx(), options_.weight_scale[2]); });
}

WeightSet Components::make_wx() {
  switch (options_.crossworld) {
    case WeightMethod::odds: return crossworld_odds(propensity().prob, exposure_given_cm(), ds_);
    case WeightMethod::density_ratio: {
      const auto& d0 = density_control(false);
      const auto& d1 = get(dens1_, "density_treated", [&] {
        return fit_density(formulas_.mediators, ds_, weighted(ds_.treated_rows(), nullptr));
      });
      const auto full = full_view(ds_);
      return crossworld_density_ratio(propensity().prob, density_at(d0, full), density_at(d1, full), ds_);
    }
    case WeightMethod::stacked:
      return crossworld_stacked(need(formulas_.exposure_cm, FormulaRole::exposure_cm), w0(), ds_, obs_).weights;
    case WeightMethod::ipw: break;
  }
  throw DataError("ipw is not a cross-world weight method");
}

const WeightSet& Components::wsx() {
  return get(wsx_, "omega_sx", [&] { return scaled(sx_weights(exposure_given_cm(), ds_), options_.weight_scale[3]); });
}

const FittedModel& Components::outcome_c1(bool pseudo) {
  return get(yc1_[pseudo], pseudo ? "outcome_c1[pseudo]" : "outcome_c1[subsample]", [&] {
    const auto& spec = need(formulas_.outcome_c1, FormulaRole::outcome_c1);
    const auto& rows = ds_.treated_rows();
    return fit(spec, weighted(rows, pseudo ? &w1().values : nullptr), outcome_family());
  });
}

const FittedModel& Components::outcome_c0(bool pseudo) {
  return get(yc0_[pseudo], pseudo ? "outcome_c0[pseudo]" : "outcome_c0[subsample]", [&] {
    const auto& spec = need(formulas_.outcome_c0, FormulaRole::outcome_c0);
    const auto& rows = ds_.control_rows();
    return fit(spec, weighted(rows, pseudo ? &w0().values : nullptr), outcome_family());
  });
}

const FittedModel& Components::outcome_cm1(bool pseudo) {
  return get(ycm1_[pseudo], pseudo ? "outcome_cm1[pseudo-crossworld]" : "outcome_cm1[subsample]", [&] {
    const auto& spec = need(formulas_.outcome_cm1, FormulaRole::outcome_cm1);
    const auto& rows = ds_.treated_rows();
    return fit(spec, weighted(rows, pseudo ? &wx().values : nullptr), outcome_family());
  });
}

const FactorizedDensity& Components::density_control(bool pseudo) {
  return get(dens0_[pseudo], pseudo ? "density_control[pseudo]" : "density_control[subsample]", [&] {
    if (formulas_.mediators.empty()) throw DataError("missing formula 'mediators'");
    return fit_density(formulas_.mediators, ds_, weighted(ds_.control_rows(), pseudo ? &w0().values : nullptr));
  });
}

std::vector<std::string> Components::take_log() {
  std::vector<std::string> out;
  for (auto& s : log_) {
    if (s == "ipw") continue;
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
  }
  log_.clear();
  return out;
}

// ---------------------------------------------------------------------------
// Building blocks

namespace {

double weighted_avg(Components& c, const std::vector<std::size_t>& rows, const std::vector<double>& values,
                    const std::vector<double>* analysis) {
  double sw = 0.0;
  double swy = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const double w = (analysis ? (*analysis)[k] : 1.0) * c.obs(rows[k]);
    sw += w;
    swy += w * values[k];
  }
  if (!(sw > 0.0)) throw DataError("weighted mean over a sample with zero total weight");
  return swy / sw;
}

std::vector<std::size_t> all_rows(const Dataset& ds) {
  std::vector<std::size_t> r(ds.n());
  std::iota(r.begin(), r.end(), std::size_t{0});
  return r;
}

double full_mean(Components& c, const std::vector<double>& pred) {
  return weighted_avg(c, all_rows(c.data()), pred, nullptr);
}

std::vector<double> gather_rows(const std::vector<double>& col, const std::vector<std::size_t>& rows) {
  std::vector<double> out(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) out[k] = col[rows[k]];
  return out;
}

SampleView rows_view(const Dataset& ds, const std::vector<std::size_t>& rows, std::vector<double> w = {}) {
  SampleView v;
  v.frame = ds.frame_ptr();
  v.rows = rows;
  if (!w.empty()) v.weights = std::move(w);
  return v;
}

std::vector<double> times_obs(Components& c, const std::vector<std::size_t>& rows, const std::vector<double>* analysis) {
  std::vector<double> w(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) w[k] = (analysis ? (*analysis)[k] : 1.0) * c.obs(rows[k]);
  return w;
}

FormulaSpec with_response(FormulaSpec spec, const std::string& response) {
  spec.response = response;
  return spec;
}

const FormulaSpec& formula(const std::optional<FormulaSpec>& f, FormulaRole role) {
  if (!f) throw DataError("missing formula '" + std::string(to_string(role)) + "'");
  return *f;
}

}  // namespace

std::pair<double, double> reg_psYobs(Components& c) {
  const auto& y = c.data().outcome();
  const auto& w1 = c.w1();
  const auto& w0 = c.w0();
  return {weighted_avg(c, w1.rows, gather_rows(y, w1.rows), &w1.values),
          weighted_avg(c, w0.rows, gather_rows(y, w0.rows), &w0.values)};
}

std::pair<double, double> reg_fuYpred(Components& c, bool pseudo) {
  const auto full = full_view(c.data());
  const double ey1 = full_mean(c, predict(c.outcome_c1(pseudo), full));
  const double ey0 = full_mean(c, predict(c.outcome_c0(pseudo), full));
  return {ey1, ey0};
}

double cross_pxYobs(Components& c) {
  const auto& wx = c.wx();
  return weighted_avg(c, wx.rows, gather_rows(c.data().outcome(), wx.rows), &wx.values);
}

double cross_p0Ypred(Components& c, bool pseudo) {
  const auto& model = c.outcome_cm1(pseudo);
  const auto& w0 = c.w0();
  const auto pred = predict(model, rows_view(c.data(), w0.rows));
  return weighted_avg(c, w0.rows, pred, &w0.values);
}

double cross_fuYpred(Components& c, bool use_px) {
  const auto& ds = c.data();
  const auto& w = use_px ? c.wx() : c.wsx();
  const auto spec = with_response(formula(c.formulas().crossworld_c, FormulaRole::crossworld_c), ds.roles().outcome);
  const auto model = fit(spec, rows_view(ds, w.rows, times_obs(c, w.rows, &w.values)), c.outcome_family());
  return full_mean(c, predict(model, full_view(ds)));
}

double cross_fuY2pred(Components& c, bool pseudo) {
  const auto& ds = c.data();
  const auto& model = c.outcome_cm1(pseudo);
  const auto& rows = ds.control_rows();
  const std::vector<double>* analysis = pseudo ? &c.w0().values : nullptr;
  const auto stage1 = predict(model, rows_view(ds, rows));
  const auto spec = formula(c.formulas().crossworld_c, FormulaRole::crossworld_c);
  const auto stage2 = fit(spec, rows_view(ds, rows, times_obs(c, rows, analysis)), c.outcome_family(), stage1);
  return full_mean(c, predict(stage2, full_view(ds)));
}

double cross_fuMsimYpred(Components& c, bool pseudo, std::uint64_t stream) {
  const auto& ds = c.data();
  const auto& density = c.density_control(pseudo);
  const auto& model = c.outcome_cm1(pseudo);
  const auto full = full_view(ds);
  const std::size_t n = ds.n();
  double total_obs = 0.0;
  for (std::size_t i = 0; i < n; ++i) total_obs += c.obs(i);
  if (!(total_obs > 0.0)) throw DataError("zero total observation weight");

  if (c.options().integration == MediatorIntegration::exact) {
    auto lattice = enumerate_binary(density, full);
    const auto pred = predict(model, full_view(std::make_shared<const Frame>(std::move(lattice.frame))));
    double s = 0.0;
    for (std::size_t r = 0; r < pred.size(); ++r) s += c.obs(r % n) * lattice.weight[r] * pred[r];
    return s / total_obs;
  }
  const int draws = c.options().n_sim;
  auto frame = std::make_shared<const Frame>(simulate(density, full, draws, stream));
  const auto pred = predict(model, full_view(frame));
  double s = 0.0;
  for (std::size_t r = 0; r < pred.size(); ++r) s += c.obs(r % n) * pred[r];
  return s / (total_obs * draws);
}

double nde_fuNDEpred(Components& c, bool pseudo) {
  const auto& ds = c.data();
  const auto& model = c.outcome_cm1(pseudo);
  const auto& rows = ds.control_rows();
  const std::vector<double>* analysis = pseudo ? &c.w0().values : nullptr;
  const auto pred = predict(model, rows_view(ds, rows));
  const auto& y = ds.outcome();
  std::vector<double> proxy(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) proxy[k] = pred[k] - y[rows[k]];
  const auto& spec = formula(c.formulas().nde_c, FormulaRole::nde_c);
  const auto view = rows_view(ds, rows, times_obs(c, rows, analysis));
  const auto effect = c.binary_outcome() ? fit_transformed_bounded(spec, view, proxy, -1.0, 1.0)
                                         : fit(spec, view, Family::gaussian_identity, proxy);
  return full_mean(c, predict(effect, full_view(ds)));
}

// ---------------------------------------------------------------------------
// Covariate adjustment

namespace {

constexpr const char* kArm = "arm";

void check_working(const FormulaSpec& working, const Dataset& ds) {
  if (working.response != ds.roles().outcome) {
    throw DataError("working model must model the outcome '" + ds.roles().outcome + "'");
  }
  bool main = false;
  for (const auto& t : working.terms) {
    if (t.involves(kArm)) {
      if (t.is_interaction()) throw DataError("working model may not interact 'arm' with other terms");
      if (t.atoms.front().is_spline()) throw DataError("working model 'arm' term must be a plain main effect");
      main = true;
      continue;
    }
    for (const auto& a : t.atoms) {
      const auto& cov = ds.roles().covariates;
      if (std::find(cov.begin(), cov.end(), a.var) == cov.end()) {
        throw DataError("working model may only use 'arm' and covariates; '" + a.var + "' is not a covariate");
      }
    }
  }
  if (!main) throw DataError("working model must contain the main term 'arm'");
  if (ds.frame().has(kArm)) throw DataError("dataset column named 'arm' clashes with the working-model arm indicator");
}

Column arm_column(const std::vector<CadjArm>& arms, std::vector<double> codes) {
  Column col{kArm, ColumnType::categorical, std::move(codes), {}};
  for (const auto& a : arms) col.levels.push_back(a.level);
  return col;
}

}  // namespace

std::vector<double> cadj_effects(Components& c, const std::vector<CadjArm>& arms, const FormulaSpec& working,
                                 Family family) {
  const auto& ds = c.data();
  check_working(working, ds);
  if (arms.size() < 2) throw DataError("covariate adjustment needs at least two arms");

  double total_obs = 0.0;
  for (std::size_t i = 0; i < ds.n(); ++i) total_obs += c.obs(i);

  std::vector<std::size_t> rows;
  std::vector<double> codes;
  std::vector<double> outcome;
  std::vector<double> weights;
  std::vector<std::pair<std::size_t, std::size_t>> span;
  for (std::size_t a = 0; a < arms.size(); ++a) {
    const auto& arm = arms[a];
    if (arm.weights.size() != arm.rows.size() || arm.outcome.size() != arm.rows.size()) {
      throw DataError("arm '" + arm.level + "': rows, weights and outcomes differ in length");
    }
    std::vector<double> w = times_obs(c, arm.rows, &arm.weights);
    const double sw = std::accumulate(w.begin(), w.end(), 0.0);
    if (!(sw > 0.0)) throw DataError("arm '" + arm.level + "' has zero total weight");
    span.emplace_back(rows.size(), arm.rows.size());
    for (std::size_t k = 0; k < arm.rows.size(); ++k) {
      rows.push_back(arm.rows[k]);
      codes.push_back(static_cast<double>(a));
      outcome.push_back(arm.outcome[k]);
      weights.push_back(w[k] * total_obs / sw);
    }
  }
  Frame stacked = ds.frame().select_rows(rows);
  Column y = stacked.column(ds.roles().outcome);
  y.values = outcome;
  stacked.replace(std::move(y));
  stacked.add(arm_column(arms, std::move(codes)));
  auto frame = std::make_shared<const Frame>(std::move(stacked));
  const SampleView view = full_view(frame).with_weights(weights);
  const FittedModel model = fit(working, view, family);

  // group mean recovery on every arm
  const auto fitted = predict(model, view);
  for (std::size_t a = 0; a < arms.size(); ++a) {
    double sy = 0.0;
    double sf = 0.0;
    for (std::size_t k = span[a].first; k < span[a].first + span[a].second; ++k) {
      sy += weights[k] * outcome[k];
      sf += weights[k] * fitted[k];
    }
    if (std::abs(sf - sy) > 1e-6 * std::max(1.0, std::abs(sy))) {
      throw GlmError(GlmError::Kind::not_converged, "working model violates group mean recovery in arm '" +
                                                        arms[a].level + "'");
    }
  }

  std::vector<double> effects;
  if (family == Family::gaussian_identity) {
    const auto& names = model.design.column_names;
    for (std::size_t a = 1; a < arms.size(); ++a) {
      const std::string name = std::string(kArm) + "[" + arms[a].level + "]";
      const auto it = std::find(names.begin(), names.end(), name);
      effects.push_back(model.coefficients(static_cast<Eigen::Index>(it - names.begin())));
    }
    return effects;
  }
  std::vector<double> means;
  for (std::size_t a = 0; a < arms.size(); ++a) {
    Frame f = ds.frame();
    f.add(arm_column(arms, std::vector<double>(ds.n(), static_cast<double>(a))));
    const auto pred = predict(model, full_view(std::make_shared<const Frame>(std::move(f))));
    means.push_back(full_mean(c, pred));
  }
  for (std::size_t a = 1; a < arms.size(); ++a) effects.push_back(means[a] - means[0]);
  return effects;
}

// ---------------------------------------------------------------------------
// Menu

namespace {

Family working_family(Components& c) {
  if (c.options().working_family) return *c.options().working_family;
  return c.outcome_family();
}

CadjArm observed_arm(Components& c, const std::string& level, const WeightSet& w) {
  return {level, w.rows, w.values, gather_rows(c.data().outcome(), w.rows)};
}

/// Pseudo control arm carrying predicted Y1M0 as its outcome.
CadjArm predicted_control_arm(Components& c, bool pseudo) {
  const auto& w0 = c.w0();
  const auto pred = predict(c.outcome_cm1(pseudo), rows_view(c.data(), w0.rows));
  return {"p0", w0.rows, w0.values, pred};
}

void set_pos(EstimateReport& r, double ey1, double ey0, double ey1m0) {
  r.ey1 = ey1;
  r.ey0 = ey0;
  r.ey1m0 = ey1m0;
  r.nde = ey1m0 - ey0;
  r.nie = ey1 - ey1m0;
  r.te = r.nde + r.nie;
}

void set_nde_te(EstimateReport& r, double nde, double te) {
  r.nde = nde;
  r.nie = te - nde;
  r.te = r.nde + r.nie;
}

void set_nde_nie(EstimateReport& r, double nde, double nie) {
  r.nde = nde;
  r.nie = nie;
  r.te = nde + nie;
}

void compute(const std::string& id, Components& c, EstimateReport& r) {
  auto reg = [&](const std::string& name) -> std::pair<double, double> {
    if (name == "psYobs") return reg_psYobs(c);
    if (name == "fuYpred(ss)") return reg_fuYpred(c, false);
    if (name == "fuYpred(ps)") return reg_fuYpred(c, true);
    throw std::invalid_argument("unknown reg| block " + name);
  };
  const std::uint64_t stream = derive_seed(c.options().seed, hash_tag(id));
  auto cross = [&](const std::string& name) -> double {
    if (name == "pxYobs") return cross_pxYobs(c);
    if (name == "p0Ypred(s1)") return cross_p0Ypred(c, false);
    if (name == "p0Ypred(px)") return cross_p0Ypred(c, true);
    if (name == "fuYpred(sx)") return cross_fuYpred(c, false);
    if (name == "fuYpred(px)") return cross_fuYpred(c, true);
    if (name == "fuY2pred(s1s0)") return cross_fuY2pred(c, false);
    if (name == "fuY2pred(pxp0)") return cross_fuY2pred(c, true);
    if (name == "fuMsimYpred(s0s1)") return cross_fuMsimYpred(c, false, stream);
    if (name == "fuMsimYpred(p0px)") return cross_fuMsimYpred(c, true, stream);
    throw std::invalid_argument("unknown cross| block " + name);
  };

  if (id.rfind("POs|", 0) == 0) {
    const auto body = id.substr(4);
    // reg part never contains '-' except as the separator
    const auto dash = body.find(")-") != std::string::npos ? body.find(")-") + 1 : body.find('-');
    const auto [ey1, ey0] = reg(body.substr(0, dash));
    const double ey1m0 = cross(body.substr(dash + 1));
    set_pos(r, ey1, ey0, ey1m0);
    if (c.options().integration == MediatorIntegration::simulate && id.find("fuMsimYpred") != std::string::npos) {
      r.diagnostics["n_sim"] = c.options().n_sim;
    }
    return;
  }

  const auto& working = formula(c.formulas().working, FormulaRole::working);
  const Family family = working_family(c);
  if (id == "NDE&NIE|psxCadj") {
    const auto e = cadj_effects(c, {observed_arm(c, "p0", c.w0()), observed_arm(c, "px", c.wx()),
                                     observed_arm(c, "p1", c.w1())},
                                working, family);
    set_nde_nie(r, e[0], e[1] - e[0]);
  } else if (id == "NDE&NIE|psxCadj(separate)") {
    const double nde = cadj_effects(c, {observed_arm(c, "p0", c.w0()), observed_arm(c, "px", c.wx())}, working,
                                    family)[0];
    const double nie = cadj_effects(c, {observed_arm(c, "px", c.wx()), observed_arm(c, "p1", c.w1())}, working,
                                    family)[0];
    set_nde_nie(r, nde, nie);
  } else if (id == "NDE|fuNDEpred(s1s0)+TE|psCadj") {
    const double nde = nde_fuNDEpred(c, false);
    const double te = cadj_effects(c, {observed_arm(c, "p0", c.w0()), observed_arm(c, "p1", c.w1())}, working,
                                   family)[0];
    set_nde_te(r, nde, te);
  } else if (id == "NDE|fuNDEpred(s1s0)+NIE|psYpred(s1)Cadj") {
    const double nde = nde_fuNDEpred(c, false);
    const double nie =
        cadj_effects(c, {predicted_control_arm(c, false), observed_arm(c, "p1", c.w1())}, working, family)[0];
    set_nde_nie(r, nde, nie);
  } else if (id == "NDE|fuNDEpred(pxp0)+NIE|psYpred(px)Cadj") {
    const double nde = nde_fuNDEpred(c, true);
    const double nie =
        cadj_effects(c, {predicted_control_arm(c, true), observed_arm(c, "p1", c.w1())}, working, family)[0];
    set_nde_nie(r, nde, nie);
  } else if (id == "NDE|fuNDEpred(s1s0)+TE|fuYpred(ss)") {
    const double nde = nde_fuNDEpred(c, false);
    const auto [ey1, ey0] = reg_fuYpred(c, false);
    r.ey1 = ey1;
    r.ey0 = ey0;
    set_nde_te(r, nde, ey1 - ey0);
  } else if (id == "NDE|fuNDEpred(pxp0)+TE|fuYpred(ps)") {
    const double nde = nde_fuNDEpred(c, true);
    const auto [ey1, ey0] = reg_fuYpred(c, true);
    r.ey1 = ey1;
    r.ey0 = ey0;
    set_nde_te(r, nde, ey1 - ey0);
  } else {
    throw std::invalid_argument("unknown estimator '" + id + "'");
  }
}

}  // namespace

EstimateReport evaluate(const std::string& id, Components& c) {
  EstimateReport r;
  r.estimator = id;
  r.robustness = estimator_info(id).robustness;
  c.take_log();
  try {
    compute(id, c, r);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.components = c.take_log();
  if (r.ok()) {
    auto add_ess = [&](const char* name, const char* key, auto get) {
      if (std::find(r.components.begin(), r.components.end(), name) != r.components.end()) {
        r.diagnostics[key] = effective_sample_size(get().values);
      }
    };
    add_ess("omega1", "ess_p1", [&]() -> const WeightSet& { return c.w1(); });
    add_ess("omega0", "ess_p0", [&]() -> const WeightSet& { return c.w0(); });
    add_ess("omega_x", "ess_px", [&]() -> const WeightSet& { return c.wx(); });
    add_ess("omega_sx", "ess_sx", [&]() -> const WeightSet& { return c.wsx(); });
    c.take_log();
  }
  return r;
}

std::vector<EstimateReport> run_menu(const MenuConfig& config, const Dataset& ds, std::vector<double> obs_weights) {
  const auto ids = config.estimators.empty() ? default_menu() : config.estimators;
  for (const auto& id : ids) estimator_info(id);
  Components c(ds, config.formulas, config.options, std::move(obs_weights));
  std::vector<EstimateReport> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(evaluate(id, c));
  return out;
}

}  // namespace medmenu
