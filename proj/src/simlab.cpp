#include "medmenu/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include <Eigen/Eigenvalues>

#include "medmenu/glm.hpp"
#include "medmenu/rng.hpp"

namespace medmenu {

namespace {

/// Law with variable names resolved to slots of a value vector laid out as
/// [covariates..., exposure, mediators...].
struct CompiledLaw {
  double intercept = 0.0;
  std::vector<std::pair<double, std::vector<int>>> terms;

  double eval(const std::vector<double>& v) const {
    double eta = intercept;
    for (const auto& [coef, idx] : terms) {
      double prod = coef;
      for (int i : idx) prod *= v[static_cast<std::size_t>(i)];
      eta += prod;
    }
    return eta;
  }
};

std::vector<std::string> slot_names(const DgpSpec& d) {
  std::vector<std::string> names;
  for (const auto& c : d.covariates) names.push_back(c.name);
  names.push_back(d.exposure);
  for (const auto& m : d.mediators) names.push_back(m.name);
  return names;
}

/// `visible` = number of leading slots the law may reference; the exposure
/// slot is excluded for the propensity law.
CompiledLaw compile(const LinearLaw& law, const std::vector<std::string>& names, std::size_t visible,
                    bool allow_exposure, std::size_t exposure_slot, const std::string& context) {
  CompiledLaw out;
  out.intercept = law.intercept;
  for (const auto& t : law.terms) {
    std::vector<int> idx;
    for (const auto& v : t.vars) {
      const auto it = std::find(names.begin(), names.end(), v);
      const auto pos = static_cast<std::size_t>(it - names.begin());
      if (it == names.end()) throw std::invalid_argument(context + ": unknown variable '" + v + "'");
      if (pos >= visible || (pos == exposure_slot && !allow_exposure)) {
        throw std::invalid_argument(context + ": variable '" + v + "' is not available at this stage");
      }
      idx.push_back(static_cast<int>(pos));
    }
    out.terms.emplace_back(t.coef, std::move(idx));
  }
  return out;
}

struct CompiledDgp {
  std::size_t p = 0;  // covariates
  CompiledLaw propensity;
  std::vector<CompiledLaw> mediators;
  CompiledLaw outcome;
};

CompiledDgp compile(const DgpSpec& d) {
  const auto names = slot_names(d);
  std::vector<std::string> sorted = names;
  sorted.push_back(d.outcome_name);
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("DGP variable names must be unique");
  }
  CompiledDgp c;
  c.p = d.covariates.size();
  if (c.p == 0) throw std::invalid_argument("DGP needs at least one covariate");
  if (d.mediators.empty()) throw std::invalid_argument("DGP needs at least one mediator");
  c.propensity = compile(d.propensity, names, c.p, false, c.p, "propensity law");
  for (std::size_t j = 0; j < d.mediators.size(); ++j) {
    if (!d.mediators[j].binary && !(d.mediators[j].sd > 0.0)) {
      throw std::invalid_argument("mediator '" + d.mediators[j].name + "' needs a positive sd");
    }
    c.mediators.push_back(
        compile(d.mediators[j].law, names, c.p + 1 + j, true, c.p, "mediator law '" + d.mediators[j].name + "'"));
  }
  c.outcome = compile(d.outcome, names, names.size(), true, c.p, "outcome law");
  if (!d.binary_outcome && !(d.outcome_sd > 0.0)) throw std::invalid_argument("outcome sd must be positive");
  return c;
}

double draw_covariate(const CovariateLaw& law, SplitMix64& rng) {
  switch (law.kind) {
    case CovariateLaw::Kind::bernoulli: return rng.uniform() < law.a ? 1.0 : 0.0;
    case CovariateLaw::Kind::normal: return law.a + law.b * standard_normal(rng);
    case CovariateLaw::Kind::uniform: return law.a + (law.b - law.a) * rng.uniform();
  }
  return 0.0;
}

void draw_mediators(const DgpSpec& d, const CompiledDgp& c, std::vector<double>& v, SplitMix64& rng) {
  for (std::size_t j = 0; j < c.mediators.size(); ++j) {
    const double eta = c.mediators[j].eval(v);
    v[c.p + 1 + j] = d.mediators[j].binary ? (rng.uniform() < expit(eta) ? 1.0 : 0.0)
                                           : eta + d.mediators[j].sd * standard_normal(rng);
  }
}

double outcome_mean(const DgpSpec& d, const CompiledDgp& c, const std::vector<double>& v) {
  const double eta = c.outcome.eval(v);
  return d.binary_outcome ? expit(eta) : eta;
}

}  // namespace

void DgpSpec::validate() const {
  const CompiledDgp c = compile(*this);
  std::vector<std::vector<double>> grids;
  for (const auto& cov : covariates) {
    std::vector<double> g;
    switch (cov.kind) {
      case CovariateLaw::Kind::bernoulli:
        if (!(cov.a > 0.0 && cov.a < 1.0)) throw std::invalid_argument("covariate '" + cov.name + "': p in (0,1)");
        g = {0.0, 1.0};
        break;
      case CovariateLaw::Kind::normal:
        if (!(cov.b > 0.0)) throw std::invalid_argument("covariate '" + cov.name + "': sd must be positive");
        for (int k = 0; k <= 20; ++k) g.push_back(cov.a - 3.0 * cov.b + 6.0 * cov.b * k / 20.0);
        break;
      case CovariateLaw::Kind::uniform:
        if (!(cov.b > cov.a)) throw std::invalid_argument("covariate '" + cov.name + "': empty range");
        for (int k = 0; k <= 20; ++k) g.push_back(cov.a + (cov.b - cov.a) * k / 20.0);
        break;
    }
    grids.push_back(std::move(g));
  }
  std::vector<double> v(c.p + 1 + mediators.size(), 0.0);
  std::vector<std::size_t> at(grids.size(), 0);
  while (true) {
    for (std::size_t j = 0; j < grids.size(); ++j) v[j] = grids[j][at[j]];
    const double p = expit(c.propensity.eval(v));
    if (p < 0.05 || p > 0.95) {
      throw std::invalid_argument("propensity " + std::to_string(p) + " outside [0.05, 0.95] on the covariate support");
    }
    std::size_t j = 0;
    while (j < at.size() && ++at[j] == grids[j].size()) at[j++] = 0;
    if (j == at.size()) break;
  }
}

bool DgpSpec::all_binary_covariates() const {
  return std::all_of(covariates.begin(), covariates.end(),
                     [](const CovariateLaw& c) { return c.kind == CovariateLaw::Kind::bernoulli; });
}

Roles DgpSpec::roles() const {
  Roles r;
  for (const auto& c : covariates) r.covariates.push_back(c.name);
  r.exposure = exposure;
  for (const auto& m : mediators) r.mediators.push_back(m.name);
  r.outcome = outcome_name;
  return r;
}

Dataset generate(const DgpSpec& dgp, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw DataError("cannot generate an empty dataset");
  const CompiledDgp c = compile(dgp);
  const auto names = slot_names(dgp);
  std::vector<std::vector<double>> cols(names.size() + 1, std::vector<double>(n));
  std::vector<double> v(names.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    SplitMix64 rng(derive_seed(seed, i));
    for (std::size_t j = 0; j < c.p; ++j) v[j] = draw_covariate(dgp.covariates[j], rng);
    v[c.p] = rng.uniform() < expit(c.propensity.eval(v)) ? 1.0 : 0.0;
    draw_mediators(dgp, c, v, rng);
    const double mu = outcome_mean(dgp, c, v);
    const double y = dgp.binary_outcome ? (rng.uniform() < mu ? 1.0 : 0.0) : mu + dgp.outcome_sd * standard_normal(rng);
    for (std::size_t j = 0; j < v.size(); ++j) cols[j][i] = v[j];
    cols.back()[i] = y;
  }
  Frame frame;
  for (std::size_t j = 0; j < names.size(); ++j) frame.add(Column{names[j], ColumnType::numeric, std::move(cols[j]), {}});
  frame.add(Column{dgp.outcome_name, ColumnType::numeric, std::move(cols.back()), {}});
  return Dataset::create(std::move(frame), dgp.roles());
}

Effects true_effects(const DgpSpec& dgp, std::size_t n_mc, std::uint64_t seed) {
  if (n_mc < 100000) throw std::invalid_argument("truth oracle needs at least 1e5 Monte-Carlo draws");
  const CompiledDgp c = compile(dgp);
  std::vector<double> v(c.p + 1 + dgp.mediators.size(), 0.0);
  double s11 = 0.0, s00 = 0.0, s10 = 0.0;
  double snde = 0.0, snde2 = 0.0, snie = 0.0, snie2 = 0.0, ste = 0.0, ste2 = 0.0;
  std::vector<double> m0(dgp.mediators.size());
  for (std::size_t i = 0; i < n_mc; ++i) {
    SplitMix64 rng(derive_seed(seed, hash_tag("truth"), i));
    for (std::size_t j = 0; j < c.p; ++j) v[j] = draw_covariate(dgp.covariates[j], rng);
    v[c.p] = 0.0;
    draw_mediators(dgp, c, v, rng);
    const double mu00 = outcome_mean(dgp, c, v);
    v[c.p] = 1.0;
    const double mu10 = outcome_mean(dgp, c, v);
    std::copy(v.begin() + static_cast<std::ptrdiff_t>(c.p + 1), v.end(), m0.begin());
    draw_mediators(dgp, c, v, rng);
    const double mu11 = outcome_mean(dgp, c, v);
    s11 += mu11;
    s00 += mu00;
    s10 += mu10;
    const double nde = mu10 - mu00;
    const double nie = mu11 - mu10;
    const double te = mu11 - mu00;
    snde += nde;
    snde2 += nde * nde;
    snie += nie;
    snie2 += nie * nie;
    ste += te;
    ste2 += te * te;
  }
  const double n = static_cast<double>(n_mc);
  auto se = [n](double s, double s2) { return std::sqrt(std::max(0.0, (s2 - s * s / n) / (n - 1.0)) / n); };
  Effects e;
  e.ey1 = s11 / n;
  e.ey0 = s00 / n;
  e.ey1m0 = s10 / n;
  e.nde = e.ey1m0 - e.ey0;
  e.nie = e.ey1 - e.ey1m0;
  e.te = e.nde + e.nie;
  e.se_nde = se(snde, snde2);
  e.se_nie = se(snie, snie2);
  e.se_te = se(ste, ste2);
  return e;
}

std::pair<std::vector<double>, std::vector<double>> gauss_hermite(int nodes) {
  if (nodes < 1) throw std::invalid_argument("quadrature needs at least one node");
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(nodes, nodes);
  for (int k = 1; k < nodes; ++k) j(k - 1, k) = j(k, k - 1) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(j);
  std::vector<double> x(static_cast<std::size_t>(nodes)), w(static_cast<std::size_t>(nodes));
  for (int k = 0; k < nodes; ++k) {
    x[static_cast<std::size_t>(k)] = es.eigenvalues()(k);
    const double v0 = es.eigenvectors()(0, k);
    w[static_cast<std::size_t>(k)] = v0 * v0;
  }
  return {x, w};
}

namespace {

double integrate_mediators(const DgpSpec& d, const CompiledDgp& c, std::vector<double>& v, std::size_t j,
                           double arm_m, double arm_y, const std::vector<double>& gx, const std::vector<double>& gw) {
  if (j == c.mediators.size()) {
    v[c.p] = arm_y;
    return outcome_mean(d, c, v);
  }
  v[c.p] = arm_m;
  const double eta = c.mediators[j].eval(v);
  const std::size_t slot = c.p + 1 + j;
  if (d.mediators[j].binary) {
    const double p = expit(eta);
    v[slot] = 1.0;
    const double hi = integrate_mediators(d, c, v, j + 1, arm_m, arm_y, gx, gw);
    v[slot] = 0.0;
    const double lo = integrate_mediators(d, c, v, j + 1, arm_m, arm_y, gx, gw);
    return p * hi + (1.0 - p) * lo;
  }
  double s = 0.0;
  for (std::size_t k = 0; k < gx.size(); ++k) {
    v[c.p] = arm_m;
    v[slot] = eta + d.mediators[j].sd * gx[k];
    s += gw[k] * integrate_mediators(d, c, v, j + 1, arm_m, arm_y, gx, gw);
  }
  return s;
}

}  // namespace

Effects exact_effects(const DgpSpec& dgp, int quadrature_nodes) {
  if (!dgp.all_binary_covariates()) throw std::invalid_argument("exact truth needs all-binary covariates");
  const CompiledDgp c = compile(dgp);
  const auto [gx, gw] = gauss_hermite(quadrature_nodes);
  std::vector<double> v(c.p + 1 + dgp.mediators.size(), 0.0);
  Effects e;
  const std::size_t cells = std::size_t{1} << c.p;
  for (std::size_t cell = 0; cell < cells; ++cell) {
    double prob = 1.0;
    for (std::size_t j = 0; j < c.p; ++j) {
      const bool on = (cell >> j) & 1U;
      v[j] = on ? 1.0 : 0.0;
      prob *= on ? dgp.covariates[j].a : 1.0 - dgp.covariates[j].a;
    }
    e.ey1 += prob * integrate_mediators(dgp, c, v, 0, 1.0, 1.0, gx, gw);
    e.ey0 += prob * integrate_mediators(dgp, c, v, 0, 0.0, 0.0, gx, gw);
    e.ey1m0 += prob * integrate_mediators(dgp, c, v, 0, 0.0, 1.0, gx, gw);
  }
  e.nde = e.ey1m0 - e.ey0;
  e.nie = e.ey1 - e.ey1m0;
  e.te = e.nde + e.nie;
  return e;
}

Effects truth_for(const DgpSpec& dgp, std::uint64_t seed) {
  return dgp.all_binary_covariates() ? exact_effects(dgp) : true_effects(dgp, 1000000, seed);
}

// ---------------------------------------------------------------------------
// Scenarios

ModelFormulas analyst_formulas(const ScenarioSpec& s) {
  ModelFormulas f = s.correct;
  auto corrupt = [&](FormulaRole role, std::optional<FormulaSpec>& spec) {
    if (s.corrupted.count(role) && spec) spec = drop_variable(*spec, s.drop);
  };
  corrupt(FormulaRole::propensity, f.propensity);
  corrupt(FormulaRole::exposure_cm, f.exposure_cm);
  corrupt(FormulaRole::outcome_c1, f.outcome_c1);
  corrupt(FormulaRole::outcome_c0, f.outcome_c0);
  corrupt(FormulaRole::outcome_cm1, f.outcome_cm1);
  corrupt(FormulaRole::crossworld_c, f.crossworld_c);
  corrupt(FormulaRole::nde_c, f.nde_c);
  if (s.corrupted.count(FormulaRole::mediators)) {
    for (auto& m : f.mediators) m = drop_variable(m, s.drop);
  }
  return f;
}

std::set<FormulaRole> component_models(Component c) {
  using F = FormulaRole;
  switch (c) {
    case Component::w1:
    case Component::w0: return {F::propensity};
    case Component::wx: return {F::propensity, F::exposure_cm};
    case Component::wx_mpart:
    case Component::wsx: return {F::exposure_cm};
    case Component::y_c1: return {F::outcome_c1};
    case Component::y_c0: return {F::outcome_c0};
    case Component::y_cm1: return {F::outcome_cm1};
    case Component::y1m0_c: return {F::crossworld_c};
    case Component::med0: return {F::mediators};
    case Component::nde_c: return {F::nde_c};
  }
  return {};
}

const std::set<FormulaRole>& corruptible_models() {
  using F = FormulaRole;
  static const std::set<FormulaRole> all{F::propensity,  F::exposure_cm,  F::outcome_c1, F::outcome_c0,
                                         F::outcome_cm1, F::crossworld_c, F::nde_c,      F::mediators};
  return all;
}

ExperimentResult run_experiment(const ScenarioSpec& scenario, const ExperimentConfig& cfg) {
  if (cfg.reps < 1) throw std::invalid_argument("reps must be positive");
  if (cfg.workers < 1) throw std::invalid_argument("workers must be positive");
  scenario.dgp.validate();
  ExperimentResult out;
  out.truth = cfg.truth ? *cfg.truth : truth_for(scenario.dgp);
  MenuConfig menu;
  menu.formulas = analyst_formulas(scenario);
  menu.options = cfg.options;
  menu.estimators = cfg.estimators.empty() ? default_menu() : cfg.estimators;
  for (const auto& id : menu.estimators) estimator_info(id);
  const std::size_t k = menu.estimators.size();
  const auto reps = static_cast<std::size_t>(cfg.reps);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::array<double, 3> truth{out.truth.nde, out.truth.nie, out.truth.te};

  out.estimates.assign(k, std::vector<std::array<double, 3>>(reps, {nan, nan, nan}));
  // covered[e][r][effect]: 1 covered, 0 not, -1 no interval
  std::vector<std::vector<std::array<int, 3>>> covered(k, std::vector<std::array<int, 3>>(reps, {-1, -1, -1}));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t r = next++; r < reps; r = next++) {
      try {
        const Dataset ds = generate(scenario.dgp, cfg.n, derive_seed(cfg.seed, hash_tag("rep"), r));
        MenuConfig rep = menu;
        rep.options.seed = derive_seed(cfg.seed, hash_tag("menu"), r);
        const auto reports = run_menu(rep, ds);
        for (std::size_t e = 0; e < k; ++e) {
          if (reports[e].ok()) out.estimates[e][r] = {reports[e].nde, reports[e].nie, reports[e].te};
        }
        if (cfg.bootstrap) {
          BootstrapConfig bc = *cfg.bootstrap;
          bc.seed = derive_seed(cfg.seed, hash_tag("boot"), r);
          bc.workers = 1;
          const auto iv = bootstrap_menu(rep, ds, reports, bc);
          for (std::size_t e = 0; e < k; ++e) {
            for (std::size_t j = 0; j < 3; ++j) {
              const auto& it = iv[e * 3 + j].interval;
              if (!reports[e].ok() || !std::isfinite(it.lower) || !std::isfinite(it.upper)) continue;
              covered[e][r][j] = it.lower <= truth[j] && truth[j] <= it.upper ? 1 : 0;
            }
          }
        }
      } catch (const std::exception&) {
        // the whole replication failed (e.g. an empty arm); counted below
      }
    }
  };
  const int workers = std::min<int>(cfg.workers, cfg.reps);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }

  static const char* kEffects[] = {"NDE0", "NIE1", "TE"};
  for (std::size_t e = 0; e < k; ++e) {
    for (std::size_t j = 0; j < 3; ++j) {
      ExperimentRow row;
      row.scenario = scenario.name;
      row.estimator = menu.estimators[e];
      row.effect = kEffects[j];
      row.truth = truth[j];
      double s = 0.0, s2 = 0.0;
      int m = 0;
      for (std::size_t r = 0; r < reps; ++r) {
        const double x = out.estimates[e][r][j];
        if (!std::isfinite(x)) continue;
        s += x;
        s2 += (x - truth[j]) * (x - truth[j]);
        ++m;
      }
      row.reps = m;
      row.failures = cfg.reps - m;
      if (m > 0) {
        row.mean = s / m;
        row.bias = row.mean - truth[j];
        row.rmse = std::sqrt(s2 / m);
        double ss = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
          const double x = out.estimates[e][r][j];
          if (std::isfinite(x)) ss += (x - row.mean) * (x - row.mean);
        }
        row.emp_se = m > 1 ? std::sqrt(ss / (m - 1)) : nan;
        row.std_bias = m > 1 ? std::abs(row.bias) / (row.emp_se / std::sqrt(static_cast<double>(m))) : nan;
      } else {
        row.mean = row.bias = row.rmse = row.emp_se = row.std_bias = nan;
      }
      if (cfg.bootstrap) {
        int hit = 0, tot = 0;
        for (std::size_t r = 0; r < reps; ++r) {
          if (covered[e][r][j] < 0) continue;
          ++tot;
          hit += covered[e][r][j];
        }
        row.coverage = tot > 0 ? static_cast<double>(hit) / tot : nan;
      }
      out.rows.push_back(std::move(row));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Presets

namespace {

LinearLaw law(double intercept, std::vector<LinearLaw::Term> terms) { return {intercept, std::move(terms)}; }

}  // namespace

DgpSpec desk_dgp() {
  DgpSpec d;
  d.covariates = {{"C1", CovariateLaw::Kind::bernoulli, 0.5, 0.0},
                  {"C2", CovariateLaw::Kind::bernoulli, 0.4, 0.0},
                  {"X", CovariateLaw::Kind::uniform, -1.5, 1.5}};
  d.propensity = law(-0.3, {{1.0, {"C1"}}, {-0.5, {"C2"}}, {0.6, {"X"}}});
  d.mediators = {
      {"M1", true, law(-0.5, {{0.8, {"C1"}}, {0.4, {"C2"}}, {0.5, {"X"}}, {1.0, {"A"}}}), 1.0},
      {"M2", false, law(0.0, {{0.4, {"C1"}}, {-0.3, {"C2"}}, {0.5, {"X"}}, {0.6, {"M1"}}, {0.8, {"A"}}}), 1.0},
  };
  d.outcome = law(-1.0, {{1.0, {"C1"}},
                         {0.4, {"C2"}},
                         {0.5, {"X"}},
                         {-0.4, {"X", "X"}},
                         {0.6, {"A"}},
                         {0.8, {"M1"}},
                         {0.5, {"M2"}}});
  return d;
}

ModelFormulas desk_formulas() {
  ModelFormulas f;
  f.propensity = parse_formula("A ~ C1 + C2 + ns(X,3)");
  f.exposure_cm = parse_formula("A ~ C1 + C2 + ns(X,3) + M1 + M2");
  f.outcome_c1 = parse_formula("Y ~ C1 + C2 + ns(X,3)");
  f.outcome_c0 = parse_formula("Y ~ C1 + C2 + ns(X,3)");
  f.outcome_cm1 = parse_formula("Y ~ C1 + C2 + ns(X,3) + M1 + M2");
  f.crossworld_c = parse_formula("Y ~ C1 + C2 + ns(X,3)");
  f.nde_c = parse_formula("Y ~ C1 + C2 + ns(X,3)");
  f.working = parse_formula("Y ~ arm + C1 + C2 + X");
  f.mediators = {parse_formula("M1 ~ C1 + C2 + X"), parse_formula("M2 ~ C1 + C2 + X + M1")};
  return f;
}

DgpSpec robustness_dgp() {
  DgpSpec d;
  d.covariates = {{"C1", CovariateLaw::Kind::bernoulli, 0.5, 0.0}, {"C2", CovariateLaw::Kind::bernoulli, 0.4, 0.0}};
  d.propensity = law(-0.3, {{2.0, {"C1"}}, {-0.6, {"C2"}}, {0.4, {"C1", "C2"}}});
  d.mediators = {
      {"M1", true, law(-0.5, {{1.0, {"C1"}}, {0.5, {"C2"}}, {1.0, {"A"}}}), 1.0},
      {"M2", false, law(0.0, {{0.5, {"C1"}}, {-0.3, {"C2"}}, {0.6, {"M1"}}, {0.8, {"A"}}}), 1.0},
  };
  d.outcome = law(-1.0, {{1.2, {"C1"}},
                         {0.4, {"C2"}},
                         {0.6, {"A"}},
                         {0.8, {"M1"}},
                         {0.5, {"M2"}},
                         {1.0, {"C1", "M1"}}});
  return d;
}

ModelFormulas robustness_formulas() {
  ModelFormulas f;
  f.propensity = parse_formula("A ~ C1*C2");
  f.exposure_cm = parse_formula("A ~ C1*C2*M1 + M2");
  f.outcome_c1 = parse_formula("Y ~ C1*C2");
  f.outcome_c0 = parse_formula("Y ~ C1*C2");
  f.outcome_cm1 = parse_formula("Y ~ C1*C2*M1 + M2");
  f.crossworld_c = parse_formula("Y ~ C1*C2");
  f.nde_c = parse_formula("Y ~ C1*C2");
  // leaves out the corruption variable so weight errors are not adjusted away
  f.working = parse_formula("Y ~ arm + C2");
  f.mediators = {parse_formula("M1 ~ C1*C2"), parse_formula("M2 ~ C1*C2*M1")};
  return f;
}

std::string_view to_string(Expectation e) { return e == Expectation::unbiased ? "unbiased" : "biased"; }

namespace {

std::set<FormulaRole> models_of(const std::vector<Component>& comps) {
  std::set<FormulaRole> out;
  for (auto c : comps) {
    const auto m = component_models(c);
    out.insert(m.begin(), m.end());
  }
  return out;
}

bool includes(const std::set<FormulaRole>& big, const std::set<FormulaRole>& small) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

std::string scenario_name(const std::set<FormulaRole>& corrupted) {
  if (corrupted.empty()) return "all-correct";
  std::string s = "wrong:";
  bool first = true;
  for (auto r : corrupted) {
    s += first ? "" : "+";
    s += to_string(r);
    first = false;
  }
  return s;
}

// nonrobust siblings of the robust rows
const std::map<std::string, std::string>& siblings() {
  static const std::map<std::string, std::string> m{
      {"POs|fuYpred(ps)-fuY2pred(pxp0)", "POs|fuYpred(ss)-fuY2pred(s1s0)"},
      {"NDE|fuNDEpred(pxp0)+TE|fuYpred(ps)", "NDE|fuNDEpred(s1s0)+TE|fuYpred(ss)"},
  };
  return m;
}

}  // namespace

std::vector<RobustnessCase> robustness_suite() {
  const auto& all = corruptible_models();
  std::vector<RobustnessCase> cases;
  auto find_or_add = [&](const std::set<FormulaRole>& corrupted, const std::string& origin) -> RobustnessCase& {
    for (auto& c : cases) {
      if (c.scenario.corrupted == corrupted) {
        c.origin += "; " + origin;
        return c;
      }
    }
    RobustnessCase c;
    c.scenario.name = scenario_name(corrupted);
    c.scenario.dgp = robustness_dgp();
    c.scenario.correct = robustness_formulas();
    c.scenario.drop = "C1";
    c.scenario.corrupted = corrupted;
    c.origin = origin;
    cases.push_back(std::move(c));
    return cases.back();
  };
  auto add_check = [](RobustnessCase& c, const std::string& id, Expectation e) {
    for (const auto& [k, v] : c.checks) {
      if (k == id) return;
    }
    c.checks.emplace_back(id, e);
  };
  static const char* kRoman[] = {"I", "II", "III", "IV"};

  for (const auto& info : registry()) {
    for (std::size_t s = 0; s < info.subsets.size(); ++s) {
      const auto correct = models_of(info.subsets[s]);
      std::set<FormulaRole> corrupted;
      std::set_difference(all.begin(), all.end(), correct.begin(), correct.end(),
                          std::inserter(corrupted, corrupted.end()));
      auto& c = find_or_add(corrupted, info.id + " set " + kRoman[s]);
      add_check(c, info.id, Expectation::unbiased);
      const auto sib = siblings().find(info.id);
      if (sib != siblings().end()) {
        const auto& sinfo = estimator_info(sib->second);
        const std::set<FormulaRole> ok_models = [&] {
          std::set<FormulaRole> o;
          std::set_difference(all.begin(), all.end(), corrupted.begin(), corrupted.end(), std::inserter(o, o.end()));
          return o;
        }();
        bool consistent = false;
        for (const auto& sub : sinfo.subsets) consistent = consistent || includes(ok_models, models_of(sub));
        add_check(c, sinfo.id, consistent ? Expectation::unbiased : Expectation::biased);
      }
    }
    for (auto comp : info.not_allowed) {
      const auto corrupted = component_models(comp);
      auto& c = find_or_add(corrupted, info.id + " not-allowed " + std::string(to_string(comp)));
      add_check(c, info.id, Expectation::biased);
    }
  }
  // every check a scenario implies for the other registry rows
  for (auto& c : cases) {
    std::set<FormulaRole> ok_models;
    std::set_difference(all.begin(), all.end(), c.scenario.corrupted.begin(), c.scenario.corrupted.end(),
                        std::inserter(ok_models, ok_models.end()));
    for (const auto& info : registry()) {
      bool consistent = false;
      for (const auto& sub : info.subsets) consistent = consistent || includes(ok_models, models_of(sub));
      if (consistent) add_check(c, info.id, Expectation::unbiased);
    }
  }
  return cases;
}

std::vector<RobustnessVerdict> judge(const RobustnessCase& c, const ExperimentResult& result) {
  std::vector<RobustnessVerdict> out;
  for (const auto& [id, expected] : c.checks) {
    RobustnessVerdict v;
    v.scenario = c.scenario.name;
    v.origin = c.origin;
    v.estimator = id;
    v.expected = expected;
    bool seen = false, finite = true;
    for (const auto& row : result.rows) {
      if (row.estimator != id) continue;
      seen = true;
      if (!std::isfinite(row.std_bias)) {
        finite = false;
        v.worst_effect = row.effect;
        v.max_std_bias = row.std_bias;
        break;
      }
      if (v.worst_effect.empty() || row.std_bias > v.max_std_bias) {
        v.worst_effect = row.effect;
        v.max_std_bias = row.std_bias;
      }
    }
    if (!seen) throw std::invalid_argument("no experiment rows for estimator '" + id + "'");
    v.pass = finite && (expected == Expectation::unbiased ? v.max_std_bias < kUnbiasedBelow
                                                          : v.max_std_bias > kBiasedAbove);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace medmenu
