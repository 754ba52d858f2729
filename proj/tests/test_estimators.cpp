#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "support.hpp"

using namespace medmenu;
using namespace medmenu::testing;

namespace {

const Dataset& discrete_data() {
  static const Dataset ds = generate(discrete_dgp(), 2000, 23);
  return ds;
}

const EstimateReport& find(const std::vector<EstimateReport>& reports, const std::string& id) {
  const auto it = std::find_if(reports.begin(), reports.end(), [&](const auto& r) { return r.estimator == id; });
  if (it == reports.end()) throw std::runtime_error("missing report " + id);
  return *it;
}

std::vector<std::string> pos_ids() {
  std::vector<std::string> ids;
  for (const auto& e : registry())
    if (e.kind == EstimatorKind::potential_outcomes) ids.push_back(e.id);
  return ids;
}

}  // namespace

TEST(Registry, HasElevenCombinationsSixEffectRowsAndOneVariant) {
  EXPECT_EQ(registry().size(), 18u);
  EXPECT_EQ(default_menu().size(), 17u);
  EXPECT_EQ(pos_ids().size(), 11u);
  EXPECT_EQ(estimator_info("POs|fuYpred(ps)-fuY2pred(pxp0)").robustness, Robustness::robust);
  EXPECT_EQ(estimator_info("POs|fuYpred(ps)-fuY2pred(pxp0)").subsets.size(), 3u);
  EXPECT_EQ(estimator_info("NDE|fuNDEpred(pxp0)+TE|fuYpred(ps)").subsets.size(), 3u);
  EXPECT_EQ(estimator_info("POs|psYobs-pxYobs").robustness, Robustness::nonrobust);
  EXPECT_FALSE(estimator_info("NDE&NIE|psxCadj(separate)").in_default_menu);
  EXPECT_THROW(estimator_info("POs|nonsense"), std::invalid_argument);
}

TEST(Registry, RequiredFormulasFollowTheWeightMethod) {
  auto has = [](const std::vector<FormulaRole>& v, FormulaRole r) { return std::find(v.begin(), v.end(), r) != v.end(); };
  const auto odds = required_formulas("POs|psYobs-pxYobs", WeightMethod::odds);
  EXPECT_TRUE(has(odds, FormulaRole::propensity));
  EXPECT_TRUE(has(odds, FormulaRole::exposure_cm));
  EXPECT_FALSE(has(odds, FormulaRole::mediators));
  const auto ratio = required_formulas("POs|psYobs-pxYobs", WeightMethod::density_ratio);
  EXPECT_TRUE(has(ratio, FormulaRole::mediators));
  EXPECT_FALSE(has(ratio, FormulaRole::exposure_cm));
  const auto sim = required_formulas("POs|fuYpred(ss)-fuMsimYpred(s0s1)", WeightMethod::odds);
  EXPECT_TRUE(has(sim, FormulaRole::mediators));
  EXPECT_TRUE(has(sim, FormulaRole::outcome_cm1));
  EXPECT_FALSE(has(sim, FormulaRole::propensity));
  EXPECT_TRUE(has(required_formulas("NDE&NIE|psxCadj", WeightMethod::odds), FormulaRole::working));
}

TEST(Estimators, PotentialOutcomeCombinationsMatchThePlugInOracle) {
  const auto& ds = discrete_data();
  const auto oracle = plug_in(ds);
  MenuConfig cfg;
  cfg.formulas = saturated_formulas();
  cfg.options.integration = MediatorIntegration::exact;
  cfg.estimators = pos_ids();
  for (const auto& r : run_menu(cfg, ds)) {
    ASSERT_TRUE(r.ok()) << r.estimator << ": " << r.error.value_or("");
    EXPECT_NEAR(*r.ey1, oracle.ey1, 1e-8) << r.estimator;
    EXPECT_NEAR(*r.ey0, oracle.ey0, 1e-8) << r.estimator;
    EXPECT_NEAR(*r.ey1m0, oracle.ey1m0, 1e-8) << r.estimator;
  }
}

TEST(Estimators, SimulatedMediatorIntegrationApproachesTheLattice) {
  const auto& ds = discrete_data();
  MenuConfig cfg;
  cfg.formulas = saturated_formulas();
  cfg.estimators = {"POs|fuYpred(ss)-fuMsimYpred(s0s1)"};
  cfg.options.n_sim = 400;
  const auto sim = run_menu(cfg, ds);
  cfg.options.integration = MediatorIntegration::exact;
  const auto exact = run_menu(cfg, ds);
  EXPECT_NEAR(*sim[0].ey1m0, *exact[0].ey1m0, 3e-3);
  // keyed draws: same seed, same answer
  cfg.options.integration = MediatorIntegration::simulate;
  EXPECT_EQ(run_menu(cfg, ds)[0].ey1m0, sim[0].ey1m0);
}

TEST(Estimators, CovariateFreeLinearCadjCoincidesWithWeightedMeans) {
  const auto& ds = discrete_data();
  MenuConfig cfg;
  cfg.formulas = saturated_formulas();
  cfg.formulas.working = parse_formula("Y ~ arm");
  cfg.options.working_family = Family::gaussian_identity;
  cfg.estimators = default_menu();
  const auto reports = run_menu(cfg, ds);
  const auto& base = find(reports, "POs|psYobs-pxYobs");
  const auto& cadj = find(reports, "NDE&NIE|psxCadj");
  EXPECT_NEAR(cadj.nde, base.nde, 1e-10);
  EXPECT_NEAR(cadj.nie, base.nie, 1e-10);
  EXPECT_NEAR(find(reports, "NDE|fuNDEpred(s1s0)+NIE|psYpred(s1)Cadj").nie,
              find(reports, "POs|psYobs-p0Ypred(s1)").nie, 1e-10);
  EXPECT_NEAR(find(reports, "NDE|fuNDEpred(pxp0)+NIE|psYpred(px)Cadj").nie,
              find(reports, "POs|psYobs-p0Ypred(px)").nie, 1e-10);
}

TEST(Estimators, ReportsDecomposeAndIgnoreWeightScale) {
  const auto ds = generate(robustness_dgp(), 1500, 3);
  MenuConfig cfg;
  cfg.formulas = robustness_formulas();
  cfg.estimators = default_menu();
  cfg.estimators.push_back("NDE&NIE|psxCadj(separate)");
  const auto base = run_menu(cfg, ds);
  for (const auto& r : base) {
    ASSERT_TRUE(r.ok()) << r.estimator << ": " << r.error.value_or("");
    if (r.estimator.rfind("POs|", 0) == 0) EXPECT_EQ(r.nde + r.nie, r.te) << r.estimator;
  }
  for (auto method : {WeightMethod::odds, WeightMethod::stacked}) {
    cfg.options.crossworld = method;
    cfg.options.weight_scale = {1, 1, 1, 1};
    const auto ref = run_menu(cfg, ds);
    cfg.options.weight_scale = {3.7, 0.02, 125.0, 0.5};
    const auto scaled = run_menu(cfg, ds);
    for (std::size_t k = 0; k < ref.size(); ++k) {
      EXPECT_NEAR(ref[k].nde, scaled[k].nde, 1e-10) << ref[k].estimator;
      EXPECT_NEAR(ref[k].nie, scaled[k].nie, 1e-10) << ref[k].estimator;
      EXPECT_NEAR(ref[k].te, scaled[k].te, 1e-10) << ref[k].estimator;
    }
    std::vector<double> obs(ds.n(), 4.25);
    const auto rescaled_obs = run_menu(cfg, ds, obs);
    for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(ref[k].te, rescaled_obs[k].te, 1e-10);
  }
}

TEST(Estimators, FailuresAreCapturedPerEstimator) {
  const auto& ds = discrete_data();
  MenuConfig cfg;
  cfg.formulas = saturated_formulas();
  cfg.formulas.exposure_cm.reset();
  cfg.estimators = {"POs|psYobs-pxYobs", "POs|fuYpred(ss)-p0Ypred(s1)"};
  const auto reports = run_menu(cfg, ds);
  EXPECT_FALSE(reports[0].ok());
  EXPECT_NE(reports[0].error->find("exposure_cm"), std::string::npos);
  EXPECT_TRUE(reports[1].ok());
}

TEST(Estimators, WorkingModelRulesAreEnforced) {
  const auto& ds = discrete_data();
  MenuConfig cfg;
  cfg.formulas = saturated_formulas();
  cfg.estimators = {"NDE&NIE|psxCadj"};
  for (const char* bad : {"Y ~ C1 + C2", "Y ~ arm*C1", "Y ~ arm + M"}) {
    cfg.formulas.working = parse_formula(bad);
    EXPECT_FALSE(run_menu(cfg, ds)[0].ok()) << bad;
  }
}

TEST(Estimators, ComponentsAreSharedAcrossTheMenu) {
  const auto& ds = discrete_data();
  MenuConfig cfg;
  cfg.formulas = saturated_formulas();
  cfg.estimators = default_menu();
  const auto reports = run_menu(cfg, ds);
  const auto& r = find(reports, "POs|fuYpred(ps)-fuY2pred(pxp0)");
  EXPECT_TRUE(std::find(r.components.begin(), r.components.end(), "omega_x") != r.components.end());
  EXPECT_GT(r.diagnostics.at("ess_px"), 0.0);
}
