#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numeric>

#include "medmenu/balance.hpp"
#include "medmenu/meddensity.hpp"
#include "medmenu/weights.hpp"
#include "support.hpp"

using namespace medmenu;
using namespace medmenu::testing;

namespace {

const Dataset& discrete_data() {
  static const Dataset ds = generate(discrete_dgp(), 2000, 17);
  return ds;
}

}  // namespace

TEST(Weights, IpwRecoversCellFrequenciesUnderSaturatedPropensity) {
  const auto& ds = discrete_data();
  const auto fit = fit_propensity(*saturated_formulas().propensity, ds);
  const auto [w1, w0] = ipw_weights(fit.prob, ds);
  EXPECT_EQ(w1.rows, ds.treated_rows());
  EXPECT_EQ(w0.rows, ds.control_rows());
  const auto& c1 = ds.frame().column("C1").values;
  double s = 0.0, sc = 0.0;
  for (std::size_t k = 0; k < w1.rows.size(); ++k) {
    s += w1.values[k];
    sc += w1.values[k] * c1[w1.rows[k]];
  }
  const double full = std::accumulate(c1.begin(), c1.end(), 0.0) / static_cast<double>(ds.n());
  EXPECT_NEAR(s, static_cast<double>(ds.n()), 1e-8);
  EXPECT_NEAR(sc / s, full, 1e-10);
}

TEST(Weights, DensityRatioAndOddsExpressionsAgreeUnderTheExactLaw) {
  const auto dgp = discrete_dgp();
  const auto& ds = discrete_data();
  const auto law = exact_law(dgp, ds);
  const auto& m = ds.frame().column("M").values;
  std::vector<double> d0(ds.n()), d1(ds.n()), q(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) {
    d1[i] = m[i] == 1.0 ? law.pm1[i] : 1.0 - law.pm1[i];
    d0[i] = m[i] == 1.0 ? law.pm0[i] : 1.0 - law.pm0[i];
    q[i] = law.e[i] * d1[i] / (law.e[i] * d1[i] + (1.0 - law.e[i]) * d0[i]);
  }
  const auto a = crossworld_density_ratio(law.e, d0, d1, ds);
  const auto b = crossworld_odds(law.e, q, ds);
  ASSERT_EQ(a.rows, b.rows);
  for (std::size_t k = 0; k < a.values.size(); ++k) EXPECT_NEAR(a.values[k], b.values[k], 1e-10 * b.values[k]);
}

TEST(Weights, SummariesAndTransforms) {
  WeightSet w;
  w.rows = {0, 1, 2, 3};
  w.values = {1.0, 2.0, 3.0, 6.0};
  EXPECT_DOUBLE_EQ(effective_sample_size(w.values), 144.0 / 50.0);
  const auto s = stabilize(w);
  EXPECT_DOUBLE_EQ(s.mean(), 1.0);
  EXPECT_TRUE(s.stabilized);
  const auto c = cap_weights(s, 1.5);
  EXPECT_LE(*std::max_element(c.values.begin(), c.values.end()), 1.5);
  const auto sum = summarize(w);
  EXPECT_EQ(sum.count, 4u);
  EXPECT_DOUBLE_EQ(sum.max, 6.0);
  EXPECT_DOUBLE_EQ(sum.quantiles.front(), 1.0);
  EXPECT_DOUBLE_EQ(sum.quantiles.back(), 6.0);
  EXPECT_DOUBLE_EQ(sum.ess, 144.0 / 50.0);
}

TEST(Weights, PositivityViolationIsAnError) {
  const auto& ds = discrete_data();
  std::vector<double> e(ds.n(), 0.5);
  e[ds.treated_rows().front()] = 0.0;
  EXPECT_THROW(ipw_weights(e, ds), DataError);
}

TEST(MediatorDensity, LatticeProbabilitiesSumToOne) {
  const auto& ds = discrete_data();
  const auto d = fit_density({parse_formula("M ~ C1*C2")}, ds, subsample(ds, Selector::control));
  EXPECT_TRUE(d.all_binary());
  const auto full = full_view(ds);
  const auto lat = enumerate_binary(d, full);
  ASSERT_EQ(lat.configurations, 2u);
  for (std::size_t i = 0; i < ds.n(); ++i) EXPECT_NEAR(lat.weight[i] + lat.weight[i + ds.n()], 1.0, 1e-14);
}

TEST(MediatorDensity, SimulationIsKeyedAndMatchesTheModel) {
  const auto& ds = discrete_data();
  const auto d = fit_density({parse_formula("M ~ C1*C2")}, ds, subsample(ds, Selector::control));
  const auto full = full_view(ds);
  const auto a = simulate(d, full, 50, 99);
  const auto b = simulate(d, full, 50, 99);
  EXPECT_EQ(a.column("M").values, b.column("M").values);
  ASSERT_EQ(a.rows(), ds.n() * 50);
  const auto lat = enumerate_binary(d, full);
  double sim = 0.0, exact = 0.0;
  const auto& mv = a.column("M").values;
  for (double v : mv) sim += v;
  for (std::size_t i = 0; i < ds.n(); ++i) exact += lat.weight[i + ds.n()] * lat.frame.column("M").values[i + ds.n()];
  EXPECT_NEAR(sim / mv.size(), exact / ds.n(), 0.01);
  // mediator formulas may only look backwards
  EXPECT_THROW(fit_density({parse_formula("M ~ C1 + Y")}, ds, subsample(ds, Selector::control)), std::exception);
}

TEST(Balance, IdenticalSamplesGiveExactZeros) {
  const auto& ds = discrete_data();
  const auto full = full_sample(ds);
  const auto cmp = compare_samples(ds, full, full, {"C1", "C2", "M"});
  ASSERT_EQ(cmp.size(), 3u);
  for (const auto& c : cmp) {
    EXPECT_EQ(c.smd, 0.0);
    for (std::size_t q = 0; q < 5; ++q) EXPECT_EQ(c.quantiles_a[q], c.quantiles_b[q]);
  }
}

TEST(Balance, AnchorsOnFullSampleSdAndHandlesConstantColumns) {
  Frame f;
  f.add(Column{"A", ColumnType::numeric, {1, 0, 1, 0}, {}});
  f.add(Column{"C", ColumnType::numeric, {1, 2, 3, 4}, {}});
  f.add(Column{"K", ColumnType::numeric, {5, 5, 5, 5}, {}});
  f.add(Column{"M", ColumnType::numeric, {0, 1, 0, 1}, {}});
  f.add(Column{"Y", ColumnType::numeric, {0, 1, 0, 1}, {}});
  const auto ds = Dataset::create(f, Roles{{"C", "K"}, "A", {"M"}, "Y"});
  BalanceSample a{"a", {0, 2}, {}};
  BalanceSample b{"b", {1, 3}, {}};
  const auto cmp = compare_samples(ds, a, b, {"C", "K"});
  const double sd = std::sqrt(5.0 / 3.0);
  EXPECT_NEAR(cmp[0].smd, (2.0 - 3.0) / sd, 1e-12);
  EXPECT_EQ(cmp[1].smd, 0.0);
  BalanceSample w{"w", {0, 1}, {3.0, 1.0}};
  EXPECT_NEAR(compare_samples(ds, w, b, {"C"})[0].mean_a, 1.25, 1e-12);
}

TEST(Balance, WeightedQuantileUsesCumulativeWeight) {
  const std::vector<double> v{3, 1, 2};
  const std::vector<double> w{1, 1, 2};
  EXPECT_DOUBLE_EQ(weighted_quantile(v, w, 0.25), 1.0);
  EXPECT_DOUBLE_EQ(weighted_quantile(v, w, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(weighted_quantile(v, w, 0.76), 3.0);
}

TEST(Balance, TableListsExpectedComparisonsAndSummaries) {
  const auto& ds = discrete_data();
  const auto f = saturated_formulas();
  MenuOptions opt;
  Components c(ds, f, opt);
  const auto rep = balance_table(ds, c.w1(), c.w0(), &c.wx(), &c.wsx());
  EXPECT_EQ(rep.weights.size(), 4u);
  EXPECT_LT(rep.max_abs_smd("p1", "full"), 1e-10);
  EXPECT_LT(rep.max_abs_smd("p0", "full"), 1e-10);
  EXPECT_LT(rep.max_abs_smd("px", "p0"), 1e-10);  // saturated: exact balance on C and M
  EXPECT_LT(rep.max_abs_smd("sx", "control"), 1e-10);
}
