#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "medmenu/inference.hpp"
#include "medmenu/simlab.hpp"
#include "support.hpp"

using namespace medmenu;
using namespace medmenu::testing;

TEST(Bootstrap, DirichletWeightsSumToN) {
  SplitMix64 rng(1);
  for (std::size_t n : {1u, 4u, 37u, 1000u}) {
    const auto w = draw_bootstrap_weights(n, BootstrapScheme::dirichlet, rng);
    EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), static_cast<double>(n), 1e-12 * n);
    for (double v : w) EXPECT_GT(v, 0.0);
  }
  const auto m = draw_bootstrap_weights(50, BootstrapScheme::multinomial, rng);
  EXPECT_DOUBLE_EQ(std::accumulate(m.begin(), m.end(), 0.0), 50.0);
}

TEST(Bootstrap, ReplicateWeightsDependOnlyOnSeedAndIndex) {
  BootstrapConfig cfg;
  cfg.seed = 77;
  EXPECT_EQ(replicate_weights(10, cfg, 3), replicate_weights(10, cfg, 3));
  EXPECT_NE(replicate_weights(10, cfg, 3), replicate_weights(10, cfg, 4));
}

TEST(Bootstrap, IntervalsIgnoreTheWorkerCount) {
  std::vector<double> y(60);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = std::sin(static_cast<double>(i)) + 0.01 * i;
  Pipeline mean = [&](const std::vector<double>& w, int) {
    double s = 0, sw = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      s += w[i] * y[i];
      sw += w[i];
    }
    return std::vector<double>{s / sw};
  };
  const double point = std::accumulate(y.begin(), y.end(), 0.0) / y.size();
  BootstrapConfig cfg;
  cfg.replicates = 300;
  cfg.seed = 5;
  const auto one = bootstrap_ci(mean, y.size(), std::vector<double>{point}, cfg);
  cfg.workers = 4;
  const auto four = bootstrap_ci(mean, y.size(), std::vector<double>{point}, cfg);
  EXPECT_EQ(one.replicates, four.replicates);
  EXPECT_EQ(one.intervals[0].lower, four.intervals[0].lower);
  EXPECT_LT(one.intervals[0].lower, point);
  EXPECT_GT(one.intervals[0].upper, point);
  EXPECT_TRUE(one.intervals[0].reliable);
}

TEST(Bootstrap, FailedReplicatesAreCountedAndFlagged) {
  Pipeline flaky = [](const std::vector<double>&, int b) {
    if (b % 3 == 0) throw std::runtime_error("no fit");
    return std::vector<double>{static_cast<double>(b)};
  };
  BootstrapConfig cfg;
  cfg.replicates = 30;
  const auto r = bootstrap_ci(flaky, 5, std::vector<double>{1.0}, cfg);
  EXPECT_EQ(r.intervals[0].failures, 10u);
  EXPECT_FALSE(r.intervals[0].reliable);
  Pipeline wrong = [](const std::vector<double>&, int) { return std::vector<double>{1.0, 2.0}; };
  EXPECT_THROW(bootstrap_ci(wrong, 5, std::vector<double>{1.0}, cfg), std::logic_error);
  cfg.replicates = 1;
  EXPECT_THROW(bootstrap_ci(flaky, 5, std::vector<double>{1.0}, cfg), std::invalid_argument);
}

TEST(Bootstrap, PercentileIntervalUsesTypeSevenQuantiles) {
  std::vector<double> v(101);
  std::iota(v.begin(), v.end(), 0.0);
  const auto iv = percentile_interval(v, 50.0, 0.9, 0, 101);
  EXPECT_DOUBLE_EQ(iv.lower, 5.0);
  EXPECT_DOUBLE_EQ(iv.upper, 95.0);
}

TEST(Bootstrap, MenuIntervalsAreDeterministic) {
  const auto ds = generate(robustness_dgp(), 300, 8);
  MenuConfig cfg;
  cfg.formulas = robustness_formulas();
  cfg.estimators = {"POs|psYobs-pxYobs", "POs|fuYpred(ss)-fuMsimYpred(s0s1)"};
  cfg.options.n_sim = 5;
  const auto point = run_menu(cfg, ds);
  BootstrapConfig bc;
  bc.replicates = 20;
  bc.seed = 3;
  const auto a = bootstrap_menu(cfg, ds, point, bc);
  bc.workers = 3;
  const auto b = bootstrap_menu(cfg, ds, point, bc);
  ASSERT_EQ(a.size(), 6u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].interval.lower, b[k].interval.lower);
    EXPECT_EQ(a[k].interval.upper, b[k].interval.upper);
  }
}

TEST(Simlab, ExactTruthAgreesWithMonteCarlo) {
  const auto dgp = robustness_dgp();
  const auto exact = exact_effects(dgp);
  const auto mc = true_effects(dgp, 400000, 11);
  EXPECT_NEAR(exact.nde, mc.nde, 4 * mc.se_nde + 1e-4);
  EXPECT_NEAR(exact.nie, mc.nie, 4 * mc.se_nie + 1e-4);
  EXPECT_NEAR(exact.te, mc.te, 4 * mc.se_te + 1e-4);
  EXPECT_DOUBLE_EQ(exact.nde + exact.nie, exact.te);
}

TEST(Simlab, GaussHermiteIntegratesPolynomialsExactly) {
  const auto [x, w] = gauss_hermite(10);
  double m0 = 0, m2 = 0, m4 = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    m0 += w[k];
    m2 += w[k] * x[k] * x[k];
    m4 += w[k] * std::pow(x[k], 4);
  }
  EXPECT_NEAR(m0, 1.0, 1e-12);
  EXPECT_NEAR(m2, 1.0, 1e-12);
  EXPECT_NEAR(m4, 3.0, 1e-11);
}

TEST(Simlab, GenerationIsKeyedPerRow) {
  const auto a = generate(desk_dgp(), 50, 4);
  const auto b = generate(desk_dgp(), 80, 4);
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(a.outcome()[i], b.outcome()[i]);
  EXPECT_THROW(generate(desk_dgp(), 0, 4), DataError);
}

TEST(Simlab, DgpValidationCatchesBadLaws) {
  auto d = robustness_dgp();
  d.propensity.intercept = 6.0;
  EXPECT_THROW(d.validate(), std::invalid_argument);
  d = robustness_dgp();
  d.mediators[0].law.terms.push_back({1.0, {"M2"}});
  EXPECT_THROW(d.validate(), std::invalid_argument);
}

TEST(Simlab, ExperimentsIgnoreTheWorkerCount) {
  ScenarioSpec s;
  s.name = "all-correct";
  s.dgp = robustness_dgp();
  s.correct = robustness_formulas();
  ExperimentConfig cfg;
  cfg.n = 300;
  cfg.reps = 6;
  cfg.seed = 2;
  cfg.options.n_sim = 5;
  const auto a = run_experiment(s, cfg);
  cfg.workers = 3;
  const auto b = run_experiment(s, cfg);
  ASSERT_EQ(a.rows.size(), 51u);
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_EQ(a.rows[k].mean, b.rows[k].mean);
    EXPECT_EQ(a.rows[k].emp_se, b.rows[k].emp_se);
    EXPECT_FALSE(a.rows[k].coverage.has_value());
  }
}

TEST(Simlab, AnalystCorruptionDropsTheVariable) {
  ScenarioSpec s;
  s.correct = robustness_formulas();
  s.drop = "C1";
  s.corrupted = {FormulaRole::propensity, FormulaRole::mediators};
  const auto f = analyst_formulas(s);
  EXPECT_FALSE(f.propensity->references("C1"));
  EXPECT_FALSE(f.mediators[1].references("C1"));
  EXPECT_TRUE(f.exposure_cm->references("C1"));
  EXPECT_EQ(f.working->to_string(), s.correct.working->to_string());
}

TEST(Simlab, RobustnessSuiteCoversEverySubsetAndNotAllowedComponent) {
  const auto suite = robustness_suite();
  auto has_check = [&](const std::string& id, Expectation e, const std::string& origin_part) {
    for (const auto& c : suite) {
      if (c.origin.find(origin_part) == std::string::npos) continue;
      for (const auto& [k, v] : c.checks)
        if (k == id && v == e) return true;
    }
    return false;
  };
  for (const auto& info : registry()) {
    for (std::size_t s = 0; s < info.subsets.size(); ++s) {
      EXPECT_TRUE(has_check(info.id, Expectation::unbiased, info.id + " set ")) << info.id;
    }
    for (auto comp : info.not_allowed) {
      EXPECT_TRUE(has_check(info.id, Expectation::biased, info.id + " not-allowed " + std::string(to_string(comp))))
          << info.id << " " << to_string(comp);
    }
  }
  // the nonrobust siblings must fail where only the robust rows are saved
  EXPECT_TRUE(has_check("POs|fuYpred(ss)-fuY2pred(s1s0)", Expectation::biased, "POs|fuYpred(ps)-fuY2pred(pxp0) set"));
  EXPECT_TRUE(
      has_check("NDE|fuNDEpred(s1s0)+TE|fuYpred(ss)", Expectation::biased, "NDE|fuNDEpred(pxp0)+TE|fuYpred(ps) set"));
}
