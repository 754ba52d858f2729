#pragma once
// Shared fixtures for unit tests and the acceptance runner.

#include <array>
#include <cmath>
#include <map>

#include "medmenu/estimators.hpp"
#include "medmenu/glm.hpp"
#include "medmenu/simlab.hpp"

namespace medmenu::testing {

/// Two binary covariates, one binary mediator, binary outcome.
inline DgpSpec discrete_dgp() {
  DgpSpec d;
  d.covariates = {{"C1", CovariateLaw::Kind::bernoulli, 0.45, 0.0}, {"C2", CovariateLaw::Kind::bernoulli, 0.6, 0.0}};
  d.propensity = {-0.2, {{0.9, {"C1"}}, {-0.7, {"C2"}}, {0.5, {"C1", "C2"}}}};
  d.mediators = {{"M", true, {-0.4, {{0.8, {"C1"}}, {0.3, {"C2"}}, {1.1, {"A"}}}}, 1.0}};
  d.outcome = {-0.8, {{0.7, {"C1"}}, {0.4, {"C2"}}, {0.5, {"A"}}, {0.9, {"M"}}, {0.6, {"A", "M"}}}};
  return d;
}

inline ModelFormulas saturated_formulas() {
  ModelFormulas f;
  f.propensity = parse_formula("A ~ C1*C2");
  f.exposure_cm = parse_formula("A ~ C1*C2*M");
  f.outcome_c1 = parse_formula("Y ~ C1*C2");
  f.outcome_c0 = parse_formula("Y ~ C1*C2");
  f.outcome_cm1 = parse_formula("Y ~ C1*C2*M");
  f.crossworld_c = parse_formula("Y ~ C1*C2");
  f.nde_c = parse_formula("Y ~ C1*C2");
  f.working = parse_formula("Y ~ arm + C1 + C2");
  f.mediators = {parse_formula("M ~ C1*C2")};
  return f;
}

struct PlugIn {
  double ey1 = 0.0;
  double ey0 = 0.0;
  double ey1m0 = 0.0;
};

/// Brute-force empirical g-formula over the (C1, C2, M) cells.
inline PlugIn plug_in(const Dataset& ds) {
  const auto& f = ds.frame();
  const auto& c1 = f.column("C1").values;
  const auto& c2 = f.column("C2").values;
  const auto& m = f.column("M").values;
  const auto& a = ds.exposure();
  const auto& y = ds.outcome();
  // counts[c][a][m], sums of y alike
  double n_c[4] = {}, n_ca[4][2] = {}, n_cam[4][2][2] = {}, y_ca[4][2] = {}, y_cam[4][2][2] = {};
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const int c = static_cast<int>(c1[i]) * 2 + static_cast<int>(c2[i]);
    const int ai = static_cast<int>(a[i]);
    const int mi = static_cast<int>(m[i]);
    n_c[c] += 1;
    n_ca[c][ai] += 1;
    n_cam[c][ai][mi] += 1;
    y_ca[c][ai] += y[i];
    y_cam[c][ai][mi] += y[i];
  }
  PlugIn p;
  const double n = static_cast<double>(ds.n());
  for (int c = 0; c < 4; ++c) {
    const double pc = n_c[c] / n;
    p.ey1 += pc * y_ca[c][1] / n_ca[c][1];
    p.ey0 += pc * y_ca[c][0] / n_ca[c][0];
    for (int mi = 0; mi < 2; ++mi) {
      p.ey1m0 += pc * (n_cam[c][0][mi] / n_ca[c][0]) * (y_cam[c][1][mi] / n_cam[c][1][mi]);
    }
  }
  return p;
}

/// Exact P(A=1|C) and P(M=1|C,A) of discrete_dgp() per dataset row.
struct ExactLaw {
  std::vector<double> e;
  std::vector<double> pm1;  // P(M=1 | C, A=1)
  std::vector<double> pm0;  // P(M=1 | C, A=0)
};

inline double eval_law(const LinearLaw& law, const std::map<std::string, double>& v) {
  double eta = law.intercept;
  for (const auto& t : law.terms) {
    double x = t.coef;
    for (const auto& name : t.vars) x *= v.at(name);
    eta += x;
  }
  return eta;
}

inline ExactLaw exact_law(const DgpSpec& d, const Dataset& ds) {
  ExactLaw out;
  const auto& f = ds.frame();
  for (std::size_t i = 0; i < ds.n(); ++i) {
    std::map<std::string, double> v{{"C1", f.column("C1").values[i]}, {"C2", f.column("C2").values[i]}};
    out.e.push_back(expit(eval_law(d.propensity, v)));
    v["A"] = 1.0;
    out.pm1.push_back(expit(eval_law(d.mediators[0].law, v)));
    v["A"] = 0.0;
    out.pm0.push_back(expit(eval_law(d.mediators[0].law, v)));
  }
  return out;
}

}  // namespace medmenu::testing
