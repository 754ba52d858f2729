#include "medmenu/balance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace medmenu {

BalanceSample full_sample(const Dataset& ds) {
  BalanceSample s{"full", {}, {}};
  s.rows.resize(ds.n());
  std::iota(s.rows.begin(), s.rows.end(), std::size_t{0});
  return s;
}

BalanceSample pseudo_sample(const std::string& name, const WeightSet& w) { return {name, w.rows, w.values}; }

double weighted_quantile(std::span<const double> values, std::span<const double> weights, double p) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  auto w = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) total += w(i);
  double cum = 0.0;
  for (std::size_t i : order) {
    cum += w(i);
    if (cum >= p * total * (1.0 - 1e-12)) return values[i];
  }
  return values[order.back()];
}

namespace {

struct Indicator {
  std::string name;
  std::vector<double> values;  // per dataset row
};

std::vector<Indicator> expand(const Dataset& ds, const std::vector<std::string>& variables) {
  std::vector<Indicator> out;
  for (const auto& v : variables) {
    const Column& col = ds.frame().column(v);
    if (!col.is_categorical()) {
      out.push_back({v, col.values});
      continue;
    }
    for (std::size_t l = 0; l < col.levels.size(); ++l) {
      Indicator ind{v + "[" + col.levels[l] + "]", std::vector<double>(col.values.size())};
      for (std::size_t i = 0; i < col.values.size(); ++i) ind.values[i] = col.values[i] == static_cast<double>(l) ? 1.0 : 0.0;
      out.push_back(std::move(ind));
    }
  }
  return out;
}

double sample_sd(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

struct Summary {
  double mean = 0.0;
  std::array<double, 5> quantiles{};
};

Summary summarize_sample(const BalanceSample& s, const std::vector<double>& x) {
  std::vector<double> v(s.rows.size());
  for (std::size_t k = 0; k < s.rows.size(); ++k) v[k] = x[s.rows[k]];
  Summary out;
  double sw = 0.0;
  double swx = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double w = s.weights.empty() ? 1.0 : s.weights[k];
    sw += w;
    swx += w * v[k];
  }
  out.mean = sw > 0.0 ? swx / sw : std::numeric_limits<double>::quiet_NaN();
  for (std::size_t q = 0; q < kBalanceQuantiles.size(); ++q) {
    out.quantiles[q] = weighted_quantile(v, s.weights, kBalanceQuantiles[q]);
  }
  return out;
}

double standardized(double diff, double sd) {
  if (sd > 0.0) return diff / sd;
  if (diff == 0.0) return 0.0;
  return diff > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
}

}  // namespace

std::vector<BalanceComparison> compare_samples(const Dataset& ds, const BalanceSample& a, const BalanceSample& b,
                                               const std::vector<std::string>& variables) {
  std::vector<BalanceComparison> out;
  for (const auto& ind : expand(ds, variables)) {
    const Summary sa = summarize_sample(a, ind.values);
    const Summary sb = summarize_sample(b, ind.values);
    BalanceComparison c;
    c.sample_a = a.name;
    c.sample_b = b.name;
    c.variable = ind.name;
    c.mean_a = sa.mean;
    c.mean_b = sb.mean;
    c.smd = standardized(sa.mean - sb.mean, sample_sd(ind.values));
    c.quantiles_a = sa.quantiles;
    c.quantiles_b = sb.quantiles;
    out.push_back(std::move(c));
  }
  return out;
}

double BalanceReport::max_abs_smd(const std::string& a, const std::string& b,
                                  const std::vector<std::string>& variables) const {
  double m = 0.0;
  for (const auto& c : comparisons) {
    if (c.sample_a != a || c.sample_b != b) continue;
    if (!variables.empty()) {
      const auto base = c.variable.substr(0, c.variable.find('['));
      if (std::find(variables.begin(), variables.end(), base) == variables.end()) continue;
    }
    m = std::max(m, std::abs(c.smd));
  }
  return m;
}

BalanceReport balance_table(const Dataset& ds, const WeightSet& w1, const WeightSet& w0, const WeightSet* wx,
                            const WeightSet* wsx) {
  const auto& roles = ds.roles();
  std::vector<std::string> cm = roles.covariates;
  cm.insert(cm.end(), roles.mediators.begin(), roles.mediators.end());

  BalanceReport report;
  const BalanceSample full = full_sample(ds);
  const BalanceSample p1 = pseudo_sample("p1", w1);
  const BalanceSample p0 = pseudo_sample("p0", w0);
  auto append = [&](std::vector<BalanceComparison> rows) {
    report.comparisons.insert(report.comparisons.end(), std::make_move_iterator(rows.begin()),
                              std::make_move_iterator(rows.end()));
  };
  append(compare_samples(ds, p1, full, roles.covariates));
  append(compare_samples(ds, p0, full, roles.covariates));
  if (wx) append(compare_samples(ds, pseudo_sample("px", *wx), full, roles.covariates));
  append(compare_samples(ds, p1, p0, roles.covariates));
  if (wx) append(compare_samples(ds, pseudo_sample("px", *wx), p0, cm));
  if (wsx) {
    const BalanceSample control{"control", ds.control_rows(), {}};
    append(compare_samples(ds, pseudo_sample("sx", *wsx), control, cm));
  }

  for (const auto& ind : expand(ds, cm)) report.anchor_sd.emplace_back(ind.name, sample_sd(ind.values));
  report.weights.push_back(summarize(w1));
  report.weights.push_back(summarize(w0));
  if (wx) report.weights.push_back(summarize(*wx));
  if (wsx) report.weights.push_back(summarize(*wsx));
  return report;
}

}  // namespace medmenu
