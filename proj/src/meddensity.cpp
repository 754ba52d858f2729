#include "medmenu/meddensity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "medmenu/rng.hpp"

namespace medmenu {

namespace {

constexpr double kProbFloor = 1e-12;

double clip_prob(double p) { return std::clamp(p, kProbFloor, 1.0 - kProbFloor); }

double normal_pdf(double x, double mean, double var) {
  const double z = x - mean;
  return std::exp(-0.5 * z * z / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

std::vector<std::size_t> repeat_rows(const std::vector<std::size_t>& rows, std::size_t times) {
  std::vector<std::size_t> out;
  out.reserve(rows.size() * times);
  for (std::size_t t = 0; t < times; ++t) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

}  // namespace

bool FactorizedDensity::all_binary() const {
  return std::all_of(factors.begin(), factors.end(), [](const MediatorFactor& f) { return f.binary; });
}

FactorizedDensity fit_density(const std::vector<FormulaSpec>& specs, const Dataset& ds, const SampleView& sample) {
  const auto& roles = ds.roles();
  if (specs.size() != roles.mediators.size()) {
    throw DataError("mediator density needs one formula per mediator (" + std::to_string(roles.mediators.size()) +
                    "), got " + std::to_string(specs.size()));
  }
  FactorizedDensity out;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto& spec = specs[k];
    if (spec.response != roles.mediators[k]) {
      throw DataError("mediator formula " + std::to_string(k + 1) + " must model '" + roles.mediators[k] +
                      "' (mediator order follows the declared roles)");
    }
    for (const auto& v : spec.variables()) {
      const bool covariate = std::find(roles.covariates.begin(), roles.covariates.end(), v) != roles.covariates.end();
      const auto earlier_end = roles.mediators.begin() + static_cast<std::ptrdiff_t>(k);
      const bool earlier = std::find(roles.mediators.begin(), earlier_end, v) != earlier_end;
      if (!covariate && !earlier) {
        throw DataError("mediator formula for '" + spec.response + "' may only use covariates and earlier mediators; '" +
                        v + "' is not allowed");
      }
    }
    MediatorFactor f;
    f.mediator = spec.response;
    f.binary = ds.frame().column(spec.response).is_binary();
    f.model = fit(spec, sample, f.binary ? Family::binomial_logit : Family::gaussian_identity);
    if (!f.binary && !(f.model.residual_variance > 0.0)) {
      throw DataError("mediator '" + f.mediator + "' has zero residual variance");
    }
    out.factors.push_back(std::move(f));
  }
  return out;
}

std::vector<double> density_at(const FactorizedDensity& density, const SampleView& sample) {
  std::vector<double> out(sample.size(), 1.0);
  for (const auto& f : density.factors) {
    const auto mean = predict(f.model, sample);
    const auto m = sample.gather(f.mediator);
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (f.binary) {
        const double p = clip_prob(mean[i]);
        out[i] *= m[i] > 0.5 ? p : 1.0 - p;
      } else {
        out[i] *= normal_pdf(m[i], mean[i], f.model.residual_variance);
      }
    }
  }
  return out;
}

Frame simulate(const FactorizedDensity& density, const SampleView& sample, int draws, std::uint64_t seed) {
  if (draws < 1) throw DataError("number of mediator draws must be positive");
  const std::size_t n = sample.size();
  const auto total = static_cast<std::size_t>(draws);
  auto frame = std::make_shared<Frame>(sample.frame->select_rows(repeat_rows(sample.rows, total)));
  SampleView view = full_view(std::shared_ptr<const Frame>(frame));

  for (std::size_t k = 0; k < density.factors.size(); ++k) {
    const auto& f = density.factors[k];
    const auto mean = predict(f.model, view);
    auto& col = frame->column(f.mediator);
    const double sd = std::sqrt(f.model.residual_variance);
    for (std::size_t d = 0; d < total; ++d) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = d * n + i;
        SplitMix64 rng(derive_seed(derive_seed(seed, sample.rows[i], d), k));
        col.values[r] = f.binary ? (rng.uniform() < clip_prob(mean[r]) ? 1.0 : 0.0) : mean[r] + sd * standard_normal(rng);
      }
    }
  }
  return std::move(*frame);
}

MediatorLattice enumerate_binary(const FactorizedDensity& density, const SampleView& sample) {
  if (!density.all_binary()) throw DataError("exact mediator enumeration needs all-binary mediators");
  const std::size_t k = density.factors.size();
  if (k > 16) throw DataError("too many binary mediators to enumerate");
  const std::size_t configs = std::size_t{1} << k;
  const std::size_t n = sample.size();
  auto frame = std::make_shared<Frame>(sample.frame->select_rows(repeat_rows(sample.rows, configs)));
  for (std::size_t j = 0; j < k; ++j) {
    auto& col = frame->column(density.factors[j].mediator);
    for (std::size_t c = 0; c < configs; ++c) {
      const double bit = (c >> j) & 1U ? 1.0 : 0.0;
      std::fill(col.values.begin() + static_cast<std::ptrdiff_t>(c * n),
                col.values.begin() + static_cast<std::ptrdiff_t>((c + 1) * n), bit);
    }
  }
  MediatorLattice out;
  out.weight = density_at(density, full_view(std::shared_ptr<const Frame>(frame)));
  out.frame = std::move(*frame);
  out.configurations = configs;
  return out;
}

}  // namespace medmenu
