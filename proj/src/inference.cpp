#include "medmenu/inference.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "medmenu/spline.hpp"

namespace medmenu {

std::string_view to_string(BootstrapScheme s) {
  return s == BootstrapScheme::dirichlet ? "dirichlet" : "multinomial";
}

void BootstrapConfig::validate() const {
  if (replicates < 2) throw std::invalid_argument("bootstrap replicates must be at least 2");
  if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("bootstrap level must lie in (0, 1)");
  if (workers < 1) throw std::invalid_argument("workers must be at least 1");
}

std::vector<double> draw_bootstrap_weights(std::size_t n, BootstrapScheme scheme, SplitMix64& rng) {
  std::vector<double> w(n, 0.0);
  if (n == 0) return w;
  if (scheme == BootstrapScheme::dirichlet) {
    double s = 0.0;
    for (auto& v : w) {
      v = -std::log(rng.uniform());
      s += v;
    }
    const double scale = static_cast<double>(n) / s;
    for (auto& v : w) v *= scale;
    return w;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
    w[std::min(k, n - 1)] += 1.0;
  }
  return w;
}

std::vector<double> replicate_weights(std::size_t n, const BootstrapConfig& cfg, int b) {
  SplitMix64 rng(derive_seed(cfg.seed, hash_tag("bootstrap"), static_cast<std::uint64_t>(b)));
  return draw_bootstrap_weights(n, cfg.scheme, rng);
}

Interval percentile_interval(std::vector<double> values, double estimate, double level, std::size_t failures,
                             std::size_t replicates) {
  Interval out;
  out.estimate = estimate;
  out.failures = failures;
  out.reliable = static_cast<double>(failures) <= kMaxFailureShare * static_cast<double>(replicates);
  if (values.empty()) {
    out.lower = out.upper = std::numeric_limits<double>::quiet_NaN();
    out.reliable = false;
    return out;
  }
  const double alpha = (1.0 - level) / 2.0;
  out.lower = quantile_linear(values, alpha);
  out.upper = quantile_linear(std::move(values), 1.0 - alpha);
  return out;
}

BootstrapResult bootstrap_ci(const Pipeline& pipeline, std::size_t n, std::span<const double> point,
                             const BootstrapConfig& cfg) {
  cfg.validate();
  const auto B = static_cast<std::size_t>(cfg.replicates);
  const std::size_t k = point.size();
  BootstrapResult out;
  out.replicates.assign(B, std::vector<double>(k, std::numeric_limits<double>::quiet_NaN()));

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t b = next++; b < B; b = next++) {
      const auto w = replicate_weights(n, cfg, static_cast<int>(b));
      std::vector<double> stats;
      bool ok = false;
      try {
        stats = pipeline(w, static_cast<int>(b));
        ok = true;
      } catch (const std::exception&) {
        // whole replicate failed; stays NaN
      }
      if (!ok) continue;
      if (stats.size() != k) throw std::logic_error("pipeline returned the wrong number of statistics");
      out.replicates[b] = std::move(stats);
    }
  };
  const int workers = std::min<int>(cfg.workers, static_cast<int>(B));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex mu;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        try {
          work();
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  for (std::size_t j = 0; j < k; ++j) {
    std::vector<double> values;
    values.reserve(B);
    for (std::size_t b = 0; b < B; ++b) {
      if (std::isfinite(out.replicates[b][j])) values.push_back(out.replicates[b][j]);
    }
    const std::size_t failures = B - values.size();
    out.intervals.push_back(percentile_interval(std::move(values), point[j], cfg.level, failures, B));
  }
  return out;
}

std::vector<EffectInterval> bootstrap_menu(const MenuConfig& config, const Dataset& ds,
                                           const std::vector<EstimateReport>& point, const BootstrapConfig& cfg) {
  MenuConfig menu = config;
  menu.estimators.clear();
  for (const auto& r : point) menu.estimators.push_back(r.estimator);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> estimates;
  for (const auto& r : point) {
    estimates.push_back(r.ok() ? r.nde : nan);
    estimates.push_back(r.ok() ? r.nie : nan);
    estimates.push_back(r.ok() ? r.te : nan);
  }
  Pipeline pipe = [&](const std::vector<double>& w, int b) {
    MenuConfig rep = menu;
    rep.options.seed = derive_seed(derive_seed(cfg.seed, hash_tag("replicate-sim")), static_cast<std::uint64_t>(b));
    const auto reports = run_menu(rep, ds, w);
    std::vector<double> stats;
    for (const auto& r : reports) {
      stats.push_back(r.ok() ? r.nde : nan);
      stats.push_back(r.ok() ? r.nie : nan);
      stats.push_back(r.ok() ? r.te : nan);
    }
    return stats;
  };
  const auto result = bootstrap_ci(pipe, ds.n(), estimates, cfg);
  std::vector<EffectInterval> out;
  static const char* kEffects[] = {"NDE0", "NIE1", "TE"};
  for (std::size_t i = 0; i < point.size(); ++i) {
    for (std::size_t e = 0; e < 3; ++e) {
      out.push_back({point[i].estimator, kEffects[e], result.intervals[i * 3 + e]});
    }
  }
  return out;
}

}  // namespace medmenu
