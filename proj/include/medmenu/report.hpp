#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "medmenu/balance.hpp"
#include "medmenu/estimators.hpp"
#include "medmenu/inference.hpp"
#include "medmenu/simlab.hpp"

namespace medmenu {

inline constexpr const char* kToolVersion = "0.1.0";

/// Stamped into every output file.
struct Provenance {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  int workers = 1;  // recorded in report.json only, so CSVs do not depend on it
};

/// Shortest round-trip decimal; NA for NaN, Inf/-Inf for infinities.
std::string format_number(double x);

/// One row per estimator. Interval columns appear only when intervals are
/// given.
std::string estimates_csv(const Provenance& prov, const std::vector<EstimateReport>& reports,
                          const std::vector<EffectInterval>* intervals = nullptr);

std::string report_json(const Provenance& prov, const std::vector<EstimateReport>& reports,
                        const std::vector<EffectInterval>* intervals, const std::vector<WeightSummary>& weights,
                        const IngestReport& ingest, const std::vector<std::string>& warnings);

std::string balance_csv(const Provenance& prov, const BalanceReport& report);
std::string weights_csv(const Provenance& prov, const std::vector<WeightSummary>& weights);

/// Coverage column only when some row carries coverage.
std::string experiment_csv(const Provenance& prov, const std::vector<ExperimentRow>& rows);
std::string robustness_csv(const Provenance& prov, const std::vector<RobustnessVerdict>& verdicts);
std::string truth_json(const Provenance& prov, const std::vector<std::pair<std::string, Effects>>& truths);

/// Writes atomically (temp file + rename); throws std::ios_base::failure.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace medmenu
