#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "medmenu/data.hpp"
#include "medmenu/estimators.hpp"
#include "medmenu/inference.hpp"
#include "medmenu/simlab.hpp"

namespace medmenu {

/// All problems found in one validation pass.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct DataConfig {
  std::filesystem::path path;  // resolved against the config file's directory
  Schema schema;
};

struct SimulateConfig {
  /// "" for a single scenario, "robustness" for the built-in misspecification suite.
  std::string preset;
  DgpSpec dgp;
  std::size_t n = 1000;
  int reps = 100;
  std::string drop = "C1";  // covariate removed from the corrupted formulas
  std::set<FormulaRole> corrupted;
  bool coverage = false;  // bootstrap intervals per replication
};

enum class Command { estimate, balance, simulate };

std::string_view to_string(Command c);

struct RunConfig {
  std::optional<DataConfig> data;
  MenuConfig menu;
  std::optional<BootstrapConfig> bootstrap;
  std::uint64_t seed = 1;
  int workers = 1;
  std::filesystem::path output_dir = "out";
  std::optional<SimulateConfig> simulate;
  std::string hash;  // FNV-1a of the canonical JSON without workers/output_dir, hex
};

/// Parses and validates a JSON run configuration for the given command.
/// Throws ConfigError listing every problem found.
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir, Command command);
RunConfig load_config(const std::filesystem::path& path, Command command);

/// Applies a seed override everywhere the seed is used.
void override_seed(RunConfig& cfg, std::uint64_t seed);

}  // namespace medmenu
