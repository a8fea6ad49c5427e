#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "xtsc/catalog.hpp"
#include "xtsc/error.hpp"
#include "xtsc/harness.hpp"
#include "xtsc/train.hpp"

namespace xtsc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitEmptySelection = 3;
inline constexpr int kExitIo = 4;
inline constexpr int kExitInternal = 5;

int exit_code_for(ErrorCode code);

/// Effective settings of one command: defaults, then the --config document,
/// then command-line flags.
struct RunConfig {
  std::string data_root;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  bool force = false;
  std::optional<std::string> attributions;
  std::string models_dir;

  CatalogConfig catalog;
  nn::TrainConfig training;
  BenchmarkPlan plan;
  GroupFacet group_by = GroupFacet::None;
};

/// Defaults; the data root comes from XTSC_BENCH_HOME when set.
RunConfig default_config();
/// Overlays the fields present in `doc`. Unknown keys raise InvalidParameter.
void apply_config(RunConfig& config, const nlohmann::json& doc);
nlohmann::json to_json(const RunConfig& config);

/// Runs one command line (without the program name). Logs go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace xtsc::cli
