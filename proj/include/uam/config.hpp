#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "uam/baselines.hpp"
#include "uam/ctde.hpp"

namespace uam {

// Everything a run needs: trainer settings (world, aircraft and battery
// included), the algorithm, the seed list and the output root.
struct ExperimentConfig {
  TrainConfig train;
  BenchmarkKind algorithm = BenchmarkKind::CommNetCtde;
  std::vector<BenchmarkKind> sweep_algorithms{std::begin(kAllBenchmarks), std::end(kAllBenchmarks)};
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "runs";

  void validate() const;  // throws ConfigError
};

// INI text with sections [world] [vertiports] [aircraft] [battery]
// [training] [algorithm]. Keys absent from the text keep their value in
// `base`. Unknown sections or keys throw UnknownKeyError, malformed values
// InvalidValueError, malformed syntax ParseError.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path);  // IoError when unreadable

// Every effective setting, in a form parse_config reads back unchanged.
std::string render_config(const ExperimentConfig& config);

// Names of all recognized keys as "section.key".
std::vector<std::string> config_keys();

}  // namespace uam
