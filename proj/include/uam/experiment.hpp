#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uam/config.hpp"
#include "uam/metrics.hpp"

namespace uam {

// File names inside <out>/<algorithm>/<seed>/.
inline constexpr const char* kConfigEchoFile = "config_echo.ini";
inline constexpr const char* kEpochCsvFile = "epochs.csv";
inline constexpr const char* kCheckpointFile = "checkpoint.json";
inline constexpr const char* kTrajectoryFile = "trajectories.jsonl";
inline constexpr const char* kInferenceTrajectoryFile = "inference_trajectories.jsonl";
inline constexpr const char* kMetricsFile = "metrics.json";
inline constexpr const char* kSummaryJsonFile = "summary.json";
inline constexpr const char* kSummaryCsvFile = "summary.csv";

std::filesystem::path cell_directory(const std::filesystem::path& root, BenchmarkKind algorithm,
                                     std::uint64_t seed);

// Creates the directory (and parents); IoError when that fails or the
// directory is not writable.
void ensure_writable_directory(const std::filesystem::path& dir);

struct TrainOutcome {
  std::filesystem::path directory;
  double convergence_value = 0.0;  // final-10% mean of the epoch mean reward
  int invariant_violations = 0;
};

// Trains one (algorithm, seed) cell and writes the config echo, epoch CSV,
// checkpoint and sampled training trajectories.
TrainOutcome run_train_cell(const ExperimentConfig& config, BenchmarkKind algorithm,
                            std::uint64_t seed);

struct EvalOutcome {
  std::filesystem::path directory;
  std::vector<EpisodeMetrics> episodes;
  ServiceQuality quality;
  FairnessVariance fairness;
  double mean_team_reward = 0.0;
  int invariant_violations = 0;
};

// Greedy inference from the cell's checkpoint; writes metrics.json and the
// inference trajectories. LoadError when the checkpoint does not fit.
EvalOutcome run_eval_cell(const ExperimentConfig& config, BenchmarkKind algorithm,
                          std::uint64_t seed);

nlohmann::json metrics_document(BenchmarkKind algorithm, std::uint64_t seed,
                                const EvalOutcome& eval);

struct SweepRow {
  BenchmarkKind algorithm = BenchmarkKind::CommNetCtde;
  std::uint64_t seed = 0;
  TrainOutcome train;
  EvalOutcome eval;
};

// Train + eval over sweep_algorithms x seeds with up to `jobs` cells in
// parallel, then writes summary.json (keyed by algorithm and seed) and a
// wide summary.csv at the output root. Rows come back in grid order.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config, int jobs);

void write_summary(const std::filesystem::path& root, const std::vector<SweepRow>& rows);

}  // namespace uam
