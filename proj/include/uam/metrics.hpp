#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uam/world.hpp"

namespace uam {

struct AgentEpisodeMetrics {
  int services_delivered = 0;
  int landings = 0;
  int distinct_vertiports = 0;
  int collision_events = 0;
  double cumulative_reward = 0.0;
  std::vector<double> energy_trace_kwh;  // remaining energy after each step
};

struct EpisodeMetrics {
  std::uint64_t seed = 0;
  std::vector<AgentEpisodeMetrics> agents;
  double team_reward = 0.0;
  int steps = 0;
};

nlohmann::json to_json(const EpisodeMetrics& m);

// Accumulates EpisodeMetrics from successive environment steps.
class EpisodeRecorder {
 public:
  EpisodeRecorder(int num_uams, std::uint64_t seed);

  void record(const World& world, const StepResult& step);
  EpisodeMetrics finish() const;

 private:
  EpisodeMetrics metrics_;
  std::vector<std::set<int>> landed_at_;
};

enum class QualityFactor { Services, Landings, VertiportTypes };

struct ServiceQuality {
  // [factor][agent], arithmetic means over episodes
  std::vector<double> services;
  std::vector<double> landings;
  std::vector<double> vertiport_types;
  double mean_services = 0.0;
  double mean_landings = 0.0;
  double mean_vertiport_types = 0.0;

  const std::vector<double>& factor(QualityFactor f) const;
};

// Throws UsageError on an empty list or inconsistent agent counts.
ServiceQuality service_quality(std::span<const EpisodeMetrics> episodes);

struct FairnessVariance {
  double services = 0.0;
  double landings = 0.0;
  double vertiport_types = 0.0;
};

// Population variance across agents of each per-agent mean. Throws
// UsageError with fewer than two agents.
FairnessVariance fairness_variance(std::span<const EpisodeMetrics> episodes);
double population_variance(std::span<const double> values);

struct EpochRow {
  int epoch = 0;
  double epsilon = 0.0;
  double mean_reward = 0.0;
  std::vector<double> per_agent_reward;
  std::size_t buffer_size = 0;
  double wall_ms = 0.0;
};

// Parses the trainer's per-epoch CSV; ParseError carries the line number.
std::vector<EpochRow> parse_epoch_csv(std::istream& in);

struct RewardCurve {
  std::vector<double> raw;
  std::vector<double> smoothed;  // trailing moving average
  double convergence_value = 0.0;  // mean of the final 10% of epochs
};

RewardCurve reward_curve(std::span<const double> rewards, int window = 50);
RewardCurve reward_curve(std::span<const EpochRow> rows, int window = 50);
double final_fraction_mean(std::span<const double> series, double fraction = 0.1);

// Rebuilds per-episode metrics from trajectory JSON-lines (one record per
// step, grouped by the "episode" field).
std::vector<EpisodeMetrics> metrics_from_trajectory(std::istream& jsonl, int num_uams);

// Exact one-sided Wilcoxon signed-rank test for "x tends to exceed y" on
// paired samples. Zero differences are dropped and ties get mid-ranks; the
// null distribution of W+ is counted exactly over all 2^n sign patterns.
struct WilcoxonResult {
  int n = 0;
  double w_plus = 0.0;
  double p_value = 1.0;
};

WilcoxonResult wilcoxon_signed_rank_greater(std::span<const double> x, std::span<const double> y);

}  // namespace uam
