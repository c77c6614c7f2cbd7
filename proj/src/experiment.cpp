#include "uam/experiment.hpp"

#include <atomic>
#include <charconv>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "uam/errors.hpp"
#include "uam/trajectory.hpp"

namespace uam {

namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish_output(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

TrainConfig cell_train_config(const ExperimentConfig& config, std::uint64_t seed) {
  TrainConfig t = config.train;
  t.seed = seed;
  return t;
}

ExperimentConfig cell_echo_config(const ExperimentConfig& config, BenchmarkKind algorithm,
                                  std::uint64_t seed) {
  ExperimentConfig c = config;
  c.algorithm = algorithm;
  c.seeds = {seed};
  return c;
}

}  // namespace

fs::path cell_directory(const fs::path& root, BenchmarkKind algorithm, std::uint64_t seed) {
  return root / to_string(algorithm) / std::to_string(seed);
}

void ensure_writable_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() +
                  (ec ? ": " + ec.message() : std::string()));
  }
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream out(probe);
    if (!out) throw IoError("output directory " + dir.string() + " is not writable");
  }
  fs::remove(probe, ec);
}

TrainOutcome run_train_cell(const ExperimentConfig& config, BenchmarkKind algorithm,
                            std::uint64_t seed) {
  const TrainConfig train_config = cell_train_config(config, seed);
  TrainOutcome outcome;
  outcome.directory = cell_directory(config.output_dir, algorithm, seed);
  ensure_writable_directory(outcome.directory);

  {
    const fs::path path = outcome.directory / kConfigEchoFile;
    auto out = open_output(path);
    out << render_config(cell_echo_config(config, algorithm, seed));
    finish_output(out, path);
  }

  auto learner = make_learner(algorithm, train_config);
  const fs::path csv_path = outcome.directory / kEpochCsvFile;
  const fs::path traj_path = outcome.directory / kTrajectoryFile;
  auto csv = open_output(csv_path);
  auto traj = open_output(traj_path);
  TrajectoryWriter writer(traj);
  const TrainResult result = train(train_config, *learner, TrainSinks{&csv, &writer});
  finish_output(csv, csv_path);
  finish_output(traj, traj_path);

  nn::Checkpoint checkpoint = learner->checkpoint();
  checkpoint.metadata["seed"] = seed;
  checkpoint.metadata["num_uams"] = train_config.world.num_uams;
  checkpoint.metadata["feature_size"] = train_config.world.feature_size();
  checkpoint.metadata["state_size"] = train_config.world.state_size();
  checkpoint.save((outcome.directory / kCheckpointFile).string());

  std::vector<double> rewards;
  rewards.reserve(result.epochs.size());
  for (const auto& e : result.epochs) rewards.push_back(e.mean_reward);
  outcome.convergence_value = rewards.empty() ? 0.0 : final_fraction_mean(rewards);
  outcome.invariant_violations = static_cast<int>(result.invariant_violations.size());
  return outcome;
}

EvalOutcome run_eval_cell(const ExperimentConfig& config, BenchmarkKind algorithm,
                          std::uint64_t seed) {
  const TrainConfig train_config = cell_train_config(config, seed);
  EvalOutcome outcome;
  outcome.directory = cell_directory(config.output_dir, algorithm, seed);
  ensure_writable_directory(outcome.directory);

  auto learner = make_learner(algorithm, train_config);
  const nn::Checkpoint checkpoint =
      nn::Checkpoint::load((outcome.directory / kCheckpointFile).string());
  if (checkpoint.algorithm != learner->name()) {
    throw LoadError("checkpoint was written by '" + checkpoint.algorithm + "', expected '" +
                    learner->name() + "'");
  }
  learner->restore(checkpoint);

  const fs::path traj_path = outcome.directory / kInferenceTrajectoryFile;
  auto traj = open_output(traj_path);
  TrajectoryWriter writer(traj);
  std::vector<std::string> violations;
  outcome.episodes = run_inference(train_config, *learner, train_config.inference_episodes, &writer,
                                   train_config.check_invariants ? &violations : nullptr);
  finish_output(traj, traj_path);
  outcome.invariant_violations = static_cast<int>(violations.size());

  if (!outcome.episodes.empty()) {
    outcome.quality = service_quality(outcome.episodes);
    if (train_config.world.num_uams >= 2) outcome.fairness = fairness_variance(outcome.episodes);
    double team = 0.0;
    for (const auto& e : outcome.episodes) team += e.team_reward;
    outcome.mean_team_reward = team / static_cast<double>(outcome.episodes.size());
  }

  const fs::path metrics_path = outcome.directory / kMetricsFile;
  auto out = open_output(metrics_path);
  out << metrics_document(algorithm, seed, outcome).dump(2) << '\n';
  finish_output(out, metrics_path);
  return outcome;
}

nlohmann::json metrics_document(BenchmarkKind algorithm, std::uint64_t seed,
                                const EvalOutcome& eval) {
  nlohmann::json doc;
  doc["algorithm"] = to_string(algorithm);
  doc["seed"] = seed;
  doc["mean_team_reward"] = eval.mean_team_reward;
  doc["invariant_violations"] = eval.invariant_violations;
  doc["service_quality"] = {
      {"services", eval.quality.services},
      {"landings", eval.quality.landings},
      {"vertiport_types", eval.quality.vertiport_types},
      {"mean_services", eval.quality.mean_services},
      {"mean_landings", eval.quality.mean_landings},
      {"mean_vertiport_types", eval.quality.mean_vertiport_types},
  };
  doc["fairness_variance"] = {
      {"services", eval.fairness.services},
      {"landings", eval.fairness.landings},
      {"vertiport_types", eval.fairness.vertiport_types},
  };
  nlohmann::json episodes = nlohmann::json::array();
  for (const auto& e : eval.episodes) episodes.push_back(to_json(e));
  doc["episodes"] = std::move(episodes);
  return doc;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config, int jobs) {
  config.validate();
  if (jobs < 1) throw UsageError("--jobs must be at least 1");
  ensure_writable_directory(config.output_dir);

  std::vector<SweepRow> rows;
  for (BenchmarkKind kind : config.sweep_algorithms) {
    for (std::uint64_t seed : config.seeds) rows.push_back(SweepRow{kind, seed, {}, {}});
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= rows.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      try {
        rows[i].train = run_train_cell(config, rows[i].algorithm, rows[i].seed);
        rows[i].eval = run_eval_cell(config, rows[i].algorithm, rows[i].seed);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  const int threads = std::min<int>(jobs, static_cast<int>(rows.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  write_summary(config.output_dir, rows);
  return rows;
}

void write_summary(const fs::path& root, const std::vector<SweepRow>& rows) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& r : rows) {
    nlohmann::json cell;
    cell["convergence_value"] = r.train.convergence_value;
    cell["mean_team_reward"] = r.eval.mean_team_reward;
    cell["mean_services"] = r.eval.quality.mean_services;
    cell["mean_landings"] = r.eval.quality.mean_landings;
    cell["mean_vertiport_types"] = r.eval.quality.mean_vertiport_types;
    cell["variance_services"] = r.eval.fairness.services;
    cell["variance_landings"] = r.eval.fairness.landings;
    cell["variance_vertiport_types"] = r.eval.fairness.vertiport_types;
    cell["invariant_violations"] = r.train.invariant_violations + r.eval.invariant_violations;
    doc[to_string(r.algorithm)][std::to_string(r.seed)] = std::move(cell);
  }
  {
    const fs::path path = root / kSummaryJsonFile;
    auto out = open_output(path);
    out << doc.dump(2) << '\n';
    finish_output(out, path);
  }
  const fs::path path = root / kSummaryCsvFile;
  auto out = open_output(path);
  out << "algorithm,seed,convergence_value,mean_team_reward,mean_services,mean_landings,"
         "mean_vertiport_types,variance_services,variance_landings,variance_vertiport_types,"
         "invariant_violations\n";
  for (const auto& r : rows) {
    out << to_string(r.algorithm) << ',' << r.seed << ',' << fmt(r.train.convergence_value) << ','
        << fmt(r.eval.mean_team_reward) << ',' << fmt(r.eval.quality.mean_services) << ','
        << fmt(r.eval.quality.mean_landings) << ',' << fmt(r.eval.quality.mean_vertiport_types)
        << ',' << fmt(r.eval.fairness.services) << ',' << fmt(r.eval.fairness.landings) << ','
        << fmt(r.eval.fairness.vertiport_types) << ','
        << r.train.invariant_violations + r.eval.invariant_violations << '\n';
  }
  finish_output(out, path);
}

}  // namespace uam
