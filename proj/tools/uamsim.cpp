#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "uam/aero_energy.hpp"
#include "uam/config.hpp"
#include "uam/errors.hpp"
#include "uam/experiment.hpp"

namespace {

constexpr const char* kOutputRootEnv = "UAMSIM_OUTPUT_ROOT";

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kUsage = 2,
  kUnknownKey = 3,
  kInvalidValue = 4,
  kOutputUnwritable = 5,
  kLoadFailure = 6,
  kConfigSyntax = 7,
  kSpecInvalid = 8,
};

struct Flags {
  std::string config_path;
  std::string seeds;
  std::string out;
  std::string mode;
  std::string algorithm;
  std::optional<int> epochs;
  int jobs = 1;
};

void add_common_flags(CLI::App& cmd, Flags& flags) {
  cmd.add_option("--config", flags.config_path, "INI config file");
  cmd.add_option("--seed", flags.seeds, "seed or comma-separated seed list");
  cmd.add_option("--out", flags.out, "output root directory");
  cmd.add_option("--mode", flags.mode, "observation mode: pomdp or fomdp");
  cmd.add_option("--algorithm", flags.algorithm,
                 "commnet_ctde, hybrid, dnn, iac, dqn or monte_carlo (comma list for sweep)");
  cmd.add_option("--epochs", flags.epochs, "training epochs");
}

// Defaults, then the output-root environment variable, then the config
// file, then command-line flags.
uam::ExperimentConfig effective_config(const Flags& flags, bool sweep) {
  uam::ExperimentConfig config;
  if (const char* root = std::getenv(kOutputRootEnv); root != nullptr && *root != '\0') {
    config.output_dir = root;
  }
  if (!flags.config_path.empty()) {
    std::ifstream in(flags.config_path);
    if (!in) throw uam::IoError("cannot read config file " + flags.config_path);
    std::ostringstream text;
    text << in.rdbuf();
    config = uam::parse_config(text.str(), config);
  }
  std::ostringstream overrides;
  overrides << "[world]\n";
  if (!flags.mode.empty()) overrides << "mode = " << flags.mode << '\n';
  overrides << "[training]\n";
  if (!flags.seeds.empty()) overrides << "seeds = " << flags.seeds << '\n';
  if (!flags.out.empty()) overrides << "output_dir = " << flags.out << '\n';
  if (flags.epochs) overrides << "epochs = " << *flags.epochs << '\n';
  overrides << "[algorithm]\n";
  if (!flags.algorithm.empty()) {
    overrides << (sweep ? "sweep = " : "algorithm = ") << flags.algorithm << '\n';
  }
  return uam::parse_config(overrides.str(), config);
}

int run_train(const Flags& flags) {
  const auto config = effective_config(flags, false);
  for (std::uint64_t seed : config.seeds) {
    const auto outcome = uam::run_train_cell(config, config.algorithm, seed);
    std::cout << uam::to_string(config.algorithm) << " seed " << seed
              << ": convergence value " << outcome.convergence_value << " -> "
              << outcome.directory.string() << '\n';
  }
  return kOk;
}

int run_eval(const Flags& flags) {
  const auto config = effective_config(flags, false);
  for (std::uint64_t seed : config.seeds) {
    const auto outcome = uam::run_eval_cell(config, config.algorithm, seed);
    std::cout << uam::to_string(config.algorithm) << " seed " << seed << ": "
              << outcome.episodes.size() << " episodes, services "
              << outcome.quality.mean_services << ", landings " << outcome.quality.mean_landings
              << ", vertiport types " << outcome.quality.mean_vertiport_types << " -> "
              << outcome.directory.string() << '\n';
  }
  return kOk;
}

int run_sweep(const Flags& flags) {
  const auto config = effective_config(flags, true);
  const auto rows = uam::run_sweep(config, flags.jobs);
  std::cout << rows.size() << " cells written to " << config.output_dir << '\n';
  for (const auto& r : rows) {
    std::cout << "  " << std::left << std::setw(14) << uam::to_string(r.algorithm) << " seed "
              << std::setw(6) << r.seed << " convergence " << r.train.convergence_value
              << "  services " << r.eval.quality.mean_services << '\n';
  }
  return kOk;
}

int run_validate_spec(const Flags& flags) {
  const auto config = effective_config(flags, false);
  const auto diagnostics = uam::validate_spec(config.train.world.aircraft);
  std::cout << std::left << std::setw(28) << "field" << std::setw(12) << "stored"
            << std::setw(16) << "recomputed" << std::setw(12) << "rel.dev" << std::setw(13) << "status" << "formula\n";
  for (const auto& f : diagnostics.fields) {
    std::ostringstream dev;
    dev << std::setprecision(3) << f.relative_deviation;
    std::cout << std::left << std::setw(28) << f.field << std::setw(12) << f.stored
              << std::setw(16) << std::setprecision(10) << f.recomputed << std::setw(12)
              << dev.str() << std::setw(13) << uam::to_string(f.status) << f.formula << '\n'
              << std::setprecision(6);
  }
  const auto hover = uam::hover_power(config.train.world.aircraft);
  const auto cruise =
      uam::cruise_power(config.train.world.aircraft, config.train.world.aircraft.cruise_speed_mps);
  std::cout << "hover power " << hover.total_w << " W, cruise power " << cruise.total_w << " W\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-UAM air transportation simulator and learner"};
  app.require_subcommand(1);
  Flags flags;

  auto* train = app.add_subcommand("train", "train one algorithm for each configured seed");
  add_common_flags(*train, flags);
  auto* eval = app.add_subcommand("eval", "greedy inference from trained checkpoints");
  add_common_flags(*eval, flags);
  auto* sweep = app.add_subcommand("sweep", "train and evaluate the algorithm x seed grid");
  add_common_flags(*sweep, flags);
  sweep->add_option("--jobs", flags.jobs, "cells run in parallel")->check(CLI::PositiveNumber);
  auto* validate = app.add_subcommand("validate-spec", "print aircraft table diagnostics");
  validate->add_option("--config", flags.config_path, "INI config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (train->parsed()) return run_train(flags);
    if (eval->parsed()) return run_eval(flags);
    if (sweep->parsed()) return run_sweep(flags);
    if (validate->parsed()) return run_validate_spec(flags);
  } catch (const uam::UnknownKeyError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnknownKey;
  } catch (const uam::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigSyntax;
  } catch (const uam::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidValue;
  } catch (const uam::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOutputUnwritable;
  } catch (const uam::LoadError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kLoadFailure;
  } catch (const uam::SpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSpecInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
