#pragma once

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "uam/world.hpp"

namespace uam {

// One JSON-lines record per environment step:
// {"episode", "t", "positions", "actions", "rewards", "energy_kwh", "events"}.
nlohmann::json trajectory_record(int episode, const World& world, const StepResult& step);

class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out) : out_(&out) {}

  void write(int episode, const World& world, const StepResult& step);

 private:
  std::ostream* out_;
};

}  // namespace uam
