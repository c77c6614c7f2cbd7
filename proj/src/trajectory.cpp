#include "uam/trajectory.hpp"

#include <ostream>

namespace uam {

nlohmann::json trajectory_record(int episode, const World& world, const StepResult& step) {
  nlohmann::json rec;
  rec["episode"] = episode;
  rec["t"] = world.step_count();
  nlohmann::json positions = nlohmann::json::array();
  nlohmann::json energy = nlohmann::json::array();
  for (const UamState& u : world.uams()) {
    positions.push_back({u.position.x, u.position.y, u.position.z});
    energy.push_back(u.energy.remaining_kwh);
  }
  rec["positions"] = std::move(positions);
  rec["actions"] = step.applied_actions;
  rec["rewards"] = step.reward.per_agent;
  rec["team_reward"] = step.reward.team;
  rec["energy_kwh"] = std::move(energy);
  nlohmann::json events = nlohmann::json::array();
  for (const StepEvent& e : step.events) {
    nlohmann::json ev{{"type", to_string(e.kind)}, {"uam", e.uam}};
    if (e.passenger >= 0) ev["passenger"] = e.passenger;
    if (e.vertiport >= 0) ev["vertiport"] = world.config().map.vertiports[e.vertiport].id;
    events.push_back(std::move(ev));
  }
  rec["events"] = std::move(events);
  return rec;
}

void TrajectoryWriter::write(int episode, const World& world, const StepResult& step) {
  *out_ << trajectory_record(episode, world, step).dump() << '\n';
}

}  // namespace uam
