#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uam/aero_energy.hpp"
#include "uam/rng.hpp"

namespace uam {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double distance(const Vec3& a, const Vec3& b);

struct Vertiport {
  std::string id;  // "A", "B", ...
  std::string name;
  double x_m = 0.0;
  double y_m = 0.0;

  Vec3 position() const { return {x_m, y_m, 0.0}; }
};

struct VertiportMap {
  std::vector<Vertiport> vertiports;
  double half_extent_m = 32000.0;

  // Five ports in the relative geometry of the Dallas / Fort Worth network
  // (DFW airport, Fort Worth, downtown Dallas, Love Field, Frisco), scaled
  // into the operating box.
  static VertiportMap dallas(double half_extent_m = 32000.0);

  std::size_t size() const { return vertiports.size(); }
  int index_of(const std::string& id) const;  // -1 if absent

  // Throws ConfigError: duplicate ids or positions outside [-G, G]^2.
  void validate() const;
};

enum class ObservationMode { Pomdp, Fomdp };

std::string to_string(ObservationMode mode);
ObservationMode parse_observation_mode(const std::string& text);

// Discrete action set: eight ordinal horizontal moves of length v*dt,
// ascend, descend, and a no-op.
enum class Action : int {
  East = 0,
  West,
  North,
  South,
  NorthEast,
  SouthEast,
  NorthWest,
  SouthWest,
  Ascend,
  Descend,
  Hold,
};

constexpr int kActionCount = 11;

bool is_horizontal(Action a);
// Unit direction (dx, dy) of a horizontal action; zero for the others.
std::array<double, 2> horizontal_direction(Action a);
std::string to_string(Action a);

struct WorldConfig {
  VertiportMap map = VertiportMap::dallas();
  int num_uams = 10;
  int num_passengers = 20;
  double dt_s = 60.0;
  double episode_minutes = 60.0;
  double observation_range_m = 16000.0;
  double collision_distance_m = 500.0;
  double cruise_altitude_m = 600.0;
  double climb_time_s = 30.0;
  // Horizontal landing radius around a vertiport; v*dt/2 when unset.
  std::optional<double> landing_tolerance_m;
  ObservationMode mode = ObservationMode::Pomdp;
  AircraftSpec aircraft;
  BatterySpec battery;

  int num_vertiports() const { return static_cast<int>(map.size()); }
  int seats() const { return aircraft.max_passengers; }
  int steps_per_episode() const;
  double step_length_m() const { return aircraft.cruise_speed_mps * dt_s; }
  double landing_tolerance() const;

  std::size_t observation_size() const;       // raw observation length
  std::size_t state_size() const;             // J*(Xi+N+Lambda)
  std::size_t feature_size() const;           // learner input length for `mode`

  void validate() const;
};

enum class PassengerStatus { Waiting, Onboard, Delivered };

struct Passenger {
  int id = 0;
  int origin = 0;        // vertiport index
  int destination = 0;   // vertiport index, != origin
  PassengerStatus status = PassengerStatus::Waiting;
  int uam = -1;
  int seat = -1;
  int queue_entry_order = 0;
};

struct UamState {
  int id = 0;
  Vec3 position;
  std::vector<int> seats;  // passenger id or -1
  EnergyState energy;
  std::optional<int> grounded_at;  // vertiport index while on the pad

  int occupied_seats() const;
};

// Per-agent partial view. Distances are in metres; entries beyond the
// observation range (POMDP) are -1.
struct Observation {
  Vec3 own_position;
  std::vector<double> uam_distances;       // J-1 entries, other agents in index order
  std::vector<double> vertiport_distances; // N entries
  std::vector<double> seat_destinations;   // Lambda entries: destination/N, or -1
  double energy_fraction = 0.0;
  std::vector<double> state;               // FOMDP only: flattened ground-truth state

  std::vector<double> flatten() const;
  // Learner input: positions and distances scaled by the map half extent,
  // altitude by the cruise altitude; -1 sentinels are preserved.
  std::vector<double> features(double half_extent_m, double cruise_altitude_m) const;
};

// Ground truth used by the centralized critic.
struct WorldState {
  int num_uams = 0;
  int num_passengers = 0;
  int num_vertiports = 0;
  int seats = 0;
  std::vector<std::uint8_t> serviced;  // [j * Xi + xi]
  std::vector<std::uint8_t> visited;   // [j * N + n]
  std::vector<double> seat_distance_m; // [j * Lambda + l], -1 for an empty seat

  int serviced_count(int j) const;
  int visited_count(int j) const;
  // Indicators, then seat distances divided by the half extent.
  std::vector<double> flatten(double half_extent_m) const;

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

struct StepEvent {
  enum class Kind { Takeoff, Landing, FailedLanding, Board, Deliver, Collision, Depleted };
  Kind kind = Kind::Takeoff;
  int uam = -1;
  int passenger = -1;
  int vertiport = -1;
};

std::string to_string(StepEvent::Kind kind);

struct RewardBreakdown {
  std::vector<double> individual;   // R_indiv per agent
  std::vector<double> per_agent;    // individual + common
  std::vector<bool> collided;
  std::vector<int> delivered;       // newly delivered passengers per agent
  double common = 0.0;
  double team = 0.0;                // sum of individual + common
};

// Reward of a transition. Newly delivered passengers are read off the
// difference of the serviced indicators; uams describes the post-step fleet.
RewardBreakdown compute_reward(const WorldConfig& config, const WorldState& prev,
                               const WorldState& next, std::span<const UamState> uams);

struct StepResult {
  WorldState state;
  RewardBreakdown reward;
  std::vector<int> applied_actions;  // after forcing depleted aircraft to Hold
  std::vector<StepEvent> events;
  bool done = false;
};

class World {
 public:
  // Throws ConfigError for an invalid configuration (fewer than two
  // vertiports included).
  World(WorldConfig config, std::uint64_t seed);

  const WorldConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  int step_count() const { return step_; }
  bool done() const { return step_ >= config_.steps_per_episode(); }

  const std::vector<UamState>& uams() const { return uams_; }
  const std::vector<Passenger>& passengers() const { return passengers_; }
  const WorldState& state() const { return state_; }

  std::vector<double> state_vector() const;
  Observation observe(int j) const { return observe(j, config_.mode); }
  Observation observe(int j, ObservationMode mode) const;
  // Column-major J x feature_size() block of learner inputs for every agent.
  std::vector<double> joint_features() const;

  // Throws LifecycleError once the episode is over, ShapeError on a bad
  // joint action.
  StepResult step(std::span<const int> joint_action);

  // Structural checks (energy bounds, position box, passenger conservation,
  // seat/passenger agreement); returns human-readable violations.
  std::vector<std::string> check_invariants() const;

  // Places an aircraft directly; test and scenario setup only.
  void place_uam(int j, Vec3 position, std::optional<int> grounded_at, double energy_kwh);
  // Moves a waiting passenger to the given seat; test and scenario setup only.
  void seat_passenger(int passenger, int j, int seat);

 private:
  void refresh_seat_distances();
  void exchange_passengers(int j, int vertiport, std::vector<StepEvent>& events);

  WorldConfig config_;
  std::uint64_t seed_;
  FlightPower power_;
  int step_ = 0;
  std::vector<UamState> uams_;
  std::vector<Passenger> passengers_;
  WorldState state_;
};

}  // namespace uam
