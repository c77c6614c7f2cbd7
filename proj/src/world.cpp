#include "uam/world.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "uam/errors.hpp"

namespace uam {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

VertiportMap VertiportMap::dallas(double half_extent_m) {
  // Coordinates laid out for a 32 km half extent, scaled to the requested box.
  const double s = half_extent_m / 32000.0;
  VertiportMap map;
  map.half_extent_m = half_extent_m;
  map.vertiports = {
      {"A", "DFW Airport", -5700.0 * s, 1300.0 * s},
      {"B", "Fort Worth", -28700.0 * s, -12800.0 * s},
      {"C", "Downtown Dallas", 13400.0 * s, -10000.0 * s},
      {"D", "Love Field", 9400.0 * s, -3400.0 * s},
      {"E", "Frisco", 11800.0 * s, 24900.0 * s},
  };
  return map;
}

int VertiportMap::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < vertiports.size(); ++i) {
    if (vertiports[i].id == id) return static_cast<int>(i);
  }
  return -1;
}

void VertiportMap::validate() const {
  if (!(half_extent_m > 0.0)) throw ConfigError("vertiport map: half extent must be positive");
  std::set<std::string> ids;
  for (const auto& v : vertiports) {
    if (v.id.empty()) throw ConfigError("vertiport map: empty vertiport id");
    if (!ids.insert(v.id).second) throw ConfigError("vertiport map: duplicate id " + v.id);
    if (std::abs(v.x_m) > half_extent_m || std::abs(v.y_m) > half_extent_m) {
      throw ConfigError("vertiport map: vertiport " + v.id + " lies outside the operating area");
    }
  }
}

std::string to_string(ObservationMode mode) {
  return mode == ObservationMode::Pomdp ? "pomdp" : "fomdp";
}

ObservationMode parse_observation_mode(const std::string& text) {
  if (text == "pomdp") return ObservationMode::Pomdp;
  if (text == "fomdp") return ObservationMode::Fomdp;
  throw ConfigError("observation mode must be pomdp or fomdp, got '" + text + "'");
}

bool is_horizontal(Action a) { return static_cast<int>(a) < static_cast<int>(Action::Ascend); }

std::array<double, 2> horizontal_direction(Action a) {
  constexpr double d = std::numbers::sqrt2 / 2.0;
  switch (a) {
    case Action::East: return {1.0, 0.0};
    case Action::West: return {-1.0, 0.0};
    case Action::North: return {0.0, 1.0};
    case Action::South: return {0.0, -1.0};
    case Action::NorthEast: return {d, d};
    case Action::SouthEast: return {d, -d};
    case Action::NorthWest: return {-d, d};
    case Action::SouthWest: return {-d, -d};
    default: return {0.0, 0.0};
  }
}

std::string to_string(Action a) {
  static const char* names[kActionCount] = {"east", "west", "north", "south", "north_east",
                                            "south_east", "north_west", "south_west",
                                            "ascend", "descend", "hold"};
  return names[static_cast<int>(a)];
}

int WorldConfig::steps_per_episode() const {
  return static_cast<int>(std::lround(episode_minutes * 60.0 / dt_s));
}

double WorldConfig::landing_tolerance() const {
  return landing_tolerance_m.value_or(step_length_m() / 2.0);
}

std::size_t WorldConfig::observation_size() const {
  return 3 + static_cast<std::size_t>(num_uams - 1) + map.size() +
         static_cast<std::size_t>(seats()) + 1;
}

std::size_t WorldConfig::state_size() const {
  return static_cast<std::size_t>(num_uams) *
         static_cast<std::size_t>(num_passengers + num_vertiports() + seats());
}

std::size_t WorldConfig::feature_size() const {
  return observation_size() + (mode == ObservationMode::Fomdp ? state_size() : 0);
}

void WorldConfig::validate() const {
  map.validate();
  if (map.size() < 2) {
    throw ConfigError("world: at least two vertiports are required for origin != destination");
  }
  if (num_uams < 1) throw ConfigError("world: num_uams must be at least 1");
  if (num_passengers < 0) throw ConfigError("world: num_passengers must be non-negative");
  if (!(dt_s > 0.0)) throw ConfigError("world: dt_s must be positive");
  if (!(episode_minutes > 0.0) || steps_per_episode() < 1) {
    throw ConfigError("world: episode must contain at least one step");
  }
  if (!(observation_range_m > 0.0)) throw ConfigError("world: observation range must be positive");
  if (!(collision_distance_m >= 0.0)) {
    throw ConfigError("world: collision distance must be non-negative");
  }
  if (!(cruise_altitude_m > 0.0)) throw ConfigError("world: cruise altitude must be positive");
  if (!(climb_time_s >= 0.0)) throw ConfigError("world: climb time must be non-negative");
  if (landing_tolerance_m && !(*landing_tolerance_m >= 0.0)) {
    throw ConfigError("world: landing tolerance must be non-negative");
  }
  try {
    aircraft.validate();
    battery.validate();
  } catch (const SpecError& e) {
    throw ConfigError(e.what());
  }
}

int UamState::occupied_seats() const {
  return static_cast<int>(std::count_if(seats.begin(), seats.end(), [](int p) { return p >= 0; }));
}

std::vector<double> Observation::flatten() const {
  std::vector<double> out;
  out.reserve(4 + uam_distances.size() + vertiport_distances.size() + seat_destinations.size() +
              state.size());
  out.insert(out.end(), {own_position.x, own_position.y, own_position.z});
  out.insert(out.end(), uam_distances.begin(), uam_distances.end());
  out.insert(out.end(), vertiport_distances.begin(), vertiport_distances.end());
  out.insert(out.end(), seat_destinations.begin(), seat_destinations.end());
  out.push_back(energy_fraction);
  out.insert(out.end(), state.begin(), state.end());
  return out;
}

std::vector<double> Observation::features(double half_extent_m, double cruise_altitude_m) const {
  auto scaled = [half_extent_m](double d) { return d < 0.0 ? -1.0 : d / half_extent_m; };
  std::vector<double> out;
  out.reserve(4 + uam_distances.size() + vertiport_distances.size() + seat_destinations.size() +
              state.size());
  out.push_back(own_position.x / half_extent_m);
  out.push_back(own_position.y / half_extent_m);
  out.push_back(own_position.z / cruise_altitude_m);
  for (double d : uam_distances) out.push_back(scaled(d));
  for (double d : vertiport_distances) out.push_back(scaled(d));
  out.insert(out.end(), seat_destinations.begin(), seat_destinations.end());
  out.push_back(energy_fraction);
  out.insert(out.end(), state.begin(), state.end());
  return out;
}

int WorldState::serviced_count(int j) const {
  const auto begin = serviced.begin() + static_cast<std::ptrdiff_t>(j) * num_passengers;
  return static_cast<int>(std::count(begin, begin + num_passengers, std::uint8_t{1}));
}

int WorldState::visited_count(int j) const {
  const auto begin = visited.begin() + static_cast<std::ptrdiff_t>(j) * num_vertiports;
  return static_cast<int>(std::count(begin, begin + num_vertiports, std::uint8_t{1}));
}

std::vector<double> WorldState::flatten(double half_extent_m) const {
  std::vector<double> out;
  out.reserve(serviced.size() + visited.size() + seat_distance_m.size());
  for (auto v : serviced) out.push_back(v);
  for (auto v : visited) out.push_back(v);
  for (double d : seat_distance_m) out.push_back(d < 0.0 ? -1.0 : d / half_extent_m);
  return out;
}

std::string to_string(StepEvent::Kind kind) {
  switch (kind) {
    case StepEvent::Kind::Takeoff: return "takeoff";
    case StepEvent::Kind::Landing: return "landing";
    case StepEvent::Kind::FailedLanding: return "failed_landing";
    case StepEvent::Kind::Board: return "board";
    case StepEvent::Kind::Deliver: return "deliver";
    case StepEvent::Kind::Collision: return "collision";
    case StepEvent::Kind::Depleted: return "depleted";
  }
  return "unknown";
}

RewardBreakdown compute_reward(const WorldConfig& config, const WorldState& prev,
                               const WorldState& next, std::span<const UamState> uams) {
  const int J = next.num_uams;
  if (static_cast<int>(uams.size()) != J || prev.num_uams != J) {
    throw ShapeError("compute_reward: fleet size mismatch");
  }
  RewardBreakdown r;
  r.individual.assign(J, 0.0);
  r.per_agent.assign(J, 0.0);
  r.collided.assign(J, false);
  r.delivered.assign(J, 0);

  int delivered_total = 0;
  for (int j = 0; j < J; ++j) {
    r.delivered[j] = next.serviced_count(j) - prev.serviced_count(j);
    delivered_total += r.delivered[j];
  }
  r.common = static_cast<double>(delivered_total) / J;

  // Two aircraft parked at the same vertiport occupy separate pads and do
  // not count as a conflict; every other pair is checked by 3-D distance.
  for (int j = 0; j < J; ++j) {
    for (int k = j + 1; k < J; ++k) {
      if (uams[j].grounded_at && uams[k].grounded_at) continue;
      if (distance(uams[j].position, uams[k].position) < config.collision_distance_m) {
        r.collided[j] = true;
        r.collided[k] = true;
      }
    }
  }

  const double half = config.map.half_extent_m / 2.0;
  for (int j = 0; j < J; ++j) {
    double bracket = next.serviced_count(j) + next.visited_count(j);
    for (int l = 0; l < next.seats; ++l) {
      const double d = next.seat_distance_m[static_cast<std::size_t>(j * next.seats + l)];
      if (d >= 0.0) bracket -= d / half;  // empty seats contribute nothing
    }
    bracket += uams[j].energy.remaining_kwh / config.battery.capacity_kwh;
    r.individual[j] = r.collided[j] ? 0.0 : bracket;
    r.per_agent[j] = r.individual[j] + r.common;
    r.team += r.individual[j];
  }
  r.team += r.common;
  return r;
}

World::World(WorldConfig config, std::uint64_t seed) : config_(std::move(config)), seed_(seed) {
  config_.validate();
  power_ = flight_power(config_.aircraft);

  const int J = config_.num_uams;
  const int N = config_.num_vertiports();
  const int Xi = config_.num_passengers;
  const int L = config_.seats();

  Rng rng(seed);
  uams_.resize(J);
  for (int j = 0; j < J; ++j) {
    const int port = static_cast<int>(rng.index(static_cast<std::size_t>(N)));
    UamState& u = uams_[j];
    u.id = j;
    u.position = config_.map.vertiports[port].position();
    u.seats.assign(L, -1);
    u.energy = EnergyState{config_.battery.capacity_kwh};
    u.grounded_at = port;
  }
  passengers_.resize(Xi);
  for (int p = 0; p < Xi; ++p) {
    Passenger& g = passengers_[p];
    g.id = p;
    g.origin = static_cast<int>(rng.index(static_cast<std::size_t>(N)));
    int dest = static_cast<int>(rng.index(static_cast<std::size_t>(N - 1)));
    if (dest >= g.origin) ++dest;
    g.destination = dest;
    g.queue_entry_order = p;
  }

  state_.num_uams = J;
  state_.num_passengers = Xi;
  state_.num_vertiports = N;
  state_.seats = L;
  state_.serviced.assign(static_cast<std::size_t>(J) * Xi, 0);
  state_.visited.assign(static_cast<std::size_t>(J) * N, 0);
  state_.seat_distance_m.assign(static_cast<std::size_t>(J) * L, -1.0);
}

std::vector<double> World::state_vector() const { return state_.flatten(config_.map.half_extent_m); }

Observation World::observe(int j, ObservationMode mode) const {
  if (j < 0 || j >= config_.num_uams) throw UsageError("observe: agent index out of range");
  const UamState& u = uams_[j];
  const bool masked = mode == ObservationMode::Pomdp;
  auto scope = [&](double d) { return masked && d > config_.observation_range_m ? -1.0 : d; };

  Observation o;
  o.own_position = u.position;
  o.uam_distances.reserve(uams_.size() - 1);
  for (const UamState& other : uams_) {
    if (other.id == j) continue;
    o.uam_distances.push_back(scope(distance(u.position, other.position)));
  }
  o.vertiport_distances.reserve(config_.map.size());
  for (const Vertiport& v : config_.map.vertiports) {
    o.vertiport_distances.push_back(scope(distance(u.position, v.position())));
  }
  const double N = static_cast<double>(config_.num_vertiports());
  o.seat_destinations.reserve(u.seats.size());
  for (int p : u.seats) {
    o.seat_destinations.push_back(p < 0 ? -1.0 : passengers_[p].destination / N);
  }
  o.energy_fraction = u.energy.remaining_kwh / config_.battery.capacity_kwh;
  if (mode == ObservationMode::Fomdp) o.state = state_vector();
  return o;
}

std::vector<double> World::joint_features() const {
  std::vector<double> out;
  out.reserve(config_.feature_size() * uams_.size());
  for (int j = 0; j < config_.num_uams; ++j) {
    const auto f = observe(j).features(config_.map.half_extent_m, config_.cruise_altitude_m);
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

void World::refresh_seat_distances() {
  const int L = config_.seats();
  for (const UamState& u : uams_) {
    for (int l = 0; l < L; ++l) {
      const int p = u.seats[l];
      double d = -1.0;
      if (p >= 0) d = distance(u.position, config_.map.vertiports[passengers_[p].destination].position());
      state_.seat_distance_m[static_cast<std::size_t>(u.id * L + l)] = d;
    }
  }
}

void World::exchange_passengers(int j, int vertiport, std::vector<StepEvent>& events) {
  UamState& u = uams_[j];
  const int Xi = config_.num_passengers;
  for (int& seat : u.seats) {
    if (seat < 0) continue;
    Passenger& g = passengers_[seat];
    if (g.destination != vertiport) continue;
    g.status = PassengerStatus::Delivered;
    g.uam = j;
    g.seat = -1;
    state_.serviced[static_cast<std::size_t>(j * Xi + g.id)] = 1;
    events.push_back({StepEvent::Kind::Deliver, j, g.id, vertiport});
    seat = -1;
  }
  // Waiting passengers are kept in queue order, so the first match is the
  // earliest arrival.
  for (int l = 0; l < static_cast<int>(u.seats.size()); ++l) {
    if (u.seats[l] >= 0) continue;
    Passenger* next = nullptr;
    for (Passenger& g : passengers_) {
      if (g.status != PassengerStatus::Waiting || g.origin != vertiport) continue;
      if (next == nullptr || g.queue_entry_order < next->queue_entry_order) next = &g;
    }
    if (next == nullptr) break;
    next->status = PassengerStatus::Onboard;
    next->uam = j;
    next->seat = l;
    u.seats[l] = next->id;
    events.push_back({StepEvent::Kind::Board, j, next->id, vertiport});
  }
}

StepResult World::step(std::span<const int> joint_action) {
  if (done()) throw LifecycleError("step: the episode has already finished");
  const int J = config_.num_uams;
  if (static_cast<int>(joint_action.size()) != J) {
    throw ShapeError("step: joint action must hold one action per UAM");
  }
  for (int a : joint_action) {
    if (a < 0 || a >= kActionCount) throw ShapeError("step: action index out of range");
  }

  const WorldState prev = state_;
  const double G = config_.map.half_extent_m;
  const double alt = config_.cruise_altitude_m;
  const double dt = config_.dt_s;
  const double step_len = config_.step_length_m();
  const double tolerance = config_.landing_tolerance();

  StepResult result;
  result.applied_actions.resize(J);

  for (int j = 0; j < J; ++j) {
    UamState& u = uams_[j];
    Action a = static_cast<Action>(joint_action[j]);
    const bool depleted = u.energy.remaining_kwh <= 0.0;
    if (depleted) a = Action::Hold;
    result.applied_actions[j] = static_cast<int>(a);

    if (u.grounded_at) {
      if (a == Action::Ascend) {
        u.energy = step_energy(u.energy, {}, true, dt, power_, config_.climb_time_s);
        u.position.z = alt;
        result.events.push_back({StepEvent::Kind::Takeoff, j, -1, *u.grounded_at});
        u.grounded_at.reset();
      } else {
        u.energy = charge(u.energy, dt, config_.battery);
      }
    } else if (is_horizontal(a)) {
      const auto dir = horizontal_direction(a);
      const double nx = std::clamp(u.position.x + dir[0] * step_len, -G, G);
      const double ny = std::clamp(u.position.y + dir[1] * step_len, -G, G);
      const HorizontalDisplacement disp{nx - u.position.x, ny - u.position.y};
      u.energy = step_energy(u.energy, disp, false, dt, power_, config_.climb_time_s);
      u.position.x = nx;
      u.position.y = ny;
    } else if (a == Action::Descend) {
      u.energy = step_energy(u.energy, {}, true, dt, power_, config_.climb_time_s);
      int nearest = -1;
      double best = 0.0;
      for (int n = 0; n < config_.num_vertiports(); ++n) {
        const Vertiport& v = config_.map.vertiports[n];
        const double d = std::hypot(u.position.x - v.x_m, u.position.y - v.y_m);
        if (nearest < 0 || d < best) {
          nearest = n;
          best = d;
        }
      }
      if (best <= tolerance) {
        const Vertiport& v = config_.map.vertiports[nearest];
        u.position = v.position();
        u.grounded_at = nearest;
        state_.visited[static_cast<std::size_t>(j * config_.num_vertiports() + nearest)] = 1;
        result.events.push_back({StepEvent::Kind::Landing, j, -1, nearest});
      } else {
        result.events.push_back({StepEvent::Kind::FailedLanding, j, -1, -1});
      }
    } else if (a == Action::Ascend) {
      // Already at cruise altitude: the climb is spent hovering in place.
      u.energy = step_energy(u.energy, {}, true, dt, power_, config_.climb_time_s);
    }
    if (!depleted && u.energy.remaining_kwh <= 0.0) {
      result.events.push_back({StepEvent::Kind::Depleted, j, -1, -1});
    }
  }

  for (int j = 0; j < J; ++j) {
    if (uams_[j].grounded_at) exchange_passengers(j, *uams_[j].grounded_at, result.events);
  }
  refresh_seat_distances();
  ++step_;

  result.reward = compute_reward(config_, prev, state_, uams_);
  for (int j = 0; j < J; ++j) {
    if (result.reward.collided[j]) result.events.push_back({StepEvent::Kind::Collision, j, -1, -1});
  }
  result.state = state_;
  result.done = done();
  return result;
}

std::vector<std::string> World::check_invariants() const {
  std::vector<std::string> out;
  const double G = config_.map.half_extent_m;
  const double cap = config_.battery.capacity_kwh;
  auto fail = [&out](const std::string& msg) { out.push_back(msg); };

  for (const UamState& u : uams_) {
    const std::string tag = "uam " + std::to_string(u.id) + ": ";
    if (!(u.energy.remaining_kwh >= 0.0 && u.energy.remaining_kwh <= cap)) {
      fail(tag + "energy outside [0, capacity]");
    }
    if (std::abs(u.position.x) > G || std::abs(u.position.y) > G) fail(tag + "outside the map");
    if (u.position.z != 0.0 && u.position.z != config_.cruise_altitude_m) {
      fail(tag + "altitude is neither ground nor cruise level");
    }
    if (u.grounded_at.has_value() != (u.position.z == 0.0)) {
      fail(tag + "grounded flag disagrees with altitude");
    }
    if (u.grounded_at) {
      const Vertiport& v = config_.map.vertiports[*u.grounded_at];
      if (std::hypot(u.position.x - v.x_m, u.position.y - v.y_m) > config_.landing_tolerance()) {
        fail(tag + "grounded away from its vertiport");
      }
    }
    if (u.occupied_seats() > config_.seats()) fail(tag + "more passengers than seats");
    for (int l = 0; l < static_cast<int>(u.seats.size()); ++l) {
      const int p = u.seats[l];
      if (p < 0) continue;
      const Passenger& g = passengers_[p];
      if (g.status != PassengerStatus::Onboard || g.uam != u.id || g.seat != l) {
        fail(tag + "seat " + std::to_string(l) + " disagrees with passenger " + std::to_string(p));
      }
    }
  }

  int waiting = 0, onboard = 0, delivered = 0;
  for (const Passenger& g : passengers_) {
    switch (g.status) {
      case PassengerStatus::Waiting: ++waiting; break;
      case PassengerStatus::Onboard: ++onboard; break;
      case PassengerStatus::Delivered: ++delivered; break;
    }
    if (g.origin == g.destination) fail("passenger " + std::to_string(g.id) + ": origin == destination");
    if (g.status == PassengerStatus::Onboard && uams_[g.uam].seats[g.seat] != g.id) {
      fail("passenger " + std::to_string(g.id) + ": not found in its seat");
    }
  }
  if (waiting + onboard + delivered != config_.num_passengers) fail("passenger count not conserved");
  int serviced = 0;
  for (auto v : state_.serviced) serviced += v;
  if (serviced != delivered) fail("serviced indicators disagree with delivered passengers");
  return out;
}

void World::place_uam(int j, Vec3 position, std::optional<int> grounded_at, double energy_kwh) {
  UamState& u = uams_.at(static_cast<std::size_t>(j));
  u.position = position;
  u.grounded_at = grounded_at;
  u.energy = EnergyState{std::clamp(energy_kwh, 0.0, config_.battery.capacity_kwh)};
  refresh_seat_distances();
}

void World::seat_passenger(int passenger, int j, int seat) {
  Passenger& g = passengers_.at(static_cast<std::size_t>(passenger));
  UamState& u = uams_.at(static_cast<std::size_t>(j));
  if (g.status != PassengerStatus::Waiting || u.seats.at(static_cast<std::size_t>(seat)) >= 0) {
    throw UsageError("seat_passenger: passenger not waiting or seat occupied");
  }
  g.status = PassengerStatus::Onboard;
  g.uam = j;
  g.seat = seat;
  u.seats[seat] = passenger;
  refresh_seat_distances();
}

}  // namespace uam
