#include "uam/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "uam/errors.hpp"

namespace uam {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw InvalidValueError("invalid value for " + key + ": '" + text + "' is not a finite number");
  }
  return v;
}

long long to_integer(const std::string& key, const std::string& text) {
  long long v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw InvalidValueError("invalid value for " + key + ": '" + text + "' is not an integer");
  }
  return v;
}

int to_int(const std::string& key, const std::string& text) {
  const long long v = to_integer(key, text);
  if (v < -2147483647LL || v > 2147483647LL) {
    throw InvalidValueError("invalid value for " + key + ": '" + text + "' is out of range");
  }
  return static_cast<int>(v);
}

std::uint64_t to_u64(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw InvalidValueError("invalid value for " + key + ": '" + text +
                            "' is not a non-negative integer");
  }
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw InvalidValueError("invalid value for " + key + ": '" + text + "' is not a boolean");
}

struct Key {
  std::string section;
  std::string name;
  std::function<void(ExperimentConfig&, const std::string& qualified, const std::string& value)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class Access>
Key double_key(std::string section, std::string name, Access access) {
  return {std::move(section), std::move(name),
          [access](ExperimentConfig& c, const std::string& k, const std::string& v) {
            access(c) = to_double(k, v);
          },
          [access](const ExperimentConfig& c) {
            return fmt(access(const_cast<ExperimentConfig&>(c)));
          }};
}

template <class Access>
Key int_key(std::string section, std::string name, Access access) {
  return {std::move(section), std::move(name),
          [access](ExperimentConfig& c, const std::string& k, const std::string& v) {
            access(c) = to_int(k, v);
          },
          [access](const ExperimentConfig& c) {
            return std::to_string(access(const_cast<ExperimentConfig&>(c)));
          }};
}

template <class Access>
Key bool_key(std::string section, std::string name, Access access) {
  return {std::move(section), std::move(name),
          [access](ExperimentConfig& c, const std::string& k, const std::string& v) {
            access(c) = to_bool(k, v);
          },
          [access](const ExperimentConfig& c) {
            return std::string(access(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
          }};
}

#define UAM_FIELD(expr) [](ExperimentConfig& c) -> auto& { return expr; }

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    // [world]
    k.push_back({"world", "half_extent_m",
                 [](ExperimentConfig& c, const std::string& q, const std::string& v) {
                   const double g = to_double(q, v);
                   if (!(g > 0.0)) throw InvalidValueError("invalid value for " + q + ": must be positive");
                   c.train.world.map = VertiportMap::dallas(g);
                 },
                 [](const ExperimentConfig& c) { return fmt(c.train.world.map.half_extent_m); }});
    k.push_back(int_key("world", "num_uams", UAM_FIELD(c.train.world.num_uams)));
    k.push_back(int_key("world", "num_passengers", UAM_FIELD(c.train.world.num_passengers)));
    k.push_back(double_key("world", "dt_s", UAM_FIELD(c.train.world.dt_s)));
    k.push_back(double_key("world", "episode_minutes", UAM_FIELD(c.train.world.episode_minutes)));
    k.push_back(double_key("world", "observation_range_m", UAM_FIELD(c.train.world.observation_range_m)));
    k.push_back(double_key("world", "collision_distance_m", UAM_FIELD(c.train.world.collision_distance_m)));
    k.push_back(double_key("world", "cruise_altitude_m", UAM_FIELD(c.train.world.cruise_altitude_m)));
    k.push_back(double_key("world", "climb_time_s", UAM_FIELD(c.train.world.climb_time_s)));
    k.push_back({"world", "landing_tolerance_m",
                 [](ExperimentConfig& c, const std::string& q, const std::string& v) {
                   if (v == "auto") {
                     c.train.world.landing_tolerance_m.reset();
                   } else {
                     c.train.world.landing_tolerance_m = to_double(q, v);
                   }
                 },
                 [](const ExperimentConfig& c) {
                   const auto& t = c.train.world.landing_tolerance_m;
                   return t ? fmt(*t) : std::string("auto");
                 }});
    k.push_back({"world", "mode",
                 [](ExperimentConfig& c, const std::string& q, const std::string& v) {
                   try {
                     c.train.world.mode = parse_observation_mode(v);
                   } catch (const ConfigError& e) {
                     throw InvalidValueError("invalid value for " + q + ": " + e.what());
                   }
                 },
                 [](const ExperimentConfig& c) { return to_string(c.train.world.mode); }});

    // [aircraft]
    k.push_back(int_key("aircraft", "max_passengers", UAM_FIELD(c.train.world.aircraft.max_passengers)));
    k.push_back(double_key("aircraft", "cruise_speed_mps", UAM_FIELD(c.train.world.aircraft.cruise_speed_mps)));
    k.push_back(double_key("aircraft", "mass_kg", UAM_FIELD(c.train.world.aircraft.mass_kg)));
    k.push_back(double_key("aircraft", "weight_n", UAM_FIELD(c.train.world.aircraft.weight_n)));
    k.push_back(double_key("aircraft", "rotor_radius_m", UAM_FIELD(c.train.world.aircraft.rotor_radius_m)));
    k.push_back(double_key("aircraft", "disc_area_m2", UAM_FIELD(c.train.world.aircraft.disc_area_m2)));
    k.push_back(int_key("aircraft", "blade_count", UAM_FIELD(c.train.world.aircraft.blade_count)));
    k.push_back(double_key("aircraft", "rotor_solidity", UAM_FIELD(c.train.world.aircraft.rotor_solidity)));
    k.push_back(double_key("aircraft", "blade_angular_velocity_rad_s",
                           UAM_FIELD(c.train.world.aircraft.blade_angular_velocity_rad_s)));
    k.push_back(double_key("aircraft", "tip_speed_mps", UAM_FIELD(c.train.world.aircraft.tip_speed_mps)));
    k.push_back(double_key("aircraft", "air_density_kg_m3", UAM_FIELD(c.train.world.aircraft.air_density_kg_m3)));
    k.push_back(double_key("aircraft", "fuselage_drag_ratio",
                           UAM_FIELD(c.train.world.aircraft.fuselage_drag_ratio)));
    k.push_back(double_key("aircraft", "mean_induced_velocity_mps",
                           UAM_FIELD(c.train.world.aircraft.mean_induced_velocity_mps)));
    k.push_back(double_key("aircraft", "profile_drag_coeff", UAM_FIELD(c.train.world.aircraft.profile_drag_coeff)));
    k.push_back(double_key("aircraft", "induced_power_factor",
                           UAM_FIELD(c.train.world.aircraft.induced_power_factor)));

    // [battery]
    k.push_back(double_key("battery", "capacity_kwh", UAM_FIELD(c.train.world.battery.capacity_kwh)));
    k.push_back(double_key("battery", "charge_per_journey_kwh",
                           UAM_FIELD(c.train.world.battery.charge_per_journey_kwh)));
    k.push_back(double_key("battery", "charge_time_per_journey_min",
                           UAM_FIELD(c.train.world.battery.charge_time_per_journey_min)));
    k.push_back(double_key("battery", "charger_power_kw", UAM_FIELD(c.train.world.battery.charger_power_kw)));
    k.push_back(double_key("battery", "c_rate_per_hour", UAM_FIELD(c.train.world.battery.c_rate_per_hour)));
    k.push_back(double_key("battery", "soc_full_time_min", UAM_FIELD(c.train.world.battery.soc_full_time_min)));

    // [training]
    k.push_back({"training", "seeds",
                 [](ExperimentConfig& c, const std::string& q, const std::string& v) {
                   std::vector<std::uint64_t> seeds;
                   for (const auto& s : split(v, ',')) seeds.push_back(to_u64(q, s));
                   c.seeds = std::move(seeds);
                 },
                 [](const ExperimentConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.seeds.size(); ++i) {
                     out += (i ? ", " : "") + std::to_string(c.seeds[i]);
                   }
                   return out;
                 }});
    k.push_back({"training", "output_dir",
                 [](ExperimentConfig& c, const std::string& q, const std::string& v) {
                   if (v.empty()) throw InvalidValueError("invalid value for " + q + ": empty path");
                   c.output_dir = v;
                 },
                 [](const ExperimentConfig& c) { return c.output_dir; }});
    k.push_back(int_key("training", "epochs", UAM_FIELD(c.train.epochs)));
    k.push_back(int_key("training", "batch_size", UAM_FIELD(c.train.batch_size)));
    k.push_back(int_key("training", "buffer_capacity", UAM_FIELD(c.train.buffer_capacity)));
    k.push_back(int_key("training", "buffer_gate", UAM_FIELD(c.train.buffer_gate)));
    k.push_back(double_key("training", "discount", UAM_FIELD(c.train.discount)));
    k.push_back(double_key("training", "epsilon_initial", UAM_FIELD(c.train.exploration.initial)));
    k.push_back(double_key("training", "epsilon_minimum", UAM_FIELD(c.train.exploration.minimum)));
    k.push_back(double_key("training", "epsilon_decay_per_epoch",
                           UAM_FIELD(c.train.exploration.decay_per_epoch)));
    k.push_back(int_key("training", "actor_hidden", UAM_FIELD(c.train.actor_hidden)));
    k.push_back(int_key("training", "comm_layers", UAM_FIELD(c.train.comm_layers)));
    k.push_back(int_key("training", "critic_hidden", UAM_FIELD(c.train.critic_hidden)));
    k.push_back(int_key("training", "critic_layers", UAM_FIELD(c.train.critic_layers)));
    k.push_back(double_key("training", "actor_learning_rate", UAM_FIELD(c.train.actor_learning_rate)));
    k.push_back(double_key("training", "critic_learning_rate", UAM_FIELD(c.train.critic_learning_rate)));
    k.push_back(double_key("training", "adam_beta1", UAM_FIELD(c.train.adam.beta1)));
    k.push_back(double_key("training", "adam_beta2", UAM_FIELD(c.train.adam.beta2)));
    k.push_back(double_key("training", "adam_epsilon", UAM_FIELD(c.train.adam.epsilon)));
    k.push_back({"training", "optimizer",
                 [](ExperimentConfig& c, const std::string& q, const std::string& v) {
                   if (v == "adam") {
                     c.train.optimizer = nn::OptimizerKind::Adam;
                   } else if (v == "sgd") {
                     c.train.optimizer = nn::OptimizerKind::Sgd;
                   } else {
                     throw InvalidValueError("invalid value for " + q + ": expected adam or sgd");
                   }
                 },
                 [](const ExperimentConfig& c) {
                   return std::string(c.train.optimizer == nn::OptimizerKind::Adam ? "adam" : "sgd");
                 }});
    k.push_back(double_key("training", "grad_clip_norm", UAM_FIELD(c.train.grad_clip_norm)));
    k.push_back(bool_key("training", "on_policy_only", UAM_FIELD(c.train.on_policy_only)));
    k.push_back(bool_key("training", "record_wall_time", UAM_FIELD(c.train.record_wall_time)));
    k.push_back(bool_key("training", "check_invariants", UAM_FIELD(c.train.check_invariants)));
    k.push_back(int_key("training", "trajectory_interval", UAM_FIELD(c.train.trajectory_interval)));
    k.push_back(int_key("training", "inference_episodes", UAM_FIELD(c.train.inference_episodes)));

    // [algorithm]
    auto benchmark = [](const std::string& q, const std::string& v) {
      try {
        return parse_benchmark(v);
      } catch (const ConfigError& e) {
        throw InvalidValueError("invalid value for " + q + ": " + e.what());
      }
    };
    k.push_back({"algorithm", "algorithm",
                 [benchmark](ExperimentConfig& c, const std::string& q, const std::string& v) {
                   c.algorithm = benchmark(q, v);
                 },
                 [](const ExperimentConfig& c) { return to_string(c.algorithm); }});
    k.push_back({"algorithm", "sweep",
                 [benchmark](ExperimentConfig& c, const std::string& q, const std::string& v) {
                   std::vector<BenchmarkKind> kinds;
                   for (const auto& s : split(v, ',')) kinds.push_back(benchmark(q, s));
                   c.sweep_algorithms = std::move(kinds);
                 },
                 [](const ExperimentConfig& c) {
                   std::string out;
                   for (std::size_t i = 0; i < c.sweep_algorithms.size(); ++i) {
                     out += (i ? ", " : "") + to_string(c.sweep_algorithms[i]);
                   }
                   return out;
                 }});
    return k;
  }();
  return table;
}

#undef UAM_FIELD

const std::vector<std::string>& section_order() {
  static const std::vector<std::string> order{"world",    "vertiports", "aircraft",
                                              "battery",  "training",   "algorithm"};
  return order;
}

VertiportMap parse_vertiports(const pt::ptree& section, double half_extent) {
  VertiportMap map;
  map.half_extent_m = half_extent;
  for (const auto& [id, node] : section) {
    const std::string q = "[vertiports] " + id;
    if (!node.empty()) throw ParseError("nested entries are not allowed in [vertiports]", 0);
    const auto parts = split(node.data(), ',');
    if (parts.size() != 3) {
      throw InvalidValueError("invalid value for " + q + ": expected 'name, x_m, y_m'");
    }
    map.vertiports.push_back({trim(id), parts[0], to_double(q, parts[1]), to_double(q, parts[2])});
  }
  try {
    map.validate();
  } catch (const ConfigError& e) {
    throw InvalidValueError(std::string("invalid vertiport layout: ") + e.what());
  }
  return map;
}

}  // namespace

void ExperimentConfig::validate() const {
  train.validate();
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (sweep_algorithms.empty()) throw ConfigError("the sweep needs at least one algorithm");
  if (output_dir.empty()) throw ConfigError("output directory must not be empty");
  auto needs_even = [](BenchmarkKind k) { return k == BenchmarkKind::Hybrid; };
  if (train.world.num_uams % 2 != 0 && needs_even(algorithm)) {
    throw ConfigError("hybrid requires an even number of UAMs");
  }
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError("malformed config: " + e.message(), static_cast<int>(e.line()));
  }

  const auto& order = section_order();
  for (const auto& [section, node] : tree) {
    if (std::find(order.begin(), order.end(), section) == order.end()) {
      if (node.empty()) throw ParseError("key '" + section + "' outside any section", 0);
      throw UnknownKeyError("unknown config section [" + section + "]");
    }
  }

  ExperimentConfig c = std::move(base);
  // Apply in table order so that half_extent_m (which resets the layout)
  // precedes an explicit [vertiports] section.
  for (const auto& section : order) {
    const auto node = tree.get_child_optional(section);
    if (!node || section == "vertiports") continue;
    for (const auto& [name, value] : *node) {
      const auto& table = key_table();
      const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) {
        return k.section == section && k.name == name;
      });
      if (it == table.end()) throw UnknownKeyError("unknown config key [" + section + "] " + name);
      if (!value.empty()) throw ParseError("nested entries are not allowed", 0);
      it->set(c, "[" + section + "] " + name, trim(value.data()));
    }
  }
  if (const auto node = tree.get_child_optional("vertiports")) {
    c.train.world.map = parse_vertiports(*node, c.train.world.map.half_extent_m);
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string render_config(const ExperimentConfig& config) {
  std::ostringstream out;
  bool first = true;
  for (const auto& section : section_order()) {
    out << (first ? "" : "\n") << '[' << section << "]\n";
    first = false;
    if (section == "vertiports") {
      for (const auto& v : config.train.world.map.vertiports) {
        out << v.id << " = " << v.name << ", " << fmt(v.x_m) << ", " << fmt(v.y_m) << '\n';
      }
      continue;
    }
    for (const auto& k : key_table()) {
      if (k.section == section) out << k.name << " = " << k.get(config) << '\n';
    }
  }
  return out.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const auto& k : key_table()) out.push_back(k.section + "." + k.name);
  return out;
}

}  // namespace uam
