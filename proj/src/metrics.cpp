#include "uam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

#include "uam/errors.hpp"

namespace uam {

nlohmann::json to_json(const EpisodeMetrics& m) {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : m.agents) {
    agents.push_back({{"services_delivered", a.services_delivered},
                      {"landings", a.landings},
                      {"distinct_vertiports", a.distinct_vertiports},
                      {"collision_events", a.collision_events},
                      {"cumulative_reward", a.cumulative_reward},
                      {"energy_trace_kwh", a.energy_trace_kwh}});
  }
  return {{"seed", m.seed}, {"steps", m.steps}, {"team_reward", m.team_reward}, {"agents", agents}};
}

EpisodeRecorder::EpisodeRecorder(int num_uams, std::uint64_t seed)
    : landed_at_(static_cast<std::size_t>(num_uams)) {
  metrics_.seed = seed;
  metrics_.agents.resize(static_cast<std::size_t>(num_uams));
}

void EpisodeRecorder::record(const World& world, const StepResult& step) {
  const auto& uams = world.uams();
  for (std::size_t j = 0; j < metrics_.agents.size(); ++j) {
    auto& a = metrics_.agents[j];
    a.cumulative_reward += step.reward.per_agent[j];
    a.energy_trace_kwh.push_back(uams[j].energy.remaining_kwh);
  }
  for (const StepEvent& e : step.events) {
    auto& a = metrics_.agents[static_cast<std::size_t>(e.uam)];
    switch (e.kind) {
      case StepEvent::Kind::Deliver: ++a.services_delivered; break;
      case StepEvent::Kind::Landing:
        ++a.landings;
        landed_at_[static_cast<std::size_t>(e.uam)].insert(e.vertiport);
        a.distinct_vertiports = static_cast<int>(landed_at_[static_cast<std::size_t>(e.uam)].size());
        break;
      case StepEvent::Kind::Collision: ++a.collision_events; break;
      default: break;
    }
  }
  metrics_.team_reward += step.reward.team;
  ++metrics_.steps;
}

EpisodeMetrics EpisodeRecorder::finish() const { return metrics_; }

const std::vector<double>& ServiceQuality::factor(QualityFactor f) const {
  switch (f) {
    case QualityFactor::Services: return services;
    case QualityFactor::Landings: return landings;
    case QualityFactor::VertiportTypes: return vertiport_types;
  }
  return services;
}

ServiceQuality service_quality(std::span<const EpisodeMetrics> episodes) {
  if (episodes.empty()) throw UsageError("service_quality: no episodes");
  const std::size_t J = episodes.front().agents.size();
  if (J == 0) throw UsageError("service_quality: episodes have no agents");
  ServiceQuality q;
  q.services.assign(J, 0.0);
  q.landings.assign(J, 0.0);
  q.vertiport_types.assign(J, 0.0);
  for (const auto& ep : episodes) {
    if (ep.agents.size() != J) throw UsageError("service_quality: agent count differs between episodes");
    for (std::size_t j = 0; j < J; ++j) {
      q.services[j] += ep.agents[j].services_delivered;
      q.landings[j] += ep.agents[j].landings;
      q.vertiport_types[j] += ep.agents[j].distinct_vertiports;
    }
  }
  const double n = static_cast<double>(episodes.size());
  for (std::size_t j = 0; j < J; ++j) {
    q.services[j] /= n;
    q.landings[j] /= n;
    q.vertiport_types[j] /= n;
  }
  auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  q.mean_services = mean(q.services);
  q.mean_landings = mean(q.landings);
  q.mean_vertiport_types = mean(q.vertiport_types);
  return q;
}

double population_variance(std::span<const double> values) {
  if (values.empty()) throw UsageError("population_variance: no values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / n;
}

FairnessVariance fairness_variance(std::span<const EpisodeMetrics> episodes) {
  if (!episodes.empty() && episodes.front().agents.size() < 2) {
    throw UsageError("fairness_variance: at least two agents are required");
  }
  const ServiceQuality q = service_quality(episodes);
  return {population_variance(q.services), population_variance(q.landings),
          population_variance(q.vertiport_types)};
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw ParseError("epoch CSV: '" + cell + "' is not a number", line);
  }
  if (used != cell.size()) throw ParseError("epoch CSV: '" + cell + "' is not a number", line);
  return v;
}

}  // namespace

std::vector<EpochRow> parse_epoch_csv(std::istream& in) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) throw ParseError("epoch CSV: missing header", line_no);
  const auto header = split_csv(line);
  const std::size_t fixed = 5;  // epoch, epsilon, mean_reward, buffer_size, wall_ms
  if (header.size() < fixed + 1 || header[0] != "epoch" || header[1] != "epsilon" ||
      header[2] != "mean_reward" || header[header.size() - 2] != "buffer_size" ||
      header.back() != "wall_ms") {
    throw ParseError("epoch CSV: unexpected header", line_no);
  }
  const std::size_t agents = header.size() - fixed;
  for (std::size_t j = 0; j < agents; ++j) {
    if (header[3 + j] != "per_agent_reward_" + std::to_string(j + 1)) {
      throw ParseError("epoch CSV: unexpected column " + header[3 + j], line_no);
    }
  }

  std::vector<EpochRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ParseError("epoch CSV: expected " + std::to_string(header.size()) + " columns, got " +
                           std::to_string(cells.size()),
                       line_no);
    }
    EpochRow row;
    row.epoch = static_cast<int>(parse_number(cells[0], line_no));
    row.epsilon = parse_number(cells[1], line_no);
    row.mean_reward = parse_number(cells[2], line_no);
    for (std::size_t j = 0; j < agents; ++j) row.per_agent_reward.push_back(parse_number(cells[3 + j], line_no));
    row.buffer_size = static_cast<std::size_t>(parse_number(cells[3 + agents], line_no));
    row.wall_ms = parse_number(cells[4 + agents], line_no);
    rows.push_back(std::move(row));
  }
  return rows;
}

double final_fraction_mean(std::span<const double> series, double fraction) {
  if (series.empty()) throw UsageError("final_fraction_mean: empty series");
  const auto count = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(series.size()) - 1e-9)));
  const auto tail = series.last(std::min(count, series.size()));
  return std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(tail.size());
}

RewardCurve reward_curve(std::span<const double> rewards, int window) {
  if (window < 1) throw UsageError("reward_curve: window must be at least 1");
  RewardCurve c;
  c.raw.assign(rewards.begin(), rewards.end());
  c.smoothed.reserve(rewards.size());
  double running = 0.0;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    running += rewards[i];
    if (i >= static_cast<std::size_t>(window)) running -= rewards[i - static_cast<std::size_t>(window)];
    const std::size_t n = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    c.smoothed.push_back(window == 1 ? rewards[i] : running / static_cast<double>(n));
  }
  if (!rewards.empty()) c.convergence_value = final_fraction_mean(rewards);
  return c;
}

RewardCurve reward_curve(std::span<const EpochRow> rows, int window) {
  std::vector<double> r;
  r.reserve(rows.size());
  for (const auto& row : rows) r.push_back(row.mean_reward);
  return reward_curve(r, window);
}

std::vector<EpisodeMetrics> metrics_from_trajectory(std::istream& jsonl, int num_uams) {
  std::map<int, EpisodeMetrics> episodes;
  std::map<int, std::vector<std::set<std::string>>> landed;
  std::string line;
  int line_no = 0;
  while (std::getline(jsonl, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
      const int ep = rec.at("episode").get<int>();
      auto [it, fresh] = episodes.try_emplace(ep);
      EpisodeMetrics& m = it->second;
      if (fresh) {
        m.seed = static_cast<std::uint64_t>(ep);
        m.agents.resize(static_cast<std::size_t>(num_uams));
        landed[ep].resize(static_cast<std::size_t>(num_uams));
      }
      const auto rewards = rec.at("rewards").get<std::vector<double>>();
      const auto energy = rec.at("energy_kwh").get<std::vector<double>>();
      if (static_cast<int>(rewards.size()) != num_uams || static_cast<int>(energy.size()) != num_uams) {
        throw ParseError("trajectory: agent count mismatch", line_no);
      }
      for (int j = 0; j < num_uams; ++j) {
        m.agents[j].cumulative_reward += rewards[j];
        m.agents[j].energy_trace_kwh.push_back(energy[j]);
      }
      m.team_reward += rec.value("team_reward", 0.0);
      ++m.steps;
      for (const auto& ev : rec.at("events")) {
        const std::string type = ev.at("type").get<std::string>();
        const int j = ev.at("uam").get<int>();
        if (j < 0 || j >= num_uams) throw ParseError("trajectory: event agent out of range", line_no);
        auto& a = m.agents[j];
        if (type == "deliver") {
          ++a.services_delivered;
        } else if (type == "landing") {
          ++a.landings;
          auto& seen = landed[ep][static_cast<std::size_t>(j)];
          seen.insert(ev.at("vertiport").get<std::string>());
          a.distinct_vertiports = static_cast<int>(seen.size());
        } else if (type == "collision") {
          ++a.collision_events;
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("trajectory: ") + e.what(), line_no);
    }
  }
  std::vector<EpisodeMetrics> out;
  for (auto& [ep, m] : episodes) out.push_back(std::move(m));
  return out;
}

WilcoxonResult wilcoxon_signed_rank_greater(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("wilcoxon: samples must be paired");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult r;
  r.n = static_cast<int>(diffs.size());
  if (r.n == 0) return r;

  std::vector<std::size_t> order(diffs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });
  // Doubled mid-ranks keep every rank an integer.
  std::vector<int> rank2(diffs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t k = i;
    while (k + 1 < order.size() && std::abs(diffs[order[k + 1]]) == std::abs(diffs[order[i]])) ++k;
    const int doubled = static_cast<int>(i + k + 2);  // (i+1 + k+1)
    for (std::size_t m = i; m <= k; ++m) rank2[order[m]] = doubled;
    i = k + 1;
  }
  int observed2 = 0;
  int total2 = 0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    total2 += rank2[i];
    if (diffs[i] > 0.0) observed2 += rank2[i];
  }
  // counts[s] = number of sign patterns whose positive doubled-rank sum is s.
  std::vector<double> counts(static_cast<std::size_t>(total2) + 1, 0.0);
  counts[0] = 1.0;
  for (int rk : rank2) {
    for (int s = total2; s >= rk; --s) counts[static_cast<std::size_t>(s)] += counts[static_cast<std::size_t>(s - rk)];
  }
  double tail = 0.0;
  for (int s = observed2; s <= total2; ++s) tail += counts[static_cast<std::size_t>(s)];
  r.w_plus = observed2 / 2.0;
  r.p_value = tail / std::pow(2.0, r.n);
  return r;
}

}  // namespace uam
