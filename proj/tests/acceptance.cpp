// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Criteria 6-10 share one desk-scale experiment grid.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uam/aero_energy.hpp"
#include "uam/baselines.hpp"
#include "uam/commnet.hpp"
#include "uam/ctde.hpp"
#include "uam/metrics.hpp"
#include "uam/nn.hpp"
#include "uam/rng.hpp"
#include "uam/trajectory.hpp"

using namespace uam;
using nn::Matrix;

namespace {

// Frozen output of tests/oracles/power_oracle.py (50-digit arithmetic).
constexpr double kOraclePh = 636899.87119998020031;
constexpr double kOraclePp = 261634.76612414087609;

// Desk-scale grid. The learning rates were chosen on seeds 101-110, disjoint
// from the acceptance seeds below.
constexpr int kDeskUams = 4;
constexpr int kDeskPassengers = 10;
constexpr int kDeskEpochs = 300;
constexpr int kDeskSeeds = 10;
constexpr double kDeskActorLr = 3e-4;
constexpr double kDeskCriticLr = 5e-3;
constexpr int kDeskInferenceEpisodes = 20;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double fd_error(double fd, double analytic) {
  return std::abs(fd - analytic) / std::max(1.0, std::abs(fd) + std::abs(analytic));
}

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = rng.uniform(-1.0, 1.0);
  return m;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Largest central-difference error over every parameter of a flat vector.
double worst_fd(std::vector<double> params, const std::function<void(const std::vector<double>&)>& set,
                const std::function<double()>& objective, const std::vector<double>& analytic) {
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    set(params);
    const double up = objective();
    params[i] = keep - h;
    set(params);
    const double down = objective();
    params[i] = keep;
    set(params);
    worst = std::max(worst, fd_error((up - down) / (2 * h), analytic[i]));
  }
  return worst;
}

Outcome energy_oracle() {
  const AircraftSpec spec;
  const double ph = hover_power(spec).total_w;
  const double pp = cruise_power(spec, spec.cruise_speed_mps).total_w;
  const SpecDiagnostics d = validate_spec(spec);
  const auto& area = d.field("disc_area_m2");
  const auto& solidity = d.field("rotor_solidity");
  const auto& drag = d.field("fuselage_drag_ratio");
  const bool powers = rel(ph, kOraclePh) <= 1e-9 && rel(pp, kOraclePp) <= 1e-9;
  const bool derived = rel(area.recomputed, 6.61) <= 0.01 && rel(solidity.recomputed, 0.2449) <= 0.01 &&
                       drag.status != DerivedFieldStatus::Discrepancy;
  const bool flags = d.field("tip_speed_mps").status == DerivedFieldStatus::Discrepancy &&
                     d.field("mean_induced_velocity_mps").status == DerivedFieldStatus::Discrepancy;
  return {powers && derived && flags,
          "hover rel " + fmt("%.1e", rel(ph, kOraclePh)) + ", cruise rel " + fmt("%.1e", rel(pp, kOraclePp)) +
              ", A " + fmt("%.4f", area.recomputed) + ", s " + fmt("%.4f", solidity.recomputed) + ", d0 " +
              fmt("%.5f", drag.recomputed) + " (" + to_string(drag.status) + "), U_tip/v0 flagged " +
              (flags ? "yes" : "no")};
}

Outcome battery_arithmetic() {
  const AircraftSpec spec;
  const BatterySpec b;
  const FlightPower power = flight_power(spec);
  const double added = charge(EnergyState{100.0}, 300.0, b).remaining_kwh - 100.0;
  bool ok = added == 30.0 && added / b.capacity_kwh == 0.2;
  Rng rng(11);
  const double step = spec.cruise_speed_mps * 60.0;
  double worst = 0.0;
  for (int seq = 0; seq < 10000; ++seq) {
    EnergyState e{b.capacity_kwh};
    double discharged = 0.0, charged = 0.0;
    for (int t = 0; t < 60; ++t) {
      const EnergyState before = e;
      switch (rng.index(4)) {
        case 0: e = charge(e, rng.uniform(0.0, 120.0), b); break;
        case 1: e = step_energy(e, {0.0, 0.0}, true, 60.0, power); break;
        case 2: {
          const double angle = rng.uniform(0.0, 6.283185307179586);
          const double len = rng.uniform(0.0, step) * 0.999999;
          e = step_energy(e, {len * std::cos(angle), len * std::sin(angle)}, false, 60.0, power);
          break;
        }
        default: break;
      }
      if (e.remaining_kwh < 0.0 || e.remaining_kwh > b.capacity_kwh) ok = false;
      const double delta = e.remaining_kwh - before.remaining_kwh;
      if (delta > 0.0) charged += delta;
      else discharged -= delta;
    }
    worst = std::max(worst, std::abs(discharged + e.remaining_kwh - charged - b.capacity_kwh));
  }
  ok = ok && worst <= 1e-9;
  return {ok, "+" + fmt("%.17g", added) + " kWh per 5 min, worst imbalance " + fmt("%.1e", worst) +
                  " kWh over 10000 sequences"};
}

Outcome gradient_fidelity() {
  Rng rng(2024);
  double mlp = 0.0, commnet = 0.0, critic = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int layers = 1 + static_cast<int>(rng.index(3));
    std::vector<int> sizes;
    for (int i = 0; i <= layers; ++i) sizes.push_back(1 + static_cast<int>(rng.index(12)));
    nn::Mlp net(sizes);
    net.init_glorot(rng);
    for (double& p : net.mutable_parameters()) p += rng.uniform(-0.1, 0.1);
    const int batch = 1 + static_cast<int>(rng.index(4));
    const Matrix x = random_matrix(sizes.front(), batch, rng);
    const Matrix c = random_matrix(sizes.back(), batch, rng);
    nn::Mlp::Cache cache;
    net.forward(x, &cache);
    std::vector<double> grad(net.parameter_count(), 0.0);
    net.backward(cache, c, grad);
    mlp = std::max(mlp, worst_fd({net.parameters().begin(), net.parameters().end()},
                                 [&](const std::vector<double>& p) { net.set_parameters(p); },
                                 [&] { return (net.forward(x).array() * c.array()).sum(); }, grad));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const int input = 1 + static_cast<int>(rng.index(6));
    const int hidden = 1 + static_cast<int>(rng.index(6));
    const int k = 1 + static_cast<int>(rng.index(2));
    const int agents = 1 + static_cast<int>(rng.index(4));
    CommNetPolicy p(CommNetConfig{input, hidden, k, kActionCount, true});
    p.init(rng);
    auto params = p.parameters();
    for (double& v : params) v += rng.uniform(-0.05, 0.05);
    p.set_parameters(params);
    const Matrix obs = random_matrix(input, agents, rng);
    std::vector<int> actions(agents);
    std::vector<double> weights(agents);
    for (int j = 0; j < agents; ++j) {
      actions[j] = static_cast<int>(rng.index(kActionCount));
      weights[j] = rng.uniform(-1.5, 1.5);
    }
    CommNetPolicy::Cache cache;
    const Matrix probs = nn::softmax_columns(p.logits(obs, agents, &cache));
    const auto grad = p.backward_joint(cache, log_prob_logit_grad(probs, actions, weights));
    auto objective = [&] {
      const Matrix q = p.forward_joint(obs, agents);
      double total = 0.0;
      for (int j = 0; j < agents; ++j) total += weights[j] * std::log(q(actions[j], j));
      return total;
    };
    commnet = std::max(commnet, worst_fd(params, [&](const std::vector<double>& v) { p.set_parameters(v); },
                                         objective, grad));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const int input = 1 + static_cast<int>(rng.index(16));
    const int hidden = 1 + static_cast<int>(rng.index(12));
    const int layers = 1 + static_cast<int>(rng.index(2));
    ValueCritic v(input, hidden, layers, nn::OptimizerKind::Adam, nn::AdamConfig{}, 0.0);
    v.init(rng);
    nn::Mlp& net = v.network();
    for (double& p : net.mutable_parameters()) p += rng.uniform(-0.1, 0.1);
    const Matrix states = random_matrix(input, 1 + static_cast<int>(rng.index(4)), rng);
    nn::Mlp::Cache cache;
    net.forward(states, &cache);
    std::vector<double> grad(net.parameter_count(), 0.0);
    net.backward(cache, Matrix::Ones(1, states.cols()), grad);
    critic = std::max(critic, worst_fd({net.parameters().begin(), net.parameters().end()},
                                       [&](const std::vector<double>& p) { net.set_parameters(p); },
                                       [&] { return v.values(states).sum(); }, grad));
  }
  return {mlp < 1e-4 && commnet < 1e-4 && critic < 1e-4,
          "max rel error: mlp " + fmt("%.1e", mlp) + ", commnet " + fmt("%.1e", commnet) + ", critic " +
              fmt("%.1e", critic) + " (100 instances each)"};
}

Outcome commnet_invariants() {
  Rng rng(7);
  bool perm = true;
  for (int trial = 0; trial < 200; ++trial) {
    const int agents = 2 + static_cast<int>(rng.index(6));
    const Matrix h = random_matrix(1 + static_cast<int>(rng.index(8)), agents, rng);
    std::vector<int> order(agents);
    std::iota(order.begin(), order.end(), 0);
    for (int i = agents - 1; i > 1; --i) std::swap(order[i], order[1 + rng.index(static_cast<std::size_t>(i))]);
    Matrix shuffled = h;
    for (int j = 0; j < agents; ++j) shuffled.col(j) = h.col(order[j]);
    // Agent 0 keeps its column; only the others are reordered.
    const Matrix a = comm_mean(h, agents);
    const Matrix b = comm_mean(shuffled, agents);
    if (!a.col(0).isApprox(b.col(0), 1e-13)) perm = false;
  }
  const Matrix h2 = random_matrix(5, 2, rng);
  const Matrix c2 = comm_mean(h2, 2);
  const bool pair = c2.col(0) == h2.col(1) && c2.col(1) == h2.col(0);

  bool k0 = true;
  for (int trial = 0; trial < 50; ++trial) {
    const CommNetConfig cfg{1 + static_cast<int>(rng.index(8)), 1 + static_cast<int>(rng.index(10)), 0,
                            kActionCount, true};
    CommNetPolicy a(cfg);
    a.init(rng);
    CommNetPolicy b = make_dnn_policy(cfg);
    b.set_parameters(a.parameters());
    const int agents = 1 + static_cast<int>(rng.index(5));
    const Matrix obs = random_matrix(cfg.input_size, agents, rng);
    if (a.forward_joint(obs, agents) != b.forward_joint(obs, agents)) k0 = false;
  }

  bool path = true;
  for (int k = 1; k <= 3; ++k) {
    CommNetPolicy p(CommNetConfig{4, 6, k, kActionCount, true});
    p.init(rng);
    Matrix obs = random_matrix(4, 2, rng);
    obs(0, 0) = 0.0;  // encoder column 0 reaches agent 0 only through agent 1
    CommNetPolicy::Cache cache;
    const Matrix probs = nn::softmax_columns(p.logits(obs, 2, &cache));
    const std::vector<int> actions{3, 0};
    const std::vector<double> weights{1.0, 0.0};
    const auto grad = p.backward_joint(cache, log_prob_logit_grad(probs, actions, weights));
    double mass = 0.0;
    for (int r = 0; r < 6; ++r) mass += std::abs(grad[r]);
    if (!(mass > 0.0)) path = false;
  }
  return {perm && pair && k0 && path, std::string("permutation ") + (perm ? "ok" : "broken") + ", J=2 swap " +
                                          (pair ? "ok" : "broken") + ", K=0 equals no-comm " +
                                          (k0 ? "ok" : "broken") + ", cross-agent gradient " +
                                          (path ? "nonzero" : "zero")};
}

Outcome td_machinery() {
  struct Case {
    double r, v, nv, g;
    bool term;
    double expected;
  };
  const Case cases[] = {{1.0, 0.2, 0.5, 0.98, false, 1.29}, {1.0, 0.2, 0.5, 0.98, true, 0.8},
                        {-0.4, 0.3, 7.0, 0.0, false, -0.7}, {0.0, 0.0, 0.0, 0.98, false, 0.0},
                        {2.0, 1.0, 1.0, 1.0, false, 2.0},   {0.5, -1.0, 2.0, 0.5, false, 2.5}};
  bool td = true;
  for (const Case& c : cases) {
    if (std::abs(td_error(c.r, c.v, c.nv, c.g, c.term) - c.expected) > 1e-15) td = false;
  }

  Rng rng(5);
  bool fifo = true;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t cap = 1 + rng.index(40);
    ReplayBuffer buf(cap);
    const int n = static_cast<int>(rng.index(200));
    for (int i = 0; i < n; ++i) {
      Transition t;
      t.team_reward = i;
      buf.push(t);
    }
    const std::size_t kept = std::min<std::size_t>(cap, static_cast<std::size_t>(n));
    if (buf.size() != kept) fifo = false;
    for (std::size_t k = 0; k < buf.size(); ++k) {
      if (buf.at(k).team_reward != static_cast<double>(n - static_cast<int>(kept) + static_cast<int>(k))) fifo = false;
    }
  }

  bool gate = true;
  for (int trial = 0; trial < 8; ++trial) {
    TrainConfig c;
    c.world.num_uams = 2;
    c.world.num_passengers = 4;
    c.world.episode_minutes = 10.0;
    c.epochs = 6;
    c.batch_size = 8;
    c.buffer_capacity = 500;
    c.actor_hidden = 8;
    c.critic_hidden = 16;
    c.seed = 40 + trial;
    c.buffer_gate = 8 + static_cast<int>(rng.index(60));
    auto learner = make_learner(BenchmarkKind::CommNetCtde, c);
    for (const EpochRecord& e : train(c, *learner).epochs) {
      const bool open = e.buffer_size >= static_cast<std::size_t>(c.buffer_gate);
      if ((e.gradient_steps > 0) != open) gate = false;
    }
  }

  const ExplorationSchedule eps;
  const bool floor = eps.at(5299) > 0.01 && std::abs(eps.at(5300) - 0.01) <= 1e-12 && eps.at(6000) == 0.01;
  return {td && fifo && gate && floor, std::string("td ") + (td ? "exact" : "wrong") + ", FIFO " +
                                           (fifo ? "ok" : "broken") + ", gate " + (gate ? "ok" : "broken") +
                                           ", epsilon(5300) " + fmt("%.12g", eps.at(5300))};
}

// Desk-scale experiment cell.
struct Cell {
  double convergence = 0.0;
  double service_variance = 0.0;
  double services_per_episode = 0.0;
  double training_tail_variance = 0.0;  // last 10% of training episodes
  int invariant_violations = 0;
  int energy_violations = 0;
  int depletion_violations = 0;
  std::string csv;
  std::string trajectories;
};

TrainConfig desk_config(std::uint64_t seed) {
  TrainConfig c;
  c.world.num_uams = kDeskUams;
  c.world.map = VertiportMap::dallas();
  c.world.map.vertiports.pop_back();  // four vertiports
  c.world.num_passengers = kDeskPassengers;
  c.epochs = kDeskEpochs;
  c.seed = seed;
  c.actor_learning_rate = kDeskActorLr;
  c.critic_learning_rate = kDeskCriticLr;
  c.check_invariants = true;
  c.trajectory_interval = 1;
  c.inference_episodes = kDeskInferenceEpisodes;
  return c;
}

// Energy bounds and the forced hold of a depleted aircraft, checked on
// every logged step.
void scan_trajectories(const std::string& jsonl, double capacity, Cell& cell) {
  std::istringstream in(jsonl);
  std::string line;
  int episode = -1;
  std::vector<double> last_energy;
  std::vector<std::vector<double>> last_pos;
  while (std::getline(in, line)) {
    const auto rec = nlohmann::json::parse(line);
    const int ep = rec.at("episode").get<int>();
    const auto energy = rec.at("energy_kwh").get<std::vector<double>>();
    const auto pos = rec.at("positions").get<std::vector<std::vector<double>>>();
    const auto actions = rec.at("actions").get<std::vector<int>>();
    if (ep == episode) {
      for (std::size_t j = 0; j < energy.size(); ++j) {
        if (last_energy[j] > 0.0) continue;
        if (actions[j] != static_cast<int>(Action::Hold) || pos[j][0] != last_pos[j][0] ||
            pos[j][1] != last_pos[j][1] || pos[j][2] != last_pos[j][2]) {
          ++cell.depletion_violations;
        }
      }
    }
    for (double e : energy) {
      if (!(e >= 0.0 && e <= capacity)) ++cell.energy_violations;
    }
    episode = ep;
    last_energy = energy;
    last_pos = pos;
  }
}

Cell run_cell(BenchmarkKind kind, std::uint64_t seed) {
  const TrainConfig c = desk_config(seed);
  auto learner = make_learner(kind, c);
  std::ostringstream csv, traj, inference;
  TrajectoryWriter writer(traj);
  const TrainResult r = train(c, *learner, TrainSinks{&csv, &writer});
  std::vector<double> rewards;
  for (const EpochRecord& e : r.epochs) rewards.push_back(e.mean_reward);
  Cell cell;
  cell.convergence = final_fraction_mean(rewards);
  cell.invariant_violations = static_cast<int>(r.invariant_violations.size());
  std::vector<std::string> violations;
  TrajectoryWriter inference_writer(inference);
  const auto episodes = run_inference(c, *learner, c.inference_episodes, &inference_writer, &violations);
  cell.invariant_violations += static_cast<int>(violations.size());
  cell.service_variance = fairness_variance(episodes).services;
  cell.services_per_episode = service_quality(episodes).mean_services * c.world.num_uams;
  const std::size_t tail = r.episodes.size() / 10;
  cell.training_tail_variance =
      fairness_variance(std::span(r.episodes).subspan(r.episodes.size() - tail)).services;
  cell.csv = csv.str();
  cell.trajectories = traj.str();
  scan_trajectories(cell.trajectories, c.world.battery.capacity_kwh, cell);
  scan_trajectories(inference.str(), c.world.battery.capacity_kwh, cell);
  return cell;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

int wins(const std::vector<double>& a, const std::vector<double>& b) {
  int n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) n += a[i] >= b[i];
  return n;
}

void report(int id, const std::string& name, const Outcome& o, bool& all) {
  std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " " << name << ": " << o.detail
            << std::endl;
  all = all && o.pass;
}

}  // namespace

int main() {
  bool all = true;
  report(1, "energy-model oracle", energy_oracle(), all);
  report(2, "battery arithmetic", battery_arithmetic(), all);
  report(3, "gradient fidelity", gradient_fidelity(), all);
  report(4, "commnet invariants", commnet_invariants(), all);
  report(5, "td machinery", td_machinery(), all);

  const auto start = std::chrono::steady_clock::now();
  std::map<BenchmarkKind, std::vector<Cell>> grid;
  std::map<BenchmarkKind, std::vector<double>> finals;
  for (BenchmarkKind kind : kAllBenchmarks) {
    for (int s = 1; s <= kDeskSeeds; ++s) {
      Cell cell = run_cell(kind, static_cast<std::uint64_t>(s));
      finals[kind].push_back(cell.convergence);
      if (s > 1) {  // only seed 1 is kept for the determinism rerun
        cell.csv.clear();
        cell.trajectories.clear();
      }
      grid[kind].push_back(std::move(cell));
    }
    std::cout << "  " << to_string(kind) << " seed-mean final reward " << fmt("%.4f", mean(finals[kind]))
              << std::endl;
  }
  const double minutes =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;

  const auto& cn = finals[BenchmarkKind::CommNetCtde];
  const auto& mc = finals[BenchmarkKind::MonteCarlo];
  const double gain = (mean(cn) - mean(mc)) / std::abs(mean(mc));
  const WilcoxonResult w = wilcoxon_signed_rank_greater(cn, mc);
  report(6, "desk-scale learning signal",
         {gain >= 0.2 && w.p_value < 0.05, "commnet " + fmt("%.4f", mean(cn)) + " vs monte carlo " +
                                               fmt("%.4f", mean(mc)) + ", relative gain " + fmt("%.3f", gain) +
                                               ", one-sided Wilcoxon p " + fmt("%.4g", w.p_value) + ", grid " +
                                               fmt("%.1f", minutes) + " min"},
         all);

  const auto& hy = finals[BenchmarkKind::Hybrid];
  const auto& dn = finals[BenchmarkKind::Dnn];
  const auto& iac = finals[BenchmarkKind::Iac];
  const auto& dqn = finals[BenchmarkKind::Dqn];
  const auto pair_ok = [](const std::vector<double>& a, const std::vector<double>& b) {
    return mean(a) >= mean(b) && wins(a, b) >= 7;
  };
  const auto pair_text = [](const char* name, const std::vector<double>& a, const std::vector<double>& b) {
    return std::string(name) + " " + fmt("%.4f", mean(a)) + " vs " + fmt("%.4f", mean(b)) + " (" +
           std::to_string(wins(a, b)) + "/10)";
  };
  report(7, "benchmark ordering",
         {pair_ok(cn, hy) && pair_ok(hy, dn) && pair_ok(cn, iac),
          pair_text("commnet>=hybrid", cn, hy) + ", " + pair_text("hybrid>=dnn", hy, dn) + ", " +
              pair_text("ctde>=iac", cn, iac) + "; ungated: dqn " + fmt("%.4f", mean(dqn)) +
              (mean(dqn) < mean(mc) ? " below" : " not below") + " monte carlo"},
         all);

  const auto column = [&](BenchmarkKind kind, double Cell::*field) {
    std::vector<double> v;
    for (const Cell& c : grid[kind]) v.push_back(c.*field);
    return v;
  };
  const auto var_cn = column(BenchmarkKind::CommNetCtde, &Cell::service_variance);
  const auto var_iac = column(BenchmarkKind::Iac, &Cell::service_variance);
  report(8, "fairness analog",
         {mean(var_cn) <= mean(var_iac),
          "inference service-count variance commnet " + fmt("%.4f", mean(var_cn)) + " vs iac " +
              fmt("%.4f", mean(var_iac)) + "; ungated: services per inference episode commnet " +
              fmt("%.3f", mean(column(BenchmarkKind::CommNetCtde, &Cell::services_per_episode))) + ", iac " +
              fmt("%.3f", mean(column(BenchmarkKind::Iac, &Cell::services_per_episode))) +
              ", training-tail variance commnet " +
              fmt("%.4f", mean(column(BenchmarkKind::CommNetCtde, &Cell::training_tail_variance))) + ", iac " +
              fmt("%.4f", mean(column(BenchmarkKind::Iac, &Cell::training_tail_variance)))},
         all);

  int inv = 0, energy = 0, depleted = 0;
  for (const auto& [kind, cells] : grid) {
    for (const Cell& c : cells) {
      inv += c.invariant_violations;
      energy += c.energy_violations;
      depleted += c.depletion_violations;
    }
  }
  report(9, "safety and energy properties",
         {inv == 0 && energy == 0 && depleted == 0,
          "structural violations " + std::to_string(inv) + ", energy out of bounds " + std::to_string(energy) +
              ", depleted aircraft moved " + std::to_string(depleted) + " over " +
              std::to_string(grid.size() * kDeskSeeds) + " runs"},
         all);

  int identical = 0;
  for (BenchmarkKind kind : kAllBenchmarks) {
    const Cell again = run_cell(kind, 1);
    const Cell& first = grid[kind].front();
    identical += again.csv == first.csv && again.trajectories == first.trajectories && !first.csv.empty() &&
                 !first.trajectories.empty();
  }
  const int total = static_cast<int>(std::size(kAllBenchmarks));
  report(10, "determinism",
         {identical == total, std::to_string(identical) + "/" + std::to_string(total) +
                                  " algorithms reproduce epoch CSV and trajectories byte-identically (seed 1)"},
         all);

  std::cout << (all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAIL") << std::endl;
  return all ? 0 : 1;
}
