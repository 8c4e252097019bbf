#pragma once

// Evaluation protocol and the reference bodyguard controllers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "escort/marl.hpp"
#include "escort/scenario.hpp"

namespace escort {

/// Builds a fresh controller for one episode; `controller_seed` feeds any
/// randomness the controller needs.
using ControllerFactory = std::function<BodyguardController(std::uint64_t controller_seed)>;

/// Noise-free actors of a trained bundle.
inline ControllerFactory policy_controller(LearnerBundle bundle) {
  auto shared = std::make_shared<const LearnerBundle>(std::move(bundle));
  return [shared](std::uint64_t) -> BodyguardController {
    return [shared](const WorldState& s, const RoleAssignment& roles) {
      const LearnerBundle& bundle = *shared;
      std::vector<AgentAction> out;
      for (std::size_t k = 0; k < roles.bodyguard_indices.size(); ++k) {
        const std::vector<double> y = forward(bundle.agent(k).actor, observe(s, roles.bodyguard_indices[k]));
        std::vector<double> a(y);
        for (double& v : a) v = std::clamp(v, -1.0, 1.0);
        out.push_back(to_agent_action(a));
      }
      return out;
    };
  };
}

inline ControllerFactory stationary_controller(int c_dim) {
  return [c_dim](std::uint64_t) -> BodyguardController {
    return [c_dim](const WorldState&, const RoleAssignment& roles) {
      return std::vector<AgentAction>(roles.bodyguard_indices.size(),
                                      AgentAction{{}, Utterance(static_cast<std::size_t>(c_dim), 0.0)});
    };
  };
}

/// Independent uniform forces in [-1, 1]^2 every step.
inline ControllerFactory random_controller(int c_dim) {
  return [c_dim](std::uint64_t seed) -> BodyguardController {
    return [c_dim, rng = Rng(seed)](const WorldState&, const RoleAssignment& roles) mutable {
      std::vector<AgentAction> out;
      for (std::size_t k = 0; k < roles.bodyguard_indices.size(); ++k) {
        const double fx = rng.uniform(-1.0, 1.0);
        const double fy = rng.uniform(-1.0, 1.0);
        out.push_back(AgentAction{{fx, fy}, Utterance(static_cast<std::size_t>(c_dim), 0.0)});
      }
      return out;
    };
  };
}

/// Bodyguard k holds the point at angle 2*pi*k/n and radius (m + d) / 2
/// around the VIP, steering with a saturated proportional-derivative law.
inline ControllerFactory scripted_ring_controller(const ScenarioConfig& cfg) {
  const double radius = 0.5 * (cfg.threat.m + cfg.threat.d);
  const int c_dim = cfg.c_dim;
  return [radius, c_dim](std::uint64_t) -> BodyguardController {
    return [radius, c_dim](const WorldState& s, const RoleAssignment& roles) {
      const EntityState& vip = s.agents.at(roles.vip_index);
      const std::size_t n = roles.bodyguard_indices.size();
      std::vector<AgentAction> out;
      for (std::size_t k = 0; k < n; ++k) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        const Vec2 target = vip.position + Vec2{std::cos(angle), std::sin(angle)} * radius;
        const EntityState& me = s.agents.at(roles.bodyguard_indices[k]);
        Vec2 f = (target - me.position) * 4.0 + (vip.velocity - me.velocity) * 0.5;
        f.x = std::clamp(f.x, -1.0, 1.0);
        f.y = std::clamp(f.y, -1.0, 1.0);
        out.push_back(AgentAction{f, Utterance(static_cast<std::size_t>(c_dim), 0.0)});
      }
      return out;
    };
  };
}

struct EvalReport {
  std::string controller;
  std::uint64_t seed = 0;
  std::vector<std::uint64_t> episode_seeds;
  std::vector<double> cumulative_threat;  // per episode
  std::vector<double> mean_reward;        // per episode, over steps and bodyguards
  std::vector<double> band_fraction;      // per episode: share of steps whose mean bodyguard-VIP distance is in [m, d]
  double threat_mean = 0.0;
  double threat_median = 0.0;
  double threat_stddev = 0.0;  // sample standard deviation (0 for one episode)
  double reward_mean = 0.0;
  double band_fraction_mean = 0.0;
};

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double sq = 0.0;
  for (double x : v) sq += (x - mu) * (x - mu);
  return std::sqrt(sq / static_cast<double>(v.size() - 1));
}

inline std::uint64_t evaluation_episode_seed(std::uint64_t seed, std::size_t episode) {
  return derive_seed(derive_seed(seed, 30), episode);
}

/// Mean bodyguard-to-VIP distance of a state.
inline double mean_guard_distance(const WorldState& s, const RoleAssignment& roles) {
  const Vec2 vip = s.agents.at(roles.vip_index).position;
  double sum = 0.0;
  for (std::size_t b : roles.bodyguard_indices) sum += norm(s.agents.at(b).position - vip);
  return sum / static_cast<double>(roles.bodyguard_indices.size());
}

inline double band_fraction(const EpisodeTrace& trace, const ThreatParams& params) {
  std::size_t inside = 0;
  for (const StepRecord& r : trace.records) {
    const double d = mean_guard_distance(r.state, trace.roles);
    if (params.m <= d && d <= params.d) ++inside;
  }
  return trace.records.empty() ? 0.0 : static_cast<double>(inside) / static_cast<double>(trace.records.size());
}

inline void fill_aggregates(EvalReport& r) {
  r.threat_mean = mean_of(r.cumulative_threat);
  r.threat_median = median_of(r.cumulative_threat);
  r.threat_stddev = stddev_of(r.cumulative_threat);
  r.reward_mean = mean_of(r.mean_reward);
  r.band_fraction_mean = mean_of(r.band_fraction);
}

/// Runs `episodes` episodes on seeds derived from `seed`. The optional
/// `first_trace` receives the trace of episode 0.
inline EvalReport evaluate(const ScenarioConfig& cfg, const ControllerFactory& factory, std::size_t episodes,
                           std::uint64_t seed, std::string controller_name, EpisodeTrace* first_trace = nullptr) {
  require(episodes >= 1, "evaluate: need at least one episode");
  EvalReport report;
  report.controller = std::move(controller_name);
  report.seed = seed;
  for (std::size_t e = 0; e < episodes; ++e) {
    const std::uint64_t s = evaluation_episode_seed(seed, e);
    EpisodeTrace trace = run_episode(cfg, factory(derive_seed(s, 99)), s);
    double reward_sum = 0.0;
    std::size_t reward_count = 0;
    for (const StepRecord& r : trace.records)
      for (double v : r.rewards) reward_sum += v, ++reward_count;
    report.episode_seeds.push_back(s);
    report.cumulative_threat.push_back(cumulative_threat(trace));
    report.mean_reward.push_back(reward_sum / static_cast<double>(reward_count));
    report.band_fraction.push_back(band_fraction(trace, cfg.threat));
    if (e == 0 && first_trace) *first_trace = std::move(trace);
  }
  fill_aggregates(report);
  return report;
}

}  // namespace escort
