#pragma once

// Plain configuration records for the physics, the threat reward and the
// mall scenario, with their load-time validation.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>

#include "escort/core.hpp"

namespace escort {

struct PhysicsConfig {
  double dt = 0.1;
  double damping = 0.25;
  double force_gain = 5.0;
  std::optional<double> max_speed = 1.3;  // nullopt: unlimited
  double contact_margin = 0.01;
  double contact_force = 100.0;
  double world_half_extent = 1.5;
};

/// Parameters of the per-bodyguard threat reward.
struct ThreatParams {
  double A = 1.0;
  double B = 0.35;
  double m = 0.15;  // inner radius of the allowed band around the VIP
  double d = 0.6;   // outer (safe) radius of the band
  double p = -0.05; // utterance penalty, nonpositive
  double utterance_threshold = 1e-6;
};

struct EntityRadii {
  double vip = 0.05;
  double bodyguard = 0.05;
  double bystander = 0.05;
  double landmark = 0.08;
};

inline constexpr int kMaxUtteranceDim = 4;

struct ScenarioConfig {
  int n_bodyguards = 3;
  int n_bystanders = 10;
  int n_landmarks = 12;
  int horizon_T = 25;
  ThreatParams threat;
  PhysicsConfig physics;
  int c_dim = 0;
  std::uint64_t seed = 0;

  // Scripted-agent behaviour.
  double arrival_radius = 0.1;
  double vip_speed_factor = 0.6;
  double bystander_speed_factor = 1.0;
  EntityRadii radii;

  /// Agents are ordered VIP, bodyguards, bystanders.
  int n_agents() const { return 1 + n_bodyguards + n_bystanders; }
};

namespace detail {
inline void check(bool ok, const char* field, const char* what) {
  if (!ok) throw ConfigError(field, what);
}
inline void check(bool ok, const std::string& field, const char* what) {
  if (!ok) throw ConfigError(field, what);
}
inline bool finite_pos(double v) { return std::isfinite(v) && v > 0.0; }
}  // namespace detail

inline void validate(const PhysicsConfig& c) {
  using detail::check;
  using detail::finite_pos;
  check(finite_pos(c.dt), "physics.dt", "must be positive");
  check(std::isfinite(c.damping) && c.damping >= 0.0 && c.damping < 1.0, "physics.damping", "must lie in [0, 1)");
  check(finite_pos(c.force_gain), "physics.force_gain", "must be positive");
  check(!c.max_speed || finite_pos(*c.max_speed), "physics.max_speed", "must be positive or null (unlimited)");
  check(finite_pos(c.contact_margin), "physics.contact_margin", "must be positive");
  check(finite_pos(c.contact_force), "physics.contact_force", "must be positive");
  check(finite_pos(c.world_half_extent), "physics.world_half_extent", "must be positive");
}

inline void validate(const ThreatParams& t) {
  using detail::check;
  using detail::finite_pos;
  check(finite_pos(t.A), "threat.A", "must be positive");
  check(finite_pos(t.B), "threat.B", "must be positive");
  check(std::isfinite(t.m) && t.m >= 0.0, "threat.m", "must be nonnegative");
  check(std::isfinite(t.d) && t.d > t.m, "threat.d", "must exceed threat.m");
  check(std::isfinite(t.p) && t.p <= 0.0, "threat.p", "must be nonpositive");
  check(finite_pos(t.utterance_threshold), "threat.utterance_threshold", "must be positive");
}

/// Checks what reset_world needs: physics, entity counts and radii.
inline void validate_world(const ScenarioConfig& c) {
  using detail::check;
  validate(c.physics);
  check(c.n_bodyguards >= 0 && c.n_bystanders >= 0, "scenario", "agent counts must be nonnegative");
  check(c.n_landmarks >= 0, "scenario.n_landmarks", "must be nonnegative");
  check(c.c_dim >= 0 && c.c_dim <= kMaxUtteranceDim, "scenario.c_dim", "must lie in [0, 4]");
  const EntityRadii& r = c.radii;
  check(r.vip >= 0 && r.bodyguard >= 0 && r.bystander >= 0 && r.landmark >= 0 && std::isfinite(r.vip + r.bodyguard + r.bystander + r.landmark),
        "scenario.radii", "radii must be finite and nonnegative");
}

inline void validate(const ScenarioConfig& c) {
  using detail::check;
  validate_world(c);
  validate(c.threat);
  check(c.n_bodyguards >= 1, "scenario.n_bodyguards", "must be at least 1");
  check(c.n_landmarks >= 1, "scenario.n_landmarks", "must be at least 1");
  check(c.horizon_T >= 1, "scenario.horizon_T", "must be at least 1");
  check(detail::finite_pos(c.arrival_radius), "scenario.arrival_radius", "must be positive");
  check(std::isfinite(c.vip_speed_factor) && c.vip_speed_factor >= 0.0 && c.vip_speed_factor <= 1.0,
        "scenario.vip_speed_factor", "must lie in [0, 1]");
  check(std::isfinite(c.bystander_speed_factor) && c.bystander_speed_factor >= 0.0 && c.bystander_speed_factor <= 1.0,
        "scenario.bystander_speed_factor", "must lie in [0, 1]");
}

namespace detail {
inline void append_field(std::string& out, const char* key, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out += key;
  out += '=';
  out.append(buf, res.ptr);
  out += ';';
}
}  // namespace detail

/// Canonical text form of every field that shapes the scenario (the seed is
/// excluded). Digests of this string stamp trajectories and checkpoints.
inline std::string canonical_text(const ScenarioConfig& c) {
  std::string s;
  using detail::append_field;
  append_field(s, "n_bodyguards", c.n_bodyguards);
  append_field(s, "n_bystanders", c.n_bystanders);
  append_field(s, "n_landmarks", c.n_landmarks);
  append_field(s, "horizon_T", c.horizon_T);
  append_field(s, "c_dim", c.c_dim);
  append_field(s, "threat.A", c.threat.A);
  append_field(s, "threat.B", c.threat.B);
  append_field(s, "threat.m", c.threat.m);
  append_field(s, "threat.d", c.threat.d);
  append_field(s, "threat.p", c.threat.p);
  append_field(s, "threat.utterance_threshold", c.threat.utterance_threshold);
  append_field(s, "physics.dt", c.physics.dt);
  append_field(s, "physics.damping", c.physics.damping);
  append_field(s, "physics.force_gain", c.physics.force_gain);
  append_field(s, "physics.max_speed", c.physics.max_speed.value_or(-1.0));
  append_field(s, "physics.contact_margin", c.physics.contact_margin);
  append_field(s, "physics.contact_force", c.physics.contact_force);
  append_field(s, "physics.world_half_extent", c.physics.world_half_extent);
  append_field(s, "arrival_radius", c.arrival_radius);
  append_field(s, "vip_speed_factor", c.vip_speed_factor);
  append_field(s, "bystander_speed_factor", c.bystander_speed_factor);
  append_field(s, "radii.vip", c.radii.vip);
  append_field(s, "radii.bodyguard", c.radii.bodyguard);
  append_field(s, "radii.bystander", c.radii.bystander);
  append_field(s, "radii.landmark", c.radii.landmark);
  return s;
}

inline std::uint64_t config_digest(const ScenarioConfig& c) { return fnv1a64(canonical_text(c)); }

}  // namespace escort
