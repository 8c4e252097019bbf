#pragma once

// JSON run configuration. Every section is optional and falls back to the
// defaults of the corresponding struct; unknown keys are rejected.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "escort/config.hpp"
#include "escort/marl.hpp"
#include "escort/render.hpp"

namespace escort {

struct EvalOptions {
  std::size_t episodes = 100;
  std::uint64_t seed = 20180713;
};

struct RunConfig {
  ScenarioConfig scenario;
  TrainConfig train;
  std::string output_dir = "runs/default";
  EvalOptions eval;
  RenderStyle render;
};

namespace detail {

using nlohmann::json;

/// Walks one JSON object, tracking consumed keys so leftovers can be reported.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(key_path(key), "expected a number");
      out = v->get<double>();
    }
  }
  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) out.reset();
      else if (v->is_number()) out = v->get<double>();
      else throw ConfigError(key_path(key), "expected a number or null");
    }
  }
  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(key_path(key), "expected an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (v->is_number_unsigned() || v->get<std::int64_t>() >= 0) out = v->get<Int>();
        else throw ConfigError(key_path(key), "expected a nonnegative integer");
      } else {
        out = v->get<Int>();
      }
    }
  }
  void optional_size(const std::string& key, std::optional<std::size_t>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) out.reset();
      else if (v->is_number_unsigned()) out = v->get<std::size_t>();
      else throw ConfigError(key_path(key), "expected a nonnegative integer or null");
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(key_path(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(key_path(key), "expected a string");
      out = v->get<std::string>();
    }
  }
  template <typename Fn>
  void section(const std::string& key, Fn&& fn) {
    if (const json* v = find(key)) {
      Section sub(*v, key_path(key));
      fn(sub);
      sub.finish();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError(key_path(it.key()), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline void read_scenario(Section& s, ScenarioConfig& c) {
  s.integer("n_bodyguards", c.n_bodyguards);
  s.integer("n_bystanders", c.n_bystanders);
  s.integer("n_landmarks", c.n_landmarks);
  s.integer("horizon_T", c.horizon_T);
  s.integer("c_dim", c.c_dim);
  s.integer("seed", c.seed);
  s.number("arrival_radius", c.arrival_radius);
  s.number("vip_speed_factor", c.vip_speed_factor);
  s.number("bystander_speed_factor", c.bystander_speed_factor);
  s.section("radii", [&](Section& r) {
    r.number("vip", c.radii.vip);
    r.number("bodyguard", c.radii.bodyguard);
    r.number("bystander", c.radii.bystander);
    r.number("landmark", c.radii.landmark);
  });
  s.section("threat", [&](Section& t) {
    t.number("A", c.threat.A);
    t.number("B", c.threat.B);
    t.number("m", c.threat.m);
    t.number("d", c.threat.d);
    t.number("p", c.threat.p);
    t.number("utterance_threshold", c.threat.utterance_threshold);
  });
  s.section("physics", [&](Section& p) {
    p.number("dt", c.physics.dt);
    p.number("damping", c.physics.damping);
    p.number("force_gain", c.physics.force_gain);
    p.optional_number("max_speed", c.physics.max_speed);
    p.number("contact_margin", c.physics.contact_margin);
    p.number("contact_force", c.physics.contact_force);
    p.number("world_half_extent", c.physics.world_half_extent);
  });
}

inline void read_train(Section& s, TrainConfig& c) {
  s.integer("episodes", c.episodes);
  s.integer("steps_per_episode", c.steps_per_episode);
  s.integer("batch_size", c.batch_size);
  s.number("gamma", c.gamma);
  s.number("tau", c.tau);
  s.integer("update_every", c.update_every);
  s.optional_size("warmup_transitions", c.warmup_transitions);
  s.integer("buffer_capacity", c.buffer_capacity);
  if (const json* v = s.find("algorithm")) {
    const std::string a = v->is_string() ? v->get<std::string>() : "";
    if (a == "maddpg") c.algorithm = Algorithm::maddpg;
    else if (a == "ddpg") c.algorithm = Algorithm::ddpg;
    else throw ConfigError(s.key_path("algorithm"), "expected \"maddpg\" or \"ddpg\"");
  }
  if (const json* v = s.find("critic_obs")) {
    const std::string a = v->is_string() ? v->get<std::string>() : "";
    if (a == "all") c.critic_obs = CriticObs::all;
    else if (a == "own") c.critic_obs = CriticObs::own;
    else throw ConfigError(s.key_path("critic_obs"), "expected \"all\" or \"own\"");
  }
  s.boolean("share_parameters", c.share_parameters);
  s.boolean("team_average_reward", c.team_average_reward);
  s.boolean("terminal_at_horizon", c.terminal_at_horizon);
  if (const json* v = s.find("hidden")) {
    if (!v->is_array()) throw ConfigError(s.key_path("hidden"), "expected an array of layer sizes");
    c.hidden.clear();
    for (const json& h : *v) {
      if (!h.is_number_unsigned()) throw ConfigError(s.key_path("hidden"), "layer sizes must be positive integers");
      c.hidden.push_back(h.get<std::size_t>());
    }
  }
  s.number("grad_clip", c.grad_clip);
  s.integer("seed", c.seed);
  s.section("noise", [&](Section& n) {
    n.number("initial", c.noise.initial);
    n.number("final", c.noise.final);
    n.number("decay_fraction", c.noise.decay_fraction);
  });
  s.section("adam", [&](Section& a) {
    a.number("step_size", c.adam.step_size);
    a.number("beta1", c.adam.beta1);
    a.number("beta2", c.adam.beta2);
    a.number("epsilon", c.adam.epsilon);
  });
}

inline void read_render(Section& s, RenderStyle& r) {
  s.integer("canvas_px", r.canvas_px);
  s.number("view_half_extent", r.view_half_extent);
  s.integer("frame_stride", r.frame_stride);
  s.section("palette", [&](Section& p) {
    p.string("vip", r.palette.vip);
    p.string("bodyguard", r.palette.bodyguard);
    p.string("bystander", r.palette.bystander);
    p.string("landmark", r.palette.landmark);
    p.string("goal", r.palette.goal);
    p.string("background", r.palette.background);
  });
}

}  // namespace detail

inline void validate(const RenderStyle& r) {
  detail::check(r.canvas_px >= 16, "render.canvas_px", "must be at least 16");
  detail::check(detail::finite_pos(r.view_half_extent), "render.view_half_extent", "must be positive");
  detail::check(r.frame_stride >= 1, "render.frame_stride", "must be at least 1");
  const std::pair<const char*, const std::string*> colors[] = {
      {"vip", &r.palette.vip},           {"bodyguard", &r.palette.bodyguard}, {"bystander", &r.palette.bystander},
      {"landmark", &r.palette.landmark}, {"goal", &r.palette.goal},           {"background", &r.palette.background}};
  for (const auto& [name, value] : colors) {
    const bool ok = !value->empty() && value->size() <= 32 && std::all_of(value->begin(), value->end(), [](char ch) {
      return ch == '#' || (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z');
    });
    detail::check(ok, std::string("render.palette.") + name, "must be a color name or #rrggbb");
  }
}

inline void validate(const RunConfig& c) {
  validate(c.scenario);
  validate(c.train);
  validate(c.render);
  detail::check(c.train.steps_per_episode == c.scenario.horizon_T, "train.steps_per_episode",
                "must equal scenario.horizon_T");
  detail::check(c.eval.episodes >= 1, "eval.episodes", "must be at least 1");
  detail::check(!c.output_dir.empty(), "output_dir", "must not be empty");
}

/// Parses and validates. Throws ConfigError naming the offending key.
inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("<document>", std::string("invalid JSON: ") + e.what());
  }
  RunConfig c;
  detail::Section root(j, "");
  root.section("scenario", [&](detail::Section& s) { detail::read_scenario(s, c.scenario); });
  root.section("train", [&](detail::Section& s) { detail::read_train(s, c.train); });
  root.string("output_dir", c.output_dir);
  root.section("eval", [&](detail::Section& s) {
    s.integer("episodes", c.eval.episodes);
    s.integer("seed", c.eval.seed);
  });
  root.section("render", [&](detail::Section& s) { detail::read_render(s, c.render); });
  root.finish();
  validate(c);
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("<file>", "cannot open " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

inline nlohmann::json to_json(const RunConfig& c) {
  using nlohmann::json;
  const ScenarioConfig& s = c.scenario;
  const TrainConfig& t = c.train;
  json j;
  j["scenario"] = {
      {"n_bodyguards", s.n_bodyguards},
      {"n_bystanders", s.n_bystanders},
      {"n_landmarks", s.n_landmarks},
      {"horizon_T", s.horizon_T},
      {"c_dim", s.c_dim},
      {"seed", s.seed},
      {"arrival_radius", s.arrival_radius},
      {"vip_speed_factor", s.vip_speed_factor},
      {"bystander_speed_factor", s.bystander_speed_factor},
      {"radii", {{"vip", s.radii.vip}, {"bodyguard", s.radii.bodyguard}, {"bystander", s.radii.bystander}, {"landmark", s.radii.landmark}}},
      {"threat", {{"A", s.threat.A}, {"B", s.threat.B}, {"m", s.threat.m}, {"d", s.threat.d}, {"p", s.threat.p},
                  {"utterance_threshold", s.threat.utterance_threshold}}},
      {"physics", {{"dt", s.physics.dt}, {"damping", s.physics.damping}, {"force_gain", s.physics.force_gain},
                   {"max_speed", s.physics.max_speed ? json(*s.physics.max_speed) : json(nullptr)},
                   {"contact_margin", s.physics.contact_margin}, {"contact_force", s.physics.contact_force},
                   {"world_half_extent", s.physics.world_half_extent}}},
  };
  j["train"] = {
      {"episodes", t.episodes},
      {"steps_per_episode", t.steps_per_episode},
      {"batch_size", t.batch_size},
      {"gamma", t.gamma},
      {"tau", t.tau},
      {"update_every", t.update_every},
      {"warmup_transitions", t.warmup_transitions ? json(*t.warmup_transitions) : json(nullptr)},
      {"buffer_capacity", t.buffer_capacity},
      {"algorithm", to_string(t.algorithm)},
      {"critic_obs", to_string(t.critic_obs)},
      {"share_parameters", t.share_parameters},
      {"team_average_reward", t.team_average_reward},
      {"terminal_at_horizon", t.terminal_at_horizon},
      {"hidden", t.hidden},
      {"grad_clip", t.grad_clip},
      {"seed", t.seed},
      {"noise", {{"initial", t.noise.initial}, {"final", t.noise.final}, {"decay_fraction", t.noise.decay_fraction}}},
      {"adam", {{"step_size", t.adam.step_size}, {"beta1", t.adam.beta1}, {"beta2", t.adam.beta2}, {"epsilon", t.adam.epsilon}}},
  };
  j["output_dir"] = c.output_dir;
  j["eval"] = {{"episodes", c.eval.episodes}, {"seed", c.eval.seed}};
  const RenderPalette& p = c.render.palette;
  j["render"] = {
      {"canvas_px", c.render.canvas_px},
      {"view_half_extent", c.render.view_half_extent},
      {"frame_stride", c.render.frame_stride},
      {"palette", {{"vip", p.vip}, {"bodyguard", p.bodyguard}, {"bystander", p.bystander}, {"landmark", p.landmark},
                   {"goal", p.goal}, {"background", p.background}}},
  };
  return j;
}

}  // namespace escort
