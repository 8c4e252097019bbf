#pragma once

// Line-delimited JSON trajectory files.
//
// Line 1 is a header:
//   {"format":"escort-trajectory","version":1,"seed":S,"config_digest":"<16 hex>",
//    "n_agents":N,"n_landmarks":M,"c_dim":C,
//    "roles":{"vip":i,"bodyguards":[...],"bystanders":[...],"vip_goal":g,"waypoints":[...]},
//    "agent_bodies":[[radius,mass,movable],...],"landmark_bodies":[[radius,mass,movable],...]}
// followed by one record per step:
//   {"step":k,"agents":[[x,y,vx,vy],...],"landmarks":[[x,y,vx,vy],...],
//    "utterances":[[...],...],"actions":[[fx,fy,u...],...],"rewards":[...],"threat":t}
// where "step" is the world step index after the step and "actions"/"rewards"
// list bodyguards in role order. Floats use the shortest decimal form that
// reads back to the same double.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "escort/scenario.hpp"

namespace escort {

inline constexpr std::string_view kTrajectoryFormat = "escort-trajectory";
inline constexpr int kTrajectoryVersion = 1;

namespace detail {

inline void put_number(std::string& out, double v) {
  if (!std::isfinite(v)) throw FormatError("trajectory: cannot encode a non-finite value");
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

inline void put_number(std::string& out, std::uint64_t v) { out += std::to_string(v); }

template <typename Range, typename Fn>
void put_array(std::string& out, const Range& r, Fn&& each) {
  out += '[';
  bool first = true;
  for (const auto& x : r) {
    if (!first) out += ',';
    first = false;
    each(x);
  }
  out += ']';
}

inline void put_doubles(std::string& out, const std::vector<double>& v) {
  put_array(out, v, [&](double x) { put_number(out, x); });
}

inline void put_indices(std::string& out, const std::vector<std::size_t>& v) {
  put_array(out, v, [&](std::size_t x) { put_number(out, static_cast<std::uint64_t>(x)); });
}

inline void put_kinematics(std::string& out, const std::vector<EntityState>& v) {
  put_array(out, v, [&](const EntityState& e) {
    put_doubles(out, {e.position.x, e.position.y, e.velocity.x, e.velocity.y});
  });
}

inline void put_bodies(std::string& out, const std::vector<EntityState>& v) {
  put_array(out, v, [&](const EntityState& e) {
    out += '[';
    put_number(out, e.radius);
    out += ',';
    put_number(out, e.mass);
    out += e.movable ? ",true]" : ",false]";
  });
}

inline bool same_bodies(const std::vector<EntityState>& a, const std::vector<EntityState>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].radius != b[i].radius || a[i].mass != b[i].mass || a[i].movable != b[i].movable) return false;
  return true;
}

}  // namespace detail

inline std::string encode_trajectory(const EpisodeTrace& trace) {
  using namespace detail;
  if (trace.records.empty()) throw FormatError("trajectory: empty trace");
  const WorldState& first = trace.records.front().state;
  for (const StepRecord& r : trace.records)
    if (!same_bodies(r.state.agents, first.agents) || !same_bodies(r.state.landmarks, first.landmarks) ||
        r.state.c_dim() != first.c_dim())
      throw FormatError("trajectory: entity bodies must stay constant across a trace");

  std::string out = "{\"format\":\"";
  out += kTrajectoryFormat;
  out += "\",\"version\":" + std::to_string(kTrajectoryVersion);
  out += ",\"seed\":" + std::to_string(trace.seed);
  out += ",\"config_digest\":\"" + hex64(trace.config_digest) + "\"";
  out += ",\"n_agents\":" + std::to_string(first.n_agents());
  out += ",\"n_landmarks\":" + std::to_string(first.n_landmarks());
  out += ",\"c_dim\":" + std::to_string(first.c_dim());
  out += ",\"roles\":{\"vip\":" + std::to_string(trace.roles.vip_index) + ",\"bodyguards\":";
  put_indices(out, trace.roles.bodyguard_indices);
  out += ",\"bystanders\":";
  put_indices(out, trace.roles.bystander_indices);
  out += ",\"vip_goal\":" + std::to_string(trace.roles.vip_goal_landmark) + ",\"waypoints\":";
  put_indices(out, trace.roles.bystander_waypoints);
  out += "},\"agent_bodies\":";
  put_bodies(out, first.agents);
  out += ",\"landmark_bodies\":";
  put_bodies(out, first.landmarks);
  out += "}\n";

  for (const StepRecord& r : trace.records) {
    out += "{\"step\":" + std::to_string(r.state.step_index) + ",\"agents\":";
    put_kinematics(out, r.state.agents);
    out += ",\"landmarks\":";
    put_kinematics(out, r.state.landmarks);
    out += ",\"utterances\":";
    put_array(out, r.state.utterances, [&](const Utterance& u) { put_doubles(out, u); });
    out += ",\"actions\":";
    put_array(out, r.bodyguard_actions, [&](const AgentAction& a) {
      std::vector<double> v{a.force.x, a.force.y};
      v.insert(v.end(), a.utterance.begin(), a.utterance.end());
      put_doubles(out, v);
    });
    out += ",\"rewards\":";
    put_doubles(out, r.rewards);
    out += ",\"threat\":";
    put_number(out, r.threat);
    out += "}\n";
  }
  return out;
}

namespace detail {

/// Reads one JSON line; failures carry the 1-based line number.
class LineReader {
 public:
  explicit LineReader(std::size_t line) : line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("trajectory line " + std::to_string(line_) + ": " + what);
  }
  const nlohmann::json& field(const nlohmann::json& obj, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing field \"") + key + "\"");
    return *it;
  }
  double number(const nlohmann::json& v) const {
    if (!v.is_number()) fail("expected a number");
    return v.get<double>();
  }
  std::size_t index(const nlohmann::json& v) const {
    if (!v.is_number_unsigned()) fail("expected a nonnegative integer");
    return v.get<std::size_t>();
  }
  const nlohmann::json& array(const nlohmann::json& v, std::size_t expected_size) const {
    if (!v.is_array() || v.size() != expected_size)
      fail("expected an array of length " + std::to_string(expected_size));
    return v;
  }
  std::vector<double> doubles(const nlohmann::json& v, std::size_t n) const {
    std::vector<double> out;
    for (const auto& x : array(v, n)) out.push_back(number(x));
    return out;
  }
  std::vector<std::size_t> indices(const nlohmann::json& v) const {
    if (!v.is_array()) fail("expected an array of indices");
    std::vector<std::size_t> out;
    for (const auto& x : v) out.push_back(index(x));
    return out;
  }
  std::vector<EntityState> bodies(const nlohmann::json& v, std::size_t n) const {
    std::vector<EntityState> out;
    for (const auto& b : array(v, n)) {
      array(b, 3);
      if (!b[2].is_boolean()) fail("expected movable flag");
      EntityState e;
      e.radius = number(b[0]);
      e.mass = number(b[1]);
      e.movable = b[2].get<bool>();
      out.push_back(e);
    }
    return out;
  }
  void kinematics(const nlohmann::json& v, std::vector<EntityState>& entities) const {
    const auto& arr = array(v, entities.size());
    for (std::size_t i = 0; i < entities.size(); ++i) {
      const auto k = doubles(arr[i], 4);
      entities[i].position = {k[0], k[1]};
      entities[i].velocity = {k[2], k[3]};
    }
  }

 private:
  std::size_t line_;
};

}  // namespace detail

inline EpisodeTrace decode_trajectory(const std::string& text) {
  EpisodeTrace trace;
  std::vector<EntityState> agent_bodies, landmark_bodies;
  std::size_t c_dim = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    detail::LineReader rd(line_no);
    auto parse_line = [&] {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        rd.fail(std::string("malformed JSON: ") + e.what());
      }
      if (!j.is_object()) rd.fail("expected an object");

      if (line_no == 1) {
        const auto& fmt = rd.field(j, "format");
        if (!fmt.is_string() || fmt.get<std::string>() != kTrajectoryFormat) rd.fail("not an escort trajectory");
        const auto& ver = rd.field(j, "version");
        if (!ver.is_number_integer() || ver.get<int>() != kTrajectoryVersion)
          rd.fail("unsupported trajectory version " + ver.dump());
        trace.seed = rd.field(j, "seed").get<std::uint64_t>();
        const auto& dg = rd.field(j, "config_digest");
        if (!dg.is_string() || dg.get<std::string>().size() != 16) rd.fail("bad config_digest");
        trace.config_digest = std::stoull(dg.get<std::string>(), nullptr, 16);
        const std::size_t n = rd.index(rd.field(j, "n_agents"));
        const std::size_t m = rd.index(rd.field(j, "n_landmarks"));
        c_dim = rd.index(rd.field(j, "c_dim"));
        const auto& roles = rd.field(j, "roles");
        trace.roles.vip_index = rd.index(rd.field(roles, "vip"));
        trace.roles.bodyguard_indices = rd.indices(rd.field(roles, "bodyguards"));
        trace.roles.bystander_indices = rd.indices(rd.field(roles, "bystanders"));
        trace.roles.vip_goal_landmark = rd.index(rd.field(roles, "vip_goal"));
        trace.roles.bystander_waypoints = rd.indices(rd.field(roles, "waypoints"));
        agent_bodies = rd.bodies(rd.field(j, "agent_bodies"), n);
        landmark_bodies = rd.bodies(rd.field(j, "landmark_bodies"), m);
        return;
      }

      StepRecord r;
      r.state.agents = agent_bodies;
      r.state.landmarks = landmark_bodies;
      const auto& step = rd.field(j, "step");
      if (!step.is_number_integer()) rd.fail("expected integer step");
      r.state.step_index = step.get<int>();
      rd.kinematics(rd.field(j, "agents"), r.state.agents);
      rd.kinematics(rd.field(j, "landmarks"), r.state.landmarks);
      const auto& utt = rd.array(rd.field(j, "utterances"), agent_bodies.size());
      for (const auto& u : utt) r.state.utterances.push_back(rd.doubles(u, c_dim));
      const std::size_t nb = trace.roles.bodyguard_indices.size();
      const auto& acts = rd.array(rd.field(j, "actions"), nb);
      for (const auto& a : acts) {
        const auto v = rd.doubles(a, 2 + c_dim);
        r.bodyguard_actions.push_back(AgentAction{{v[0], v[1]}, Utterance(v.begin() + 2, v.end())});
      }
      r.rewards = rd.doubles(rd.field(j, "rewards"), nb);
      r.threat = rd.number(rd.field(j, "threat"));
      trace.records.push_back(std::move(r));
    };
    try {
      parse_line();
    } catch (const nlohmann::json::exception& e) {
      rd.fail(e.what());
    } catch (const std::logic_error& e) {
      rd.fail(e.what());
    }
  }
  if (line_no == 0) throw FormatError("trajectory line 1: missing header");
  return trace;
}

inline void write_trajectory(const EpisodeTrace& trace, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << encode_trajectory(trace);
  if (!f) throw std::runtime_error("cannot write trajectory " + path.string());
}

inline EpisodeTrace read_trajectory(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open trajectory " + path.string());
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_trajectory(text);
}

}  // namespace escort
