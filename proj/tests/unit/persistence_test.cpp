#include <gtest/gtest.h>

#include "escort/checkpoint.hpp"
#include "escort/evaluate.hpp"
#include "escort/trajectory.hpp"
#include "oracles.hpp"

using namespace escort;

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig s;
  s.n_bodyguards = 2;
  s.n_bystanders = 3;
  s.n_landmarks = 4;
  s.c_dim = 1;
  return s;
}

LearnerBundle trained_bundle(std::vector<std::size_t> hidden = {8}) {
  TrainConfig t;
  t.episodes = 4;
  t.batch_size = 16;
  t.update_every = 5;
  t.buffer_capacity = 200;
  t.hidden = std::move(hidden);
  ScenarioConfig s = small_scenario();
  return train(s, t).bundle;
}

std::size_t parameter_count(const LearnerBundle& b) {
  std::size_t n = 0;
  for (const AgentLearner& l : b.learners) n += l.actor.parameter_count() + l.critic.parameter_count();
  return n;
}

CheckpointError::Kind decode_error(std::string_view bytes, std::optional<std::uint64_t> digest = {}) {
  try {
    decode_checkpoint(bytes, digest);
  } catch (const CheckpointError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "decode succeeded";
  return CheckpointError::Kind::io;
}

EpisodeTrace sample_trace(std::uint64_t seed = 5) {
  const ScenarioConfig s = small_scenario();
  return run_episode(s, random_controller(s.c_dim)(seed), seed);
}

}  // namespace

TEST(Checkpoint, RoundTripIsExact) {
  const LearnerBundle b = trained_bundle();
  const std::string bytes = encode_checkpoint(b, 0xabcdef);
  EXPECT_EQ(bytes.substr(0, 8), "ESCORTCK");
  const LearnerBundle back = decode_checkpoint(bytes, 0xabcdef);
  EXPECT_EQ(back, b);
  EXPECT_EQ(encode_checkpoint(back, 0xabcdef), bytes);

  const auto dir = oracle::temp_dir("checkpoint_rt");
  save_checkpoint(b, 7, dir / "c.bin");
  EXPECT_EQ(load_checkpoint(dir / "c.bin", 7), b);
  EXPECT_EQ(load_checkpoint(dir / "c.bin"), b);
}

TEST(Checkpoint, DigestMismatchRefused) {
  const std::string bytes = encode_checkpoint(trained_bundle(), 1);
  EXPECT_EQ(decode_error(bytes, 2), CheckpointError::Kind::digest);
}

TEST(Checkpoint, VersionRefused) {
  std::string bytes = encode_checkpoint(trained_bundle(), 1);
  bytes[8] = 2;
  EXPECT_EQ(decode_error(bytes), CheckpointError::Kind::version);
}

TEST(Checkpoint, CorruptionAndTruncationDetected) {
  const std::string bytes = encode_checkpoint(trained_bundle(), 1);
  EXPECT_EQ(decode_error(bytes.substr(0, bytes.size() - 1)), CheckpointError::Kind::corrupt);
  EXPECT_EQ(decode_error(bytes.substr(0, 10)), CheckpointError::Kind::corrupt);
  EXPECT_EQ(decode_error(""), CheckpointError::Kind::corrupt);
  EXPECT_EQ(decode_error("XSCORTCK" + bytes.substr(8)), CheckpointError::Kind::corrupt);
  Rng rng(3);
  for (int k = 0; k < 50; ++k) {
    std::string flipped = bytes;
    const std::size_t at = 12 + rng.index(bytes.size() - 12);
    flipped[at] = static_cast<char>(flipped[at] ^ (1 << rng.index(8)));
    EXPECT_EQ(decode_error(flipped), CheckpointError::Kind::corrupt) << "byte " << at;
  }
  EXPECT_THROW(load_checkpoint(oracle::temp_dir("checkpoint_missing") / "none.bin"), CheckpointError);
}

TEST(Checkpoint, SizeLinearInParameterCount) {
  // Every parameter is stored four times as a double in networks (live and
  // target) plus two Adam moments; headers add a small per-layer overhead.
  std::vector<std::pair<double, double>> points;
  for (std::size_t h : {4u, 16u, 64u}) {
    const LearnerBundle b = trained_bundle({h});
    points.emplace_back(static_cast<double>(parameter_count(b)),
                        static_cast<double>(encode_checkpoint(b, 0).size()));
  }
  const double slope = (points[2].second - points[0].second) / (points[2].first - points[0].first);
  EXPECT_EQ(slope, 32.0);
  const double predicted = points[0].second + slope * (points[1].first - points[0].first);
  EXPECT_EQ(points[1].second, predicted);
}

TEST(Trajectory, RoundTripIsExact) {
  EpisodeTrace trace = sample_trace();
  trace.config_digest = config_digest(small_scenario());
  const std::string text = encode_trajectory(trace);
  const EpisodeTrace back = decode_trajectory(text);
  EXPECT_EQ(back, trace);
  EXPECT_EQ(encode_trajectory(back), text);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 26);

  const auto header = nlohmann::json::parse(text.substr(0, text.find('\n')));
  EXPECT_EQ(header["format"], "escort-trajectory");
  EXPECT_EQ(header["version"], 1);
  EXPECT_EQ(header["config_digest"], hex64(trace.config_digest));
  EXPECT_EQ(header["n_agents"], 6);
  EXPECT_EQ(header["n_landmarks"], 4);

  const auto dir = oracle::temp_dir("trajectory_rt");
  write_trajectory(trace, dir / "t.jsonl");
  EXPECT_EQ(read_trajectory(dir / "t.jsonl"), trace);
}

TEST(Trajectory, MalformedLineReportsLineNumber) {
  const std::string text = encode_trajectory(sample_trace());
  std::vector<std::string> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    const std::size_t end = text.find('\n', pos);
    lines.push_back(text.substr(pos, end - pos));
    pos = end + 1;
  }
  auto join = [&](const std::vector<std::string>& ls) {
    std::string out;
    for (const auto& l : ls) out += l + "\n";
    return out;
  };
  auto message = [&](const std::string& t) -> std::string {
    try {
      decode_trajectory(t);
    } catch (const FormatError& e) {
      return e.what();
    }
    return "<accepted>";
  };

  auto broken = lines;
  broken[4] = broken[4].substr(0, broken[4].size() / 2);
  EXPECT_NE(message(join(broken)).find("line 5"), std::string::npos) << message(join(broken));

  broken = lines;
  broken[7].replace(broken[7].find("\"threat\":"), 9, "\"threaat\":");
  EXPECT_NE(message(join(broken)).find("line 8"), std::string::npos);

  broken = lines;
  broken[2].replace(broken[2].find("\"step\":"), 8, "\"step\":\"x\",\"_\":");
  EXPECT_NE(message(join(broken)).find("line 3"), std::string::npos);

  broken = lines;
  broken[0].replace(broken[0].find("\"version\":1"), 11, "\"version\":9");
  EXPECT_NE(message(join(broken)).find("version"), std::string::npos);

  EXPECT_NE(message("").find("line 1"), std::string::npos);
  EXPECT_NE(message("{\"format\":\"other\"}\n").find("line 1"), std::string::npos);
}

TEST(Trajectory, NonFiniteValuesRefused) {
  EpisodeTrace trace = sample_trace();
  trace.records[3].threat = std::nan("");
  EXPECT_THROW(encode_trajectory(trace), FormatError);
  EXPECT_THROW(encode_trajectory(EpisodeTrace{}), FormatError);
}
