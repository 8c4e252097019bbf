#pragma once

// Binary checkpoint of a LearnerBundle. All integers and floats are written
// little-endian; floats are IEEE-754 binary64. Layout:
//
//   magic "ESCORTCK" (8 bytes) | u32 version | u64 scenario digest
//   u8 algorithm | u8 critic_obs | u8 shared | u8 reserved (0)
//   u64 n_bodyguards | u64 obs_dim | u64 act_dim | u64 n_learners
//   per learner:
//     f64 noise_scale
//     network x4 (actor, critic, target actor, target critic):
//       u32 n_sizes | u64 sizes[n_sizes] | u8 output activation
//       per layer: f64 weights[out*in] (row-major) | f64 bias[out]
//     optimizer x2 (actor, critic):
//       f64 step_size | f64 beta1 | f64 beta2 | f64 epsilon | u64 step
//       first moments, then second moments, laid out like the weights/biases
//   u64 FNV-1a digest of every preceding byte

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "escort/marl.hpp"

namespace escort {

inline constexpr std::string_view kCheckpointMagic = "ESCORTCK";
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public FormatError {
 public:
  enum class Kind { corrupt, version, digest, io };
  CheckpointError(Kind kind, const std::string& what) : FormatError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void f64s(const std::vector<double>& v) {
    for (double x : v) f64(x);
  }
  void bytes(std::string_view s) { out_.append(s); }
  const std::string& str() const { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  void f64s(std::vector<double>& v, std::size_t n) {
    need(n * 8);
    v.resize(n);
    for (double& x : v) x = f64();
  }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw CheckpointError(CheckpointError::Kind::corrupt, "checkpoint truncated");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

inline void write_layers(ByteWriter& w, const std::vector<DenseLayer>& layers) {
  for (const DenseLayer& l : layers) {
    w.f64s(l.weights);
    w.f64s(l.bias);
  }
}

inline void write_network(ByteWriter& w, const MlpParams& p) {
  w.u32(static_cast<std::uint32_t>(p.sizes.size()));
  for (std::size_t s : p.sizes) w.u64(s);
  w.u8(static_cast<std::uint8_t>(p.output));
  write_layers(w, p.layers);
}

inline void write_opt(ByteWriter& w, const OptState& s) {
  w.f64(s.hyper.step_size);
  w.f64(s.hyper.beta1);
  w.f64(s.hyper.beta2);
  w.f64(s.hyper.epsilon);
  w.u64(s.step);
  write_layers(w, s.first);
  write_layers(w, s.second);
}

inline std::vector<DenseLayer> read_layers(ByteReader& r, const std::vector<std::size_t>& sizes) {
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    DenseLayer d{sizes[l], sizes[l + 1], {}, {}};
    r.f64s(d.weights, d.in * d.out);
    r.f64s(d.bias, d.out);
    layers.push_back(std::move(d));
  }
  return layers;
}

inline MlpParams read_network(ByteReader& r) {
  MlpParams p;
  const std::uint32_t n = r.u32();
  if (n < 2 || n > 64) throw CheckpointError(CheckpointError::Kind::corrupt, "implausible layer count");
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint64_t s = r.u64();
    if (s == 0 || s > (1u << 20)) throw CheckpointError(CheckpointError::Kind::corrupt, "implausible layer size");
    p.sizes.push_back(static_cast<std::size_t>(s));
  }
  const std::uint8_t act = r.u8();
  if (act > 1) throw CheckpointError(CheckpointError::Kind::corrupt, "unknown activation code");
  p.output = static_cast<Activation>(act);
  p.layers = read_layers(r, p.sizes);
  return p;
}

inline OptState read_opt(ByteReader& r, const MlpParams& shape) {
  OptState s;
  s.hyper.step_size = r.f64();
  s.hyper.beta1 = r.f64();
  s.hyper.beta2 = r.f64();
  s.hyper.epsilon = r.f64();
  s.step = r.u64();
  s.first = read_layers(r, shape.sizes);
  s.second = read_layers(r, shape.sizes);
  return s;
}

}  // namespace detail

inline std::string encode_checkpoint(const LearnerBundle& b, std::uint64_t scenario_digest) {
  detail::ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u64(scenario_digest);
  w.u8(static_cast<std::uint8_t>(b.algorithm));
  w.u8(static_cast<std::uint8_t>(b.critic_obs));
  w.u8(b.shared ? 1 : 0);
  w.u8(0);
  w.u64(b.n_bodyguards);
  w.u64(b.obs_dim);
  w.u64(b.act_dim);
  w.u64(b.learners.size());
  for (const AgentLearner& l : b.learners) {
    w.f64(l.noise_scale);
    detail::write_network(w, l.actor);
    detail::write_network(w, l.critic);
    detail::write_network(w, l.target_actor);
    detail::write_network(w, l.target_critic);
    detail::write_opt(w, l.actor_opt);
    detail::write_opt(w, l.critic_opt);
  }
  std::string out = w.str();
  detail::ByteWriter tail;
  tail.u64(fnv1a64(out));
  return out + tail.str();
}

/// Decodes a checkpoint. When `expected_digest` is given, a checkpoint made
/// for a different scenario is refused.
inline LearnerBundle decode_checkpoint(std::string_view bytes, std::optional<std::uint64_t> expected_digest = {}) {
  using Kind = CheckpointError::Kind;
  if (bytes.size() < kCheckpointMagic.size() + 12 + 8)
    throw CheckpointError(Kind::corrupt, "checkpoint truncated");
  detail::ByteReader r(bytes);
  if (r.bytes(kCheckpointMagic.size()) != kCheckpointMagic) throw CheckpointError(Kind::corrupt, "bad magic string");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw CheckpointError(Kind::version, "unsupported checkpoint version " + std::to_string(version));
  {
    detail::ByteReader tail(bytes.substr(bytes.size() - 8));
    if (tail.u64() != fnv1a64(bytes.substr(0, bytes.size() - 8)))
      throw CheckpointError(Kind::corrupt, "checkpoint checksum mismatch (truncated or corrupted)");
  }
  const std::uint64_t digest = r.u64();
  if (expected_digest && digest != *expected_digest)
    throw CheckpointError(Kind::digest, "checkpoint was made for scenario digest " + hex64(digest) + ", expected " +
                                            hex64(*expected_digest));

  LearnerBundle b;
  const std::uint8_t algo = r.u8(), obs_mode = r.u8(), shared = r.u8();
  r.u8();
  if (algo > 1 || obs_mode > 1 || shared > 1) throw CheckpointError(Kind::corrupt, "bad header flags");
  b.algorithm = static_cast<Algorithm>(algo);
  b.critic_obs = static_cast<CriticObs>(obs_mode);
  b.shared = shared != 0;
  b.n_bodyguards = r.u64();
  b.obs_dim = r.u64();
  b.act_dim = r.u64();
  const std::uint64_t n_learners = r.u64();
  if (n_learners != (b.shared ? 1 : b.n_bodyguards) || n_learners == 0)
    throw CheckpointError(Kind::corrupt, "learner count disagrees with header");
  for (std::uint64_t i = 0; i < n_learners; ++i) {
    AgentLearner l;
    l.noise_scale = r.f64();
    l.actor = detail::read_network(r);
    l.critic = detail::read_network(r);
    l.target_actor = detail::read_network(r);
    l.target_critic = detail::read_network(r);
    l.actor_opt = detail::read_opt(r, l.actor);
    l.critic_opt = detail::read_opt(r, l.critic);
    if (l.actor.input_size() != b.obs_dim || l.actor.output_size() != b.act_dim || l.target_actor.sizes != l.actor.sizes ||
        l.target_critic.sizes != l.critic.sizes)
      throw CheckpointError(Kind::corrupt, "network shapes disagree with header");
    b.learners.push_back(std::move(l));
  }
  if (r.remaining() != 8) throw CheckpointError(Kind::corrupt, "trailing bytes after checkpoint payload");
  return b;
}

inline void save_checkpoint(const LearnerBundle& b, std::uint64_t scenario_digest, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(b, scenario_digest);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw CheckpointError(CheckpointError::Kind::io, "cannot write checkpoint " + path.string());
}

inline LearnerBundle load_checkpoint(const std::filesystem::path& path,
                                     std::optional<std::uint64_t> expected_digest = {}) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError(CheckpointError::Kind::io, "cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return decode_checkpoint(ss.str(), expected_digest);
}

}  // namespace escort
