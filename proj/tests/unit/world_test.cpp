#include <gtest/gtest.h>

#include <cmath>

#include "escort/world.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace escort;

namespace {

PhysicsConfig plain_physics() {
  PhysicsConfig p;
  p.force_gain = 1.0;
  p.max_speed.reset();
  return p;
}

WorldState single(Vec2 pos, Vec2 vel) {
  WorldState w;
  EntityState e;
  e.position = pos;
  e.velocity = vel;
  w.agents.push_back(e);
  w.utterances.emplace_back();
  return w;
}

}  // namespace

TEST(StepWorld, ZeroInputFixedPoint) {
  const WorldState w = single({0, 0}, {0, 0});
  const std::vector<AgentAction> a{AgentAction{}};
  const WorldState next = step_world(w, a, PhysicsConfig{});
  EXPECT_EQ(next.agents[0].position, (Vec2{0, 0}));
  EXPECT_EQ(next.agents[0].velocity, (Vec2{0, 0}));
  EXPECT_EQ(next.step_index, 1);
}

TEST(StepWorld, DampedCoastingHandEvaluation) {
  // v' = 1 * (1 - 0.25) = 0.75; x' = 0.75 * 0.1 = 0.075.
  const WorldState w = single({0, 0}, {1, 0});
  const std::vector<AgentAction> a{AgentAction{}};
  const WorldState next = step_world(w, a, plain_physics());
  EXPECT_NEAR(next.agents[0].velocity.x, 0.75, 1e-15);
  EXPECT_NEAR(next.agents[0].position.x, 0.075, 1e-15);
  EXPECT_EQ(next.agents[0].velocity.y, 0.0);
  EXPECT_EQ(next.agents[0].position.y, 0.0);
}

TEST(StepWorld, ForceGainAndMassScaling) {
  WorldState w = single({0, 0}, {0, 0});
  w.agents[0].mass = 2.0;
  PhysicsConfig p = plain_physics();
  p.force_gain = 5.0;
  const std::vector<AgentAction> a{AgentAction{{0.5, -1.0}, {}}};
  const WorldState next = step_world(w, a, p);
  EXPECT_NEAR(next.agents[0].velocity.x, 5.0 * 0.5 / 2.0 * 0.1, 1e-15);
  EXPECT_NEAR(next.agents[0].velocity.y, -5.0 / 2.0 * 0.1, 1e-15);
}

TEST(StepWorld, ForcesAreClampedToUnitBox) {
  const WorldState w = single({0, 0}, {0, 0});
  const std::vector<AgentAction> big{AgentAction{{7.0, -3.0}, {}}};
  const std::vector<AgentAction> unit{AgentAction{{1.0, -1.0}, {}}};
  EXPECT_EQ(step_world(w, big, plain_physics()), step_world(w, unit, plain_physics()));
}

TEST(StepWorld, ActionCountMismatchIsContractViolation) {
  const WorldState w = single({0, 0}, {0, 0});
  EXPECT_THROW(step_world(w, std::vector<AgentAction>{}, PhysicsConfig{}), ContractViolation);
  const std::vector<AgentAction> two(2);
  EXPECT_THROW(step_world(w, two, PhysicsConfig{}), ContractViolation);
}

TEST(StepWorld, UtteranceLengthMismatchIsContractViolation) {
  const WorldState w = single({0, 0}, {0, 0});
  const std::vector<AgentAction> a{AgentAction{{}, {0.5}}};
  EXPECT_THROW(step_world(w, a, PhysicsConfig{}), ContractViolation);
}

TEST(StepWorld, UtterancesAreReplaced) {
  Rng rng(3);
  WorldState w = gen::world(rng, 3, 1, 2);
  auto acts = gen::actions(rng, 3, 2);
  const WorldState next = step_world(w, acts, PhysicsConfig{});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(next.utterances[i], acts[i].utterance);
}

TEST(StepWorld, SymmetricOverlapGivesOppositeEqualForces) {
  WorldState w;
  EntityState a, b;
  a.position = {-0.03, 0.0};
  b.position = {0.03, 0.0};
  w.agents = {a, b};
  w.utterances.assign(2, {});
  const std::vector<AgentAction> acts(2);
  const WorldState next = step_world(w, acts, PhysicsConfig{});
  EXPECT_LT(next.agents[0].velocity.x, 0.0);
  EXPECT_EQ(next.agents[0].velocity.x, -next.agents[1].velocity.x);
  EXPECT_EQ(next.agents[0].velocity.y, 0.0);
}

TEST(StepWorld, SoftBoundaryPullsEntitiesBack) {
  PhysicsConfig p;
  const WorldState w = single({p.world_half_extent + 0.2, -(p.world_half_extent + 0.1)}, {0, 0});
  const WorldState next = step_world(w, std::vector<AgentAction>(1), p);
  EXPECT_LT(next.agents[0].velocity.x, 0.0);
  EXPECT_GT(next.agents[0].velocity.y, 0.0);
  const WorldState inside = step_world(single({1.0, -1.0}, {0, 0}), std::vector<AgentAction>(1), p);
  EXPECT_EQ(inside.agents[0].velocity, (Vec2{0, 0}));
}

TEST(StepWorld, ImmovableAgentDoesNotMove) {
  WorldState w = single({0.2, 0.3}, {0.0, 0.0});
  w.agents[0].movable = false;
  const std::vector<AgentAction> a{AgentAction{{1, 1}, {}}};
  EXPECT_EQ(step_world(w, a, PhysicsConfig{}).agents[0].position, (Vec2{0.2, 0.3}));
}

// Determinism, landmark immobility, speed clamp, constant observation length.
TEST(StepWorldProperty, InvariantsOverRandomStates) {
  Rng rng(2024);
  PhysicsConfig p;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(8), m = rng.index(5), c = rng.index(3);
    WorldState w = gen::world(rng, n, m, c);
    // Packed tightly so contacts occur.
    for (EntityState& e : w.agents) e.position = e.position * 0.1;
    const auto acts = gen::actions(rng, n, c);
    const WorldState a = step_world(w, acts, p);
    const WorldState b = step_world(w, acts, p);
    ASSERT_EQ(a, b);
    ASSERT_EQ(a.agents.size(), n);
    ASSERT_EQ(a.landmarks.size(), m);
    ASSERT_EQ(a.step_index, w.step_index + 1);
    for (std::size_t j = 0; j < m; ++j) ASSERT_EQ(a.landmarks[j], w.landmarks[j]);
    for (const EntityState& e : a.agents) ASSERT_LE(norm(e.velocity), *p.max_speed + 1e-12);
    for (std::size_t i = 0; i < n; ++i)
      ASSERT_EQ(observe(a, i).size(), observation_size(n, m, c));
  }
}

TEST(StepWorldProperty, ZeroInputFixedPointWithoutContact) {
  Rng rng(77);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(4);
    WorldState w;
    for (std::size_t i = 0; i < n; ++i) {
      EntityState e;
      e.position = {-1.2 + 0.8 * static_cast<double>(i), rng.uniform(-1.0, 1.0)};
      w.agents.push_back(e);
    }
    w.utterances.assign(n, {});
    WorldState next = step_world(w, std::vector<AgentAction>(n), PhysicsConfig{});
    ASSERT_EQ(next.step_index, 1);
    next.step_index = 0;
    ASSERT_EQ(next, w);
  }
}

TEST(ContactForce, FarApartIsZero) {
  EntityState a, b;
  a.position = {0, 0};
  b.position = {10 * (a.radius + b.radius), 0};
  EXPECT_EQ(pairwise_contact_force(a, b, PhysicsConfig{}), (Vec2{0, 0}));
}

TEST(ContactForce, AntisymmetricExactToSign) {
  Rng rng(5);
  PhysicsConfig p;
  for (int trial = 0; trial < 1000; ++trial) {
    EntityState a, b;
    a.position = gen::point(rng, 0.2);
    b.position = gen::point(rng, 0.2);
    a.radius = rng.uniform(0.0, 0.1);
    b.radius = rng.uniform(0.0, 0.1);
    const Vec2 fab = pairwise_contact_force(a, b, p);
    const Vec2 fba = pairwise_contact_force(b, a, p);
    ASSERT_EQ(fab.x, -fba.x);
    ASSERT_EQ(fab.y, -fba.y);
  }
}

TEST(ContactForce, MagnitudeMatchesClosedForm) {
  PhysicsConfig p;
  EntityState a, b;
  a.radius = b.radius = 0.05;
  a.position = {0, 0};
  b.position = {0.05, 0};  // penetration 0.1 - 0.05 = 0.05
  const Vec2 f = pairwise_contact_force(a, b, p);
  const double expected = oracle::contact_magnitude(0.05, p.contact_force, p.contact_margin);
  EXPECT_NEAR(norm(f), expected, 1e-12);
  EXPECT_LT(f.x, 0.0);  // a is pushed away from b
  EXPECT_EQ(f.y, 0.0);

  for (double pen : {-0.02, -0.005, 0.0, 0.001, 0.03, 0.09}) {
    b.position = {0.1 - pen, 0};
    EXPECT_NEAR(norm(pairwise_contact_force(a, b, p)), oracle::contact_magnitude(pen, p.contact_force, p.contact_margin),
                1e-12)
        << "penetration " << pen;
  }
}

TEST(ContactForce, CoincidentCentersUseXAxisFallback) {
  PhysicsConfig p;
  EntityState a, b;
  const Vec2 f = pairwise_contact_force(a, b, p);
  EXPECT_GT(f.x, 0.0);
  EXPECT_EQ(f.y, 0.0);
  EXPECT_NEAR(f.x, oracle::contact_magnitude(a.radius + b.radius, p.contact_force, p.contact_margin), 1e-12);
}

TEST(ResetWorld, DeterministicPerSeed) {
  ScenarioConfig cfg;
  EXPECT_EQ(reset_world(cfg, 11), reset_world(cfg, 11));
  EXPECT_NE(reset_world(cfg, 11), reset_world(cfg, 12));
}

TEST(ResetWorld, EmptyLandmarkSet) {
  ScenarioConfig cfg;
  cfg.n_landmarks = 0;
  const WorldState w = reset_world(cfg, 1);
  EXPECT_TRUE(w.landmarks.empty());
  EXPECT_EQ(w.agents.size(), static_cast<std::size_t>(cfg.n_agents()));
}

TEST(ResetWorld, MatchesPlacementOracle) {
  ScenarioConfig cfg;  // N = 14, M = 12
  ASSERT_EQ(cfg.n_agents(), 14);
  const WorldState w = reset_world(cfg, 7);
  const double h = cfg.physics.world_half_extent;
  const auto expected = oracle::placement(7, 14, 12, h);
  ASSERT_EQ(w.agents.size() + w.landmarks.size(), 26u);
  for (std::size_t k = 0; k < 26; ++k) {
    const EntityState& e = k < 14 ? w.agents[k] : w.landmarks[k - 14];
    EXPECT_EQ(e.position.x, expected[k].x);
    EXPECT_EQ(e.position.y, expected[k].y);
    EXPECT_LE(std::abs(e.position.x), h);
    EXPECT_LE(std::abs(e.position.y), h);
  }
}

TEST(ResetWorld, InitialStateIsAtRest) {
  ScenarioConfig cfg;
  cfg.c_dim = 2;
  const WorldState w = reset_world(cfg, 3);
  EXPECT_EQ(w.step_index, 0);
  for (const EntityState& e : w.agents) EXPECT_EQ(e.velocity, (Vec2{0, 0}));
  for (const EntityState& e : w.landmarks) EXPECT_FALSE(e.movable);
  for (const Utterance& u : w.utterances) EXPECT_EQ(u, Utterance(2, 0.0));
}

TEST(ResetWorld, RejectsInvalidPhysics) {
  ScenarioConfig cfg;
  cfg.physics.dt = 0.0;
  EXPECT_THROW(reset_world(cfg, 1), ConfigError);
  cfg = ScenarioConfig{};
  cfg.physics.damping = 1.0;
  EXPECT_THROW(reset_world(cfg, 1), ConfigError);
}

TEST(Observe, LengthForSmallWorld) {
  Rng rng(1);
  const WorldState w = gen::world(rng, 2, 1, 1);
  EXPECT_EQ(observe(w, 0).size(), 14u);
  EXPECT_EQ(observation_size(2, 1, 1), 14u);
}

TEST(Observe, LayoutAndSelfBlock) {
  Rng rng(9);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(6), m = rng.index(4), c = rng.index(3);
    const WorldState w = gen::world(rng, n, m, c);
    for (std::size_t i = 0; i < n; ++i) {
      const Observation o = observe(w, i);
      ASSERT_EQ(o[4 * i], 0.0);
      ASSERT_EQ(o[4 * i + 1], 0.0);
      for (std::size_t j = 0; j < n + m; ++j) {
        const EntityState& e = j < n ? w.agents[j] : w.landmarks[j - n];
        ASSERT_EQ(o[4 * j], e.position.x - w.agents[i].position.x);
        ASSERT_EQ(o[4 * j + 2], e.velocity.x);
        ASSERT_EQ(o[4 * j + 3], e.velocity.y);
      }
      for (std::size_t k = 0; k < n; ++k)
        for (std::size_t q = 0; q < c; ++q) ASSERT_EQ(o[4 * (n + m) + k * c + q], w.utterances[k][q]);
    }
  }
}

TEST(Observe, TranslationInvariance) {
  Rng rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    WorldState w = gen::world(rng, 4, 3, 1);
    WorldState shifted = w;
    const Vec2 t{0.5, -0.25};
    for (EntityState& e : shifted.agents) e.position += t;
    for (EntityState& e : shifted.landmarks) e.position += t;
    for (std::size_t i = 0; i < 4; ++i) {
      const Observation a = observe(w, i), b = observe(shifted, i);
      for (std::size_t k = 0; k < a.size(); ++k) ASSERT_NEAR(a[k], b[k], 1e-12);
    }
  }
}

TEST(Observe, IndexOutOfRange) {
  Rng rng(1);
  const WorldState w = gen::world(rng, 2, 1, 0);
  EXPECT_THROW(observe(w, 2), ContractViolation);
}
