#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracle.hpp"
#include "qswarm/engine.hpp"
#include "qswarm/errors.hpp"

using namespace qswarm;

namespace {

const GridSpec kGrid(4, 4);
const std::vector<int> kFire{2, 3, 6, 7};

EngineConfig PaperConfig(int agents, std::uint64_t seed) {
  EngineConfig c;
  c.schedule = FireSchedule(RewardField::FromStates(kGrid, kFire, 0.25));
  c.start_states.assign(static_cast<std::size_t>(agents), 13);
  c.seed = seed;
  return c;
}

std::vector<StepEvent> Record(Engine& e, int ticks) {
  std::vector<StepEvent> ev;
  e.set_observer([&](const StepEvent& x) { ev.push_back(x); });
  for (int i = 0; i < ticks; ++i) e.Tick();
  e.set_observer(nullptr);
  return ev;
}

bool SameMove(const StepEvent& a, const StepEvent& b) {
  return a.agent == b.agent && a.state == b.state && a.action == b.action &&
         a.reward == b.reward && a.next_state == b.next_state;
}

TEST(Engine, DeterministicForSameSeed) {
  Engine a(PaperConfig(2, 77)), b(PaperConfig(2, 77));
  auto ea = Record(a, 300), eb = Record(b, 300);
  ASSERT_EQ(ea.size(), eb.size());
  for (std::size_t i = 0; i < ea.size(); ++i) EXPECT_TRUE(SameMove(ea[i], eb[i]));
  EXPECT_EQ(a.qtable(), b.qtable());
  EXPECT_EQ(a.agents(), b.agents());
}

TEST(Engine, DifferentSeedsDiverge) {
  Engine a(PaperConfig(2, 1)), b(PaperConfig(2, 2));
  Record(a, 100);
  Record(b, 100);
  EXPECT_FALSE(a.qtable() == b.qtable());
}

TEST(Engine, AgentsActInIdOrderEachTick) {
  Engine e(PaperConfig(3, 5));
  auto ev = Record(e, 4);
  ASSERT_EQ(ev.size(), 12u);
  for (std::size_t i = 0; i < ev.size(); ++i) {
    EXPECT_EQ(ev[i].agent, static_cast<int>(i % 3));
    EXPECT_EQ(ev[i].step, static_cast<std::int64_t>(i / 3));
  }
}

TEST(Engine, RewardIsForOccupiedState) {
  Engine e(PaperConfig(4, 9));
  for (const auto& x : Record(e, 200)) {
    EXPECT_EQ(x.reward, std::count(kFire.begin(), kFire.end(), x.state) ? 0.25 : 0.0);
    EXPECT_EQ(x.next_state, oracle::Move(4, 4, x.state, ActionIndex(x.action)));
  }
}

TEST(Engine, RewardFollowsActiveSegment) {
  auto c = PaperConfig(16, 3);
  std::iota(c.start_states.begin(), c.start_states.end(), 0);
  const std::vector<int> a{0}, b{15};
  c.schedule = FireSchedule({{0, RewardField::FromStates(kGrid, a, 1.0)},
                             {5, RewardField::FromStates(kGrid, b, 1.0)}});
  Engine e(c);
  for (const auto& x : Record(e, 10)) {
    const int fire = x.step < 5 ? 0 : 15;
    EXPECT_EQ(x.reward, x.state == fire ? 1.0 : 0.0);
  }
}

TEST(Engine, ConservesAgentSteps) {
  for (int n : {1, 3, 10}) {
    for (std::int64_t steps : {1, 17, 180}) {
      auto r = qswarm::Run(Engine(PaperConfig(n, 4)), steps);
      EXPECT_EQ(r.metrics.total_agent_steps, n * steps);
      const auto visits = std::accumulate(r.metrics.visit_counts.begin(),
                                          r.metrics.visit_counts.end(), std::int64_t{0});
      EXPECT_EQ(visits, n * (steps + 1));
      EXPECT_LE(r.metrics.fire_steps, r.metrics.total_agent_steps);
    }
  }
  EXPECT_THROW(qswarm::Run(Engine(PaperConfig(1, 1)), 0), DomainError);
}

TEST(Engine, FireStepsMatchEventStream) {
  Engine e(PaperConfig(5, 21));
  auto ev = Record(e, 150);
  const auto fire = std::count_if(ev.begin(), ev.end(), [](const StepEvent& x) { return x.reward > 0; });
  EXPECT_EQ(e.metrics().fire_steps, fire);
}

TEST(Coverage, OneAgentPerCellIsImmediate) {
  auto c = PaperConfig(16, 1);
  std::iota(c.start_states.begin(), c.start_states.end(), 0);
  Engine e(c);
  EXPECT_EQ(RunUntilFullExploration(e, 10), 0);
  EXPECT_EQ(e.step(), 0);
}

TEST(Coverage, StartCellCountsAsVisited) {
  Engine e(PaperConfig(3, 1));
  EXPECT_TRUE(e.accumulator().visited()[13]);
  EXPECT_EQ(e.metrics().visit_counts[13], 3);
}

TEST(Coverage, TimeoutCarriesBitmap) {
  Engine e(PaperConfig(1, 1));
  try {
    RunUntilFullExploration(e, 3);
    FAIL() << "expected timeout";
  } catch (const CoverageTimeout& t) {
    EXPECT_EQ(t.steps(), 3);
    ASSERT_EQ(t.visited().size(), 16u);
    EXPECT_TRUE(t.visited()[13]);
    EXPECT_LE(std::count(t.visited().begin(), t.visited().end(), true), 4);
  }
}

TEST(Coverage, ReportedStepMatchesRun) {
  auto c = PaperConfig(4, 8);
  c.params.temperature = DecaySchedule::Constant(1.0);
  Engine e(c);
  const auto n = RunUntilFullExploration(e, 100000);
  EXPECT_EQ(e.metrics().coverage_step, n);
  EXPECT_TRUE(std::all_of(e.metrics().visit_counts.begin(), e.metrics().visit_counts.end(),
                          [](auto v) { return v > 0; }));
}

TEST(Coverage, PairsModeNeedsEveryAction) {
  auto c = PaperConfig(4, 8);
  c.params.temperature = DecaySchedule::Constant(5.0);
  c.coverage = CoverageMode::kStateActionPairs;
  Engine pairs(c);
  c.coverage = CoverageMode::kStates;
  Engine states(c);
  EXPECT_GE(RunUntilFullExploration(pairs, 1000000), RunUntilFullExploration(states, 1000000));
}

TEST(Period, ResetZeroesTableAndClocks) {
  auto c = PaperConfig(3, 2);
  c.period = {20, PeriodMode::kReset, 2.0};
  Engine e(c);
  for (int i = 0; i < 19; ++i) e.Tick();
  EXPECT_FALSE(e.qtable() == QTable(16));
  EXPECT_EQ(e.temperature_clock(), 19);
  e.Tick();
  EXPECT_EQ(e.qtable(), QTable(16));
  EXPECT_EQ(e.temperature_clock(), 0);
  EXPECT_EQ(e.alpha_clock(), 0);
  EXPECT_EQ(e.temperature(), c.params.temperature.v_max);
  EXPECT_EQ(e.step(), 20);
}

TEST(Period, CarryKeepsTableAndWarmRestartsTemperature) {
  auto c = PaperConfig(3, 2);
  c.period = {20, PeriodMode::kCarryForward, 2.0};
  Engine e(c);
  for (int i = 0; i < 19; ++i) e.Tick();
  Engine probe = e;
  probe.Tick();
  // The boundary itself leaves every entry alone.
  const QTable before = probe.qtable();
  probe.ApplyPeriodBoundary();
  EXPECT_EQ(probe.qtable(), before);
  e.Tick();
  EXPECT_EQ(e.temperature_clock(), 2.0 * c.params.temperature.half_life);
  EXPECT_EQ(e.alpha_clock(), 20);
  const auto& t = c.params.temperature;
  EXPECT_NEAR(e.temperature(), t.v_min + 0.25 * (t.v_max - t.v_min), 1e-12);
}

// After a Reset boundary the engine behaves exactly like a fresh engine
// handed the same positions and rng streams.
TEST(Period, ResetMatchesFreshEngine) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto c = PaperConfig(4, seed);
    c.period = {30, PeriodMode::kReset, 2.0};
    Engine a(c);
    for (int i = 0; i < 30; ++i) a.Tick();
    auto fresh_cfg = c;
    fresh_cfg.period.period_length = 0;
    Engine b(fresh_cfg);
    b.set_agents(a.agents());
    EXPECT_EQ(a.qtable(), b.qtable());
    EXPECT_EQ(a.temperature(), b.temperature());
    EXPECT_EQ(a.alpha(), b.alpha());
    auto ea = Record(a, 29), eb = Record(b, 29);
    for (std::size_t i = 0; i < ea.size(); ++i) ASSERT_TRUE(SameMove(ea[i], eb[i]));
    EXPECT_EQ(a.qtable(), b.qtable());
    EXPECT_EQ(a.agents(), b.agents());
  }
}

TEST(Period, PerPeriodFractions) {
  auto c = PaperConfig(2, 6);
  c.period = {10, PeriodMode::kReset, 2.0};
  auto r = qswarm::Run(Engine(c), 35);
  ASSERT_EQ(r.metrics.per_period_fire_fraction.size(), 4u);
  for (double f : r.metrics.per_period_fire_fraction) {
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
}

// Zero rewards and a huge constant temperature give a uniform random walk.
TEST(Engine, RandomWalkAtHighTemperature) {
  EngineConfig c;
  c.params.temperature = DecaySchedule::Constant(1e6);
  c.seed = 12345;
  Engine e(c);
  std::array<int, 4> counts{};
  e.set_observer([&](const StepEvent& x) { ++counts[ActionIndex(x.action)]; });
  const int n = 100000;
  for (int i = 0; i < n; ++i) e.Tick();
  const double sd = std::sqrt(n * 0.25 * 0.75);
  for (int k = 0; k < 4; ++k) EXPECT_LT(std::abs(counts[k] - n / 4.0), 3 * sd) << k;
}

TEST(Engine, EpsilonGreedyStrategyRuns) {
  auto c = PaperConfig(3, 4);
  c.strategy = Strategy::kEpsilonGreedy;
  auto r = qswarm::Run(Engine(c), 180);
  EXPECT_GT(r.metrics.fire_steps, 0);
  c.epsilon.v_max = 1.5;
  EXPECT_THROW(Engine{c}, ValidationError);
}

TEST(Engine, RejectsBadConfig) {
  auto c = PaperConfig(1, 1);
  c.start_states = {16};
  EXPECT_THROW(Engine{c}, ValidationError);
  c.start_states = {};
  EXPECT_THROW(Engine{c}, ValidationError);
  Engine ok(PaperConfig(2, 1));
  auto snap = ok.agents();
  snap.pop_back();
  EXPECT_THROW(ok.set_agents(snap), ValidationError);
}

}  // namespace
