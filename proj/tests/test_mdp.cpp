#include <gtest/gtest.h>

#include <random>

#include "oracle.hpp"
#include "qswarm/errors.hpp"
#include "qswarm/mdp.hpp"

using namespace qswarm;

namespace {

const GridSpec kGrid(4, 4);

TEST(Step, MovesToNeighbour) {
  EXPECT_EQ(Step(kGrid, {1, 1}, Action::kRight), (CellState{2, 1}));
}

TEST(Step, ClampsAtWalls) {
  EXPECT_EQ(Step(kGrid, {0, 0}, Action::kLeft), (CellState{0, 0}));
  EXPECT_EQ(Step(kGrid, {3, 3}, Action::kDown), (CellState{3, 3}));
  EXPECT_EQ(Step(kGrid, {0, 0}, Action::kUp), (CellState{0, 0}));
  EXPECT_EQ(Step(kGrid, {3, 0}, Action::kRight), (CellState{3, 0}));
}

TEST(Step, DownIncreasesY) {
  EXPECT_EQ(Step(kGrid, {2, 1}, Action::kDown), (CellState{2, 2}));
  EXPECT_EQ(Step(kGrid, {2, 1}, Action::kUp), (CellState{2, 0}));
}

TEST(Step, ReversibleAwayFromWalls) {
  std::mt19937 gen(7);
  for (int trial = 0; trial < 2000; ++trial) {
    GridSpec g(1 + static_cast<int>(gen() % 9), 1 + static_cast<int>(gen() % 9));
    CellState s{static_cast<int>(gen() % g.width), static_cast<int>(gen() % g.height)};
    Action a = ActionFromIndex(static_cast<int>(gen() % 4));
    CellState t = Step(g, s, a);
    if (t != s) {
      EXPECT_EQ(Step(g, t, Opposite(a)), s);
    }
  }
}

TEST(Step, NeverLeavesGrid) {
  std::mt19937 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    GridSpec g(1 + static_cast<int>(gen() % 7), 1 + static_cast<int>(gen() % 7));
    CellState s{0, 0};
    for (int i = 0; i < 500; ++i) {
      s = Step(g, s, ActionFromIndex(static_cast<int>(gen() % 4)));
      ASSERT_TRUE(InBounds(g, s));
    }
  }
}

TEST(Step, AgreesWithIndependentMove) {
  for (int s = 0; s < 16; ++s) {
    for (int a = 0; a < 4; ++a) {
      EXPECT_EQ(StateIndex(kGrid, Step(kGrid, CellFromIndex(kGrid, s), ActionFromIndex(a))),
                oracle::Move(4, 4, s, a));
    }
  }
}

TEST(StateIndex, RowMajor) {
  EXPECT_EQ(StateIndex(kGrid, {0, 0}), 0);
  EXPECT_EQ(StateIndex(kGrid, {1, 3}), 13);
  EXPECT_EQ(StateIndex(kGrid, {3, 3}), 15);
  for (int i = 0; i < 16; ++i) EXPECT_EQ(StateIndex(kGrid, CellFromIndex(kGrid, i)), i);
  EXPECT_THROW(CellFromIndex(kGrid, 16), ValidationError);
}

TEST(Action, NamesRoundTrip) {
  for (Action a : kAllActions) EXPECT_EQ(ParseAction(ActionName(a)), a);
  EXPECT_FALSE(ParseAction("left").has_value());
  EXPECT_FALSE(ParseAction("NORTH").has_value());
}

TEST(GridSpec, RejectsEmpty) {
  EXPECT_THROW(GridSpec(0, 4), ValidationError);
  EXPECT_THROW(GridSpec(4, -1), ValidationError);
}

TEST(RewardField, FireStatesAreThePositiveCells) {
  const std::vector<int> fire{2, 3, 6, 7};
  auto f = RewardField::FromStates(kGrid, fire, 0.25);
  EXPECT_EQ(f.fire_states(), fire);
  EXPECT_EQ(f.at(CellState{2, 0}), 0.25);
  EXPECT_EQ(f.at(13), 0.0);
  EXPECT_EQ(f.max_value(), 0.25);
}

TEST(RewardField, RejectsNegativeAndNonFinite) {
  std::vector<double> v(16, 0.0);
  v[3] = -0.1;
  EXPECT_THROW(RewardField(kGrid, v), ValidationError);
  v[3] = std::nan("");
  EXPECT_THROW(RewardField(kGrid, v), ValidationError);
  EXPECT_THROW(RewardField(kGrid, std::vector<double>(15, 0.0)), ValidationError);
}

TEST(FireSchedule, ZeroFieldEverywhere) {
  FireSchedule sched{RewardField(kGrid)};
  for (std::int64_t t : {0, 1, 179, 100000}) {
    for (int s = 0; s < 16; ++s) EXPECT_EQ(sched.reward_at(t, s), 0.0);
  }
}

TEST(FireSchedule, SegmentBoundary) {
  const std::vector<int> a{2}, b{9};
  FireSchedule sched({{0, RewardField::FromStates(kGrid, a, 1.0)},
                      {180, RewardField::FromStates(kGrid, b, 0.5)}});
  EXPECT_EQ(sched.reward_at(179, 2), 1.0);
  EXPECT_EQ(sched.reward_at(179, 9), 0.0);
  EXPECT_EQ(sched.reward_at(180, 2), 0.0);
  EXPECT_EQ(sched.reward_at(180, 9), 0.5);
}

TEST(FireSchedule, PiecewiseConstantWithChangesOnlyAtStarts) {
  std::mt19937 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<FireSchedule::Segment> segs;
    std::int64_t start = 0;
    const int k = 1 + static_cast<int>(gen() % 5);
    for (int i = 0; i < k; ++i) {
      std::vector<double> v(16);
      for (double& x : v) x = static_cast<double>(gen() % 4) / 4.0;
      v[0] = static_cast<double>(i + 1);  // segments always differ
      segs.push_back({start, RewardField(kGrid, v)});
      start += 1 + static_cast<std::int64_t>(gen() % 30);
    }
    FireSchedule sched(segs);
    for (std::int64_t t = 1; t < start + 10; ++t) {
      const bool boundary = std::any_of(segs.begin(), segs.end(),
                                        [&](const auto& s) { return s.start_step == t; });
      EXPECT_EQ(!(sched.active(t) == sched.active(t - 1)), boundary) << "t=" << t;
    }
  }
}

TEST(FireSchedule, RejectsBadStarts) {
  RewardField f(kGrid);
  EXPECT_THROW(FireSchedule({{5, f}}), ValidationError);
  EXPECT_THROW(FireSchedule({{0, f}, {0, f}}), ValidationError);
  EXPECT_THROW(FireSchedule({{0, f}, {10, RewardField(GridSpec(3, 3))}}), ValidationError);
}

}  // namespace
