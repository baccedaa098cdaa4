#ifndef QSWARM_MDP_HPP_
#define QSWARM_MDP_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qswarm/errors.hpp"

namespace qswarm {

// Rectangular grid of cells. y grows downward, so state 0 is the top-left
// cell and labels run row-major.
struct GridSpec {
  int width = 4;
  int height = 4;

  GridSpec() = default;
  GridSpec(int w, int h);

  int num_states() const { return width * height; }
  bool operator==(const GridSpec&) const = default;
};

struct CellState {
  int x = 0;
  int y = 0;
  bool operator==(const CellState&) const = default;
};

enum class Action : std::uint8_t { kLeft = 0, kRight = 1, kUp = 2, kDown = 3 };

inline constexpr int kNumActions = 4;
inline constexpr std::array<Action, kNumActions> kAllActions = {
    Action::kLeft, Action::kRight, Action::kUp, Action::kDown};

constexpr int ActionIndex(Action a) { return static_cast<int>(a); }
Action ActionFromIndex(int index);
Action Opposite(Action a);

// Uppercase wire names: LEFT RIGHT UP DOWN.
std::string_view ActionName(Action a);
std::optional<Action> ParseAction(std::string_view name);

bool InBounds(const GridSpec& grid, CellState s);

// Moves one cell in direction `a`; a move that would leave the grid is a
// no-op.
CellState Step(const GridSpec& grid, CellState s, Action a);

int StateIndex(const GridSpec& grid, CellState s);
CellState CellFromIndex(const GridSpec& grid, int index);

// Nonnegative reward per cell, stored row-major. A fire state is any cell
// with strictly positive value.
class RewardField {
 public:
  explicit RewardField(GridSpec grid);
  RewardField(GridSpec grid, std::vector<double> values);

  // Field with `value` at each listed state index and zero elsewhere.
  static RewardField FromStates(GridSpec grid, std::span<const int> states,
                                double value);

  const GridSpec& grid() const { return grid_; }
  double at(int state_index) const { return values_.at(state_index); }
  double at(CellState s) const { return at(StateIndex(grid_, s)); }
  bool is_fire(int state_index) const { return at(state_index) > 0.0; }
  std::span<const double> values() const { return values_; }
  std::vector<int> fire_states() const;
  double max_value() const;

  bool operator==(const RewardField&) const = default;

 private:
  GridSpec grid_;
  std::vector<double> values_;
};

// Piecewise-constant sequence of reward fields keyed by start step.
class FireSchedule {
 public:
  struct Segment {
    std::int64_t start_step;
    RewardField field;
  };

  explicit FireSchedule(RewardField stationary);
  explicit FireSchedule(std::vector<Segment> segments);

  const RewardField& active(std::int64_t t) const;
  double reward_at(std::int64_t t, int state_index) const {
    return active(t).at(state_index);
  }
  double reward_at(std::int64_t t, CellState s) const {
    return active(t).at(s);
  }

  const GridSpec& grid() const { return segments_.front().field.grid(); }
  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return segments_.size(); }

 private:
  std::vector<Segment> segments_;
};

}  // namespace qswarm

#endif  // QSWARM_MDP_HPP_
