#include "qswarm/mdp.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace qswarm {

GridSpec::GridSpec(int w, int h) : width(w), height(h) {
  if (w < 1 || h < 1) {
    throw ValidationError("grid dimensions must be >= 1, got " +
                          std::to_string(w) + "x" + std::to_string(h));
  }
}

Action ActionFromIndex(int index) {
  if (index < 0 || index >= kNumActions) {
    throw ValidationError("action index out of range: " +
                          std::to_string(index));
  }
  return static_cast<Action>(index);
}

Action Opposite(Action a) {
  switch (a) {
    case Action::kLeft:
      return Action::kRight;
    case Action::kRight:
      return Action::kLeft;
    case Action::kUp:
      return Action::kDown;
    case Action::kDown:
      return Action::kUp;
  }
  return a;
}

std::string_view ActionName(Action a) {
  switch (a) {
    case Action::kLeft:
      return "LEFT";
    case Action::kRight:
      return "RIGHT";
    case Action::kUp:
      return "UP";
    case Action::kDown:
      return "DOWN";
  }
  return "?";
}

std::optional<Action> ParseAction(std::string_view name) {
  for (Action a : kAllActions) {
    if (ActionName(a) == name) return a;
  }
  return std::nullopt;
}

bool InBounds(const GridSpec& grid, CellState s) {
  return s.x >= 0 && s.x < grid.width && s.y >= 0 && s.y < grid.height;
}

CellState Step(const GridSpec& grid, CellState s, Action a) {
  CellState next = s;
  switch (a) {
    case Action::kLeft:
      --next.x;
      break;
    case Action::kRight:
      ++next.x;
      break;
    case Action::kUp:
      --next.y;
      break;
    case Action::kDown:
      ++next.y;
      break;
  }
  return InBounds(grid, next) ? next : s;
}

int StateIndex(const GridSpec& grid, CellState s) {
  return s.y * grid.width + s.x;
}

CellState CellFromIndex(const GridSpec& grid, int index) {
  if (index < 0 || index >= grid.num_states()) {
    throw ValidationError("state index out of range: " +
                          std::to_string(index));
  }
  return {index % grid.width, index / grid.width};
}

RewardField::RewardField(GridSpec grid)
    : grid_(grid), values_(static_cast<std::size_t>(grid.num_states()), 0.0) {}

RewardField::RewardField(GridSpec grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (static_cast<int>(values_.size()) != grid_.num_states()) {
    throw ValidationError("reward field has " +
                          std::to_string(values_.size()) +
                          " values, grid needs " +
                          std::to_string(grid_.num_states()));
  }
  for (double v : values_) {
    if (!(v >= 0.0) || v == std::numeric_limits<double>::infinity()) {
      throw ValidationError("reward values must be finite and >= 0");
    }
  }
}

RewardField RewardField::FromStates(GridSpec grid, std::span<const int> states,
                                    double value) {
  std::vector<double> values(static_cast<std::size_t>(grid.num_states()), 0.0);
  for (int s : states) {
    if (s < 0 || s >= grid.num_states()) {
      throw ValidationError("state out of range: " + std::to_string(s));
    }
    values[static_cast<std::size_t>(s)] = value;
  }
  return RewardField(grid, std::move(values));
}

std::vector<int> RewardField::fire_states() const {
  std::vector<int> out;
  for (int i = 0; i < grid_.num_states(); ++i) {
    if (is_fire(i)) out.push_back(i);
  }
  return out;
}

double RewardField::max_value() const {
  return *std::max_element(values_.begin(), values_.end());
}

FireSchedule::FireSchedule(RewardField stationary)
    : segments_{{0, std::move(stationary)}} {}

FireSchedule::FireSchedule(std::vector<Segment> segments)
    : segments_(std::move(segments)) {
  if (segments_.empty()) {
    throw ValidationError("fire schedule needs at least one segment");
  }
  if (segments_.front().start_step != 0) {
    throw ValidationError("first fire segment must start at step 0");
  }
  for (std::size_t i = 1; i < segments_.size(); ++i) {
    if (segments_[i].start_step <= segments_[i - 1].start_step) {
      throw ValidationError("fire segments must have increasing start steps");
    }
    if (!(segments_[i].field.grid() == segments_.front().field.grid())) {
      throw ValidationError("fire segments must share one grid");
    }
  }
}

const RewardField& FireSchedule::active(std::int64_t t) const {
  // Last segment with start_step <= t.
  auto it = std::upper_bound(
      segments_.begin(), segments_.end(), t,
      [](std::int64_t step, const Segment& seg) { return step < seg.start_step; });
  return std::prev(it)->field;
}

}  // namespace qswarm
