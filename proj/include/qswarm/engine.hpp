#ifndef QSWARM_ENGINE_HPP_
#define QSWARM_ENGINE_HPP_

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "qswarm/mdp.hpp"
#include "qswarm/metrics.hpp"
#include "qswarm/qlearning.hpp"
#include "qswarm/random.hpp"

namespace qswarm {

enum class Strategy { kBoltzmann, kEpsilonGreedy };
enum class PeriodMode { kReset, kCarryForward };

struct PeriodPolicy {
  // 0 disables period boundaries.
  std::int64_t period_length = 0;
  PeriodMode mode = PeriodMode::kReset;
  // CarryForward restarts the temperature clock at this many temperature
  // half-lives.
  double warm_restart = 2.0;
};

struct EngineConfig {
  FireSchedule schedule{RewardField(GridSpec(4, 4))};
  LearnParams params;
  PeriodPolicy period;
  Strategy strategy = Strategy::kBoltzmann;
  // Only read under Strategy::kEpsilonGreedy; runs on the temperature clock.
  DecaySchedule epsilon{1.0, 0.01, 50.0};
  // One entry per agent.
  std::vector<int> start_states{13};
  std::uint64_t seed = 0;
  CoverageMode coverage = CoverageMode::kStates;

  const GridSpec& grid() const { return schedule.grid(); }
  int num_agents() const { return static_cast<int>(start_states.size()); }
  void Validate() const;
};

struct AgentState {
  int id = 0;
  CellState cell;
  Rng rng;
  bool operator==(const AgentState&) const = default;
};

struct StepEvent {
  std::int64_t step;
  int agent;
  int state;
  Action action;
  double reward;
  int next_state;
};

// N agents acting on one shared Q-table. Within a tick agents act in
// ascending id order and each sees the updates of lower ids.
class Engine {
 public:
  using Observer = std::function<void(const StepEvent&)>;

  explicit Engine(EngineConfig config);

  void Tick();
  void ApplyPeriodBoundary();

  std::int64_t step() const { return step_; }
  double temperature_clock() const { return temp_clock_; }
  double alpha_clock() const { return alpha_clock_; }
  double temperature() const;
  double alpha() const;

  const EngineConfig& config() const { return config_; }
  const QTable& qtable() const { return q_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const MetricsAccumulator& accumulator() const { return acc_; }
  RunMetrics metrics() const { return acc_.Snapshot(); }

  // Replaces positions and rng streams, e.g. to restore a snapshot. Sizes
  // must match the configured agent count.
  void set_agents(std::vector<AgentState> agents);
  void set_observer(Observer obs) { observer_ = std::move(obs); }

 private:
  ActionProbs Policy(int state) const;

  EngineConfig config_;
  QTable q_;
  std::vector<AgentState> agents_;
  MetricsAccumulator acc_;
  std::int64_t step_ = 0;
  double temp_clock_ = 0.0;
  double alpha_clock_ = 0.0;
  Observer observer_;
};

struct RunResult {
  Engine engine;
  RunMetrics metrics;
};

// Applies `total_steps` ticks. Throws DomainError when total_steps < 1.
RunResult Run(Engine engine, std::int64_t total_steps);

class CoverageTimeout : public std::runtime_error {
 public:
  CoverageTimeout(std::int64_t steps, std::vector<bool> visited);
  std::int64_t steps() const { return steps_; }
  const std::vector<bool>& visited() const { return visited_; }

 private:
  std::int64_t steps_;
  std::vector<bool> visited_;
};

// Ticks until every state (or state-action pair, per the config) has been
// visited and returns the number of ticks taken; 0 if the initial placement
// already covers the grid. Throws CoverageTimeout after `max_steps` ticks.
std::int64_t RunUntilFullExploration(Engine& engine, std::int64_t max_steps);

}  // namespace qswarm

#endif  // QSWARM_ENGINE_HPP_
