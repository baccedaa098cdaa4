#include "qswarm/engine.hpp"

#include <string>

namespace qswarm {

void EngineConfig::Validate() const {
  params.Validate();
  if (start_states.empty()) throw ValidationError("need at least one agent");
  for (int s : start_states) {
    if (s < 0 || s >= grid().num_states()) {
      throw ValidationError("start state out of range: " + std::to_string(s));
    }
  }
  if (period.period_length < 0) {
    throw ValidationError("period length must be >= 0");
  }
  if (!(period.warm_restart >= 0.0)) {
    throw ValidationError("warm restart offset must be >= 0");
  }
  if (strategy == Strategy::kEpsilonGreedy) {
    epsilon.Validate();
    if (epsilon.v_max > 1.0) throw ValidationError("epsilon_max must be <= 1");
  }
}

Engine::Engine(EngineConfig config)
    : config_(std::move(config)),
      q_(config_.grid().num_states()),
      acc_(config_.grid().num_states(), config_.num_agents(), config_.coverage) {
  config_.Validate();
  for (int id = 0; id < config_.num_agents(); ++id) {
    const int start = config_.start_states[static_cast<std::size_t>(id)];
    agents_.push_back({id, CellFromIndex(config_.grid(), start),
                       Rng(DeriveAgentSeed(config_.seed, id))});
    acc_.OnInitialPlacement(start);
  }
}

double Engine::temperature() const {
  return config_.params.temperature.value(temp_clock_);
}

double Engine::alpha() const { return config_.params.alpha.value(alpha_clock_); }

ActionProbs Engine::Policy(int state) const {
  if (config_.strategy == Strategy::kEpsilonGreedy) {
    return EpsilonGreedyProbs(q_, state, config_.epsilon.value(temp_clock_));
  }
  return BoltzmannProbs(q_, state, temperature());
}

void Engine::Tick() {
  const GridSpec& grid = config_.grid();
  const RewardField& field = config_.schedule.active(step_);
  const double alpha = this->alpha();
  for (AgentState& agent : agents_) {
    const int s = StateIndex(grid, agent.cell);
    const Action a = SampleAction(Policy(s), agent.rng);
    const double r = field.at(s);
    const CellState next = Step(grid, agent.cell, a);
    const int s_next = StateIndex(grid, next);
    QUpdate(q_, {s, a, r, s_next}, alpha, config_.params.gamma);
    acc_.OnAgentStep(s, a, r > 0.0, s_next);
    if (observer_) observer_({step_, agent.id, s, a, r, s_next});
    agent.cell = next;
  }
  ++step_;
  temp_clock_ += 1.0;
  alpha_clock_ += 1.0;
  acc_.OnTickEnd(step_);
  const std::int64_t len = config_.period.period_length;
  if (len > 0 && step_ % len == 0) ApplyPeriodBoundary();
}

void Engine::ApplyPeriodBoundary() {
  acc_.ClosePeriod();
  if (config_.period.mode == PeriodMode::kReset) {
    q_.Reset();
    temp_clock_ = 0.0;
    alpha_clock_ = 0.0;
  } else {
    temp_clock_ =
        config_.period.warm_restart * config_.params.temperature.half_life;
  }
}

void Engine::set_agents(std::vector<AgentState> agents) {
  if (agents.size() != agents_.size()) {
    throw ValidationError("agent snapshot size mismatch");
  }
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (agents[i].id != static_cast<int>(i) ||
        !InBounds(config_.grid(), agents[i].cell)) {
      throw ValidationError("invalid agent snapshot");
    }
  }
  agents_ = std::move(agents);
}

RunResult Run(Engine engine, std::int64_t total_steps) {
  if (total_steps < 1) throw DomainError("run needs total_steps >= 1");
  for (std::int64_t i = 0; i < total_steps; ++i) engine.Tick();
  RunMetrics m = engine.metrics();
  return {std::move(engine), std::move(m)};
}

CoverageTimeout::CoverageTimeout(std::int64_t steps, std::vector<bool> visited)
    : std::runtime_error("coverage incomplete after " + std::to_string(steps) +
                         " steps"),
      steps_(steps),
      visited_(std::move(visited)) {}

std::int64_t RunUntilFullExploration(Engine& engine, std::int64_t max_steps) {
  const std::int64_t start = engine.step();
  while (!engine.accumulator().covered()) {
    if (engine.step() - start >= max_steps) {
      throw CoverageTimeout(engine.step() - start,
                            engine.accumulator().visited());
    }
    engine.Tick();
  }
  return engine.step() - start;
}

}  // namespace qswarm
