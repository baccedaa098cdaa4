#ifndef QSWARM_METRICS_HPP_
#define QSWARM_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qswarm/mdp.hpp"
#include "qswarm/qlearning.hpp"

namespace qswarm {

struct RunMetrics {
  std::vector<std::int64_t> visit_counts;  // initial placements + arrivals
  std::int64_t fire_steps = 0;
  std::int64_t total_agent_steps = 0;
  int num_agents = 0;
  // Number of ticks after which every state (or pair) had been visited.
  std::optional<std::int64_t> coverage_step;
  std::vector<double> per_period_fire_fraction;
};

enum class CoverageMode { kStates, kStateActionPairs };

// Single-writer accumulator for one run. An agent-step occupies s_t; fire
// accounting uses s_t and visit accounting uses the initial cell plus every
// arrival s_{t+1}.
class MetricsAccumulator {
 public:
  MetricsAccumulator(int num_states, int num_agents,
                     CoverageMode mode = CoverageMode::kStates);

  void OnInitialPlacement(int state);
  void OnAgentStep(int state, Action action, bool in_fire, int next_state);
  // Called after every agent moved in tick `ticks_done` (1-based).
  void OnTickEnd(std::int64_t ticks_done);
  // Closes the current period window; no-op if the window is empty.
  void ClosePeriod();

  bool covered() const { return remaining_ == 0; }
  const std::vector<bool>& visited() const;
  const RunMetrics& metrics() const { return m_; }
  // Copy of the metrics with the open period window closed.
  RunMetrics Snapshot() const;

 private:
  void MarkState(int s);

  CoverageMode mode_;
  RunMetrics m_;
  std::vector<bool> visited_states_;
  std::vector<bool> visited_pairs_;
  std::int64_t remaining_;
  std::int64_t period_fire_ = 0;
  std::int64_t period_steps_ = 0;
};

// fire_steps / total_agent_steps. Throws DomainError for a zero-step run.
double FireTimeFraction(const RunMetrics& m);

// V(s) = max_a Q(s,a).
std::vector<double> ExtractValues(const QTable& q);
// Greedy action per state, ties to the lowest index.
std::vector<Action> ExtractPolicy(const QTable& q);

struct Statistic {
  double mean = 0.0;
  double std = 0.0;  // sample (n-1) standard deviation; 0 when n < 2
  int count = 0;
  bool std_defined() const { return count >= 2; }
};

// Mean and sample standard deviation. NaN entries are skipped; count is the
// number of finite entries.
Statistic Summarize(std::span<const double> xs);

struct SweepPoint {
  std::string param_name;
  double param_value = 0.0;
  int num_agents = 0;
  std::int64_t steps = 0;
  int runs = 0;
  Statistic fire_fraction;
  Statistic coverage_steps;  // over runs that reached coverage
};

// Aggregates replications of one parameter point. Throws DomainError when
// `runs` is empty.
SweepPoint Aggregate(std::span<const RunMetrics> runs);

inline constexpr const char* kSweepCsvHeader =
    "param_name,param_value,n_agents,steps,mean_fire_fraction,"
    "std_fire_fraction,mean_coverage_steps,std_coverage_steps";

std::string SweepCsvRow(const SweepPoint& p);

}  // namespace qswarm

#endif  // QSWARM_METRICS_HPP_
