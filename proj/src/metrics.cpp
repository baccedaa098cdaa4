#include "qswarm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qswarm/format.hpp"

namespace qswarm {

MetricsAccumulator::MetricsAccumulator(int num_states, int num_agents,
                                       CoverageMode mode)
    : mode_(mode),
      visited_states_(static_cast<std::size_t>(num_states), false),
      visited_pairs_(mode == CoverageMode::kStateActionPairs
                         ? static_cast<std::size_t>(num_states) * kNumActions
                         : 0,
                     false),
      remaining_(mode == CoverageMode::kStates
                     ? num_states
                     : static_cast<std::int64_t>(num_states) * kNumActions) {
  m_.visit_counts.assign(static_cast<std::size_t>(num_states), 0);
  m_.num_agents = num_agents;
}

void MetricsAccumulator::MarkState(int s) {
  ++m_.visit_counts[static_cast<std::size_t>(s)];
  if (!visited_states_[static_cast<std::size_t>(s)]) {
    visited_states_[static_cast<std::size_t>(s)] = true;
    if (mode_ == CoverageMode::kStates) --remaining_;
  }
}

void MetricsAccumulator::OnInitialPlacement(int state) {
  MarkState(state);
  if (covered() && !m_.coverage_step) m_.coverage_step = 0;
}

void MetricsAccumulator::OnAgentStep(int state, Action action, bool in_fire,
                                     int next_state) {
  ++m_.total_agent_steps;
  ++period_steps_;
  if (in_fire) {
    ++m_.fire_steps;
    ++period_fire_;
  }
  if (mode_ == CoverageMode::kStateActionPairs) {
    auto idx = static_cast<std::size_t>(state) * kNumActions +
               static_cast<std::size_t>(ActionIndex(action));
    if (!visited_pairs_[idx]) {
      visited_pairs_[idx] = true;
      --remaining_;
    }
  }
  MarkState(next_state);
}

void MetricsAccumulator::OnTickEnd(std::int64_t ticks_done) {
  if (covered() && !m_.coverage_step) m_.coverage_step = ticks_done;
}

void MetricsAccumulator::ClosePeriod() {
  if (period_steps_ == 0) return;
  m_.per_period_fire_fraction.push_back(static_cast<double>(period_fire_) /
                                        static_cast<double>(period_steps_));
  period_fire_ = 0;
  period_steps_ = 0;
}

const std::vector<bool>& MetricsAccumulator::visited() const {
  return mode_ == CoverageMode::kStates ? visited_states_ : visited_pairs_;
}

RunMetrics MetricsAccumulator::Snapshot() const {
  MetricsAccumulator copy = *this;
  copy.ClosePeriod();
  return copy.m_;
}

double FireTimeFraction(const RunMetrics& m) {
  if (m.total_agent_steps <= 0) {
    throw DomainError("fire-time fraction of a zero-step run");
  }
  return static_cast<double>(m.fire_steps) /
         static_cast<double>(m.total_agent_steps);
}

std::vector<double> ExtractValues(const QTable& q) {
  std::vector<double> v(static_cast<std::size_t>(q.num_states()));
  for (int s = 0; s < q.num_states(); ++s) v[static_cast<std::size_t>(s)] = q.max_value(s);
  return v;
}

std::vector<Action> ExtractPolicy(const QTable& q) {
  std::vector<Action> p(static_cast<std::size_t>(q.num_states()));
  for (int s = 0; s < q.num_states(); ++s) p[static_cast<std::size_t>(s)] = GreedyAction(q, s);
  return p;
}

Statistic Summarize(std::span<const double> xs) {
  Statistic st;
  double sum = 0.0;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    sum += x;
    ++st.count;
  }
  if (st.count == 0) {
    st.mean = std::numeric_limits<double>::quiet_NaN();
    st.std = std::numeric_limits<double>::quiet_NaN();
    return st;
  }
  st.mean = sum / st.count;
  if (st.count < 2) return st;
  double ss = 0.0;
  for (double x : xs) {
    if (std::isnan(x)) continue;
    ss += (x - st.mean) * (x - st.mean);
  }
  st.std = std::sqrt(ss / (st.count - 1));
  return st;
}

SweepPoint Aggregate(std::span<const RunMetrics> runs) {
  if (runs.empty()) throw DomainError("aggregate of zero runs");
  std::vector<double> fire, cover;
  for (const RunMetrics& m : runs) {
    // A run covered by its initial placement has no agent-steps.
    fire.push_back(m.total_agent_steps > 0
                       ? FireTimeFraction(m)
                       : std::numeric_limits<double>::quiet_NaN());
    cover.push_back(m.coverage_step ? static_cast<double>(*m.coverage_step)
                                    : std::numeric_limits<double>::quiet_NaN());
  }
  SweepPoint p;
  p.runs = static_cast<int>(runs.size());
  p.num_agents = runs.front().num_agents;
  p.steps = runs.front().total_agent_steps /
            std::max(1, runs.front().num_agents);
  p.fire_fraction = Summarize(fire);
  p.coverage_steps = Summarize(cover);
  return p;
}

std::string SweepCsvRow(const SweepPoint& p) {
  return p.param_name + "," + FormatReal(p.param_value) + "," +
         std::to_string(p.num_agents) + "," + std::to_string(p.steps) + "," +
         FormatReal(p.fire_fraction.mean) + "," +
         FormatReal(p.fire_fraction.std) + "," +
         FormatReal(p.coverage_steps.mean) + "," +
         FormatReal(p.coverage_steps.std);
}

}  // namespace qswarm
