#include "qswarm/qlearning.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "qswarm/format.hpp"

namespace qswarm {

QTable::QTable(int num_states)
    : num_states_(num_states),
      values_(static_cast<std::size_t>(num_states) * kNumActions, 0.0) {
  if (num_states < 1) throw ValidationError("Q-table needs at least one state");
}

std::size_t QTable::Offset(int s, Action a) const {
  if (s < 0 || s >= num_states_) {
    throw ValidationError("state index out of range: " + std::to_string(s));
  }
  return static_cast<std::size_t>(s) * kNumActions +
         static_cast<std::size_t>(ActionIndex(a));
}

std::span<const double, kNumActions> QTable::row(int s) const {
  return std::span<const double, kNumActions>(&values_[Offset(s, Action::kLeft)],
                                              kNumActions);
}

double QTable::max_value(int s) const {
  auto r = row(s);
  return *std::max_element(r.begin(), r.end());
}

void QTable::Reset() { std::fill(values_.begin(), values_.end(), 0.0); }

void QTable::WriteCsv(std::ostream& out) const {
  out << "state,left,right,up,down\n";
  for (int s = 0; s < num_states_; ++s) {
    out << s;
    for (double v : row(s)) out << ',' << FormatReal(v);
    out << '\n';
  }
}

void DecaySchedule::Validate() const {
  if (!(half_life > 0.0)) throw ValidationError("half_life must be > 0");
  if (!(v_min >= 0.0) || !(v_max >= v_min)) {
    throw ValidationError("decay schedule needs v_max >= v_min >= 0");
  }
}

double DecaySchedule::value(double t) const {
  return v_min + (v_max - v_min) * std::exp2(-t / half_life);
}

void LearnParams::Validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ValidationError("gamma must be in [0,1)");
  }
  alpha.Validate();
  temperature.Validate();
  if (alpha.v_max > 1.0) throw ValidationError("alpha_max must be <= 1");
  if (!(temperature.v_min > 0.0)) {
    throw ValidationError("temperature floor must be > 0");
  }
}

double QUpdate(QTable& q, const Experience& exp, double alpha, double gamma) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError("alpha must be in [0,1]");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw ValidationError("gamma must be in [0,1)");
  }
  const double target = exp.reward + gamma * q.max_value(exp.next_state);
  double& entry = q.at(exp.state, exp.action);
  entry += alpha * (target - entry);
  return entry;
}

ActionProbs BoltzmannProbs(std::span<const double, kNumActions> q_row,
                           double temperature) {
  if (!(temperature > 0.0)) {
    throw ValidationError("temperature must be > 0");
  }
  const double m = *std::max_element(q_row.begin(), q_row.end());
  ActionProbs p{};
  double sum = 0.0;
  for (int i = 0; i < kNumActions; ++i) {
    p[i] = std::exp((q_row[i] - m) / temperature);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

Action GreedyAction(std::span<const double, kNumActions> q_row) {
  int best = 0;
  for (int i = 1; i < kNumActions; ++i) {
    if (q_row[i] > q_row[best]) best = i;
  }
  return static_cast<Action>(best);
}

ActionProbs EpsilonGreedyProbs(std::span<const double, kNumActions> q_row,
                               double epsilon) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw ValidationError("epsilon must be in [0,1]");
  }
  ActionProbs p;
  p.fill(epsilon / kNumActions);
  p[ActionIndex(GreedyAction(q_row))] += 1.0 - epsilon;
  return p;
}

Action SampleAction(const ActionProbs& probs, Rng& rng) {
  const double u = rng.Uniform();
  double cdf = 0.0;
  for (int i = 0; i < kNumActions - 1; ++i) {
    cdf += probs[i];
    if (u < cdf) return static_cast<Action>(i);
  }
  // Rounding can leave the cumulative sum a hair below 1; fall through to
  // the last action with nonzero mass.
  for (int i = kNumActions - 1; i > 0; --i) {
    if (probs[i] > 0.0) return static_cast<Action>(i);
  }
  return Action::kLeft;
}

}  // namespace qswarm
