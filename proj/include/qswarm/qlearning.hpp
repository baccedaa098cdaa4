#ifndef QSWARM_QLEARNING_HPP_
#define QSWARM_QLEARNING_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "qswarm/mdp.hpp"
#include "qswarm/random.hpp"

namespace qswarm {

using ActionProbs = std::array<double, kNumActions>;

// Dense action-value table, zero-initialized, indexed (state, action).
class QTable {
 public:
  explicit QTable(int num_states);

  int num_states() const { return num_states_; }
  double at(int s, Action a) const { return values_[Offset(s, a)]; }
  double& at(int s, Action a) { return values_[Offset(s, a)]; }
  std::span<const double, kNumActions> row(int s) const;
  double max_value(int s) const;

  void Reset();
  bool operator==(const QTable&) const = default;

  // One row per state index; columns in the fixed action order.
  void WriteCsv(std::ostream& out) const;

 private:
  std::size_t Offset(int s, Action a) const;

  int num_states_;
  std::vector<double> values_;
};

// v(t) = v_min + (v_max - v_min) * 2^(-t / half_life)
struct DecaySchedule {
  double v_max = 1.0;
  double v_min = 0.0;
  double half_life = 50.0;

  static DecaySchedule Constant(double v) { return {v, v, 1.0}; }
  void Validate() const;
  double value(double t) const;
};

inline double DecayValue(const DecaySchedule& sched, double t) {
  return sched.value(t);
}

struct LearnParams {
  double gamma = 0.9;
  DecaySchedule alpha{0.9, 0.01, 50.0};
  DecaySchedule temperature{1.0, 0.01, 50.0};

  void Validate() const;
};

struct Experience {
  int state;
  Action action;
  double reward;
  int next_state;
};

// Applies one tabular update to (state, action) and returns the new value:
//   Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a))
// The max is taken over the pre-update row of s'. Throws ValidationError for
// alpha outside [0,1], gamma outside [0,1) or bad indices.
double QUpdate(QTable& q, const Experience& exp, double alpha, double gamma);

// Softmax of Q(s,.)/T with max-subtraction. Throws ValidationError for T <= 0.
ActionProbs BoltzmannProbs(std::span<const double, kNumActions> q_row,
                           double temperature);
inline ActionProbs BoltzmannProbs(const QTable& q, int s, double temperature) {
  return BoltzmannProbs(q.row(s), temperature);
}

// Argmax with ties to the lowest action index.
Action GreedyAction(std::span<const double, kNumActions> q_row);
inline Action GreedyAction(const QTable& q, int s) {
  return GreedyAction(q.row(s));
}

ActionProbs EpsilonGreedyProbs(std::span<const double, kNumActions> q_row,
                               double epsilon);
inline ActionProbs EpsilonGreedyProbs(const QTable& q, int s, double epsilon) {
  return EpsilonGreedyProbs(q.row(s), epsilon);
}

// Inverse-CDF draw in the order Left, Right, Up, Down. Consumes exactly one
// uniform from `rng`.
Action SampleAction(const ActionProbs& probs, Rng& rng);

}  // namespace qswarm

#endif  // QSWARM_QLEARNING_HPP_
