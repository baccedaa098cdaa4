#ifndef QSWARM_CONFIG_HPP_
#define QSWARM_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qswarm/engine.hpp"

namespace qswarm {

// Fire placement for one schedule segment: either explicit states with a
// common reward, or a RewardField CSV.
struct FireSpec {
  std::int64_t start_step = 0;
  std::vector<int> states{2, 3, 6, 7};
  double reward = 0.25;
  std::optional<std::filesystem::path> field_csv;
};

enum class SweepMeasure { kFireFraction, kCoverage };

struct SweepAxis {
  std::string param;
  std::vector<double> values;
};

// Fully resolved experiment definition. Defaults reproduce the 4x4 building
// scenario: start state 13, fire at {2,3,6,7}, gamma 0.9, 50 replications.
struct ExperimentConfig {
  GridSpec grid{4, 4};
  int start_state = 13;
  std::vector<int> starts;  // per-agent override; empty = all at start_state
  int num_agents = 10;
  std::int64_t total_steps = 180;
  int replications = 50;
  std::uint64_t seed = 1;

  LearnParams params;
  DecaySchedule epsilon{1.0, 0.01, 50.0};
  Strategy strategy = Strategy::kBoltzmann;
  PeriodPolicy period;

  std::vector<FireSpec> fire{FireSpec{}};
  // Move the fire pattern to a random location at every period boundary.
  bool relocate = false;

  SweepMeasure measure = SweepMeasure::kFireFraction;
  CoverageMode coverage = CoverageMode::kStates;
  std::int64_t coverage_cap = 100000;
  std::optional<SweepAxis> sweep;

  // Throws ConfigError naming the offending field.
  void Validate() const;

  // Schedule as configured, without relocation.
  FireSchedule BaseSchedule() const;
  // Engine setup for one replication; draws fire relocations from run_seed.
  EngineConfig MakeEngineConfig(std::uint64_t run_seed) const;

  // Copy with one sweepable parameter replaced.
  ExperimentConfig WithParam(std::string_view name, double value) const;

  // Canonical text form; LoadConfigString(Echo()) reproduces this config.
  std::string Echo() const;
};

// Parses `key = value` lines grouped under [section] headers. '#' starts a
// comment. Relative field paths resolve against `base_dir`.
ExperimentConfig LoadConfigString(std::string_view text,
                                  const std::filesystem::path& base_dir = {});
ExperimentConfig LoadConfig(const std::filesystem::path& path);

// RewardField CSV: header `state_index,reward`, one row per state.
RewardField ReadRewardFieldCsv(const std::filesystem::path& path,
                               const GridSpec& grid);
void WriteRewardFieldCsv(std::ostream& out, const RewardField& field);

bool IsSweepParam(std::string_view name);

// Schedule that keeps `base` until the first boundary, then translates its
// fire pattern to a uniformly drawn new offset every `period` steps.
FireSchedule MakeRelocatingSchedule(const RewardField& base,
                                    std::int64_t period,
                                    std::int64_t total_steps, Rng& rng);

}  // namespace qswarm

#endif  // QSWARM_CONFIG_HPP_
