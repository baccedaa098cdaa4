#ifndef QSWARM_HARNESS_HPP_
#define QSWARM_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qswarm/config.hpp"
#include "qswarm/metrics.hpp"
#include "qswarm/qstore.hpp"
#include "qswarm/reward.hpp"

namespace qswarm {

// Runs one replication. With SweepMeasure::kCoverage the run stops at full
// coverage (or at coverage_cap, leaving coverage_step empty); otherwise it
// runs total_steps ticks. `final_engine` receives the engine afterwards.
RunMetrics RunReplication(const ExperimentConfig& cfg, std::uint64_t point,
                          int rep, Engine* final_engine = nullptr,
                          const std::filesystem::path& events_csv = {});

// All replications of one point, in replication order. threads <= 0 uses
// the hardware concurrency.
std::vector<RunMetrics> RunReplications(const ExperimentConfig& cfg,
                                        std::uint64_t point, int threads = 0);

// Aggregate for one point; `steps` reports the configured horizon.
SweepPoint SummarizePoint(const ExperimentConfig& cfg,
                          const std::vector<RunMetrics>& runs,
                          std::string param_name, double param_value);

struct RunReport {
  SweepPoint summary;
  std::vector<RunMetrics> runs;
  std::string summary_line;
};

// Files: metrics.csv, runs.csv, qtable.csv and policy.csv (replication 0),
// config.ini (resolved config).
RunReport CmdRun(const ExperimentConfig& cfg, const std::filesystem::path& out,
                 int threads = 0, const std::filesystem::path& events_csv = {});

// Files: sweep.csv, config.ini. Points are ordered by parameter value.
std::vector<SweepPoint> CmdSweep(const ExperimentConfig& cfg,
                                 const std::filesystem::path& out,
                                 int threads = 0);

struct AdaptReport {
  std::vector<Statistic> periods;
  bool degenerate = false;  // single-segment schedule
  std::string summary_line;
};

// Files: periods.csv, config.ini. Needs period.length >= 1 and every segment
// start on a period boundary (ConfigError otherwise).
AdaptReport CmdAdapt(const ExperimentConfig& cfg, const std::filesystem::path& out,
                     int threads = 0);

// Splits a PPM into cols x rows tiles and writes `state_index,reward` CSV.
RewardField CmdReward(const std::filesystem::path& image, int cols, int rows,
                      double zoom, const FireClassifier& clf,
                      const std::filesystem::path& out_csv);

// Server-side settings for the networked mode. Uses replication 0's run
// seed so a single networked agent matches replication 0 in-process.
QStoreConfig MakeQStoreConfig(const ExperimentConfig& cfg);

// Writes qtable.csv and wal.csv for a finished server.
void WriteServerOutputs(const QStore& store, const std::filesystem::path& out);

struct AgentReport {
  int agent_id = -1;
  std::int64_t steps_done = 0;
  std::int64_t fire_steps = 0;
  bool partial = false;
  std::string error;  // set when partial
};

// Drives one agent through the scenario against a running server:
// HELLO, then per step DIRECT / local transition / UPDATE, then BYE.
// Connection failures before HELLO throw NetError; failures mid-run return
// a partial report.
AgentReport RunNetworkAgent(const ExperimentConfig& cfg, const std::string& address,
                            std::chrono::milliseconds timeout = std::chrono::seconds(10));

}  // namespace qswarm

#endif  // QSWARM_HARNESS_HPP_
