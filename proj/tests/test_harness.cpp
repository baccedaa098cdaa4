#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "qswarm/errors.hpp"
#include "qswarm/harness.hpp"

using namespace qswarm;
namespace fs = std::filesystem;

namespace {

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path TempDir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("qswarm_test_" + name);
  fs::remove_all(d);
  return d;
}

ExperimentConfig Small() {
  ExperimentConfig c;
  c.replications = 6;
  c.num_agents = 3;
  c.total_steps = 60;
  return c;
}

TEST(Harness, RunWritesFilesDeterministically) {
  auto a = TempDir("run_a"), b = TempDir("run_b");
  auto ra = CmdRun(Small(), a, 4, a / "events.csv");
  auto rb = CmdRun(Small(), b, 1, b / "events.csv");
  for (const char* f : {"metrics.csv", "runs.csv", "qtable.csv", "policy.csv", "config.ini", "events.csv"}) {
    ASSERT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(Slurp(a / f), Slurp(b / f)) << f;
  }
  EXPECT_EQ(ra.summary_line, rb.summary_line);
  EXPECT_EQ(ra.summary.runs, 6);
  // events.csv holds replication 0: header plus agents x steps rows.
  std::ifstream ev(a / "events.csv");
  int lines = 0;
  for (std::string l; std::getline(ev, l);) ++lines;
  EXPECT_EQ(lines, 1 + 3 * 60);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Harness, ReplicationsAreIndependentOfThreadCount) {
  auto c = Small();
  auto one = RunReplications(c, 0, 1), many = RunReplications(c, 0, 8);
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].fire_steps, many[i].fire_steps);
    EXPECT_EQ(one[i].visit_counts, many[i].visit_counts);
  }
}

TEST(Harness, SweepOrdersPoints) {
  auto c = Small();
  c.sweep = SweepAxis{"agents", {4, 1, 2}};
  auto d = TempDir("sweep");
  auto pts = CmdSweep(c, d, 0);
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0].num_agents, 1);
  EXPECT_EQ(pts[2].num_agents, 4);
  std::ifstream in(d / "sweep.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, kSweepCsvHeader);
  EXPECT_THROW(CmdRun(c, d, 1), ConfigError);
  fs::remove_all(d);
}

TEST(Harness, CoverageMeasure) {
  auto c = Small();
  c.measure = SweepMeasure::kCoverage;
  c.coverage_cap = 5;
  auto runs = RunReplications(c, 0, 0);
  for (const auto& m : runs) EXPECT_FALSE(m.coverage_step.has_value());
  c.coverage_cap = 1000000;
  c.params.temperature = DecaySchedule::Constant(1.0);
  for (const auto& m : RunReplications(c, 0, 0)) EXPECT_TRUE(m.coverage_step.has_value());
}

TEST(Harness, AdaptFlagsStationarySchedule) {
  auto c = Small();
  c.period.period_length = 30;
  auto d = TempDir("adapt");
  auto r = CmdAdapt(c, d, 0);
  EXPECT_TRUE(r.degenerate);
  EXPECT_NE(r.summary_line.find("stationary schedule, adapt mode degenerate"), std::string::npos);
  EXPECT_EQ(r.periods.size(), 2u);
  c.relocate = true;
  EXPECT_FALSE(CmdAdapt(c, d, 0).degenerate);
  fs::remove_all(d);
}

TEST(Harness, AdaptRejectsMisalignedSegments) {
  auto c = LoadConfigString("[period]\nlength = 50\n[segment]\nstart = 75\nstates = 0\n");
  EXPECT_THROW(CmdAdapt(c, TempDir("misaligned"), 1), ConfigError);
  c.period.period_length = 0;
  EXPECT_THROW(CmdAdapt(c, TempDir("noperiod"), 1), ConfigError);
}

// One networked agent sees the same clocks and rng stream as replication 0.
TEST(Harness, SingleNetworkAgentMatchesInProcess) {
  auto c = Small();
  c.num_agents = 1;
  QStoreServer server(MakeQStoreConfig(c));
  server.Start();
  auto rep = RunNetworkAgent(c, "127.0.0.1:" + std::to_string(server.port()));
  server.WaitForSessions(1);
  ASSERT_FALSE(rep.partial) << rep.error;
  Engine engine(c.MakeEngineConfig(DeriveRunSeed(c.seed, 0, 0)));
  auto m = RunReplication(c, 0, 0, &engine);
  EXPECT_EQ(server.store().table(), engine.qtable());
  EXPECT_EQ(rep.fire_steps, m.fire_steps);
  server.Stop();
}

TEST(Harness, NetworkAgentConnectFailure) {
  std::uint16_t port;
  {
    QStoreServer probe({});
    probe.Start();
    port = probe.port();
  }
  EXPECT_THROW(RunNetworkAgent(Small(), "127.0.0.1:" + std::to_string(port),
                               std::chrono::milliseconds(300)),
               NetError);
}

}  // namespace
