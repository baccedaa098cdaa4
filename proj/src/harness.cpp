#include "qswarm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "qswarm/format.hpp"

namespace qswarm {

namespace {

template <typename Fn>
void ParallelFor(int n, int threads, Fn fn) {
  if (threads <= 0) {
    threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::ofstream OpenOut(const std::filesystem::path& dir, const char* name) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  return out;
}

void WriteConfigEcho(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  OpenOut(dir, "config.ini") << cfg.Echo();
}

}  // namespace

RunMetrics RunReplication(const ExperimentConfig& cfg, std::uint64_t point,
                          int rep, Engine* final_engine,
                          const std::filesystem::path& events_csv) {
  Engine engine(cfg.MakeEngineConfig(DeriveRunSeed(cfg.seed, point,
                                                   static_cast<std::uint64_t>(rep))));
  std::ofstream events;
  if (!events_csv.empty()) {
    events.open(events_csv, std::ios::binary);
    if (!events) throw std::runtime_error("cannot write " + events_csv.string());
    events << "step,agent,state,action,reward,next_state\n";
    engine.set_observer([&events](const StepEvent& e) {
      events << e.step << ',' << e.agent << ',' << e.state << ','
             << ActionName(e.action) << ',' << FormatReal(e.reward) << ','
             << e.next_state << '\n';
    });
  }
  if (cfg.measure == SweepMeasure::kCoverage) {
    try {
      RunUntilFullExploration(engine, cfg.coverage_cap);
    } catch (const CoverageTimeout&) {
      // Reported as a run without coverage_step.
    }
  } else {
    for (std::int64_t i = 0; i < cfg.total_steps; ++i) engine.Tick();
  }
  engine.set_observer(nullptr);
  RunMetrics m = engine.metrics();
  if (final_engine) *final_engine = std::move(engine);
  return m;
}

std::vector<RunMetrics> RunReplications(const ExperimentConfig& cfg,
                                        std::uint64_t point, int threads) {
  std::vector<RunMetrics> runs(static_cast<std::size_t>(cfg.replications));
  ParallelFor(cfg.replications, threads, [&](int rep) {
    runs[static_cast<std::size_t>(rep)] = RunReplication(cfg, point, rep);
  });
  return runs;
}

SweepPoint SummarizePoint(const ExperimentConfig& cfg,
                          const std::vector<RunMetrics>& runs,
                          std::string param_name, double param_value) {
  SweepPoint p = Aggregate(runs);
  p.param_name = std::move(param_name);
  p.param_value = param_value;
  p.num_agents = cfg.num_agents;
  p.steps = cfg.measure == SweepMeasure::kCoverage ? cfg.coverage_cap
                                                   : cfg.total_steps;
  return p;
}

RunReport CmdRun(const ExperimentConfig& cfg, const std::filesystem::path& out,
                 int threads, const std::filesystem::path& events_csv) {
  if (cfg.sweep) throw ConfigError("run: config has a [sweep] section; use sweep");
  RunReport report;
  report.runs = RunReplications(cfg, 0, threads);

  // Replication 0 again, keeping the engine for the table dumps. Runs are
  // deterministic so this equals report.runs[0].
  if (!events_csv.empty()) std::filesystem::create_directories(out);
  Engine first(cfg.MakeEngineConfig(DeriveRunSeed(cfg.seed, 0, 0)));
  RunReplication(cfg, 0, 0, &first, events_csv);

  report.summary = SummarizePoint(cfg, report.runs, "none", 0.0);

  OpenOut(out, "metrics.csv") << kSweepCsvHeader << '\n'
                              << SweepCsvRow(report.summary) << '\n';
  {
    auto f = OpenOut(out, "runs.csv");
    f << "replication,seed,fire_fraction,fire_steps,total_agent_steps,"
         "coverage_step\n";
    for (std::size_t r = 0; r < report.runs.size(); ++r) {
      const RunMetrics& m = report.runs[r];
      f << r << ',' << DeriveRunSeed(cfg.seed, 0, r) << ','
        << (m.total_agent_steps > 0 ? FormatReal(FireTimeFraction(m)) : "nan")
        << ',' << m.fire_steps << ',' << m.total_agent_steps << ','
        << (m.coverage_step ? std::to_string(*m.coverage_step) : "") << '\n';
    }
  }
  {
    auto f = OpenOut(out, "qtable.csv");
    first.qtable().WriteCsv(f);
  }
  {
    auto f = OpenOut(out, "policy.csv");
    f << "state,value,action\n";
    const auto values = ExtractValues(first.qtable());
    const auto policy = ExtractPolicy(first.qtable());
    for (std::size_t s = 0; s < values.size(); ++s) {
      f << s << ',' << FormatReal(values[s]) << ',' << ActionName(policy[s]) << '\n';
    }
  }
  WriteConfigEcho(cfg, out);

  std::ostringstream line;
  line << "fire_fraction mean=" << FormatWire(report.summary.fire_fraction.mean)
       << " std=" << FormatWire(report.summary.fire_fraction.std)
       << " runs=" << report.summary.runs << " agents=" << cfg.num_agents
       << " steps=" << report.summary.steps;
  if (report.summary.coverage_steps.count > 0) {
    line << " coverage_mean=" << FormatWire(report.summary.coverage_steps.mean);
  }
  if (report.summary.runs < 2) line << " (single run: std undefined)";
  report.summary_line = line.str();
  return report;
}

std::vector<SweepPoint> CmdSweep(const ExperimentConfig& cfg,
                                 const std::filesystem::path& out, int threads) {
  if (!cfg.sweep) throw ConfigError("sweep: config has no [sweep] section");
  std::vector<double> values = cfg.sweep->values;
  std::sort(values.begin(), values.end());

  const int n_points = static_cast<int>(values.size());
  std::vector<ExperimentConfig> point_cfgs;
  for (double v : values) {
    ExperimentConfig c = cfg.WithParam(cfg.sweep->param, v);
    c.sweep.reset();
    point_cfgs.push_back(std::move(c));
  }
  // Flattened (point, replication) jobs so small points still fill threads.
  std::vector<std::vector<RunMetrics>> results(static_cast<std::size_t>(n_points));
  for (int p = 0; p < n_points; ++p) {
    results[static_cast<std::size_t>(p)].resize(
        static_cast<std::size_t>(point_cfgs[static_cast<std::size_t>(p)].replications));
  }
  const int reps = cfg.replications;
  ParallelFor(n_points * reps, threads, [&](int job) {
    const int p = job / reps, r = job % reps;
    results[static_cast<std::size_t>(p)][static_cast<std::size_t>(r)] =
        RunReplication(point_cfgs[static_cast<std::size_t>(p)],
                       static_cast<std::uint64_t>(p), r);
  });

  std::vector<SweepPoint> points;
  auto f = OpenOut(out, "sweep.csv");
  f << kSweepCsvHeader << '\n';
  for (int p = 0; p < n_points; ++p) {
    points.push_back(SummarizePoint(point_cfgs[static_cast<std::size_t>(p)],
                                    results[static_cast<std::size_t>(p)],
                                    cfg.sweep->param,
                                    values[static_cast<std::size_t>(p)]));
    f << SweepCsvRow(points.back()) << '\n';
  }
  WriteConfigEcho(cfg, out);
  return points;
}

AdaptReport CmdAdapt(const ExperimentConfig& cfg, const std::filesystem::path& out,
                     int threads) {
  const std::int64_t len = cfg.period.period_length;
  if (len < 1) throw ConfigError("period.length: adapt needs a period >= 1");
  for (std::size_t i = 1; i < cfg.fire.size(); ++i) {
    if (cfg.fire[i].start_step % len != 0) {
      throw ConfigError("segment.start: " + std::to_string(cfg.fire[i].start_step) +
                        " is not on a period boundary (length " +
                        std::to_string(len) + ")");
    }
  }
  AdaptReport report;
  report.degenerate = cfg.fire.size() < 2 && !cfg.relocate;

  ExperimentConfig run_cfg = cfg;
  run_cfg.measure = SweepMeasure::kFireFraction;
  run_cfg.sweep.reset();
  const auto runs = RunReplications(run_cfg, 0, threads);
  const std::size_t n_periods =
      static_cast<std::size_t>((cfg.total_steps + len - 1) / len);
  auto f = OpenOut(out, "periods.csv");
  f << "period,start_step,mean_fire_fraction,std_fire_fraction,runs\n";
  for (std::size_t p = 0; p < n_periods; ++p) {
    std::vector<double> xs;
    for (const RunMetrics& m : runs) xs.push_back(m.per_period_fire_fraction.at(p));
    report.periods.push_back(Summarize(xs));
    f << p << ',' << static_cast<std::int64_t>(p) * len << ','
      << FormatReal(report.periods.back().mean) << ','
      << FormatReal(report.periods.back().std) << ',' << report.periods.back().count
      << '\n';
  }
  WriteConfigEcho(cfg, out);

  std::ostringstream line;
  line << "periods=" << n_periods;
  for (std::size_t p = 0; p < report.periods.size(); ++p) {
    line << " p" << p << "=" << FormatWire(report.periods[p].mean);
  }
  if (report.degenerate) line << " (stationary schedule, adapt mode degenerate)";
  report.summary_line = line.str();
  return report;
}

RewardField CmdReward(const std::filesystem::path& image, int cols, int rows,
                      double zoom, const FireClassifier& clf,
                      const std::filesystem::path& out_csv) {
  RewardField field = RewardFieldFromImage(ReadPpm(image), cols, rows, zoom, clf);
  if (out_csv.has_parent_path()) {
    std::filesystem::create_directories(out_csv.parent_path());
  }
  std::ofstream out(out_csv, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_csv.string());
  WriteRewardFieldCsv(out, field);
  return field;
}

QStoreConfig MakeQStoreConfig(const ExperimentConfig& cfg) {
  QStoreConfig qc;
  qc.num_states = cfg.grid.num_states();
  qc.params = cfg.params;
  qc.strategy = cfg.strategy;
  qc.epsilon = cfg.epsilon;
  qc.seed = DeriveRunSeed(cfg.seed, 0, 0);
  return qc;
}

void WriteServerOutputs(const QStore& store, const std::filesystem::path& out) {
  {
    auto f = OpenOut(out, "qtable.csv");
    store.table().WriteCsv(f);
  }
  auto f = OpenOut(out, "wal.csv");
  WriteWalCsv(f, store.log());
}

AgentReport RunNetworkAgent(const ExperimentConfig& cfg, const std::string& address,
                            std::chrono::milliseconds timeout) {
  const auto [host, port] = ParseAddress(address);
  QStoreClient client(host, port, timeout);
  AgentReport report;
  report.agent_id = client.Hello();

  const EngineConfig ec = cfg.MakeEngineConfig(DeriveRunSeed(cfg.seed, 0, 0));
  const GridSpec& grid = ec.grid();
  const int start =
      cfg.starts.empty()
          ? cfg.start_state
          : cfg.starts[static_cast<std::size_t>(report.agent_id) % cfg.starts.size()];
  CellState cell = CellFromIndex(grid, start);
  try {
    for (std::int64_t t = 0; t < cfg.total_steps; ++t) {
      const int s = StateIndex(grid, cell);
      const Action a = client.Direct(s);
      const double r = ec.schedule.reward_at(t, s);
      const CellState next = Step(grid, cell, a);
      client.Update({s, a, r, StateIndex(grid, next)});
      if (r > 0.0) ++report.fire_steps;
      ++report.steps_done;
      cell = next;
    }
    client.Bye();
  } catch (const NetError& e) {
    report.partial = true;
    report.error = e.what();
  }
  return report;
}

}  // namespace qswarm
