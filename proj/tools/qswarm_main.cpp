// qswarm command line: run, sweep, adapt, serve, agent, reward.
//
// Exit codes: 0 success, 1 usage, 2 config, 3 runtime, 4 network.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <system_error>
#include <thread>

#include "CLI11.hpp"
#include "qswarm/harness.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitNetwork = 4;

std::atomic<bool> g_interrupted{false};

void OnSignal(int) { g_interrupted.store(true); }

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<int> agents;
  std::optional<std::int64_t> steps;
  int threads = 0;
};

void AddCommon(CLI::App* cmd, CommonFlags& f, bool need_config) {
  auto* opt = cmd->add_option("--config", f.config, "experiment config file");
  if (need_config) opt->required();
  cmd->add_option("--seed", f.seed, "master seed (overrides config)");
  cmd->add_option("--out", f.out, "output directory")->capture_default_str();
  cmd->add_option("--agents", f.agents, "number of agents (overrides config)");
  cmd->add_option("--steps", f.steps, "steps per run (overrides config)");
  cmd->add_option("--threads", f.threads, "worker threads, 0 = all cores");
}

qswarm::ExperimentConfig LoadWithOverrides(const CommonFlags& f) {
  qswarm::ExperimentConfig cfg =
      f.config.empty() ? qswarm::ExperimentConfig{} : qswarm::LoadConfig(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.agents) {
    cfg.num_agents = *f.agents;
    if (!cfg.starts.empty() && static_cast<int>(cfg.starts.size()) != *f.agents) {
      cfg.starts.clear();
    }
  }
  if (f.steps) cfg.total_steps = *f.steps;
  cfg.Validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent shared-table Q-learning simulator"};
  app.require_subcommand(1);

  CommonFlags run_f, sweep_f, adapt_f, serve_f, agent_f;
  std::string events_csv;
  auto* run = app.add_subcommand("run", "run replications of one scenario");
  AddCommon(run, run_f, false);
  run->add_option("--events", events_csv, "write replication 0's step events CSV");

  auto* sweep = app.add_subcommand("sweep", "sweep one parameter");
  AddCommon(sweep, sweep_f, true);

  auto* adapt = app.add_subcommand("adapt", "per-period fire fractions");
  AddCommon(adapt, adapt_f, true);

  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  auto* serve = app.add_subcommand("serve", "host the shared Q-table");
  AddCommon(serve, serve_f, false);
  serve->add_option("--host", host, "listen address")->capture_default_str();
  serve->add_option("--port", port, "listen port, 0 = ephemeral")->capture_default_str();

  std::string address;
  int timeout_ms = 10000;
  auto* agent = app.add_subcommand("agent", "act as one networked agent");
  AddCommon(agent, agent_f, false);
  agent->add_option("--connect", address, "server host:port")->required();
  agent->add_option("--timeout-ms", timeout_ms, "per-request timeout")
      ->capture_default_str();

  std::string image, reward_out = "reward_field.csv";
  int cols = 4, rows = 4;
  double zoom = 1.0;
  qswarm::FireClassifier clf;
  int min_red = clf.min_red, max_green = clf.max_green, max_blue = clf.max_blue;
  auto* reward = app.add_subcommand("reward", "reward field from a PPM image");
  reward->add_option("image", image, "binary PPM (P6) image")->required();
  reward->add_option("--cols", cols, "tile columns")->capture_default_str();
  reward->add_option("--rows", rows, "tile rows")->capture_default_str();
  reward->add_option("--zoom", zoom, "zoom factor >= 1")->capture_default_str();
  reward->add_option("--min-red", min_red)->check(CLI::Range(0, 255));
  reward->add_option("--max-green", max_green)->check(CLI::Range(0, 255));
  reward->add_option("--max-blue", max_blue)->check(CLI::Range(0, 255));
  reward->add_option("--out", reward_out, "output CSV")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) {
      auto cfg = LoadWithOverrides(run_f);
      auto report = qswarm::CmdRun(cfg, run_f.out, run_f.threads,
                                   events_csv.empty() ? std::filesystem::path{}
                                                      : std::filesystem::path(events_csv));
      std::cout << report.summary_line << "\n";
    } else if (*sweep) {
      auto cfg = LoadWithOverrides(sweep_f);
      for (const auto& p : qswarm::CmdSweep(cfg, sweep_f.out, sweep_f.threads)) {
        std::cout << p.param_name << "=" << p.param_value
                  << " fire_fraction=" << p.fire_fraction.mean
                  << " coverage_steps=" << p.coverage_steps.mean << "\n";
      }
    } else if (*adapt) {
      auto cfg = LoadWithOverrides(adapt_f);
      auto report = qswarm::CmdAdapt(cfg, adapt_f.out, adapt_f.threads);
      std::cout << report.summary_line << "\n";
    } else if (*serve) {
      auto cfg = LoadWithOverrides(serve_f);
      qswarm::QStoreServer server(qswarm::MakeQStoreConfig(cfg));
      try {
        server.Start(host, port);
      } catch (const std::system_error& e) {
        std::cerr << "serve: " << e.what() << "\n";
        return kExitNetwork;
      }
      std::signal(SIGINT, OnSignal);
      std::signal(SIGTERM, OnSignal);
      std::cout << "LISTENING " << server.port() << std::endl;
      // Exit once the expected number of agent sessions have finished.
      const int expected = cfg.num_agents;
      while (!g_interrupted.load() && server.finished_sessions() < expected) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
      server.Stop();
      qswarm::WriteServerOutputs(server.store(), serve_f.out);
      const bool partial = server.finished_sessions() < expected;
      std::cout << "sessions=" << server.finished_sessions()
                << " updates=" << server.store().log().size()
                << (partial ? " (partial: interrupted)" : "") << "\n";
      return partial ? kExitNetwork : 0;
    } else if (*agent) {
      auto cfg = LoadWithOverrides(agent_f);
      auto report = qswarm::RunNetworkAgent(cfg, address,
                                            std::chrono::milliseconds(timeout_ms));
      std::cout << "agent=" << report.agent_id << " steps=" << report.steps_done
                << " fire_steps=" << report.fire_steps;
      if (report.partial) {
        std::cout << " (partial: " << report.error << ")\n";
        return kExitNetwork;
      }
      std::cout << "\n";
    } else if (*reward) {
      if (cols < 1 || rows < 1) {
        std::cerr << "reward: zero-dimension tile grid\n";
        return kExitUsage;
      }
      clf.min_red = static_cast<std::uint8_t>(min_red);
      clf.max_green = static_cast<std::uint8_t>(max_green);
      clf.max_blue = static_cast<std::uint8_t>(max_blue);
      auto field = qswarm::CmdReward(image, cols, rows, zoom, clf, reward_out);
      std::cout << "wrote " << field.grid().num_states() << " cells to "
                << reward_out << "\n";
    }
  } catch (const qswarm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const qswarm::NetError& e) {
    std::cerr << "network error: " << e.what() << "\n";
    return kExitNetwork;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
