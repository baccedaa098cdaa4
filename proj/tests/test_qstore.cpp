#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "qswarm/qstore.hpp"

using namespace qswarm;

namespace {

bool StartsWith(const std::string& s, std::string_view p) { return s.rfind(p, 0) == 0; }

TEST(QStore, HandshakeAndUpdate) {
  QStore store({});
  QStore::Session a, b;
  EXPECT_EQ(store.Handle(a, "HELLO"), "OK AGENT 0");
  EXPECT_EQ(store.Handle(b, "HELLO"), "OK AGENT 1");
  EXPECT_EQ(store.Handle(a, "UPDATE 13 UP 1 9"), "OK Q 0.9");
  EXPECT_EQ(store.Handle(b, "GETQ 13"), "OK QROW 0 0 0.9 0");
  EXPECT_EQ(store.Handle(a, "RESET"), "OK");
  EXPECT_EQ(store.Handle(b, "GETQ 13"), "OK QROW 0 0 0 0");
  EXPECT_EQ(store.Handle(a, "BYE"), "OK");
  EXPECT_TRUE(a.closed);
}

TEST(QStore, ErrorCodes) {
  QStore store({});
  QStore::Session s;
  EXPECT_TRUE(StartsWith(store.Handle(s, "DIRECT 3"), "ERR 3"));
  EXPECT_TRUE(StartsWith(store.Handle(s, "UPDATE 1 UP 0 2"), "ERR 3"));
  store.Handle(s, "HELLO");
  EXPECT_TRUE(StartsWith(store.Handle(s, "HELLO"), "ERR 3"));
  EXPECT_TRUE(StartsWith(store.Handle(s, "GETQ 16"), "ERR 2"));
  EXPECT_TRUE(StartsWith(store.Handle(s, "GETQ -1"), "ERR 2"));
  EXPECT_TRUE(StartsWith(store.Handle(s, "UPDATE 1 UP -1 2"), "ERR 2"));
  EXPECT_TRUE(StartsWith(store.Handle(s, "UPDATE 1 UP nan 2"), "ERR 2"));
  EXPECT_TRUE(StartsWith(store.Handle(s, "UPDATE 1 NORTH 0 2"), "ERR 1"));
  EXPECT_TRUE(StartsWith(store.Handle(s, "GETQ  1"), "ERR 1"));
  EXPECT_TRUE(StartsWith(store.Handle(s, "GETQ x"), "ERR 1"));
  EXPECT_TRUE(StartsWith(store.Handle(s, "getq 1"), "ERR 1"));
  EXPECT_TRUE(StartsWith(store.Handle(s, ""), "ERR 1"));
  EXPECT_EQ(store.Handle(s, "GETQ 1\r"), "OK QROW 0 0 0 0");
  EXPECT_TRUE(store.log().empty());
}

TEST(QStore, FuzzedLinesGetAnAnswer) {
  QStore store({});
  QStore::Session s;
  std::mt19937 gen(15);
  const std::string alphabet = "HELOGTQDIRCUPABYSN 0123456789-.e\t\r,xLFWN";
  int oks = 0;
  for (int i = 0; i < 20000; ++i) {
    std::string line;
    const int len = static_cast<int>(gen() % 24);
    for (int k = 0; k < len; ++k) line += alphabet[gen() % alphabet.size()];
    if (i % 4 == 0) line = std::string(i % 8 ? "UPDATE " : "GETQ ") + line;
    std::string resp;
    ASSERT_NO_THROW(resp = store.Handle(s, line));
    ASSERT_TRUE(StartsWith(resp, "OK") || StartsWith(resp, "ERR ")) << resp;
    oks += StartsWith(resp, "OK");
    s.closed = false;
  }
  EXPECT_GT(oks, 0);
  EXPECT_EQ(ReplayWal(store.log(), 16, store.config().params), store.table());
}

// DIRECT draws from the agent's own stream with Boltzmann probabilities at
// the server clock.
TEST(QStore, DirectMatchesLocalSampling) {
  QStoreConfig cfg;
  cfg.seed = 321;
  QStore store(cfg);
  QStore::Session s0, s1;
  store.Handle(s0, "HELLO");
  store.Handle(s1, "HELLO");
  store.Handle(s0, "UPDATE 5 LEFT 1 4");
  Rng local(DeriveAgentSeed(321, 1));
  QTable q(16);
  q.at(5, Action::kLeft) = 0.9;
  for (int i = 0; i < 200; ++i) {
    const double t = cfg.params.temperature.value(0.0);  // 1 update / 2 agents = step 0
    const Action want = SampleAction(BoltzmannProbs(q, 5, t), local);
    EXPECT_EQ(store.Handle(s1, "DIRECT 5"), "OK ACT " + std::string(ActionName(want)));
  }
}

TEST(QStore, ServerClockAdvancesPerRegisteredAgent) {
  QStore store({});
  QStore::Session a, b;
  store.Handle(a, "HELLO");
  store.Handle(b, "HELLO");
  for (int i = 0; i < 5; ++i) store.Handle(i % 2 ? a : b, "UPDATE 0 LEFT 0 0");
  EXPECT_EQ(store.step(), 2);
  auto log = store.log();
  EXPECT_EQ(log[4].alpha, store.config().params.alpha.value(2.0));
  store.Handle(a, "RESET");
  EXPECT_EQ(store.step(), 0);
}

TEST(QStore, ConcurrentHandleReplays) {
  QStore store({});
  constexpr int kThreads = 8, kEach = 2000;
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&store, t] {
      QStore::Session s;
      store.Handle(s, "HELLO");
      std::mt19937 gen(t);
      for (int i = 0; i < kEach; ++i) {
        const int st = static_cast<int>(gen() % 3);
        store.Handle(s, "UPDATE " + std::to_string(st) + " RIGHT " +
                            std::to_string(gen() % 4) + " " + std::to_string(st + 1));
      }
    });
  }
  for (auto& th : threads) th.join();
  auto log = store.log();
  EXPECT_EQ(log.size(), static_cast<std::size_t>(kThreads * kEach));
  for (std::size_t i = 0; i < log.size(); ++i) EXPECT_EQ(log[i].seq, i);
  EXPECT_EQ(ReplayWal(log, 16, store.config().params), store.table());
}

TEST(Wal, CsvRoundTrip) {
  QStore store({});
  QStore::Session s;
  store.Handle(s, "HELLO");
  store.Handle(s, "UPDATE 1 DOWN 0.333333333333 5");
  store.Handle(s, "RESET");
  store.Handle(s, "UPDATE 2 UP 0.1 2");
  store.Handle(s, "UPDATE 2 UP 0.7 2");
  auto path = std::filesystem::temp_directory_path() / "qswarm_wal.csv";
  {
    std::ofstream out(path);
    WriteWalCsv(out, store.log());
  }
  auto back = ReadWalCsv(path);
  ASSERT_EQ(back.size(), 4u);
  EXPECT_EQ(back[1].kind, WalEntry::Kind::kReset);
  EXPECT_EQ(back[3].new_q, store.log()[3].new_q);
  EXPECT_EQ(ReplayWal(back, 16, store.config().params), store.table());
  std::filesystem::remove(path);
}

TEST(Net, ClientServerOverTcp) {
  QStoreServer server({});
  server.Start();
  ASSERT_NE(server.port(), 0);
  QStoreClient c("127.0.0.1", server.port());
  EXPECT_EQ(c.Hello(), 0);
  EXPECT_EQ(c.Update({13, Action::kUp, 1.0, 9}), 0.9);
  EXPECT_EQ(c.GetQ(13), (std::array<double, 4>{0, 0, 0.9, 0}));
  const Action a = c.Direct(13);
  EXPECT_GE(ActionIndex(a), 0);
  try {
    c.GetQ(99);
    FAIL() << "expected server error";
  } catch (const ServerError& e) {
    EXPECT_EQ(e.code(), 2);
  }
  EXPECT_EQ(c.Request("BOGUS"), "ERR 1 unknown verb");
  c.Bye();
  server.WaitForSessions(1);
  EXPECT_EQ(server.finished_sessions(), 1);
  server.Stop();
}

TEST(Net, RejectsOverlongLine) {
  QStoreServer server({});
  server.Start();
  QStoreClient c("127.0.0.1", server.port());
  EXPECT_TRUE(StartsWith(c.Request(std::string(5000, 'A')), "ERR 1"));
  EXPECT_EQ(c.Request("GETQ 0"), "OK QROW 0 0 0 0");
  server.Stop();
}

TEST(Net, ConnectFailures) {
  std::uint16_t port;
  {
    QStoreServer probe({});
    probe.Start();
    port = probe.port();
    probe.Stop();
  }
  EXPECT_THROW(QStoreClient("127.0.0.1", port, std::chrono::milliseconds(500)), NetError);
  EXPECT_THROW(ParseAddress("localhost"), ConnectionError);
  EXPECT_THROW(ParseAddress("localhost:0"), ConnectionError);
  EXPECT_EQ(ParseAddress("127.0.0.1:8080"), (std::pair<std::string, std::uint16_t>{"127.0.0.1", 8080}));
}

TEST(Net, ServerShutdownMidSession) {
  auto server = std::make_unique<QStoreServer>(QStoreConfig{});
  server->Start();
  QStoreClient c("127.0.0.1", server->port(), std::chrono::milliseconds(1000));
  c.Hello();
  server->Stop();
  EXPECT_THROW(c.GetQ(0), NetError);
}

}  // namespace
