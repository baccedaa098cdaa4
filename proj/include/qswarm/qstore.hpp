#ifndef QSWARM_QSTORE_HPP_
#define QSWARM_QSTORE_HPP_

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "qswarm/engine.hpp"
#include "qswarm/qlearning.hpp"

// Line protocol for a shared Q-table. One request per line, one response
// per request, in order:
//
//   HELLO                      -> OK AGENT <id>
//   GETQ <s>                   -> OK QROW <q_left> <q_right> <q_up> <q_down>
//   DIRECT <s>                 -> OK ACT <LEFT|RIGHT|UP|DOWN>
//   UPDATE <s> <a> <r> <s'>    -> OK Q <new_value>
//   RESET                      -> OK
//   BYE                        -> OK
//
// Failures answer `ERR <code> <message>`: 1 parse, 2 range, 3 state.

namespace qswarm {

struct QStoreConfig {
  int num_states = 16;
  LearnParams params;
  Strategy strategy = Strategy::kBoltzmann;
  DecaySchedule epsilon{1.0, 0.01, 50.0};
  // Seed of the run; DIRECT for agent i draws from DeriveAgentSeed(seed, i).
  std::uint64_t seed = 0;
};

struct WalEntry {
  enum class Kind { kUpdate, kReset };
  std::uint64_t seq = 0;
  Kind kind = Kind::kUpdate;
  int agent = -1;
  Experience exp{0, Action::kLeft, 0.0, 0};
  int registered = 0;  // agents registered when the update was applied
  double alpha = 0.0;
  double new_q = 0.0;
};

// Transport-independent store. All table mutation, clock advancement and
// logging happen under one mutex, so the log order is the apply order.
class QStore {
 public:
  struct Session {
    std::optional<int> agent_id;
    bool closed = false;
  };

  explicit QStore(QStoreConfig config);

  // Handles one request line (without the trailing newline) and returns the
  // response line. Never throws for malformed input.
  std::string Handle(Session& session, std::string_view line);

  QTable table() const;
  std::vector<WalEntry> log() const;
  int registered() const;
  // Global step: updates since the last reset / registered agents.
  std::int64_t step() const;
  const QStoreConfig& config() const { return config_; }

 private:
  std::int64_t StepLocked() const;

  QStoreConfig config_;
  mutable std::mutex mu_;
  QTable q_;
  std::vector<Rng> agent_rngs_;
  std::uint64_t updates_since_reset_ = 0;
  std::vector<WalEntry> log_;
};

// Replays a log on a fresh table. Alpha for each update is recomputed from
// the update's position since the last reset and its registered count.
QTable ReplayWal(const std::vector<WalEntry>& log, int num_states,
                 const LearnParams& params);

void WriteWalCsv(std::ostream& out, const std::vector<WalEntry>& log);
std::vector<WalEntry> ReadWalCsv(const std::filesystem::path& path);

// TCP front end: one thread per connection, all funnelled into a QStore.
class QStoreServer {
 public:
  explicit QStoreServer(QStoreConfig config);
  ~QStoreServer();
  QStoreServer(const QStoreServer&) = delete;
  QStoreServer& operator=(const QStoreServer&) = delete;

  // Binds and starts accepting. port 0 picks an ephemeral port. Throws
  // std::system_error on bind failure.
  void Start(const std::string& host = "127.0.0.1", std::uint16_t port = 0);
  void Stop();
  std::uint16_t port() const { return port_; }

  // Blocks until `sessions` connections have ended, or Stop() is called.
  void WaitForSessions(int sessions);

  QStore& store() { return store_; }
  int finished_sessions() const { return finished_.load(); }

 private:
  void AcceptLoop();
  void Serve(int fd);

  QStore store_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<int> finished_{0};
  std::mutex done_mu_;
  std::condition_variable done_cv_;
  std::thread acceptor_;
  std::mutex conn_mu_;
  std::vector<std::thread> workers_;
  std::vector<int> client_fds_;
};

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class TimeoutError : public NetError {
 public:
  using NetError::NetError;
};
class ConnectionError : public NetError {
 public:
  using NetError::NetError;
};
class ProtocolError : public NetError {
 public:
  using NetError::NetError;
};
// The server answered ERR.
class ServerError : public NetError {
 public:
  ServerError(int code, const std::string& message)
      : NetError("server error " + std::to_string(code) + ": " + message),
        code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

// Blocking client; one per agent process. Not thread-safe.
class QStoreClient {
 public:
  QStoreClient(const std::string& host, std::uint16_t port,
               std::chrono::milliseconds timeout = std::chrono::seconds(10));
  ~QStoreClient();
  QStoreClient(QStoreClient&& other) noexcept;
  QStoreClient& operator=(QStoreClient&&) = delete;
  QStoreClient(const QStoreClient&) = delete;

  int Hello();
  std::array<double, kNumActions> GetQ(int state);
  Action Direct(int state);
  double Update(const Experience& exp);
  void Reset();
  void Bye();

  // Sends one line and returns the raw response line.
  std::string Request(std::string_view line);

 private:
  std::vector<std::string> Expect(std::string_view line, std::string_view tag,
                                  std::size_t fields);

  int fd_ = -1;
  std::string buffer_;
};

// Splits "host:port".
std::pair<std::string, std::uint16_t> ParseAddress(std::string_view address);

}  // namespace qswarm

#endif  // QSWARM_QSTORE_HPP_
