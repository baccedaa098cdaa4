#include "qswarm/qstore.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <ostream>
#include <system_error>

#include "qswarm/format.hpp"

namespace qswarm {

namespace {

constexpr std::size_t kMaxLine = 4096;

std::string Err(int code, std::string_view message) {
  return "ERR " + std::to_string(code) + " " + std::string(message);
}

// Fields must be separated by exactly one space.
std::optional<std::vector<std::string_view>> Tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  if (line.empty()) return std::nullopt;
  std::size_t pos = 0;
  while (true) {
    const auto sp = line.find(' ', pos);
    auto tok = line.substr(pos, sp == std::string_view::npos ? sp : sp - pos);
    if (tok.empty()) return std::nullopt;
    out.push_back(tok);
    if (sp == std::string_view::npos) break;
    pos = sp + 1;
  }
  return out;
}

std::string KindName(WalEntry::Kind k) {
  return k == WalEntry::Kind::kUpdate ? "UPDATE" : "RESET";
}

}  // namespace

QStore::QStore(QStoreConfig config)
    : config_(std::move(config)), q_(config_.num_states) {
  config_.params.Validate();
}

std::int64_t QStore::StepLocked() const {
  const std::uint64_t n = agent_rngs_.empty() ? 1 : agent_rngs_.size();
  return static_cast<std::int64_t>(updates_since_reset_ / n);
}

std::string QStore::Handle(Session& session, std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  auto tokens = Tokenize(line);
  if (!tokens) return Err(1, "malformed request");
  const auto& t = *tokens;
  const std::string_view verb = t[0];
  const int n = config_.num_states;

  auto parse_state = [n](std::string_view tok) -> std::optional<int> {
    auto s = ParseInt<int>(tok);
    if (!s) return std::nullopt;
    return *s;
  };
  auto arity = [&t](std::size_t want) { return t.size() == want; };

  if (verb == "HELLO") {
    if (!arity(1)) return Err(1, "HELLO takes no arguments");
    if (session.agent_id) return Err(3, "already registered");
    std::lock_guard lock(mu_);
    const int id = static_cast<int>(agent_rngs_.size());
    agent_rngs_.emplace_back(DeriveAgentSeed(config_.seed, id));
    session.agent_id = id;
    return "OK AGENT " + std::to_string(id);
  }
  if (verb == "BYE") {
    if (!arity(1)) return Err(1, "BYE takes no arguments");
    session.closed = true;
    return "OK";
  }
  if (verb == "RESET") {
    if (!arity(1)) return Err(1, "RESET takes no arguments");
    std::lock_guard lock(mu_);
    q_.Reset();
    updates_since_reset_ = 0;
    WalEntry e;
    e.seq = log_.size();
    e.kind = WalEntry::Kind::kReset;
    e.agent = session.agent_id.value_or(-1);
    e.registered = static_cast<int>(agent_rngs_.size());
    log_.push_back(e);
    return "OK";
  }
  if (verb == "GETQ") {
    if (!arity(2)) return Err(1, "usage: GETQ <state>");
    auto s = parse_state(t[1]);
    if (!s) return Err(1, "bad state index");
    if (*s < 0 || *s >= n) return Err(2, "state out of range");
    std::lock_guard lock(mu_);
    std::string out = "OK QROW";
    for (double v : q_.row(*s)) out += " " + FormatWire(v);
    return out;
  }
  if (verb == "DIRECT") {
    if (!arity(2)) return Err(1, "usage: DIRECT <state>");
    auto s = parse_state(t[1]);
    if (!s) return Err(1, "bad state index");
    if (*s < 0 || *s >= n) return Err(2, "state out of range");
    if (!session.agent_id) return Err(3, "not registered (send HELLO)");
    std::lock_guard lock(mu_);
    const double clock = static_cast<double>(StepLocked());
    const ActionProbs probs =
        config_.strategy == Strategy::kEpsilonGreedy
            ? EpsilonGreedyProbs(q_, *s, config_.epsilon.value(clock))
            : BoltzmannProbs(q_, *s, config_.params.temperature.value(clock));
    const Action a =
        SampleAction(probs, agent_rngs_[static_cast<std::size_t>(*session.agent_id)]);
    return "OK ACT " + std::string(ActionName(a));
  }
  if (verb == "UPDATE") {
    if (!arity(5)) return Err(1, "usage: UPDATE <s> <a> <r> <s_next>");
    auto s = parse_state(t[1]);
    auto a = ParseAction(t[2]);
    auto r = ParseReal(t[3]);
    auto s_next = parse_state(t[4]);
    if (!s || !a || !r || !s_next) return Err(1, "bad UPDATE field");
    if (*s < 0 || *s >= n || *s_next < 0 || *s_next >= n) {
      return Err(2, "state out of range");
    }
    if (!std::isfinite(*r) || *r < 0.0) return Err(2, "reward must be finite and >= 0");
    if (!session.agent_id) return Err(3, "not registered (send HELLO)");
    std::lock_guard lock(mu_);
    WalEntry e;
    e.seq = log_.size();
    e.agent = *session.agent_id;
    e.exp = {*s, *a, *r, *s_next};
    e.registered = static_cast<int>(agent_rngs_.size());
    e.alpha = config_.params.alpha.value(static_cast<double>(StepLocked()));
    e.new_q = QUpdate(q_, e.exp, e.alpha, config_.params.gamma);
    ++updates_since_reset_;
    log_.push_back(e);
    return "OK Q " + FormatWire(e.new_q);
  }
  return Err(1, "unknown verb");
}

QTable QStore::table() const {
  std::lock_guard lock(mu_);
  return q_;
}

std::vector<WalEntry> QStore::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

int QStore::registered() const {
  std::lock_guard lock(mu_);
  return static_cast<int>(agent_rngs_.size());
}

std::int64_t QStore::step() const {
  std::lock_guard lock(mu_);
  return StepLocked();
}

QTable ReplayWal(const std::vector<WalEntry>& log, int num_states,
                 const LearnParams& params) {
  QTable q(num_states);
  std::uint64_t since_reset = 0;
  for (const WalEntry& e : log) {
    if (e.kind == WalEntry::Kind::kReset) {
      q.Reset();
      since_reset = 0;
      continue;
    }
    const std::uint64_t n = e.registered > 0 ? static_cast<std::uint64_t>(e.registered) : 1;
    const double step = static_cast<double>(since_reset / n);
    QUpdate(q, e.exp, params.alpha.value(step), params.gamma);
    ++since_reset;
  }
  return q;
}

void WriteWalCsv(std::ostream& out, const std::vector<WalEntry>& log) {
  out << "seq,kind,agent,state,action,reward,next_state,registered,alpha,new_q\n";
  for (const WalEntry& e : log) {
    out << e.seq << ',' << KindName(e.kind) << ',' << e.agent << ',';
    if (e.kind == WalEntry::Kind::kUpdate) {
      out << e.exp.state << ',' << ActionName(e.exp.action) << ','
          << FormatReal(e.exp.reward) << ',' << e.exp.next_state << ','
          << e.registered << ',' << FormatReal(e.alpha) << ','
          << FormatReal(e.new_q);
    } else {
      out << ",,,," << e.registered << ",,";
    }
    out << '\n';
  }
}

std::vector<WalEntry> ReadWalCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open WAL " + path.string());
  std::vector<WalEntry> log;
  std::string line;
  std::getline(in, line);  // header
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (true) {
      auto c = line.find(',', pos);
      f.push_back(line.substr(pos, c == std::string::npos ? c : c - pos));
      if (c == std::string::npos) break;
      pos = c + 1;
    }
    auto bad = [&] {
      return std::runtime_error(path.string() + ": malformed WAL line " +
                                std::to_string(line_no));
    };
    if (f.size() != 10) throw bad();
    WalEntry e;
    auto seq = ParseInt<std::uint64_t>(f[0]);
    auto agent = ParseInt<int>(f[2]);
    auto reg = ParseInt<int>(f[7]);
    if (!seq || !agent || !reg) throw bad();
    e.seq = *seq;
    e.agent = *agent;
    e.registered = *reg;
    if (f[1] == "RESET") {
      e.kind = WalEntry::Kind::kReset;
    } else if (f[1] == "UPDATE") {
      auto s = ParseInt<int>(f[3]);
      auto a = ParseAction(f[4]);
      auto r = ParseReal(f[5]);
      auto sn = ParseInt<int>(f[6]);
      auto alpha = ParseReal(f[8]);
      auto nq = ParseReal(f[9]);
      if (!s || !a || !r || !sn || !alpha || !nq) throw bad();
      e.exp = {*s, *a, *r, *sn};
      e.alpha = *alpha;
      e.new_q = *nq;
    } else {
      throw bad();
    }
    log.push_back(e);
  }
  return log;
}

QStoreServer::QStoreServer(QStoreConfig config) : store_(std::move(config)) {}

QStoreServer::~QStoreServer() { Stop(); }

void QStoreServer::Start(const std::string& host, std::uint16_t port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::system_error(errno, std::generic_category(), "socket");
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::system_error(EINVAL, std::generic_category(),
                            "bad listen address " + host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(listen_fd_, 64) < 0) {
    const int err = errno;
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw std::system_error(err, std::generic_category(),
                            "bind " + host + ":" + std::to_string(port));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { AcceptLoop(); });
}

void QStoreServer::AcceptLoop() {
  while (!stopping_.load()) {
    pollfd pfd{listen_fd_, POLLIN, 0};
    if (::poll(&pfd, 1, 100) <= 0) continue;
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(conn_mu_);
    if (stopping_.load()) {
      ::close(fd);
      break;
    }
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { Serve(fd); });
  }
}

void QStoreServer::Serve(int fd) {
  QStore::Session session;
  std::string buffer;
  char chunk[4096];
  while (!session.closed) {
    const ssize_t got = ::recv(fd, chunk, sizeof(chunk), 0);
    if (got <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(got));
    std::string out;
    std::size_t nl;
    while (!session.closed && (nl = buffer.find('\n')) != std::string::npos) {
      out += store_.Handle(session, std::string_view(buffer).substr(0, nl));
      out += '\n';
      buffer.erase(0, nl + 1);
    }
    if (buffer.size() > kMaxLine) {
      out += Err(1, "line too long") + "\n";
      buffer.clear();
    }
    if (!out.empty() &&
        ::send(fd, out.data(), out.size(), MSG_NOSIGNAL) != static_cast<ssize_t>(out.size())) {
      break;
    }
  }
  ::shutdown(fd, SHUT_RDWR);
  {
    std::lock_guard lock(done_mu_);
    finished_.fetch_add(1);
  }
  done_cv_.notify_all();
}

void QStoreServer::WaitForSessions(int sessions) {
  std::unique_lock lock(done_mu_);
  done_cv_.wait(lock, [&] { return stopping_.load() || finished_.load() >= sessions; });
}

void QStoreServer::Stop() {
  if (listen_fd_ < 0 && !acceptor_.joinable()) return;
  {
    std::lock_guard lock(done_mu_);
    stopping_.store(true);
  }
  done_cv_.notify_all();
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(conn_mu_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& w : workers) w.join();
  {
    std::lock_guard lock(conn_mu_);
    for (int fd : client_fds_) ::close(fd);
    client_fds_.clear();
  }
  if (listen_fd_ >= 0) ::close(listen_fd_);
  listen_fd_ = -1;
}

std::pair<std::string, std::uint16_t> ParseAddress(std::string_view address) {
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos) {
    throw ConnectionError("address must be host:port, got '" + std::string(address) + "'");
  }
  auto port = ParseInt<std::uint16_t>(address.substr(colon + 1));
  if (!port || *port == 0) {
    throw ConnectionError("bad port in '" + std::string(address) + "'");
  }
  return {std::string(address.substr(0, colon)), *port};
}

QStoreClient::QStoreClient(const std::string& host, std::uint16_t port,
                           std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port_str = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), port_str.c_str(), &hints, &res); rc != 0) {
    throw ConnectionError("resolve " + host + ": " + ::gai_strerror(rc));
  }
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0) {
    ::freeaddrinfo(res);
    throw ConnectionError(std::string("socket: ") + std::strerror(errno));
  }
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(timeout.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  const int rc = ::connect(fd_, res->ai_addr, res->ai_addrlen);
  const int err = errno;
  ::freeaddrinfo(res);
  if (rc < 0) {
    ::close(fd_);
    fd_ = -1;
    if (err == EINPROGRESS || err == ETIMEDOUT || err == EAGAIN) {
      throw TimeoutError("connect " + host + ":" + port_str + " timed out");
    }
    throw ConnectionError("connect " + host + ":" + port_str + ": " + std::strerror(err));
  }
  int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

QStoreClient::~QStoreClient() {
  if (fd_ >= 0) ::close(fd_);
}

QStoreClient::QStoreClient(QStoreClient&& other) noexcept
    : fd_(other.fd_), buffer_(std::move(other.buffer_)) {
  other.fd_ = -1;
}

std::string QStoreClient::Request(std::string_view line) {
  if (fd_ < 0) throw ConnectionError("client is closed");
  std::string msg(line);
  msg += '\n';
  std::size_t sent = 0;
  while (sent < msg.size()) {
    const ssize_t n = ::send(fd_, msg.data() + sent, msg.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK) throw TimeoutError("send timed out");
      throw ConnectionError(std::string("send: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
  std::size_t nl;
  while ((nl = buffer_.find('\n')) == std::string::npos) {
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n == 0) throw ConnectionError("connection closed by server");
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK) {
        throw TimeoutError("no response within timeout");
      }
      throw ConnectionError(std::string("recv: ") + std::strerror(errno));
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
    if (buffer_.size() > kMaxLine) throw ProtocolError("response line too long");
  }
  std::string response = buffer_.substr(0, nl);
  buffer_.erase(0, nl + 1);
  return response;
}

std::vector<std::string> QStoreClient::Expect(std::string_view line,
                                              std::string_view tag,
                                              std::size_t fields) {
  const std::string resp = Request(line);
  auto tokens = Tokenize(resp);
  if (!tokens) throw ProtocolError("malformed response '" + resp + "'");
  const auto& t = *tokens;
  if (t[0] == "ERR") {
    int code = t.size() > 1 ? ParseInt<int>(t[1]).value_or(0) : 0;
    const auto msg_at = resp.find(' ', 4);
    throw ServerError(code, msg_at == std::string::npos ? "" : resp.substr(msg_at + 1));
  }
  const std::size_t head = tag.empty() ? 1 : 2;
  if (t[0] != "OK" || (!tag.empty() && (t.size() < 2 || t[1] != tag)) ||
      t.size() != head + fields) {
    throw ProtocolError("unexpected response '" + resp + "' to '" +
                        std::string(line) + "'");
  }
  return {t.begin() + static_cast<std::ptrdiff_t>(head), t.end()};
}

int QStoreClient::Hello() {
  auto f = Expect("HELLO", "AGENT", 1);
  auto id = ParseInt<int>(f[0]);
  if (!id) throw ProtocolError("bad agent id '" + f[0] + "'");
  return *id;
}

std::array<double, kNumActions> QStoreClient::GetQ(int state) {
  auto f = Expect("GETQ " + std::to_string(state), "QROW", kNumActions);
  std::array<double, kNumActions> row{};
  for (int i = 0; i < kNumActions; ++i) {
    auto v = ParseReal(f[static_cast<std::size_t>(i)]);
    if (!v) throw ProtocolError("bad Q value '" + f[static_cast<std::size_t>(i)] + "'");
    row[static_cast<std::size_t>(i)] = *v;
  }
  return row;
}

Action QStoreClient::Direct(int state) {
  auto f = Expect("DIRECT " + std::to_string(state), "ACT", 1);
  auto a = ParseAction(f[0]);
  if (!a) throw ProtocolError("bad action '" + f[0] + "'");
  return *a;
}

double QStoreClient::Update(const Experience& exp) {
  auto f = Expect("UPDATE " + std::to_string(exp.state) + " " +
                      std::string(ActionName(exp.action)) + " " +
                      FormatWire(exp.reward) + " " + std::to_string(exp.next_state),
                  "Q", 1);
  auto v = ParseReal(f[0]);
  if (!v) throw ProtocolError("bad Q value '" + f[0] + "'");
  return *v;
}

void QStoreClient::Reset() { Expect("RESET", "", 0); }

void QStoreClient::Bye() {
  Expect("BYE", "", 0);
  ::close(fd_);
  fd_ = -1;
}

}  // namespace qswarm
