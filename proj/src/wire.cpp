#include "ssearch/wire.hpp"

#include "ssearch/error.hpp"

#include <json.hpp>

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

extern char** environ;

namespace ssearch {

namespace {

using ordered_json = nlohmann::ordered_json;

void ignore_sigpipe() {
  static const bool done = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

std::string errno_text() { return std::strerror(errno); }

void write_all(int fd, std::string_view data, const std::string& who) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(who + ": write failed: " + errno_text());
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

std::string read_line_from(int fd, std::string& buffer, int timeout_ms, const std::string& who) {
  for (;;) {
    if (const auto pos = buffer.find('\n'); pos != std::string::npos) {
      std::string line = buffer.substr(0, pos);
      buffer.erase(0, pos + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    pollfd pfd{fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, timeout_ms);
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(who + ": poll failed: " + errno_text());
    }
    if (ready == 0) throw ProtocolError(who + ": timed out after " + std::to_string(timeout_ms) + " ms");
    char chunk[4096];
    const ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(who + ": read failed: " + errno_text());
    }
    if (n == 0) throw ProtocolError(who + ": peer closed the stream");
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

}  // namespace

ChildProcessTransport::ChildProcessTransport(std::vector<std::string> argv, int timeout_ms)
    : argv_(std::move(argv)), timeout_ms_(timeout_ms) {
  if (argv_.empty()) throw ProtocolError("child process transport: empty command");
  ignore_sigpipe();

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0) throw ProtocolError("pipe failed: " + errno_text());
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw ProtocolError("pipe failed: " + errno_text());
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

  std::vector<char*> args;
  for (auto& a : argv_) args.push_back(a.data());
  args.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw ProtocolError(describe() + ": spawn failed: " + std::strerror(rc));
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  ::fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  ::fcntl(from_child_, F_SETFD, FD_CLOEXEC);
}

ChildProcessTransport::~ChildProcessTransport() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  if (pid_ <= 0) return;
  // The server should exit on EOF; give it a moment before terminating it.
  int status = 0;
  for (int i = 0; i < 100; ++i) {
    if (::waitpid(pid_, &status, WNOHANG) == pid_) return;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(pid_, SIGTERM);
  ::waitpid(pid_, &status, 0);
}

void ChildProcessTransport::write_line(std::string_view line) {
  std::string framed(line);
  framed.push_back('\n');
  write_all(to_child_, framed, describe());
}

std::string ChildProcessTransport::read_line() {
  return read_line_from(from_child_, buffer_, timeout_ms_, describe());
}

std::string ChildProcessTransport::describe() const {
  std::string s = "stdio:";
  for (std::size_t i = 0; i < argv_.size(); ++i) s += (i ? " " : "") + argv_[i];
  return s;
}

TcpTransport::TcpTransport(std::string host, std::uint16_t port, int timeout_ms)
    : host_(std::move(host)), port_(port), timeout_ms_(timeout_ms) {
  ignore_sigpipe();
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string service = std::to_string(port_);
  if (const int rc = ::getaddrinfo(host_.c_str(), service.c_str(), &hints, &found); rc != 0) {
    throw ProtocolError(describe() + ": cannot resolve host: " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  for (addrinfo* a = found; a; a = a->ai_next) {
    const int fd = ::socket(a->ai_family, a->ai_socktype | SOCK_CLOEXEC, a->ai_protocol);
    if (fd < 0) {
      last_error = errno_text();
      continue;
    }
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) {
      fd_ = fd;
      break;
    }
    last_error = errno_text();
    ::close(fd);
  }
  ::freeaddrinfo(found);
  if (fd_ < 0) throw ProtocolError(describe() + ": connect failed: " + last_error);
}

TcpTransport::~TcpTransport() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpTransport::write_line(std::string_view line) {
  std::string framed(line);
  framed.push_back('\n');
  write_all(fd_, framed, describe());
}

std::string TcpTransport::read_line() { return read_line_from(fd_, buffer_, timeout_ms_, describe()); }

std::string TcpTransport::describe() const { return "tcp:" + host_ + ":" + std::to_string(port_); }

std::unique_ptr<LineTransport> open_transport(const std::string& spec, int timeout_ms) {
  if (spec.rfind("stdio:", 0) == 0) {
    const std::string command = spec.substr(6);
    if (command.empty()) throw ProtocolError("transport '" + spec + "': missing command");
    return std::make_unique<ChildProcessTransport>(
        std::vector<std::string>{"/bin/sh", "-c", "exec " + command}, timeout_ms);
  }
  if (spec.rfind("tcp:", 0) == 0) {
    const std::string rest = spec.substr(4);
    const auto colon = rest.rfind(':');
    if (colon == std::string::npos || colon == 0) {
      throw ProtocolError("transport '" + spec + "': expected tcp:<host>:<port>");
    }
    int port = 0;
    try {
      port = std::stoi(rest.substr(colon + 1));
    } catch (const std::exception&) {
      port = -1;
    }
    if (port <= 0 || port > 65535) throw ProtocolError("transport '" + spec + "': invalid port");
    return std::make_unique<TcpTransport>(rest.substr(0, colon), static_cast<std::uint16_t>(port),
                                          timeout_ms);
  }
  throw ProtocolError("transport '" + spec + "': expected stdio:<command> or tcp:<host>:<port>");
}

namespace wire {

namespace {

ordered_json rows(std::span<const Vector> xs) {
  ordered_json out = ordered_json::array();
  for (const auto& x : xs) {
    require_finite(x, "wire payload");
    ordered_json row = ordered_json::array();
    for (Index i = 0; i < x.size(); ++i) row.push_back(x[i]);
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

std::string encode_fit(std::uint64_t id, std::span<const Vector> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DimensionError("fit payload: xs and ys differ in length");
  ordered_json targets = ordered_json::array();
  for (double y : ys) {
    if (!std::isfinite(y)) throw NonFiniteError("wire payload contains non-finite target");
    targets.push_back(y);
  }
  ordered_json msg;
  msg["op"] = "fit";
  msg["xs"] = rows(xs);
  msg["ys"] = std::move(targets);
  msg["id"] = id;
  return msg.dump();
}

std::string encode_predict(std::uint64_t id, std::span<const Vector> xs) {
  ordered_json msg;
  msg["op"] = "predict";
  msg["xs"] = rows(xs);
  msg["id"] = id;
  return msg.dump();
}

std::string encode_ping(std::uint64_t id) {
  ordered_json msg;
  msg["op"] = "ping";
  msg["id"] = id;
  return msg.dump();
}

}  // namespace wire

WireClient::WireClient(std::unique_ptr<LineTransport> transport) : transport_(std::move(transport)) {
  if (!transport_) throw ProtocolError("wire client requires a transport");
}

std::string WireClient::exchange(const std::string& request, std::uint64_t id, const char* op,
                                 std::vector<double>* yhat, std::size_t expected) {
  const std::string where = transport_->describe() + " " + op + " id=" + std::to_string(id);
  transport_->write_line(request);
  std::string reply;
  try {
    reply = transport_->read_line();
  } catch (const ProtocolError& e) {
    throw ProtocolError(where + ": " + e.what());
  }

  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(reply);
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError(where + ": malformed response: " + reply);
  }
  if (!parsed.is_object() || !parsed.contains("ok") || !parsed["ok"].is_boolean()) {
    throw ProtocolError(where + ": response lacks boolean 'ok': " + reply);
  }
  if (!parsed.contains("id") || !parsed["id"].is_number_unsigned() || parsed["id"].get<std::uint64_t>() != id) {
    throw ProtocolError(where + ": response id does not match request: " + reply);
  }
  if (!parsed["ok"].get<bool>()) {
    const std::string message =
        parsed.contains("error") && parsed["error"].is_string() ? parsed["error"].get<std::string>() : reply;
    throw ProtocolError(where + ": server error: " + message);
  }
  if (yhat) {
    if (!parsed.contains("yhat") || !parsed["yhat"].is_array()) {
      throw ProtocolError(where + ": response lacks 'yhat': " + reply);
    }
    yhat->clear();
    for (const auto& v : parsed["yhat"]) {
      // Non-numbers are passed through as NaN and flagged by the predictor.
      yhat->push_back(v.is_number() ? v.get<double>() : std::nan(""));
    }
    if (yhat->size() != expected) {
      throw ProtocolError(where + ": expected " + std::to_string(expected) + " predictions, got " +
                          std::to_string(yhat->size()));
    }
  }
  return reply;
}

void WireClient::ping() {
  std::lock_guard lock(mutex_);
  const auto id = next_id_++;
  exchange(wire::encode_ping(id), id, "ping", nullptr, 0);
}

void WireClient::fit(std::span<const Vector> xs, std::span<const double> ys) {
  std::lock_guard lock(mutex_);
  const auto id = next_id_++;
  exchange(wire::encode_fit(id, xs, ys), id, "fit", nullptr, 0);
}

std::vector<double> WireClient::predict(std::span<const Vector> xs) {
  std::lock_guard lock(mutex_);
  const auto id = next_id_++;
  std::vector<double> yhat;
  exchange(wire::encode_predict(id, xs), id, "predict", &yhat, xs.size());
  return yhat;
}

}  // namespace ssearch
