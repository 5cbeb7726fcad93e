#pragma once

// Newline-delimited JSON protocol spoken with a remote surrogate process.
//
//   {"op":"fit","xs":[[...]],"ys":[...],"id":n}  -> {"ok":true,"id":n}
//   {"op":"predict","xs":[[...]],"id":n}         -> {"ok":true,"yhat":[...],"id":n}
//   {"op":"ping","id":n}                         -> {"ok":true,"id":n}
//   any failure                                  -> {"ok":false,"error":"...","id":n}
//
// Requests carry a strictly increasing id starting at 1 and are answered in
// order. Numbers are finite doubles written in shortest round-trip decimal form.

#include "ssearch/subspace.hpp"

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ssearch {

/// A bidirectional stream of text lines (without the trailing '\n').
class LineTransport {
 public:
  virtual ~LineTransport() = default;
  virtual void write_line(std::string_view line) = 0;
  /// Blocks until a full line arrives. Throws ProtocolError on EOF or timeout.
  virtual std::string read_line() = 0;
  virtual std::string describe() const = 0;
};

/// Child process spoken to over its standard input and output.
class ChildProcessTransport final : public LineTransport {
 public:
  /// argv[0] is resolved through PATH. `timeout_ms` bounds each read.
  explicit ChildProcessTransport(std::vector<std::string> argv, int timeout_ms = 30000);
  ~ChildProcessTransport() override;
  ChildProcessTransport(const ChildProcessTransport&) = delete;
  ChildProcessTransport& operator=(const ChildProcessTransport&) = delete;

  void write_line(std::string_view line) override;
  std::string read_line() override;
  std::string describe() const override;

 private:
  std::vector<std::string> argv_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  int timeout_ms_;
  std::string buffer_;
};

class TcpTransport final : public LineTransport {
 public:
  TcpTransport(std::string host, std::uint16_t port, int timeout_ms = 30000);
  ~TcpTransport() override;
  TcpTransport(const TcpTransport&) = delete;
  TcpTransport& operator=(const TcpTransport&) = delete;

  void write_line(std::string_view line) override;
  std::string read_line() override;
  std::string describe() const override;

 private:
  std::string host_;
  std::uint16_t port_;
  int fd_ = -1;
  int timeout_ms_;
  std::string buffer_;
};

/// Parses "stdio:<command line>" or "tcp:<host>:<port>".
std::unique_ptr<LineTransport> open_transport(const std::string& spec, int timeout_ms = 30000);

namespace wire {

std::string encode_fit(std::uint64_t id, std::span<const Vector> xs, std::span<const double> ys);
std::string encode_predict(std::uint64_t id, std::span<const Vector> xs);
std::string encode_ping(std::uint64_t id);

}  // namespace wire

/// Client side of the protocol. Calls are serialized internally.
class WireClient {
 public:
  explicit WireClient(std::unique_ptr<LineTransport> transport);

  void ping();
  void fit(std::span<const Vector> xs, std::span<const double> ys);
  std::vector<double> predict(std::span<const Vector> xs);

  std::uint64_t last_id() const noexcept { return next_id_ - 1; }
  const LineTransport& transport() const noexcept { return *transport_; }

 private:
  /// Sends one request and returns the parsed, validated response text.
  std::string exchange(const std::string& request, std::uint64_t id, const char* op,
                       std::vector<double>* yhat, std::size_t expected);

  std::unique_ptr<LineTransport> transport_;
  std::uint64_t next_id_ = 1;
  std::mutex mutex_;
};

}  // namespace ssearch
