// SPDX-License-Identifier: Apache-2.0
// Ordered, reliable, duplex byte streams carrying the device protocol.
#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace das {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ReadStatus { kData, kTimeout, kClosed };

class ByteStream {
 public:
  virtual ~ByteStream() = default;

  /// Writes all bytes or throws TransportError.
  virtual void write(std::string_view bytes) = 0;

  /// Appends whatever is available to `out`, waiting at most `timeout` for
  /// the first byte. A zero timeout never blocks. Throws TransportError on
  /// failure other than an orderly close.
  virtual ReadStatus read(std::string& out, std::chrono::milliseconds timeout) = 0;

  /// Closes this end; the peer observes kClosed once buffered data is drained.
  virtual void close() = 0;
};

/// Two connected ends of an in-process duplex pipe.
std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_pipe();

/// Stream over a pair of file descriptors (a socket passes the same fd twice).
/// Closes the descriptors on destruction when `owned` is set.
std::unique_ptr<ByteStream> make_fd_stream(int read_fd, int write_fd, bool owned);

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string to_string() const;
};

/// Accepts "host:port" or "tcp://host:port". Throws std::invalid_argument.
Endpoint parse_endpoint(std::string_view text);

/// Throws TransportError when the endpoint is unreachable.
std::unique_ptr<ByteStream> tcp_connect(const Endpoint& endpoint,
                                        std::chrono::milliseconds timeout);

class TcpListener {
 public:
  /// Port 0 picks an ephemeral port. Throws TransportError.
  explicit TcpListener(const Endpoint& endpoint);
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const noexcept { return port_; }

  /// Returns nullptr on timeout or after shutdown().
  std::unique_ptr<ByteStream> accept(std::chrono::milliseconds timeout);

  /// Makes pending and future accept() calls return nullptr. Thread-safe.
  void shutdown() noexcept;

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
  int wake_pipe_[2] = {-1, -1};
};

}  // namespace das
