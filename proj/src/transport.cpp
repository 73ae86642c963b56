// SPDX-License-Identifier: Apache-2.0
#include "das/transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <condition_variable>
#include <cstring>
#include <mutex>

namespace das {
namespace {

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

struct PipeChannel {
  std::mutex mutex;
  std::condition_variable ready;
  std::string data;
  bool closed = false;
};

class PipeEnd final : public ByteStream {
 public:
  PipeEnd(std::shared_ptr<PipeChannel> in, std::shared_ptr<PipeChannel> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~PipeEnd() override { close(); }

  void write(std::string_view bytes) override {
    {
      std::lock_guard lock(out_->mutex);
      if (out_->closed) throw TransportError("pipe closed");
      out_->data.append(bytes);
    }
    out_->ready.notify_all();
  }

  ReadStatus read(std::string& out, std::chrono::milliseconds timeout) override {
    std::unique_lock lock(in_->mutex);
    in_->ready.wait_for(lock, timeout, [&] { return !in_->data.empty() || in_->closed; });
    if (!in_->data.empty()) {
      out.append(in_->data);
      in_->data.clear();
      return ReadStatus::kData;
    }
    return in_->closed ? ReadStatus::kClosed : ReadStatus::kTimeout;
  }

  void close() override {
    for (auto* channel : {in_.get(), out_.get()}) {
      {
        std::lock_guard lock(channel->mutex);
        channel->closed = true;
      }
      channel->ready.notify_all();
    }
  }

 private:
  std::shared_ptr<PipeChannel> in_;
  std::shared_ptr<PipeChannel> out_;
};

class FdStream final : public ByteStream {
 public:
  FdStream(int read_fd, int write_fd, bool owned)
      : read_fd_(read_fd), write_fd_(write_fd), owned_(owned) {}
  ~FdStream() override { close(); }

  void write(std::string_view bytes) override {
    if (write_fd_ < 0) throw TransportError("stream closed");
    while (!bytes.empty()) {
      ssize_t n = ::send(write_fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL);
      if (n < 0 && errno == ENOTSOCK) n = ::write(write_fd_, bytes.data(), bytes.size());
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(errno_text("write"));
      }
      bytes.remove_prefix(static_cast<std::size_t>(n));
    }
  }

  ReadStatus read(std::string& out, std::chrono::milliseconds timeout) override {
    if (read_fd_ < 0) return ReadStatus::kClosed;
    pollfd pfd{read_fd_, POLLIN, 0};
    int rc;
    do {
      rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    } while (rc < 0 && errno == EINTR);
    if (rc < 0) throw TransportError(errno_text("poll"));
    if (rc == 0) return ReadStatus::kTimeout;

    char buf[4096];
    ssize_t n;
    do {
      n = ::read(read_fd_, buf, sizeof buf);
    } while (n < 0 && errno == EINTR);
    if (n < 0) {
      if (errno == ECONNRESET) return ReadStatus::kClosed;
      throw TransportError(errno_text("read"));
    }
    if (n == 0) return ReadStatus::kClosed;
    out.append(buf, static_cast<std::size_t>(n));
    return ReadStatus::kData;
  }

  void close() override {
    if (owned_) {
      if (read_fd_ >= 0) ::close(read_fd_);
      if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    }
    read_fd_ = write_fd_ = -1;
  }

 private:
  int read_fd_;
  int write_fd_;
  bool owned_;
};

}  // namespace

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>> make_pipe() {
  auto a_to_b = std::make_shared<PipeChannel>();
  auto b_to_a = std::make_shared<PipeChannel>();
  return {std::make_unique<PipeEnd>(b_to_a, a_to_b), std::make_unique<PipeEnd>(a_to_b, b_to_a)};
}

std::unique_ptr<ByteStream> make_fd_stream(int read_fd, int write_fd, bool owned) {
  return std::make_unique<FdStream>(read_fd, write_fd, owned);
}

std::string Endpoint::to_string() const { return host + ":" + std::to_string(port); }

Endpoint parse_endpoint(std::string_view text) {
  if (text.starts_with("tcp://")) text.remove_prefix(6);
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
    throw std::invalid_argument("endpoint must be host:port, got '" + std::string(text) + "'");
  }
  const auto port_text = text.substr(colon + 1);
  unsigned port = 0;
  auto [end, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (ec != std::errc{} || end != port_text.data() + port_text.size() || port > 65535) {
    throw std::invalid_argument("invalid port in endpoint '" + std::string(text) + "'");
  }
  return Endpoint{std::string(text.substr(0, colon)), static_cast<std::uint16_t>(port)};
}

std::unique_ptr<ByteStream> tcp_connect(const Endpoint& endpoint,
                                        std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const auto port = std::to_string(endpoint.port);
  if (int rc = ::getaddrinfo(endpoint.host.c_str(), port.c_str(), &hints, &result); rc != 0) {
    throw TransportError("cannot resolve " + endpoint.to_string() + ": " + gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(result, &::freeaddrinfo);

  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw TransportError(errno_text("socket"));
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);

  int rc = ::connect(fd, result->ai_addr, result->ai_addrlen);
  if (rc < 0 && errno == EINPROGRESS) {
    pollfd pfd{fd, POLLOUT, 0};
    rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc == 0) {
      ::close(fd);
      throw TransportError("connect to " + endpoint.to_string() + " timed out");
    }
    int err = 0;
    socklen_t len = sizeof err;
    ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
    if (err != 0) {
      ::close(fd);
      throw TransportError("connect to " + endpoint.to_string() + ": " + std::strerror(err));
    }
  } else if (rc < 0) {
    const std::string message = errno_text("connect");
    ::close(fd);
    throw TransportError(message + " (" + endpoint.to_string() + ")");
  }
  ::fcntl(fd, F_SETFL, flags);
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return make_fd_stream(fd, fd, true);
}

TcpListener::TcpListener(const Endpoint& endpoint) {
  fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw TransportError(errno_text("socket"));
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(endpoint.port);
  const std::string host = endpoint.host == "localhost" ? "127.0.0.1" : endpoint.host;
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    throw TransportError("listen address must be an IPv4 literal: " + endpoint.host);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 ||
      ::listen(fd_, 4) < 0) {
    const std::string message = errno_text("bind/listen");
    ::close(fd_);
    throw TransportError(message + " (" + endpoint.to_string() + ")");
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  if (::pipe2(wake_pipe_, O_CLOEXEC) < 0) {
    ::close(fd_);
    throw TransportError(errno_text("pipe"));
  }
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
  for (int fd : wake_pipe_) {
    if (fd >= 0) ::close(fd);
  }
}

std::unique_ptr<ByteStream> TcpListener::accept(std::chrono::milliseconds timeout) {
  pollfd fds[2] = {{fd_, POLLIN, 0}, {wake_pipe_[0], POLLIN, 0}};
  int rc;
  do {
    rc = ::poll(fds, 2, static_cast<int>(timeout.count()));
  } while (rc < 0 && errno == EINTR);
  if (rc <= 0 || (fds[1].revents & POLLIN)) return nullptr;
  const int client = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
  if (client < 0) return nullptr;
  const int one = 1;
  ::setsockopt(client, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return make_fd_stream(client, client, true);
}

void TcpListener::shutdown() noexcept {
  const char byte = 0;
  [[maybe_unused]] auto n = ::write(wake_pipe_[1], &byte, 1);
}

}  // namespace das
