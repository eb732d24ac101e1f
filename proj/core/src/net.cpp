#include "rfseq/net.hpp"

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
#include <cstring>

#include <fmt/format.h>

#include "rfseq/errors.hpp"

namespace rfseq::net {

namespace {

std::string errno_text() { return std::strerror(errno); }

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &found);
  if (rc != 0 || found == nullptr) {
    throw NetworkError(fmt::format("cannot resolve {}: {}", host, ::gai_strerror(rc)));
  }
  sockaddr_in addr{};
  std::memcpy(&addr, found->ai_addr, sizeof(addr));
  ::freeaddrinfo(found);
  addr.sin_port = htons(port);
  return addr;
}

timeval to_timeval(std::chrono::milliseconds ms) {
  timeval tv{};
  tv.tv_sec = static_cast<time_t>(ms.count() / 1000);
  tv.tv_usec = static_cast<suseconds_t>((ms.count() % 1000) * 1000);
  return tv;
}

}  // namespace

Endpoint parse_endpoint(std::string_view text) {
  const auto colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0) {
    throw InvalidArgument(fmt::format("expected HOST:PORT, got '{}'", text));
  }
  const std::string_view port_text = text.substr(colon + 1);
  unsigned value = 0;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
  if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || value > 65535) {
    throw InvalidArgument(fmt::format("invalid port in '{}'", text));
  }
  return {std::string(text.substr(0, colon)), static_cast<std::uint16_t>(value)};
}

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
  }
  return *this;
}

void Socket::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void Socket::shutdown_write() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_WR);
}

void Socket::set_timeouts(std::chrono::milliseconds receive, std::chrono::milliseconds send) {
  const timeval rcv = to_timeval(receive);
  const timeval snd = to_timeval(send);
  ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &rcv, sizeof(rcv));
  ::setsockopt(fd_, SOL_SOCKET, SO_SNDTIMEO, &snd, sizeof(snd));
}

std::size_t SocketStream::read_some(std::span<std::uint8_t> buffer) {
  while (true) {
    const ssize_t n = ::recv(socket_.fd(), buffer.data(), buffer.size(), 0);
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno == EINTR) continue;
    if (errno == EAGAIN || errno == EWOULDBLOCK) throw TimeoutError("read timed out");
    if (errno == ECONNRESET) return 0;
    throw NetworkError("recv failed: " + errno_text());
  }
}

void SocketStream::write_all(std::span<const std::uint8_t> bytes) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(socket_.fd(), bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n > 0) {
      sent += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) throw TimeoutError("write timed out");
    throw NetworkError("send failed: " + errno_text());
  }
}

Listener Listener::bind(const std::string& host, std::uint16_t port, int backlog) {
  Socket socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!socket.valid()) throw NetworkError("socket failed: " + errno_text());
  const int one = 1;
  ::setsockopt(socket.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  const sockaddr_in addr = resolve(host, port);
  if (::bind(socket.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw NetworkError(fmt::format("cannot bind {}:{}: {}", host, port, errno_text()));
  }
  if (::listen(socket.fd(), backlog) != 0) {
    throw NetworkError("listen failed: " + errno_text());
  }
  sockaddr_in bound{};
  socklen_t len = sizeof(bound);
  ::getsockname(socket.fd(), reinterpret_cast<sockaddr*>(&bound), &len);
  return Listener(std::move(socket), ntohs(bound.sin_port));
}

std::optional<Socket> Listener::accept(std::chrono::milliseconds wait) {
  pollfd pfd{socket_.fd(), POLLIN, 0};
  const int ready = ::poll(&pfd, 1, static_cast<int>(wait.count()));
  if (ready <= 0) return std::nullopt;
  const int fd = ::accept4(socket_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) return std::nullopt;
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return Socket(fd);
}

Socket connect(const Endpoint& endpoint, std::chrono::milliseconds timeout) {
  Socket socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
  if (!socket.valid()) throw NetworkError("socket failed: " + errno_text());
  const sockaddr_in addr = resolve(endpoint.host, endpoint.port);

  const int flags = ::fcntl(socket.fd(), F_GETFL, 0);
  ::fcntl(socket.fd(), F_SETFL, flags | O_NONBLOCK);
  int rc = ::connect(socket.fd(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr));
  if (rc != 0 && errno == EINPROGRESS) {
    pollfd pfd{socket.fd(), POLLOUT, 0};
    rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc == 0) {
      throw TimeoutError(fmt::format("connect to {}:{} timed out", endpoint.host, endpoint.port));
    }
    int err = 0;
    socklen_t len = sizeof(err);
    ::getsockopt(socket.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
    if (rc < 0 || err != 0) {
      errno = err;
      rc = -1;
    } else {
      rc = 0;
    }
  }
  if (rc != 0) {
    throw NetworkError(
        fmt::format("cannot connect to {}:{}: {}", endpoint.host, endpoint.port, errno_text()));
  }
  ::fcntl(socket.fd(), F_SETFL, flags);
  const int one = 1;
  ::setsockopt(socket.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  socket.set_timeouts(timeout, timeout);
  return socket;
}

}  // namespace rfseq::net
