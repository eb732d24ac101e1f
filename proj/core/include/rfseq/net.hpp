#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "rfseq/wire.hpp"

namespace rfseq::net {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};

// "HOST:PORT"; throws InvalidArgument.
Endpoint parse_endpoint(std::string_view text);

// Owning TCP socket descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;
  ~Socket() { close(); }

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  void close();
  void shutdown_write();
  void set_timeouts(std::chrono::milliseconds receive, std::chrono::milliseconds send);

 private:
  int fd_ = -1;
};

// Blocking stream over a socket. Reads past the receive timeout throw TimeoutError.
class SocketStream final : public wire::ByteSource, public wire::ByteSink {
 public:
  explicit SocketStream(Socket& socket) : socket_(socket) {}
  std::size_t read_some(std::span<std::uint8_t> buffer) override;
  void write_all(std::span<const std::uint8_t> bytes) override;

 private:
  Socket& socket_;
};

class Listener {
 public:
  // Port 0 picks an ephemeral port. Throws NetworkError when binding fails.
  static Listener bind(const std::string& host, std::uint16_t port, int backlog = 128);

  std::uint16_t port() const { return port_; }

  // Waits up to `wait` for a pending connection.
  std::optional<Socket> accept(std::chrono::milliseconds wait);

 private:
  Listener(Socket socket, std::uint16_t port) : socket_(std::move(socket)), port_(port) {}
  Socket socket_;
  std::uint16_t port_ = 0;
};

// Throws NetworkError on refusal, TimeoutError when the connect times out.
Socket connect(const Endpoint& endpoint, std::chrono::milliseconds timeout);

}  // namespace rfseq::net
