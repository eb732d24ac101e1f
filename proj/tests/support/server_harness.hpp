#pragma once

#include <chrono>
#include <memory>
#include <random>
#include <thread>

#include "rfseq/net.hpp"
#include "rfseq/server.hpp"
#include "rfseq/wire.hpp"

namespace rfseq::testing {

// Server on an ephemeral loopback port, run on a background thread.
class RunningServer {
 public:
  explicit RunningServer(sim::Backend backend, server::ServerOptions options = {})
      : server_(std::make_unique<server::Server>(net::Listener::bind("127.0.0.1", 0),
                                                 std::move(backend), std::move(options))),
        thread_([this] { server_->run(); }) {}

  ~RunningServer() {
    server_->stop();
    thread_.join();
  }

  RunningServer(const RunningServer&) = delete;
  RunningServer& operator=(const RunningServer&) = delete;

  net::Endpoint endpoint() const { return {"127.0.0.1", server_->port()}; }
  server::Server& server() { return *server_; }

  // Records are appended after the reply is sent; wait for the bookkeeping.
  bool wait_for_handled(std::uint64_t n, std::chrono::milliseconds limit = std::chrono::seconds(10)) {
    const auto deadline = std::chrono::steady_clock::now() + limit;
    while (server_->handled() < n) {
      if (std::chrono::steady_clock::now() > deadline) return false;
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    return true;
  }

 private:
  std::unique_ptr<server::Server> server_;
  std::thread thread_;
};

// Writes arbitrary bytes, half-closes, and returns whatever comes back.
inline wire::Bytes raw_exchange(const net::Endpoint& endpoint, std::span<const std::uint8_t> bytes,
                                std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
  net::Socket socket = net::connect(endpoint, timeout);
  socket.set_timeouts(timeout, timeout);
  net::SocketStream stream(socket);
  if (!bytes.empty()) stream.write_all(bytes);
  socket.shutdown_write();
  wire::Bytes reply;
  std::uint8_t buffer[4096];
  while (true) {
    const std::size_t n = stream.read_some(buffer);
    if (n == 0) break;
    reply.insert(reply.end(), buffer, buffer + n);
  }
  return reply;
}

// Hostile payloads: random bytes, lying headers, truncated frames, mutated requests.
class PayloadFuzzer {
 public:
  PayloadFuzzer(std::uint64_t seed, wire::Bytes valid_frame)
      : rng_(seed), valid_(std::move(valid_frame)) {}

  wire::Bytes next() {
    std::uniform_int_distribution<int> byte(0, 255);
    auto random_bytes = [&](std::size_t n) {
      wire::Bytes b(n);
      for (auto& x : b) x = static_cast<std::uint8_t>(byte(rng_));
      return b;
    };
    switch (pick(7)) {
      case 0:  // pure noise, any length
        return random_bytes(pick(64));
      case 1: {  // honest header, random body
        const auto body = random_bytes(1 + pick(256));
        return wire::frame_write(body);
      }
      case 2: {  // header promising more than is sent
        auto b = wire::frame_write(random_bytes(1 + pick(32)));
        b[2] = static_cast<std::uint8_t>(byte(rng_));
        return b;
      }
      case 3: {  // header only, possibly huge
        wire::Bytes b = random_bytes(4);
        return b;
      }
      case 4: {  // valid request with flipped bytes
        wire::Bytes b = valid_;
        const auto flips = 1 + pick(6);
        for (std::size_t k = 0; k < flips; ++k) {
          b[4 + pick(b.size() - 4)] = static_cast<std::uint8_t>(byte(rng_));
        }
        return b;
      }
      case 5: {  // valid request cut short
        wire::Bytes b = valid_;
        b.resize(pick(b.size()));
        return b;
      }
      default: {  // JSON of the wrong shape
        static const char* docs[] = {"null", "[]", "{}", "1e999", "\"x\"", "{\"operation_code\":1}",
                                     "{\"operation_code\":\"EXECUTE_SWEEPS\"}", "{{{{", "\xff\xfe"};
        const std::string_view d = docs[pick(std::size(docs))];
        return wire::frame_write(wire::to_bytes(d));
      }
    }
  }

 private:
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  std::mt19937_64 rng_;
  wire::Bytes valid_;
};

}  // namespace rfseq::testing
