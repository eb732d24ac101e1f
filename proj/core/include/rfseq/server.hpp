#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rfseq/backend_sim.hpp"
#include "rfseq/components.hpp"
#include "rfseq/net.hpp"
#include "rfseq/schedule.hpp"
#include "rfseq/wire.hpp"

namespace rfseq::server {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 0;
  std::string board;
  std::filesystem::path model_path;
  std::optional<std::uint64_t> seed;  // drawn from std::random_device when absent
  std::string log_level = "info";
  sim::OverheadModel overheads;
  std::chrono::milliseconds read_timeout{30000};
  std::uint64_t max_frame_bytes = 64ull << 20;
};

// Diagnostics for an unusable configuration; empty when serve() may start.
std::vector<std::string> validate_config(const ServerConfig& config);

// Executor table used by dispatch; swappable for instrumentation.
struct Executors {
  std::function<AcquisitionResult(const programs::Schedule&, const Config&, sim::Backend&)>
      sequence;
  std::function<AcquisitionResult(const programs::Schedule&, const Config&, sim::Backend&)> raw;
  std::function<AcquisitionResult(const ExperimentRequest&, const programs::Schedule&,
                                  sim::Backend&)>
      sweeps;

  static Executors standard();
};

// Compiles the request for the backend's board and routes it by operation code.
AcquisitionResult dispatch(const ExperimentRequest& request, sim::Backend& backend,
                           const Executors& executors = Executors::standard());

// One line of the request log.
struct RequestRecord {
  std::uint64_t sequence_number = 0;
  std::optional<OperationCode> operation;
  std::size_t points = 0;
  double hardware_time = 0.0;    // simulated qubit occupancy
  double simulated_wall = 0.0;   // hardware time plus modelled overheads
  double wall_time = 0.0;        // measured handling time
  std::chrono::steady_clock::time_point started;
  std::chrono::steady_clock::time_point finished;
  bool ok = false;
  std::string message;
};

struct HandlerOptions {
  std::uint64_t max_frame_bytes = 64ull << 20;
  Executors executors = Executors::standard();
};

// Reads one frame, decodes, validates, dispatches and writes one framed
// response. Every failure that leaves the sink writable yields an error envelope.
RequestRecord handle_connection(wire::ByteSource& source, wire::ByteSink& sink,
                                sim::Backend& backend, const HandlerOptions& options = {});

struct ServerOptions {
  std::chrono::milliseconds read_timeout{30000};
  std::chrono::milliseconds poll_interval{50};
  std::size_t record_limit = 1 << 16;
  HandlerOptions handler;
};

// Accept loop owning one backend for its whole lifetime. Connections are
// handled strictly one at a time; later clients wait in the listen backlog.
class Server {
 public:
  Server(net::Listener listener, sim::Backend backend, ServerOptions options = {});

  // Blocks until stop() is called.
  void run();
  void stop() { stopping_.store(true); }

  std::uint16_t port() const { return listener_.port(); }
  double clock_phase() const { return backend_.clock_phase(); }
  std::vector<RequestRecord> records() const;
  std::uint64_t handled() const { return handled_.load(); }

 private:
  net::Listener listener_;
  sim::Backend backend_;
  ServerOptions options_;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> handled_{0};
  mutable std::mutex records_mutex_;
  std::deque<RequestRecord> records_;
};

// Builds the backend from the config and runs until *stop becomes true.
// Throws InvalidArgument/NetworkError/DecodeError on startup failure.
void serve(const ServerConfig& config, const std::atomic<bool>& stop);

}  // namespace rfseq::server
