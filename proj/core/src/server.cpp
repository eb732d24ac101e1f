#include "rfseq/server.hpp"

#include <array>
#include <random>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "rfseq/errors.hpp"
#include "rfseq/programs.hpp"

namespace rfseq::server {

std::vector<std::string> validate_config(const ServerConfig& config) {
  std::vector<std::string> out;
  if (config.port < 1 || config.port > 65535) {
    out.push_back(fmt::format("port must be in 1..65535, got {}", config.port));
  }
  if (!sim::find_board_profile(config.board)) {
    out.push_back(fmt::format("unknown board '{}' (expected ZCU111, RFSoc4x2 or ZCU216)",
                              config.board));
  }
  if (config.model_path.empty()) out.emplace_back("model path is required");
  if (config.overheads.connection_overhead < 0.0 || config.overheads.program_load_overhead < 0.0) {
    out.emplace_back("overheads must be >= 0");
  }
  if (config.read_timeout.count() <= 0) out.emplace_back("read timeout must be > 0");
  if (spdlog::level::from_str(config.log_level) == spdlog::level::off &&
      config.log_level != "off") {
    out.push_back(fmt::format("unknown log level '{}'", config.log_level));
  }
  return out;
}

Executors Executors::standard() {
  return {programs::execute_sequence, programs::execute_raw, programs::execute_sweeps};
}

AcquisitionResult dispatch(const ExperimentRequest& request, sim::Backend& backend,
                           const Executors& executors) {
  const bool has_sweepers = !request.sweepers.empty();
  switch (request.operation_code) {
    case OperationCode::kExecutePulseSequence: {
      if (has_sweepers) throw ExecutionError("sequence operation takes no sweepers");
      const auto schedule = programs::compile(request, backend.profile());
      return executors.sequence(schedule, request.cfg, backend);
    }
    case OperationCode::kExecutePulseSequenceRaw: {
      if (has_sweepers) throw ExecutionError("raw operation takes no sweepers");
      const auto schedule = programs::compile(request, backend.profile());
      return executors.raw(schedule, request.cfg, backend);
    }
    case OperationCode::kExecuteSweeps: {
      if (!has_sweepers) throw ExecutionError("sweeps operation requires sweepers");
      const auto schedule = programs::compile(request, backend.profile());
      return executors.sweeps(request, schedule, backend);
    }
  }
  throw ExecutionError("unknown operation code");
}

namespace {

std::size_t point_count(const ExperimentRequest& r) {
  std::size_t points = 1;
  for (const auto& s : r.sweepers) points *= static_cast<std::size_t>(std::max(s.expts, 0));
  return points;
}

// Closing with unread input makes the kernel send RST, which can destroy the
// reply still in flight. Half-close, then discard what the peer sends for a
// bounded time.
void linger_close(net::Socket& socket) {
  constexpr std::size_t kMaxDrain = 1 << 20;
  try {
    socket.shutdown_write();
    socket.set_timeouts(std::chrono::milliseconds(100), std::chrono::milliseconds(100));
    net::SocketStream stream(socket);
    std::array<std::uint8_t, 4096> sink{};
    std::size_t drained = 0;
    while (drained < kMaxDrain) {
      const std::size_t n = stream.read_some(sink);
      if (n == 0) break;
      drained += n;
    }
  } catch (const Error&) {
  }
  socket.close();
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += "; ";
    out += item;
  }
  return out;
}

}  // namespace

RequestRecord handle_connection(wire::ByteSource& source, wire::ByteSink& sink,
                                sim::Backend& backend, const HandlerOptions& options) {
  RequestRecord record;
  record.started = std::chrono::steady_clock::now();
  const double hardware_before = backend.hardware_time();
  const std::size_t loads_before = backend.program_loads();

  wire::ResponseEnvelope response = wire::ErrorReply{};
  bool writable = true;
  try {
    const wire::Bytes payload = wire::frame_read(source, options.max_frame_bytes);
    ExperimentRequest request;
    try {
      request = wire::decode_request(payload);
    } catch (const DecodeError& e) {
      throw DecodeError(std::string("malformed request: ") + e.what());
    }
    record.operation = request.operation_code;
    record.points = point_count(request);

    const auto violations = validate_request(request, backend.profile());
    if (!violations.empty()) throw InvalidArgument("invalid request: " + join(violations));
    response = dispatch(request, backend, options.executors);
    record.ok = true;
  } catch (const TimeoutError& e) {
    record.message = e.what();
    writable = false;
  } catch (const NetworkError& e) {
    record.message = e.what();
    writable = false;
  } catch (const Error& e) {
    record.message = e.what();
  } catch (const std::exception& e) {
    record.message = std::string("internal error: ") + e.what();
  }
  if (!record.ok) response = wire::ErrorReply{record.message};

  if (writable) {
    try {
      const wire::Bytes body = wire::encode_results(response);
      sink.write_all(wire::frame_write(body));
    } catch (const std::exception& e) {
      record.ok = false;
      record.message = std::string("response not delivered: ") + e.what();
    }
  }

  record.finished = std::chrono::steady_clock::now();
  record.hardware_time = backend.hardware_time() - hardware_before;
  record.simulated_wall = sim::simulated_wall_time(backend.program_loads() - loads_before, 1,
                                                   record.hardware_time, backend.overheads());
  record.wall_time = std::chrono::duration<double>(record.finished - record.started).count();
  return record;
}

Server::Server(net::Listener listener, sim::Backend backend, ServerOptions options)
    : listener_(std::move(listener)), backend_(std::move(backend)), options_(std::move(options)) {}

void Server::run() {
  spdlog::info("listening on port {} (board {}, clock phase {:.6f} rad)", port(),
               backend_.profile().name, backend_.clock_phase());
  while (!stopping_.load()) {
    std::optional<net::Socket> connection;
    try {
      connection = listener_.accept(options_.poll_interval);
    } catch (const NetworkError& e) {
      spdlog::warn("accept failed: {}", e.what());
      continue;
    }
    if (!connection) continue;

    RequestRecord record;
    try {
      connection->set_timeouts(options_.read_timeout, options_.read_timeout);
      net::SocketStream stream(*connection);
      record = handle_connection(stream, stream, backend_, options_.handler);
    } catch (const std::exception& e) {
      record.message = e.what();
    }
    record.sequence_number = handled_.load();
    linger_close(*connection);

    const std::string op =
        record.operation ? std::string(to_string(*record.operation)) : std::string("-");
    if (record.ok) {
      spdlog::info("request={} op={} points={} hw_time={:.6g}s sim_wall={:.6g}s wall={:.6g}s ok",
                   record.sequence_number, op, record.points, record.hardware_time,
                   record.simulated_wall, record.wall_time);
    } else {
      spdlog::warn("request={} op={} points={} wall={:.6g}s error: {}", record.sequence_number,
                   op, record.points, record.wall_time, record.message);
    }
    {
      std::lock_guard lock(records_mutex_);
      records_.push_back(std::move(record));
      while (records_.size() > options_.record_limit) records_.pop_front();
    }
    handled_.fetch_add(1);
  }
}

std::vector<RequestRecord> Server::records() const {
  std::lock_guard lock(records_mutex_);
  return {records_.begin(), records_.end()};
}

void serve(const ServerConfig& config, const std::atomic<bool>& stop) {
  const auto problems = validate_config(config);
  if (!problems.empty()) throw InvalidArgument("invalid server configuration: " + join(problems));
  spdlog::set_level(spdlog::level::from_str(config.log_level));

  const sim::QubitModel model = sim::load_model(config.model_path);
  const std::uint64_t seed = config.seed ? *config.seed : std::random_device{}();
  sim::Backend backend(model, sim::board_profile(config.board), seed, config.overheads);
  auto listener = net::Listener::bind(config.host, static_cast<std::uint16_t>(config.port));

  ServerOptions options;
  options.read_timeout = config.read_timeout;
  options.handler.max_frame_bytes = config.max_frame_bytes;
  Server server(std::move(listener), std::move(backend), options);

  std::thread watcher([&] {
    while (!stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
    server.stop();
  });
  server.run();
  watcher.join();
}

}  // namespace rfseq::server
