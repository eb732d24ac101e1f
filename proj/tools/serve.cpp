// serve: pulse-sequencer server backed by the simulated controller.

#include <atomic>
#include <csignal>
#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "rfseq/board.hpp"
#include "rfseq/net.hpp"
#include "rfseq/server.hpp"

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pulse-sequencer server with a simulated single-qubit backend"};

  std::string bind = "127.0.0.1:6000";
  rfseq::server::ServerConfig config;
  std::uint64_t seed = 0;
  double read_timeout_s = 30.0;

  app.add_option("--bind", bind, "HOST:PORT to listen on")->required();
  app.add_option("--board", config.board, "Board profile")
      ->required()
      ->check(CLI::IsMember({"ZCU111", "RFSoc4x2", "ZCU216"}));
  app.add_option("--model", config.model_path, "Qubit model JSON")->required()->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "Backend RNG seed (random if absent)");
  app.add_option("--log-level", config.log_level, "trace|debug|info|warn|err|critical|off")
      ->capture_default_str();
  app.add_option("--connection-overhead", config.overheads.connection_overhead,
                 "Modelled seconds per connection")
      ->capture_default_str();
  app.add_option("--load-overhead", config.overheads.program_load_overhead,
                 "Modelled seconds per program load")
      ->capture_default_str();
  app.add_option("--read-timeout", read_timeout_s, "Seconds to wait for a request frame")
      ->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto endpoint = rfseq::net::parse_endpoint(bind);
    config.host = endpoint.host;
    config.port = endpoint.port;
    if (*seed_opt) config.seed = seed;
    config.read_timeout = std::chrono::milliseconds(static_cast<long long>(read_timeout_s * 1000));

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    rfseq::server::serve(config, g_stop);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "serve: %s\n", e.what());
    return 1;
  }
  return 0;
}
