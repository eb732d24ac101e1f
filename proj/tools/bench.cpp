// bench: calibration templates and the overhead scaling study.

#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "rfseq/backend_sim.hpp"
#include "rfseq/bench.hpp"
#include "rfseq/board.hpp"
#include "rfseq/net.hpp"

namespace {

using namespace rfseq;

struct BackendOptions {
  std::string server;  // HOST:PORT; empty selects the in-process backend
  std::string board = "ZCU216";
  std::string model;
  std::uint64_t seed = 1;
  sim::OverheadModel overheads;
};

void add_backend_options(CLI::App* cmd, BackendOptions& o) {
  cmd->add_option("--server", o.server, "HOST:PORT of a running server");
  cmd->add_option("--board", o.board, "Board for the in-process backend")->capture_default_str();
  cmd->add_option("--model", o.model, "Model JSON for the in-process backend");
  cmd->add_option("--seed", o.seed, "Seed for the in-process backend")->capture_default_str();
  cmd->add_option("--connection-overhead", o.overheads.connection_overhead)->capture_default_str();
  cmd->add_option("--load-overhead", o.overheads.program_load_overhead)->capture_default_str();
}

std::unique_ptr<bench::Endpoint> make_endpoint(const BackendOptions& o) {
  if (!o.server.empty()) {
    return std::make_unique<bench::TcpEndpoint>(net::parse_endpoint(o.server));
  }
  const sim::QubitModel model = o.model.empty() ? sim::QubitModel{} : sim::load_model(o.model);
  return std::make_unique<bench::InProcessEndpoint>(
      sim::Backend(model, sim::board_profile(o.board), o.seed, o.overheads));
}

bench::ExperimentKind kind_from(const std::string& text) {
  const auto kind = bench::parse_experiment_kind(text);
  if (!kind) throw InvalidArgument(fmt::format("unknown kind: {}", text));
  return *kind;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument(fmt::format("cannot write {}", path));
  out << text;
}

std::string dataset_csv(const bench::Dataset& ds) {
  std::string out;
  const bool two_d = ds.axes.size() == 2;
  out += two_d ? "x0,x1,i,q,magnitude,signal\n" : "x,i,q,magnitude,signal\n";
  for (std::size_t k = 0; k < ds.i.size(); ++k) {
    if (two_d) {
      const std::size_t inner = ds.axes[1].size();
      out += fmt::format("{},{},", ds.axes[0][k / inner], ds.axes[1][k % inner]);
    } else if (ds.kind == bench::ExperimentKind::kSingleshot) {
      out += fmt::format("{},", k < ds.shape[1] ? 0 : 1);
    } else {
      out += fmt::format("{},", ds.axes[0][k]);
    }
    out += fmt::format("{},{},{},{}\n", ds.i[k], ds.q[k], ds.magnitude[k], ds.signal[k]);
  }
  return out;
}

void report_analysis(const bench::Dataset& ds) {
  using bench::ExperimentKind;
  try {
    switch (ds.kind) {
      case ExperimentKind::kResonatorSpectroscopy:
      case ExperimentKind::kQubitSpectroscopy:
        fmt::print("peak: {:.9g} Hz\n", bench::spectroscopy_peak(ds));
        break;
      case ExperimentKind::kRabiAmplitude:
        fmt::print("pi amplitude: {:.6g}\n", bench::estimate_pi_amplitude(ds));
        break;
      case ExperimentKind::kT1:
        fmt::print("T1: {:.6g} s\n", bench::estimate_t1(ds));
        break;
      case ExperimentKind::kSingleshot:
        fmt::print("assignment fidelity: {:.4f}\n", *ds.fidelity);
        break;
      default:
        break;
    }
  } catch (const bench::FitError& e) {
    fmt::print(stderr, "fit failed: {}\n", e.what());
  }
}

std::vector<std::size_t> parse_counts(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(item, &used);
    if (used != item.size() || v == 0) throw InvalidArgument(fmt::format("bad point count: {}", item));
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw InvalidArgument("no point counts given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibration templates and execution-time scaling"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Run one template and report wall/ideal time");
  BackendOptions run_backend;
  std::string run_kind, run_out, run_data;
  std::size_t run_points = 0;
  int run_shots = 4096;
  double run_relax = -1.0;
  run->add_option("--kind", run_kind, "Template name")->required();
  run->add_option("--points", run_points, "Sweep points (template default if absent)");
  run->add_option("--shots", run_shots, "Shots per point")->capture_default_str();
  run->add_option("--relax", run_relax, "Relaxation seconds (template default if absent)");
  run->add_option("--out", run_out, "Scaling-row CSV output");
  run->add_option("--data", run_data, "Dataset CSV output");
  add_backend_options(run, run_backend);

  // scaling
  auto* scaling = app.add_subcommand("scaling", "Wall/ideal ratio against sweep size");
  BackendOptions sc_backend;
  std::string sc_kind, sc_points = "1,10,100,1000,10000", sc_out, sc_plot;
  int sc_shots = 4096;
  double sc_relax = -1.0;
  scaling->add_option("--kind", sc_kind, "Template name")->required();
  scaling->add_option("--points", sc_points, "Comma-separated point counts")->capture_default_str();
  scaling->add_option("--shots", sc_shots, "Shots per point")->capture_default_str();
  scaling->add_option("--relax", sc_relax, "Relaxation seconds (template default if absent)");
  scaling->add_option("--out", sc_out, "CSV output (stdout if absent)");
  scaling->add_option("--plot", sc_plot, "SVG output");
  add_backend_options(scaling, sc_backend);

  // ideal
  auto* ideal = app.add_subcommand("ideal", "Ideal execution time for given sequence durations");
  std::size_t id_shots = 0;
  double id_relax = 0.0;
  std::string id_file;
  ideal->add_option("--shots", id_shots, "Shots")->required();
  ideal->add_option("--relax", id_relax, "Relaxation seconds")->required();
  ideal->add_option("--durations", id_file, "File with one sequence duration per line")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto kind = kind_from(run_kind);
      auto params = bench::default_params(kind);
      if (run_points > 0) params.points = run_points;
      params.shots = run_shots;
      if (run_relax >= 0.0) params.relaxation = run_relax;
      auto endpoint = make_endpoint(run_backend);
      const auto ds = bench::run_experiment(kind, *endpoint, params);
      bench::ScalingRow row{kind, params.points, 0.0, ds.accounting.ideal, 0.0};
      row.wall = sim::simulated_wall_time(ds.accounting.program_loads, ds.accounting.connections,
                                          ds.accounting.ideal, run_backend.overheads);
      row.ratio = row.wall / row.ideal;
      fmt::print("{} points={} wall={:.6g}s ideal={:.6g}s ratio={:.6g}\n", bench::to_string(kind),
                 row.points, row.wall, row.ideal, row.ratio);
      report_analysis(ds);
      const std::vector<bench::ScalingRow> rows{row};
      if (!run_out.empty()) write_file(run_out, bench::scaling_csv(rows));
      if (!run_data.empty()) write_file(run_data, dataset_csv(ds));
    } else if (*scaling) {
      const auto kind = kind_from(sc_kind);
      const auto counts = parse_counts(sc_points);
      auto endpoint = make_endpoint(sc_backend);
      const double relax = sc_relax >= 0.0 ? sc_relax : bench::default_params(kind).relaxation;
      const auto rows = bench::scaling_report(kind, counts, sc_shots, relax, *endpoint,
                                              sc_backend.overheads);
      const auto csv = bench::scaling_csv(rows);
      if (sc_out.empty()) {
        fmt::print("{}", csv);
      } else {
        write_file(sc_out, csv);
      }
      if (!sc_plot.empty()) write_file(sc_plot, bench::scaling_svg(rows));
    } else if (*ideal) {
      std::ifstream in(id_file);
      std::vector<double> durations;
      std::string line;
      while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::size_t used = 0;
        durations.push_back(std::stod(line.substr(first), &used));
      }
      fmt::print("{}\n", bench::ideal_time(id_shots, durations, id_relax));
    }
  } catch (const std::exception& e) {
    fmt::print(stderr, "bench: {}\n", e.what());
    return 1;
  }
  return 0;
}
