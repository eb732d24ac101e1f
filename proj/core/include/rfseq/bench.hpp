#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rfseq/backend_sim.hpp"
#include "rfseq/client.hpp"
#include "rfseq/components.hpp"
#include "rfseq/errors.hpp"

namespace rfseq::bench {

// ---------------------------------------------------------------------------
// Ideal time

// n_shots * sum_i (T_sequence_i + T_relaxation): the time the qubit is
// actually occupied, the baseline every overhead ratio is measured against.
double ideal_time(std::size_t n_shots, std::span<const double> sequence_durations,
                  double relaxation);

// End of the last pulse.
double sequence_duration(std::span<const Pulse> sequence);

// Sequence duration at every sweep point (one entry without sweepers).
std::vector<double> point_durations(const ExperimentRequest& request);

// ---------------------------------------------------------------------------
// Endpoints

class Endpoint {
 public:
  virtual ~Endpoint() = default;
  // Throws RemoteError for error envelopes, NetworkError for transport failures.
  virtual AcquisitionResult execute(const ExperimentRequest& request) = 0;
};

class TcpEndpoint final : public Endpoint {
 public:
  explicit TcpEndpoint(net::Endpoint server,
                       std::chrono::milliseconds timeout = std::chrono::seconds(120))
      : client_(std::move(server), timeout) {}
  AcquisitionResult execute(const ExperimentRequest& request) override {
    return client_.execute(request);
  }

 private:
  client::Client client_;
};

// Runs the full framing/codec/handler path against an owned backend, no sockets.
class InProcessEndpoint final : public Endpoint {
 public:
  explicit InProcessEndpoint(sim::Backend backend) : backend_(std::move(backend)) {}
  AcquisitionResult execute(const ExperimentRequest& request) override;
  sim::Backend& backend() { return backend_; }

 private:
  sim::Backend backend_;
};

// ---------------------------------------------------------------------------
// Experiment templates

enum class ExperimentKind {
  kResonatorSpectroscopy,
  kQubitSpectroscopy,
  kRabiAmplitude,
  kRabiLength,
  kT1,
  kRamseyDetuned,
  kSingleshot,
  kFluxMap,
};

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view text);
std::span<const ExperimentKind> all_experiment_kinds();

// Whether the template runs as one real-time sweep rather than a client loop.
bool uses_realtime_sweep(ExperimentKind kind);

// Template knobs. sweep_start/sweep_stop are in the unit of the swept
// quantity: Hz for spectroscopies, amplitude for Rabi, seconds of duration or
// delay for RabiLength/T1/Ramsey, volts of bias for FluxMap.
struct ExperimentParams {
  std::size_t points = 101;
  int shots = 4096;
  double relaxation = 300e-6;

  int drive_dac = 0;
  int readout_dac = 1;
  int adc = 0;
  std::optional<int> flux_dac;
  double bias = 0.0;

  double readout_frequency = 5.80025e9;
  double readout_duration = 1e-6;
  double readout_amplitude = 0.5;

  double drive_frequency = 5.0e9;
  double pi_amplitude = 0.5;
  double pi_duration = 40e-9;
  double spectroscopy_amplitude = 0.01;
  double spectroscopy_duration = 2e-6;

  double sweep_start = 0.0;
  double sweep_stop = 1.0;
  double ramsey_detuning = 1e6;

  // FluxMap drive-frequency axis.
  std::size_t secondary_points = 101;
  double secondary_start = 4.0e9;
  double secondary_stop = 5.05e9;
};

// Defaults per kind: 5 us relaxation for spectroscopies, 300 us otherwise.
ExperimentParams default_params(ExperimentKind kind);

// Requests a template sends, in order, with the swept axes they cover.
struct ExperimentPlan {
  std::vector<ExperimentRequest> requests;
  std::vector<std::vector<double>> axes;
};

ExperimentPlan plan_experiment(ExperimentKind kind, const ExperimentParams& params);

struct RunAccounting {
  std::size_t connections = 0;
  std::size_t program_loads = 0;
  double ideal = 0.0;
};

struct Dataset {
  ExperimentKind kind = ExperimentKind::kQubitSpectroscopy;
  std::vector<std::vector<double>> axes;  // outermost first
  std::vector<std::size_t> shape;
  std::vector<double> i;
  std::vector<double> q;
  std::vector<double> magnitude;
  std::vector<double> signal;  // projection on the principal IQ axis
  std::optional<double> fidelity;  // Singleshot only
  RunAccounting accounting;
};

class ExperimentError : public Error {
 public:
  ExperimentError(std::string message, std::size_t point)
      : Error(std::move(message)), point_(point) {}
  std::size_t point() const { return point_; }

 private:
  std::size_t point_;
};

// Throws ExperimentError naming the failing point (request) index.
Dataset run_experiment(ExperimentKind kind, Endpoint& endpoint, const ExperimentParams& params);

// Projection of each (i, q) onto the leading principal axis of the cloud.
std::vector<double> principal_projection(std::span<const double> i, std::span<const double> q);

// 1 - (P(1|0) + P(0|1)) / 2 with a discriminator through the cloud means.
double assignment_fidelity(std::span<const double> i0, std::span<const double> q0,
                           std::span<const double> i1, std::span<const double> q1);

// ---------------------------------------------------------------------------
// Fitting

enum class FitKind { kLorentzian, kExponentialDecay, kSinusoid };

// Parameter order:
//   lorentzian         center, width (FWHM), amplitude, offset
//   exponential_decay  amplitude, decay, offset
//   sinusoid           amplitude, frequency, phase, offset
struct FitResult {
  FitKind kind = FitKind::kLorentzian;
  std::vector<double> parameters;
  std::vector<double> uncertainties;  // infinite where the data cannot pin a parameter
  double residual_norm = 0.0;
  int iterations = 0;
  bool well_determined = true;
};

class FitError : public Error {
 public:
  FitError(std::string message, FitResult best) : Error(std::move(message)), best_(std::move(best)) {}
  const FitResult& best() const { return best_; }

 private:
  FitResult best_;
};

double evaluate_model(FitKind kind, std::span<const double> parameters, double x);

// Levenberg-Marquardt least squares. Needs at least twice as many points as
// parameters; throws FitError with the best iterate when max_iterations runs out.
FitResult fit_model(FitKind kind, std::span<const double> xs, std::span<const double> ys,
                    int max_iterations = 500);

// Readouts of a calibration dataset.
double spectroscopy_peak(const Dataset& dataset);
double estimate_t1(const Dataset& dataset);
double estimate_pi_amplitude(const Dataset& dataset);

// ---------------------------------------------------------------------------
// Scaling

struct ScalingRow {
  ExperimentKind kind = ExperimentKind::kQubitSpectroscopy;
  std::size_t points = 0;
  double wall = 0.0;
  double ideal = 0.0;
  double ratio = 0.0;
  bool operator==(const ScalingRow&) const = default;
};

// Runs the template once per point count. wall is the simulated wall time:
// ideal plus the modelled per-connection and per-program-load overheads.
std::vector<ScalingRow> scaling_report(ExperimentKind kind,
                                       std::span<const std::size_t> point_counts, int shots,
                                       double relaxation, Endpoint& endpoint,
                                       const sim::OverheadModel& overheads,
                                       std::optional<ExperimentParams> base = std::nullopt);

// Columns kind, points, wall_s, ideal_s, ratio; floats in shortest round-trip form.
std::string scaling_csv(std::span<const ScalingRow> rows);
std::vector<ScalingRow> parse_scaling_csv(std::string_view text);

// Two-panel log-log line chart (times and ratio against point count).
std::string scaling_svg(std::span<const ScalingRow> rows);

}  // namespace rfseq::bench
