#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rfseq/board.hpp"

namespace rfseq {

// Units everywhere: Hz, seconds, radians, amplitude as a fraction of DAC full
// scale. Conversion to converter ticks happens in programs::compile.

struct Rectangular {
  bool operator==(const Rectangular&) const = default;
};

// Sigma in samples is n / rel_sigma for an n-sample pulse.
struct Gaussian {
  double rel_sigma = 5.0;
  bool operator==(const Gaussian&) const = default;
};

// Gaussian in-phase envelope with a beta-scaled derivative in quadrature.
struct Drag {
  double rel_sigma = 5.0;
  double beta = 0.0;
  bool operator==(const Drag&) const = default;
};

struct Arbitrary {
  std::vector<double> i_samples;
  std::vector<double> q_samples;
  bool operator==(const Arbitrary&) const = default;
};

using PulseShape = std::variant<Rectangular, Gaussian, Drag, Arbitrary>;

enum class PulseKind { kDrive, kReadout, kFlux };

struct Pulse {
  PulseKind kind = PulseKind::kDrive;
  PulseShape shape = Rectangular{};
  double frequency = 0.0;
  double amplitude = 0.0;
  double relative_phase = 0.0;
  double start = 0.0;  // absolute, from the sequence origin
  double duration = 0.0;
  int dac = 0;
  std::optional<int> adc;  // present iff kind == kReadout
  std::string name;

  double end() const { return start + duration; }
  bool operator==(const Pulse&) const = default;
};

struct Config {
  int reps = 1;
  int soft_avgs = 1;
  double repetition_duration = 0.0;
  bool average = true;

  int shots() const { return reps * soft_avgs; }
  bool operator==(const Config&) const = default;
};

struct Qubit {
  std::optional<double> bias;
  std::optional<int> dac;  // flux line
  bool operator==(const Qubit&) const = default;
};

enum class Parameter { kFrequency, kAmplitude, kRelativePhase, kStart, kDuration, kBias };

// One sweeper updates all of its parameters together; several sweepers nest,
// sweeper 0 outermost.
struct Sweeper {
  std::vector<Parameter> parameters;
  std::vector<int> indexes;  // pulse index, or qubit index for kBias
  std::vector<double> starts;
  std::vector<double> stops;
  int expts = 1;
  bool operator==(const Sweeper&) const = default;
};

enum class OperationCode { kExecutePulseSequence, kExecutePulseSequenceRaw, kExecuteSweeps };

struct ExperimentRequest {
  OperationCode operation_code = OperationCode::kExecutePulseSequence;
  Config cfg;
  std::vector<Pulse> sequence;
  std::vector<Qubit> qubits;
  std::vector<Sweeper> sweepers;
  bool operator==(const ExperimentRequest&) const = default;
};

// Row-major i/q data with a shared shape. Shapes per mode:
//   sequence, averaged     [n_readouts]
//   sequence, singleshot   [n_readouts, reps]
//   raw                    [n_readouts, window_samples]
//   sweeps, averaged       [n_readouts, points]
//   sweeps, singleshot     [n_readouts, points, reps]
struct AcquisitionResult {
  std::vector<std::size_t> shape;
  std::vector<double> i;
  std::vector<double> q;

  std::size_t element_count() const;
  bool operator==(const AcquisitionResult&) const = default;
};

// Wire/display names.
std::string_view to_string(PulseKind kind);
std::string_view to_string(Parameter parameter);  // "frequency", "amplitude", ...
std::string_view to_string(OperationCode code);   // "EXECUTE_PULSE_SEQUENCE", ...
std::string_view display_name(Parameter parameter);  // "Frequency", "RelativePhase", ...
std::optional<PulseKind> parse_pulse_kind(std::string_view text);
std::optional<Parameter> parse_parameter(std::string_view text);
std::optional<OperationCode> parse_operation_code(std::string_view text);

struct IqSamples {
  std::vector<double> i;
  std::vector<double> q;
};

// Samples of the pulse envelope at sampling_rate. n = round(duration * rate);
// throws InvalidArgument when n < 2.
IqSamples envelope_samples(const PulseShape& shape, double amplitude, double duration,
                           double sampling_rate);

// Number of samples a pulse of this duration occupies (round half to even).
long long sample_count(double duration, double sampling_rate);

// Endpoint-inclusive linear values, one array per swept parameter.
std::vector<std::vector<double>> sweeper_values(const Sweeper& sweeper);

struct ParameterUpdate {
  Parameter parameter = Parameter::kAmplitude;
  int index = 0;
  double value = 0.0;
  bool operator==(const ParameterUpdate&) const = default;
};

using Assignment = std::vector<ParameterUpdate>;

struct SweepGrid {
  std::vector<Assignment> assignments;
  std::vector<std::size_t> shape;
};

// Cartesian product, sweeper 0 outermost. No sweepers gives one empty assignment.
SweepGrid sweep_grid(std::span<const Sweeper> sweepers);

// Real-time sweeps run inside the hardware loop for drive frequency, amplitude,
// relative phase, start and bias. Duration and readout frequency are rejected.
bool is_realtime_sweepable(Parameter parameter, const Pulse* target);

// Every problem with the request as one human-readable line; empty when valid.
std::vector<std::string> validate_request(const ExperimentRequest& request,
                                          const sim::BoardProfile& profile);

}  // namespace rfseq
