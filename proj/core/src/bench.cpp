#include "rfseq/bench.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "rfseq/programs.hpp"
#include "rfseq/server.hpp"
#include "rfseq/wire.hpp"

namespace rfseq::bench {

double ideal_time(std::size_t n_shots, std::span<const double> sequence_durations,
                  double relaxation) {
  if (relaxation < 0.0) throw InvalidArgument("relaxation must be non-negative");
  // Neumaier summation keeps 10^4-point sums exact to the last few ulps.
  double sum = 0.0, carry = 0.0;
  for (double d : sequence_durations) {
    if (d < 0.0) throw InvalidArgument("sequence duration must be non-negative");
    const double term = d + relaxation;
    const double t = sum + term;
    carry += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
    sum = t;
  }
  return static_cast<double>(n_shots) * (sum + carry);
}

double sequence_duration(std::span<const Pulse> sequence) {
  double end = 0.0;
  for (const auto& p : sequence) end = std::max(end, p.end());
  return end;
}

std::vector<double> point_durations(const ExperimentRequest& request) {
  if (request.sweepers.empty()) return {sequence_duration(request.sequence)};
  const SweepGrid grid = sweep_grid(request.sweepers);
  std::vector<double> out;
  out.reserve(grid.assignments.size());
  for (const auto& a : grid.assignments) {
    out.push_back(sequence_duration(programs::apply_assignment(request, a).sequence));
  }
  return out;
}

AcquisitionResult InProcessEndpoint::execute(const ExperimentRequest& request) {
  wire::MemorySource source(wire::frame_write(wire::encode_request(request)));
  wire::MemorySink sink;
  server::handle_connection(source, sink, backend_);
  wire::MemorySource reply(sink.bytes());
  const auto envelope = wire::decode_results(wire::frame_read(reply));
  if (const auto* err = std::get_if<wire::ErrorReply>(&envelope)) {
    throw RemoteError(err->message);
  }
  return std::get<AcquisitionResult>(envelope);
}

namespace {

constexpr std::array kKinds{
    ExperimentKind::kResonatorSpectroscopy, ExperimentKind::kQubitSpectroscopy,
    ExperimentKind::kRabiAmplitude,         ExperimentKind::kRabiLength,
    ExperimentKind::kT1,                    ExperimentKind::kRamseyDetuned,
    ExperimentKind::kSingleshot,            ExperimentKind::kFluxMap,
};

std::vector<double> linspace(double start, double stop, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    v[k] = n == 1 ? start : start + (stop - start) * static_cast<double>(k) /
                                        static_cast<double>(n - 1);
  }
  return v;
}

Pulse drive(const ExperimentParams& p, double start, double duration, double amplitude,
            double phase = 0.0) {
  Pulse pulse;
  pulse.kind = PulseKind::kDrive;
  pulse.frequency = p.drive_frequency;
  pulse.amplitude = amplitude;
  pulse.relative_phase = phase;
  pulse.start = start;
  pulse.duration = duration;
  pulse.dac = p.drive_dac;
  pulse.name = "drive";
  return pulse;
}

Pulse readout(const ExperimentParams& p, double start) {
  Pulse pulse;
  pulse.kind = PulseKind::kReadout;
  pulse.frequency = p.readout_frequency;
  pulse.amplitude = p.readout_amplitude;
  pulse.start = start;
  pulse.duration = p.readout_duration;
  pulse.dac = p.readout_dac;
  pulse.adc = p.adc;
  pulse.name = "readout";
  return pulse;
}

ExperimentRequest base_request(const ExperimentParams& p) {
  ExperimentRequest r;
  r.cfg.reps = p.shots;
  r.cfg.soft_avgs = 1;
  r.cfg.repetition_duration = p.relaxation;
  r.cfg.average = true;
  Qubit q;
  if (p.flux_dac) {
    q.dac = p.flux_dac;
    q.bias = p.bias;
  }
  r.qubits.push_back(q);
  return r;
}

Sweeper single_sweeper(Parameter param, int index, double start, double stop, std::size_t n) {
  Sweeper s;
  s.parameters = {param};
  s.indexes = {index};
  s.starts = {start};
  s.stops = {stop};
  s.expts = static_cast<int>(n);
  return s;
}

void check_params(const ExperimentParams& p) {
  if (p.points == 0) throw InvalidArgument("points must be positive");
  if (p.shots <= 0) throw InvalidArgument("shots must be positive");
  if (p.relaxation < 0.0) throw InvalidArgument("relaxation must be non-negative");
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kResonatorSpectroscopy: return "resonator_spectroscopy";
    case ExperimentKind::kQubitSpectroscopy: return "qubit_spectroscopy";
    case ExperimentKind::kRabiAmplitude: return "rabi_amplitude";
    case ExperimentKind::kRabiLength: return "rabi_length";
    case ExperimentKind::kT1: return "t1";
    case ExperimentKind::kRamseyDetuned: return "ramsey_detuned";
    case ExperimentKind::kSingleshot: return "singleshot";
    case ExperimentKind::kFluxMap: return "flux_map";
  }
  return "unknown";
}

std::optional<ExperimentKind> parse_experiment_kind(std::string_view text) {
  for (auto k : kKinds) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

std::span<const ExperimentKind> all_experiment_kinds() { return kKinds; }

bool uses_realtime_sweep(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kQubitSpectroscopy:
    case ExperimentKind::kRabiAmplitude:
    case ExperimentKind::kT1:
    case ExperimentKind::kFluxMap:
      return true;
    default:
      return false;
  }
}

ExperimentParams default_params(ExperimentKind kind) {
  ExperimentParams p;
  switch (kind) {
    case ExperimentKind::kResonatorSpectroscopy:
      p.relaxation = 5e-6;
      p.sweep_start = 5.795e9;
      p.sweep_stop = 5.805e9;
      break;
    case ExperimentKind::kQubitSpectroscopy:
      p.relaxation = 5e-6;
      p.points = 201;
      p.sweep_start = p.drive_frequency - 5e6;
      p.sweep_stop = p.drive_frequency + 5e6;
      break;
    case ExperimentKind::kRabiAmplitude:
      p.sweep_start = 0.0;
      p.sweep_stop = 1.0;
      break;
    case ExperimentKind::kRabiLength:
      p.sweep_start = 8e-9;
      p.sweep_stop = 200e-9;
      break;
    case ExperimentKind::kT1:
      p.sweep_start = 0.0;
      p.sweep_stop = 50e-6;
      break;
    case ExperimentKind::kRamseyDetuned:
      p.sweep_start = 0.0;
      p.sweep_stop = 5e-6;
      break;
    case ExperimentKind::kSingleshot:
      p.points = 2;
      break;
    case ExperimentKind::kFluxMap:
      p.relaxation = 5e-6;
      p.points = 21;
      p.flux_dac = 2;
      p.sweep_start = 0.0;
      p.sweep_stop = 0.3;
      p.spectroscopy_amplitude = 0.2;
      p.secondary_points = 126;
      p.secondary_start = 3.8e9;
      break;
  }
  return p;
}

ExperimentPlan plan_experiment(ExperimentKind kind, const ExperimentParams& p) {
  check_params(p);
  ExperimentPlan plan;
  const std::size_t n = p.points;
  const auto values = linspace(p.sweep_start, p.sweep_stop, n);

  switch (kind) {
    case ExperimentKind::kResonatorSpectroscopy: {
      for (double f : values) {
        ExperimentParams q = p;
        q.readout_frequency = f;
        auto r = base_request(q);
        r.sequence = {readout(q, 0.0)};
        plan.requests.push_back(std::move(r));
      }
      plan.axes = {values};
      break;
    }
    case ExperimentKind::kQubitSpectroscopy: {
      auto r = base_request(p);
      r.operation_code = OperationCode::kExecuteSweeps;
      r.sequence = {drive(p, 0.0, p.spectroscopy_duration, p.spectroscopy_amplitude),
                    readout(p, p.spectroscopy_duration)};
      r.sweepers = {single_sweeper(Parameter::kFrequency, 0, p.sweep_start, p.sweep_stop, n)};
      plan.requests.push_back(std::move(r));
      plan.axes = {values};
      break;
    }
    case ExperimentKind::kRabiAmplitude: {
      auto r = base_request(p);
      r.operation_code = OperationCode::kExecuteSweeps;
      r.sequence = {drive(p, 0.0, p.pi_duration, p.sweep_start), readout(p, p.pi_duration)};
      r.sweepers = {single_sweeper(Parameter::kAmplitude, 0, p.sweep_start, p.sweep_stop, n)};
      plan.requests.push_back(std::move(r));
      plan.axes = {values};
      break;
    }
    case ExperimentKind::kRabiLength: {
      for (double d : values) {
        auto r = base_request(p);
        r.sequence = {drive(p, 0.0, d, p.pi_amplitude), readout(p, d)};
        plan.requests.push_back(std::move(r));
      }
      plan.axes = {values};
      break;
    }
    case ExperimentKind::kT1: {
      auto r = base_request(p);
      r.operation_code = OperationCode::kExecuteSweeps;
      r.sequence = {drive(p, 0.0, p.pi_duration, p.pi_amplitude),
                    readout(p, p.pi_duration + p.sweep_start)};
      r.sweepers = {single_sweeper(Parameter::kStart, 1, p.pi_duration + p.sweep_start,
                                   p.pi_duration + p.sweep_stop, n)};
      plan.requests.push_back(std::move(r));
      plan.axes = {values};
      break;
    }
    case ExperimentKind::kRamseyDetuned: {
      const double half = p.pi_amplitude / 2.0;
      for (double tau : values) {
        auto r = base_request(p);
        const double phase = 2.0 * std::numbers::pi * p.ramsey_detuning * tau;
        r.sequence = {drive(p, 0.0, p.pi_duration, half),
                      drive(p, p.pi_duration + tau, p.pi_duration, half, phase),
                      readout(p, 2.0 * p.pi_duration + tau)};
        plan.requests.push_back(std::move(r));
      }
      plan.axes = {values};
      break;
    }
    case ExperimentKind::kSingleshot: {
      auto idle = base_request(p);
      idle.cfg.average = false;
      idle.sequence = {readout(p, p.pi_duration)};
      auto excited = idle;
      excited.sequence = {drive(p, 0.0, p.pi_duration, p.pi_amplitude),
                          readout(p, p.pi_duration)};
      plan.requests = {std::move(idle), std::move(excited)};
      plan.axes = {{0.0, 1.0}};
      break;
    }
    case ExperimentKind::kFluxMap: {
      if (!p.flux_dac) throw InvalidArgument("flux map needs a flux dac");
      if (p.secondary_points == 0) throw InvalidArgument("secondary points must be positive");
      auto r = base_request(p);
      r.operation_code = OperationCode::kExecuteSweeps;
      r.qubits[0].bias = p.sweep_start;
      r.sequence = {drive(p, 0.0, p.spectroscopy_duration, p.spectroscopy_amplitude),
                    readout(p, p.spectroscopy_duration)};
      r.sweepers = {single_sweeper(Parameter::kBias, 0, p.sweep_start, p.sweep_stop, n),
                    single_sweeper(Parameter::kFrequency, 0, p.secondary_start,
                                   p.secondary_stop, p.secondary_points)};
      plan.requests.push_back(std::move(r));
      plan.axes = {values, linspace(p.secondary_start, p.secondary_stop, p.secondary_points)};
      break;
    }
  }
  return plan;
}

std::vector<double> principal_projection(std::span<const double> i, std::span<const double> q) {
  if (i.size() != q.size()) throw InvalidArgument("i and q differ in length");
  const std::size_t n = i.size();
  std::vector<double> out(n, 0.0);
  if (n == 0) return out;
  double mi = 0.0, mq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    mi += i[k];
    mq += q[k];
  }
  mi /= static_cast<double>(n);
  mq /= static_cast<double>(n);
  double sii = 0.0, sqq = 0.0, siq = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double a = i[k] - mi, b = q[k] - mq;
    sii += a * a;
    sqq += b * b;
    siq += a * b;
  }
  // Leading eigenvector of the 2x2 covariance via its orientation angle.
  const double angle = 0.5 * std::atan2(2.0 * siq, sii - sqq);
  const double c = std::cos(angle), s = std::sin(angle);
  for (std::size_t k = 0; k < n; ++k) out[k] = (i[k] - mi) * c + (q[k] - mq) * s;
  return out;
}

double assignment_fidelity(std::span<const double> i0, std::span<const double> q0,
                           std::span<const double> i1, std::span<const double> q1) {
  if (i0.size() != q0.size() || i1.size() != q1.size() || i0.empty() || i1.empty()) {
    throw InvalidArgument("singleshot clouds must be non-empty with matching i/q");
  }
  auto mean = [](std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const auto disc = sim::Discriminator::from_centers({mean(i0), mean(q0)}, {mean(i1), mean(q1)});
  std::size_t wrong0 = 0, wrong1 = 0;
  for (std::size_t k = 0; k < i0.size(); ++k) wrong0 += sim::classify(i0[k], q0[k], disc) == 1;
  for (std::size_t k = 0; k < i1.size(); ++k) wrong1 += sim::classify(i1[k], q1[k], disc) == 0;
  const double p10 = static_cast<double>(wrong0) / static_cast<double>(i0.size());
  const double p01 = static_cast<double>(wrong1) / static_cast<double>(i1.size());
  return 1.0 - 0.5 * (p10 + p01);
}

Dataset run_experiment(ExperimentKind kind, Endpoint& endpoint, const ExperimentParams& params) {
  const ExperimentPlan plan = plan_experiment(kind, params);
  Dataset ds;
  ds.kind = kind;
  ds.axes = plan.axes;

  std::vector<AcquisitionResult> results;
  std::vector<double> durations;
  results.reserve(plan.requests.size());
  for (std::size_t k = 0; k < plan.requests.size(); ++k) {
    const auto& request = plan.requests[k];
    try {
      results.push_back(endpoint.execute(request));
    } catch (const Error& e) {
      throw ExperimentError(fmt::format("{} point {}: {}", to_string(kind), k, e.what()), k);
    }
    ds.accounting.connections += 1;
    ds.accounting.program_loads += 1;
    const auto d = point_durations(request);
    durations.insert(durations.end(), d.begin(), d.end());
  }
  // Every template request uses the same shot count.
  ds.accounting.ideal = ideal_time(static_cast<std::size_t>(plan.requests.front().cfg.shots()),
                                   durations, params.relaxation);

  for (const auto& r : results) {
    ds.i.insert(ds.i.end(), r.i.begin(), r.i.end());
    ds.q.insert(ds.q.end(), r.q.begin(), r.q.end());
  }
  if (kind == ExperimentKind::kSingleshot) {
    const std::size_t shots = results.front().i.size();
    ds.shape = {2, shots};
    const std::span<const double> i(ds.i), q(ds.q);
    ds.fidelity = assignment_fidelity(i.first(shots), q.first(shots), i.subspan(shots),
                                      q.subspan(shots));
  } else if (kind == ExperimentKind::kFluxMap) {
    ds.shape = {plan.axes[0].size(), plan.axes[1].size()};
  } else {
    ds.shape = {plan.axes[0].size()};
  }
  std::size_t expected = 1;
  for (auto extent : ds.shape) expected *= extent;
  if (ds.i.size() != expected) {
    throw ExperimentError(
        fmt::format("{}: unexpected result size {}", to_string(kind), ds.i.size()), 0);
  }

  ds.magnitude.resize(ds.i.size());
  for (std::size_t k = 0; k < ds.i.size(); ++k) ds.magnitude[k] = std::hypot(ds.i[k], ds.q[k]);
  ds.signal = principal_projection(ds.i, ds.q);
  return ds;
}

}  // namespace rfseq::bench
