#include "rfseq/components.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <fmt/format.h>

#include "rfseq/errors.hpp"

namespace rfseq {

std::size_t AcquisitionResult::element_count() const {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string_view to_string(PulseKind kind) {
  switch (kind) {
    case PulseKind::kDrive: return "drive";
    case PulseKind::kReadout: return "readout";
    case PulseKind::kFlux: return "flux";
  }
  return "?";
}

std::string_view to_string(Parameter parameter) {
  switch (parameter) {
    case Parameter::kFrequency: return "frequency";
    case Parameter::kAmplitude: return "amplitude";
    case Parameter::kRelativePhase: return "relative_phase";
    case Parameter::kStart: return "start";
    case Parameter::kDuration: return "duration";
    case Parameter::kBias: return "bias";
  }
  return "?";
}

std::string_view display_name(Parameter parameter) {
  switch (parameter) {
    case Parameter::kFrequency: return "Frequency";
    case Parameter::kAmplitude: return "Amplitude";
    case Parameter::kRelativePhase: return "RelativePhase";
    case Parameter::kStart: return "Start";
    case Parameter::kDuration: return "Duration";
    case Parameter::kBias: return "Bias";
  }
  return "?";
}

std::string_view to_string(OperationCode code) {
  switch (code) {
    case OperationCode::kExecutePulseSequence: return "EXECUTE_PULSE_SEQUENCE";
    case OperationCode::kExecutePulseSequenceRaw: return "EXECUTE_PULSE_SEQUENCE_RAW";
    case OperationCode::kExecuteSweeps: return "EXECUTE_SWEEPS";
  }
  return "?";
}

std::optional<PulseKind> parse_pulse_kind(std::string_view text) {
  for (auto kind : {PulseKind::kDrive, PulseKind::kReadout, PulseKind::kFlux}) {
    if (to_string(kind) == text) return kind;
  }
  return std::nullopt;
}

std::optional<Parameter> parse_parameter(std::string_view text) {
  for (auto p : {Parameter::kFrequency, Parameter::kAmplitude, Parameter::kRelativePhase,
                 Parameter::kStart, Parameter::kDuration, Parameter::kBias}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

std::optional<OperationCode> parse_operation_code(std::string_view text) {
  for (auto code : {OperationCode::kExecutePulseSequence,
                    OperationCode::kExecutePulseSequenceRaw, OperationCode::kExecuteSweeps}) {
    if (to_string(code) == text) return code;
  }
  return std::nullopt;
}

long long sample_count(double duration, double sampling_rate) {
  // nearbyint honours the default round-half-to-even mode.
  return static_cast<long long>(std::nearbyint(duration * sampling_rate));
}

namespace {

std::vector<double> gaussian(std::size_t n, double rel_sigma, double amplitude) {
  const double sigma = static_cast<double>(n) / rel_sigma;
  const double center = (static_cast<double>(n) - 1.0) / 2.0;
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = static_cast<double>(k) - center;
    out[k] = amplitude * std::exp(-(x * x) / (2.0 * sigma * sigma));
  }
  return out;
}

std::vector<double> derivative(const std::vector<double>& v, double beta) {
  const std::size_t n = v.size();
  std::vector<double> out(n);
  out[0] = beta * (v[1] - v[0]);
  out[n - 1] = beta * (v[n - 1] - v[n - 2]);
  for (std::size_t k = 1; k + 1 < n; ++k) out[k] = beta * (v[k + 1] - v[k - 1]) / 2.0;
  return out;
}

std::vector<double> resample(const std::vector<double>& src, std::size_t n, double amplitude) {
  const std::size_t m = src.size();
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto idx = static_cast<std::size_t>((static_cast<double>(k) + 0.5) * static_cast<double>(m) /
                                        static_cast<double>(n));
    out[k] = amplitude * src[std::min(idx, m - 1)];
  }
  return out;
}

}  // namespace

IqSamples envelope_samples(const PulseShape& shape, double amplitude, double duration,
                           double sampling_rate) {
  if (!(duration > 0.0) || !(sampling_rate > 0.0)) {
    throw InvalidArgument("duration and sampling rate must be positive");
  }
  const long long count = sample_count(duration, sampling_rate);
  if (count < 2) throw InvalidArgument("pulse shorter than two samples");
  const auto n = static_cast<std::size_t>(count);

  IqSamples out;
  if (std::holds_alternative<Rectangular>(shape)) {
    out.i.assign(n, amplitude);
    out.q.assign(n, 0.0);
  } else if (const auto* g = std::get_if<Gaussian>(&shape)) {
    out.i = gaussian(n, g->rel_sigma, amplitude);
    out.q.assign(n, 0.0);
  } else if (const auto* d = std::get_if<Drag>(&shape)) {
    out.i = gaussian(n, d->rel_sigma, amplitude);
    out.q = derivative(out.i, d->beta);
  } else {
    const auto& a = std::get<Arbitrary>(shape);
    if (a.i_samples.empty() || a.i_samples.size() != a.q_samples.size()) {
      throw InvalidArgument("arbitrary waveform needs equal, nonzero i/q lengths");
    }
    out.i = resample(a.i_samples, n, amplitude);
    out.q = resample(a.q_samples, n, amplitude);
  }
  return out;
}

std::vector<std::vector<double>> sweeper_values(const Sweeper& sweeper) {
  std::vector<std::vector<double>> out;
  out.reserve(sweeper.starts.size());
  const int expts = std::max(sweeper.expts, 1);
  for (std::size_t j = 0; j < sweeper.starts.size(); ++j) {
    const double start = sweeper.starts[j];
    const double stop = sweeper.stops[j];
    std::vector<double> values(static_cast<std::size_t>(expts));
    if (expts == 1) {
      values[0] = start;
    } else {
      const double step = (stop - start) / static_cast<double>(expts - 1);
      for (int k = 0; k < expts; ++k) values[k] = start + k * step;
    }
    out.push_back(std::move(values));
  }
  return out;
}

SweepGrid sweep_grid(std::span<const Sweeper> sweepers) {
  SweepGrid grid;
  std::vector<std::vector<std::vector<double>>> values;
  std::size_t total = 1;
  for (const auto& s : sweepers) {
    values.push_back(sweeper_values(s));
    grid.shape.push_back(static_cast<std::size_t>(s.expts));
    total *= static_cast<std::size_t>(s.expts);
  }
  grid.assignments.reserve(total);

  // Odometer over the sweeper indices, last sweeper fastest.
  std::vector<std::size_t> counter(sweepers.size(), 0);
  for (std::size_t point = 0; point < total; ++point) {
    Assignment a;
    for (std::size_t s = 0; s < sweepers.size(); ++s) {
      const auto& sw = sweepers[s];
      for (std::size_t j = 0; j < sw.parameters.size(); ++j) {
        a.push_back({sw.parameters[j], sw.indexes[j], values[s][j][counter[s]]});
      }
    }
    grid.assignments.push_back(std::move(a));
    for (std::size_t s = sweepers.size(); s-- > 0;) {
      if (++counter[s] < grid.shape[s]) break;
      counter[s] = 0;
    }
  }
  return grid;
}

bool is_realtime_sweepable(Parameter parameter, const Pulse* target) {
  switch (parameter) {
    case Parameter::kDuration: return false;
    case Parameter::kFrequency: return target != nullptr && target->kind == PulseKind::kDrive;
    case Parameter::kBias: return target == nullptr;
    default: return target != nullptr;
  }
}

namespace {

bool finite(double x) { return std::isfinite(x); }

void check_pulse(const Pulse& p, std::size_t k, const sim::BoardProfile& profile,
                 std::vector<std::string>& out) {
  auto add = [&](std::string msg) { out.push_back(fmt::format("sequence[{}]: {}", k, msg)); };

  if (!finite(p.frequency) || !finite(p.amplitude) || !finite(p.relative_phase) ||
      !finite(p.start) || !finite(p.duration)) {
    add("non-finite numeric field");
    return;
  }
  if (p.kind == PulseKind::kReadout && !p.adc) add("readout requires adc");
  if (p.kind != PulseKind::kReadout && p.adc) add("adc only allowed on readout pulses");
  if (p.kind == PulseKind::kFlux) {
    if (p.frequency != 0.0) add("flux pulse must have frequency 0");
    if (!std::holds_alternative<Rectangular>(p.shape)) add("flux pulse must be rectangular");
  }
  if (!(p.duration > 0.0)) {
    add("duration must be > 0");
  } else if (sample_count(p.duration, profile.dac_rate) < 2) {
    add("pulse shorter than two samples");
  }
  if (p.start < 0.0) add("start must be >= 0");
  if (p.amplitude < -1.0 || p.amplitude > 1.0) add("amplitude outside [-1, 1]");
  if (p.frequency < 0.0) add("frequency must be >= 0");
  if (p.frequency > profile.max_frequency) {
    add(fmt::format("frequency {} Hz above board maximum {} Hz", p.frequency,
                    profile.max_frequency));
  }
  if (p.dac < 0 || p.dac >= profile.active_dacs) {
    add(fmt::format("dac out of range ({} not in 0..{})", p.dac, profile.active_dacs - 1));
  }
  if (p.adc && (*p.adc < 0 || *p.adc >= profile.active_adcs)) {
    add(fmt::format("adc out of range ({} not in 0..{})", *p.adc, profile.active_adcs - 1));
  }

  if (const auto* g = std::get_if<Gaussian>(&p.shape)) {
    if (!(g->rel_sigma > 0.0) || !finite(g->rel_sigma)) add("gaussian rel_sigma must be > 0");
  } else if (const auto* d = std::get_if<Drag>(&p.shape)) {
    if (!(d->rel_sigma > 0.0) || !finite(d->rel_sigma)) add("drag rel_sigma must be > 0");
    if (!finite(d->beta)) add("drag beta must be finite");
  } else if (const auto* a = std::get_if<Arbitrary>(&p.shape)) {
    if (a->i_samples.empty() || a->i_samples.size() != a->q_samples.size()) {
      add("arbitrary waveform needs equal, nonzero i/q sample counts");
    }
    auto in_range = [](double v) { return finite(v) && v >= -1.0 && v <= 1.0; };
    if (!std::all_of(a->i_samples.begin(), a->i_samples.end(), in_range) ||
        !std::all_of(a->q_samples.begin(), a->q_samples.end(), in_range)) {
      add("arbitrary waveform sample outside [-1, 1]");
    }
  }
}

void check_sweeper(const Sweeper& s, std::size_t k, const ExperimentRequest& r,
                   const sim::BoardProfile& profile, std::vector<std::string>& out) {
  auto add = [&](std::string msg) { out.push_back(fmt::format("sweepers[{}]: {}", k, msg)); };
  const std::size_t n = s.parameters.size();
  if (n == 0 || s.indexes.size() != n || s.starts.size() != n || s.stops.size() != n) {
    add("parameters, indexes, starts and stops must have equal nonzero length");
    return;
  }
  if (s.expts < 1) add("expts must be >= 1");

  for (std::size_t j = 0; j < n; ++j) {
    const Parameter param = s.parameters[j];
    const int idx = s.indexes[j];
    const double lo = std::min(s.starts[j], s.stops[j]);
    const double hi = std::max(s.starts[j], s.stops[j]);
    if (!finite(lo) || !finite(hi)) {
      add("non-finite sweep range");
      continue;
    }
    if (param == Parameter::kBias) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= r.qubits.size()) {
        add(fmt::format("bias index {} out of range", idx));
      } else if (!r.qubits[idx].dac) {
        add(fmt::format("bias sweep targets qubit {} without flux dac", idx));
      }
      continue;
    }
    if (idx < 0 || static_cast<std::size_t>(idx) >= r.sequence.size()) {
      add(fmt::format("pulse index {} out of range", idx));
      continue;
    }
    const Pulse& target = r.sequence[idx];
    if (!is_realtime_sweepable(param, &target)) {
      if (param == Parameter::kFrequency) {
        add(fmt::format("unsupported sweeper parameter: Frequency on {} pulse",
                        to_string(target.kind)));
      } else {
        add(fmt::format("unsupported sweeper parameter: {}", display_name(param)));
      }
      continue;
    }
    switch (param) {
      case Parameter::kFrequency:
        if (lo < 0.0 || hi > profile.max_frequency) add("frequency sweep leaves board range");
        break;
      case Parameter::kAmplitude:
        if (lo < -1.0 || hi > 1.0) add("amplitude sweep leaves [-1, 1]");
        break;
      case Parameter::kStart:
        if (lo < 0.0) add("start sweep reaches negative start");
        break;
      default:
        break;
    }
  }
}

}  // namespace

std::vector<std::string> validate_request(const ExperimentRequest& r,
                                          const sim::BoardProfile& profile) {
  std::vector<std::string> out;

  const auto& cfg = r.cfg;
  if (cfg.reps < 1) out.emplace_back("cfg.reps must be >= 1");
  if (cfg.soft_avgs < 1) out.emplace_back("cfg.soft_avgs must be >= 1");
  if (!(cfg.repetition_duration >= 0.0) || !finite(cfg.repetition_duration)) {
    out.emplace_back("cfg.repetition_duration must be >= 0");
  }
  if (!cfg.average && cfg.soft_avgs != 1) {
    out.emplace_back("cfg: singleshot acquisition (average = false) requires soft_avgs = 1");
  }

  if (r.sequence.empty()) out.emplace_back("sequence is empty");
  const bool has_readout = std::any_of(r.sequence.begin(), r.sequence.end(), [](const Pulse& p) {
    return p.kind == PulseKind::kReadout;
  });
  if (!r.sequence.empty() && !has_readout) out.emplace_back("sequence has no readout pulse");

  for (std::size_t k = 0; k < r.sequence.size(); ++k) check_pulse(r.sequence[k], k, profile, out);

  // Readouts may share a generator (multiplexing); anything else may not overlap.
  for (std::size_t a = 0; a < r.sequence.size(); ++a) {
    for (std::size_t b = a + 1; b < r.sequence.size(); ++b) {
      const Pulse& pa = r.sequence[a];
      const Pulse& pb = r.sequence[b];
      if (pa.dac != pb.dac) continue;
      if (pa.kind == PulseKind::kReadout && pb.kind == PulseKind::kReadout) continue;
      if (pa.start < pb.end() && pb.start < pa.end()) {
        out.push_back(fmt::format("sequence[{}] and sequence[{}] overlap on dac {}", a, b, pa.dac));
      }
    }
  }

  for (std::size_t k = 0; k < r.qubits.size(); ++k) {
    const Qubit& q = r.qubits[k];
    if (q.bias && !q.dac) out.push_back(fmt::format("qubits[{}]: bias requires dac", k));
    if (q.bias && !finite(*q.bias)) out.push_back(fmt::format("qubits[{}]: non-finite bias", k));
    if (q.dac && (*q.dac < 0 || *q.dac >= profile.active_dacs)) {
      out.push_back(fmt::format("qubits[{}]: dac out of range ({} not in 0..{})", k, *q.dac,
                                profile.active_dacs - 1));
    }
  }

  for (std::size_t k = 0; k < r.sweepers.size(); ++k) {
    check_sweeper(r.sweepers[k], k, r, profile, out);
  }

  switch (r.operation_code) {
    case OperationCode::kExecuteSweeps:
      if (r.sweepers.empty()) out.emplace_back("sweeps operation requires sweepers");
      break;
    case OperationCode::kExecutePulseSequence:
      if (!r.sweepers.empty()) out.emplace_back("sequence operation takes no sweepers");
      break;
    case OperationCode::kExecutePulseSequenceRaw:
      if (!r.sweepers.empty()) out.emplace_back("raw operation takes no sweepers");
      {
        std::optional<long long> window;
        for (const auto& p : r.sequence) {
          if (p.kind != PulseKind::kReadout) continue;
          const long long n = sample_count(p.duration, profile.adc_rate);
          if (window && *window != n) {
            out.emplace_back("raw acquisition requires equal readout window lengths");
            break;
          }
          window = n;
        }
      }
      break;
  }
  return out;
}

}  // namespace rfseq
