#include "rfseq/programs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "rfseq/errors.hpp"

namespace rfseq::programs {

namespace {

void synthesize(ScheduledEvent& e, const Pulse& p, double dac_rate) {
  e.envelope = envelope_samples(p.shape, p.amplitude, p.duration, dac_rate);
  e.envelope_area = std::accumulate(e.envelope.i.begin(), e.envelope.i.end(), 0.0) / dac_rate;
}

ScheduledEvent make_event(const Pulse& p, std::size_t index, const sim::BoardProfile& profile) {
  ScheduledEvent e;
  e.start_tick = sample_count(p.start, profile.dac_rate);
  e.length_ticks = sample_count(p.duration, profile.dac_rate);
  e.channel = p.dac;
  e.kind = p.kind;
  e.frequency = p.frequency;
  e.phase = p.relative_phase;
  e.amplitude = p.amplitude;
  e.pulse_index = index;
  try {
    synthesize(e, p, profile.dac_rate);
  } catch (const InvalidArgument& err) {
    throw CompileError(fmt::format("sequence[{}]: {}", index, err.what()));
  }
  return e;
}

AcquisitionWindow make_window(const Pulse& p, std::size_t index,
                              const sim::BoardProfile& profile) {
  AcquisitionWindow w;
  w.adc = p.adc.value_or(0);
  w.start_tick = sample_count(p.start, profile.adc_rate);
  w.length = sample_count(p.duration, profile.adc_rate);
  w.frequency = p.frequency;
  w.phase = p.relative_phase;
  w.pulse_index = index;
  if (w.length < 1) {
    throw CompileError(fmt::format("sequence[{}]: acquisition window shorter than one ADC sample",
                                   index));
  }
  return w;
}

// Sorting, overlap and multiplexing checks, total duration.
void finalize(Schedule& s) {
  std::stable_sort(s.events.begin(), s.events.end(), [](const auto& a, const auto& b) {
    if (a.start_tick != b.start_tick) return a.start_tick < b.start_tick;
    return a.pulse_index < b.pulse_index;
  });

  for (std::size_t a = 0; a < s.events.size(); ++a) {
    for (std::size_t b = a + 1; b < s.events.size(); ++b) {
      const auto& ea = s.events[a];
      const auto& eb = s.events[b];
      if (eb.start_tick >= ea.end_tick()) continue;
      if (ea.channel != eb.channel) continue;
      if (ea.kind == PulseKind::kReadout && eb.kind == PulseKind::kReadout) continue;
      throw CompileError(fmt::format("sequence[{}] and sequence[{}] overlap on dac {}",
                                     std::min(ea.pulse_index, eb.pulse_index),
                                     std::max(ea.pulse_index, eb.pulse_index), ea.channel));
    }
  }

  for (std::size_t a = 0; a < s.acquisitions.size(); ++a) {
    for (std::size_t b = a + 1; b < s.acquisitions.size(); ++b) {
      const auto& wa = s.acquisitions[a];
      const auto& wb = s.acquisitions[b];
      if (wa.adc != wb.adc) continue;
      const bool overlap = wa.start_tick < wb.start_tick + wb.length &&
                           wb.start_tick < wa.start_tick + wa.length;
      if (!overlap) continue;
      const double window = static_cast<double>(std::min(wa.length, wb.length)) / s.adc_rate;
      if (std::abs(wa.frequency - wb.frequency) < 1.0 / window) {
        throw CompileError(fmt::format(
            "multiplexed readouts sequence[{}] and sequence[{}] on adc {} are closer than "
            "1/window in frequency",
            wa.pulse_index, wb.pulse_index, wa.adc));
      }
    }
  }

  double total = 0.0;
  for (const auto& e : s.events) total = std::max(total, s.event_end(e));
  for (const auto& w : s.acquisitions) {
    total = std::max(total, static_cast<double>(w.start_tick + w.length) / s.adc_rate);
  }
  s.total_duration = total;
}

}  // namespace

Schedule compile(const ExperimentRequest& request, const sim::BoardProfile& profile) {
  Schedule s;
  s.dac_rate = profile.dac_rate;
  s.adc_rate = profile.adc_rate;

  std::set<int> flux_lines;
  for (const auto& q : request.qubits) {
    if (q.dac) {
      flux_lines.insert(*q.dac);
      s.static_biases[*q.dac] = q.bias.value_or(0.0);
    }
  }
  if (!request.qubits.empty()) s.flux_dac = request.qubits.front().dac;

  for (std::size_t k = 0; k < request.sequence.size(); ++k) {
    const Pulse& p = request.sequence[k];
    if (p.kind == PulseKind::kFlux && !flux_lines.contains(p.dac)) {
      throw CompileError(
          fmt::format("sequence[{}]: flux pulse on dac {} targets no qubit flux line", k, p.dac));
    }
    s.events.push_back(make_event(p, k, profile));
    if (p.kind == PulseKind::kReadout) s.acquisitions.push_back(make_window(p, k, profile));
  }
  finalize(s);
  return s;
}

ExperimentRequest apply_assignment(ExperimentRequest request, const Assignment& assignment) {
  for (const auto& u : assignment) {
    if (u.parameter == Parameter::kBias) {
      request.qubits.at(static_cast<std::size_t>(u.index)).bias = u.value;
      continue;
    }
    Pulse& p = request.sequence.at(static_cast<std::size_t>(u.index));
    switch (u.parameter) {
      case Parameter::kFrequency: p.frequency = u.value; break;
      case Parameter::kAmplitude: p.amplitude = u.value; break;
      case Parameter::kRelativePhase: p.relative_phase = u.value; break;
      case Parameter::kStart: p.start = u.value; break;
      case Parameter::kDuration: p.duration = u.value; break;
      case Parameter::kBias: break;
    }
  }
  return request;
}

Schedule rebind(const Schedule& base, const ExperimentRequest& updated,
                const Assignment& assignment, const sim::BoardProfile& profile) {
  Schedule s = base;
  for (const auto& u : assignment) {
    if (u.parameter == Parameter::kBias) {
      const Qubit& q = updated.qubits.at(static_cast<std::size_t>(u.index));
      if (q.dac) s.static_biases[*q.dac] = q.bias.value_or(0.0);
      continue;
    }
    const auto index = static_cast<std::size_t>(u.index);
    const Pulse& p = updated.sequence.at(index);
    auto event = std::find_if(s.events.begin(), s.events.end(),
                              [&](const auto& e) { return e.pulse_index == index; });
    auto window = std::find_if(s.acquisitions.begin(), s.acquisitions.end(),
                               [&](const auto& w) { return w.pulse_index == index; });
    const bool readout = window != s.acquisitions.end();

    switch (u.parameter) {
      case Parameter::kFrequency:
        event->frequency = p.frequency;
        if (readout) window->frequency = p.frequency;
        break;
      case Parameter::kRelativePhase:
        event->phase = p.relative_phase;
        if (readout) window->phase = p.relative_phase;
        break;
      case Parameter::kStart:
        event->start_tick = sample_count(p.start, profile.dac_rate);
        if (readout) window->start_tick = sample_count(p.start, profile.adc_rate);
        break;
      case Parameter::kAmplitude:
        event->amplitude = p.amplitude;
        synthesize(*event, p, profile.dac_rate);
        break;
      case Parameter::kDuration:
        *event = make_event(p, index, profile);
        if (readout) *window = make_window(p, index, profile);
        break;
      case Parameter::kBias:
        break;
    }
  }
  finalize(s);
  return s;
}

namespace {

struct ReadoutAverager {
  std::size_t readouts;
  std::vector<double> i, q;

  explicit ReadoutAverager(std::size_t n) : readouts(n), i(n, 0.0), q(n, 0.0) {}

  void add(const std::vector<sim::IqPoint>& shots) {
    for (std::size_t k = 0; k < shots.size(); ++k) {
      i[k % readouts] += shots[k].i;
      q[k % readouts] += shots[k].q;
    }
  }
};

void account(sim::Backend& backend, const Schedule& s, const Config& cfg) {
  backend.add_hardware_time(static_cast<double>(cfg.shots()) *
                            (s.total_duration + cfg.repetition_duration));
}

std::size_t shot_count(const Config& cfg) {
  if (cfg.reps < 1 || cfg.soft_avgs < 1) throw ExecutionError("shot counts must be >= 1");
  if (!cfg.average && cfg.soft_avgs != 1) {
    throw ExecutionError("singleshot acquisition requires soft_avgs = 1");
  }
  return static_cast<std::size_t>(cfg.reps) * static_cast<std::size_t>(cfg.soft_avgs);
}

// Runs one point and stores its data at `point` of a [readouts, points(, reps)] layout.
void run_point(const Schedule& s, const Config& cfg, sim::Backend& backend, std::size_t point,
               std::size_t points, AcquisitionResult& out) {
  const std::size_t shots = shot_count(cfg);
  const std::size_t readouts = s.acquisitions.size();
  std::vector<sim::IqPoint> data;
  backend.run_shots(s, shots, data);
  account(backend, s, cfg);

  if (cfg.average) {
    ReadoutAverager avg(readouts);
    avg.add(data);
    for (std::size_t r = 0; r < readouts; ++r) {
      out.i[r * points + point] = avg.i[r] / static_cast<double>(shots);
      out.q[r * points + point] = avg.q[r] / static_cast<double>(shots);
    }
  } else {
    for (std::size_t shot = 0; shot < shots; ++shot) {
      for (std::size_t r = 0; r < readouts; ++r) {
        const auto& v = data[shot * readouts + r];
        const std::size_t at = (r * points + point) * shots + shot;
        out.i[at] = v.i;
        out.q[at] = v.q;
      }
    }
  }
}

AcquisitionResult allocate(std::vector<std::size_t> shape) {
  AcquisitionResult r;
  r.shape = std::move(shape);
  r.i.assign(r.element_count(), 0.0);
  r.q.assign(r.element_count(), 0.0);
  return r;
}

}  // namespace

AcquisitionResult execute_sequence(const Schedule& schedule, const Config& cfg,
                                   sim::Backend& backend) {
  const std::size_t shots = shot_count(cfg);
  const std::size_t readouts = schedule.acquisitions.size();
  backend.record_program_load();
  AcquisitionResult out = cfg.average ? allocate({readouts}) : allocate({readouts, shots});
  run_point(schedule, cfg, backend, 0, 1, out);
  return out;
}

AcquisitionResult execute_raw(const Schedule& schedule, const Config& cfg,
                              sim::Backend& backend) {
  shot_count(cfg);
  const std::size_t readouts = schedule.acquisitions.size();
  if (readouts == 0) throw ExecutionError("raw acquisition needs a readout");
  const auto window = static_cast<std::size_t>(schedule.acquisitions.front().length);
  for (const auto& w : schedule.acquisitions) {
    if (static_cast<std::size_t>(w.length) != window) {
      throw ExecutionError("raw acquisition requires equal readout window lengths");
    }
  }
  backend.record_program_load();
  const auto traces = backend.acquire_raw(schedule, cfg);
  account(backend, schedule, cfg);

  AcquisitionResult out = allocate({readouts, window});
  for (std::size_t r = 0; r < readouts; ++r) {
    std::copy(traces[r].i.begin(), traces[r].i.end(), out.i.begin() + r * window);
    std::copy(traces[r].q.begin(), traces[r].q.end(), out.q.begin() + r * window);
  }
  return out;
}

AcquisitionResult execute_sweeps(const ExperimentRequest& request, const Schedule& schedule,
                                 sim::Backend& backend) {
  if (request.sweepers.empty()) throw ExecutionError("sweeps operation requires sweepers");
  for (const auto& sw : request.sweepers) {
    for (std::size_t j = 0; j < sw.parameters.size(); ++j) {
      const Parameter param = sw.parameters[j];
      const Pulse* target = nullptr;
      if (param != Parameter::kBias) target = &request.sequence.at(sw.indexes.at(j));
      if (!is_realtime_sweepable(param, target)) {
        if (param == Parameter::kFrequency) {
          throw ExecutionError(fmt::format("unsupported sweeper parameter: Frequency on {} pulse",
                                           to_string(target->kind)));
        }
        throw ExecutionError(fmt::format("unsupported sweeper parameter: {}",
                                         display_name(param)));
      }
    }
  }

  const std::size_t shots = shot_count(request.cfg);
  const SweepGrid grid = sweep_grid(request.sweepers);
  const std::size_t points = grid.assignments.size();
  const std::size_t readouts = schedule.acquisitions.size();
  const sim::BoardProfile& profile = backend.profile();

  backend.record_program_load();
  AcquisitionResult out = request.cfg.average ? allocate({readouts, points})
                                              : allocate({readouts, points, shots});
  for (std::size_t point = 0; point < points; ++point) {
    const auto& assignment = grid.assignments[point];
    Schedule bound;
    try {
      bound = rebind(schedule, apply_assignment(request, assignment), assignment, profile);
    } catch (const CompileError& e) {
      throw ExecutionError(fmt::format("sweep point {}: {}", point, e.what()));
    }
    run_point(bound, request.cfg, backend, point, points, out);
  }
  return out;
}

}  // namespace rfseq::programs
