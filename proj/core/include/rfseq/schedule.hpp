#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "rfseq/components.hpp"

namespace rfseq::programs {

// One pulse placed on the DAC tick grid.
struct ScheduledEvent {
  long long start_tick = 0;  // DAC ticks
  long long length_ticks = 0;
  int channel = 0;
  PulseKind kind = PulseKind::kDrive;
  double frequency = 0.0;
  double phase = 0.0;
  double amplitude = 0.0;
  IqSamples envelope;
  double envelope_area = 0.0;  // integral of the in-phase envelope, amplitude * seconds
  std::size_t pulse_index = 0;

  long long end_tick() const { return start_tick + length_ticks; }
  bool operator==(const ScheduledEvent& o) const {
    return start_tick == o.start_tick && length_ticks == o.length_ticks &&
           channel == o.channel && kind == o.kind && frequency == o.frequency &&
           phase == o.phase && amplitude == o.amplitude && envelope.i == o.envelope.i &&
           envelope.q == o.envelope.q && envelope_area == o.envelope_area &&
           pulse_index == o.pulse_index;
  }
};

// Integration window co-timed with a readout pulse, on the ADC tick grid.
struct AcquisitionWindow {
  int adc = 0;
  long long start_tick = 0;  // ADC ticks
  long long length = 0;      // ADC samples
  double frequency = 0.0;    // demodulation frequency
  double phase = 0.0;
  std::size_t pulse_index = 0;
  bool operator==(const AcquisitionWindow&) const = default;
};

struct Schedule {
  std::vector<ScheduledEvent> events;  // sorted by start_tick
  std::vector<AcquisitionWindow> acquisitions;  // readout order of the source sequence
  std::map<int, double> static_biases;  // flux dac -> volts
  std::optional<int> flux_dac;  // flux line of the simulated qubit (qubit 0)
  double total_duration = 0.0;
  double dac_rate = 0.0;
  double adc_rate = 0.0;

  double event_start(const ScheduledEvent& e) const { return e.start_tick / dac_rate; }
  double event_end(const ScheduledEvent& e) const { return e.end_tick() / dac_rate; }
  double window_start(const AcquisitionWindow& w) const { return w.start_tick / adc_rate; }
  bool operator==(const Schedule&) const = default;
};

}  // namespace rfseq::programs
