#pragma once

#include "rfseq/components.hpp"

namespace rfseq::benchmarks {

inline Pulse drive(double start, double duration, double amplitude) {
  Pulse p;
  p.kind = PulseKind::kDrive;
  p.start = start;
  p.duration = duration;
  p.amplitude = amplitude;
  p.frequency = 5e9;
  p.shape = Gaussian{};
  p.dac = 0;
  return p;
}

inline Pulse readout(double start) {
  Pulse p;
  p.kind = PulseKind::kReadout;
  p.start = start;
  p.duration = 1e-6;
  p.amplitude = 0.5;
  p.frequency = 5.80025e9;
  p.shape = Rectangular{};
  p.dac = 1;
  p.adc = 0;
  return p;
}

// Rabi-style request: one drive pulse followed by a readout.
inline ExperimentRequest rabi(int reps) {
  ExperimentRequest r;
  r.sequence = {drive(0.0, 40e-9, 0.5), readout(40e-9)};
  r.qubits = {Qubit{}};
  r.cfg.reps = reps;
  r.cfg.repetition_duration = 5e-6;
  return r;
}

}  // namespace rfseq::benchmarks
