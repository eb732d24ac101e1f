#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "rfseq/backend_sim.hpp"
#include "rfseq/board.hpp"
#include "rfseq/components.hpp"

namespace rfseq::testing {

inline Pulse readout_pulse(double start = 0.0, double duration = 1e-6,
                           double frequency = 5.80025e9, int dac = 1, int adc = 0) {
  Pulse p;
  p.kind = PulseKind::kReadout;
  p.frequency = frequency;
  p.amplitude = 0.5;
  p.start = start;
  p.duration = duration;
  p.dac = dac;
  p.adc = adc;
  return p;
}

inline Pulse drive_pulse(double start, double duration, double amplitude,
                         double frequency = 5.0e9, int dac = 0) {
  Pulse p;
  p.kind = PulseKind::kDrive;
  p.frequency = frequency;
  p.amplitude = amplitude;
  p.start = start;
  p.duration = duration;
  p.dac = dac;
  return p;
}

inline Pulse flux_pulse(double start, double duration, double amplitude, int dac) {
  Pulse p;
  p.kind = PulseKind::kFlux;
  p.amplitude = amplitude;
  p.start = start;
  p.duration = duration;
  p.dac = dac;
  return p;
}

inline ExperimentRequest sequence_request(std::vector<Pulse> pulses, int reps = 1) {
  ExperimentRequest r;
  r.cfg.reps = reps;
  r.sequence = std::move(pulses);
  r.qubits = {Qubit{}};
  return r;
}

inline Sweeper sweeper(Parameter param, int index, double start, double stop, int expts) {
  Sweeper s;
  s.parameters = {param};
  s.indexes = {index};
  s.starts = {start};
  s.stops = {stop};
  s.expts = expts;
  return s;
}

// Model whose readout is noiseless and lossless in both states.
inline sim::QubitModel quiet_model() {
  sim::QubitModel m;
  m.blob_sigma = 0.0;
  return m;
}

inline const sim::BoardProfile& zcu216() { return sim::board_profile("ZCU216"); }

// Structurally arbitrary requests for codec round-trips. Values need not pass
// validation; they exercise every field and awkward doubles.
class RequestGenerator {
 public:
  explicit RequestGenerator(std::uint64_t seed) : rng_(seed) {}

  double any_double() {
    switch (pick(6)) {
      case 0: return 0.0;
      case 1: return -0.0;
      case 2: return std::uniform_real_distribution<double>(-1.0, 1.0)(rng_);
      case 3: return std::uniform_real_distribution<double>(0.0, 6e9)(rng_);
      case 4: return std::ldexp(std::uniform_real_distribution<double>(0.5, 1.0)(rng_),
                                static_cast<int>(pick(600)) - 300);
      default: {
        // Arbitrary finite bit pattern.
        double d;
        do {
          const std::uint64_t bits = rng_();
          std::memcpy(&d, &bits, sizeof d);
        } while (!std::isfinite(d));
        return d;
      }
    }
  }

  int any_int() { return static_cast<int>(pick(2001)) - 1000; }

  PulseShape shape() {
    switch (pick(4)) {
      case 0: return Rectangular{};
      case 1: return Gaussian{any_double()};
      case 2: return Drag{any_double(), any_double()};
      default: {
        Arbitrary a;
        const auto n = pick(8);
        for (std::size_t k = 0; k < n; ++k) {
          a.i_samples.push_back(any_double());
          a.q_samples.push_back(any_double());
        }
        return a;
      }
    }
  }

  Pulse pulse() {
    Pulse p;
    p.kind = static_cast<PulseKind>(pick(3));
    p.shape = shape();
    p.frequency = any_double();
    p.amplitude = any_double();
    p.relative_phase = any_double();
    p.start = any_double();
    p.duration = any_double();
    p.dac = any_int();
    if (p.kind == PulseKind::kReadout) p.adc = any_int();
    static const char* names[] = {"", "ro", "drive 0", "\"quoted\"", "\xce\xbc-wave"};
    p.name = names[pick(5)];
    return p;
  }

  Sweeper sweep() {
    Sweeper s;
    const auto n = 1 + pick(3);
    for (std::size_t k = 0; k < n; ++k) {
      s.parameters.push_back(static_cast<Parameter>(pick(6)));
      s.indexes.push_back(any_int());
      s.starts.push_back(any_double());
      s.stops.push_back(any_double());
    }
    s.expts = any_int();
    return s;
  }

  ExperimentRequest request() {
    ExperimentRequest r;
    r.operation_code = static_cast<OperationCode>(pick(3));
    r.cfg.reps = any_int();
    r.cfg.soft_avgs = any_int();
    r.cfg.repetition_duration = any_double();
    r.cfg.average = pick(2) == 0;
    const auto np = pick(6);
    for (std::size_t k = 0; k < np; ++k) r.sequence.push_back(pulse());
    const auto nq = pick(4);
    for (std::size_t k = 0; k < nq; ++k) {
      Qubit q;
      if (pick(2)) q.bias = any_double();
      if (pick(2)) q.dac = any_int();
      r.qubits.push_back(q);
    }
    const auto ns = pick(3);
    for (std::size_t k = 0; k < ns; ++k) r.sweepers.push_back(sweep());
    return r;
  }

  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace rfseq::testing
