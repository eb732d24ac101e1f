#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rfseq/board.hpp"
#include "rfseq/components.hpp"
#include "rfseq/schedule.hpp"

namespace rfseq::sim {

struct IqPoint {
  double i = 0.0;
  double q = 0.0;
  bool operator==(const IqPoint&) const = default;
};

// Single flux-tunable qubit read out dispersively through one resonator.
struct QubitModel {
  double resonator_frequency = 5.8e9;
  double resonator_linewidth = 1e6;  // kappa
  double dispersive_shift = 0.5e6;   // chi
  double qubit_frequency_max = 5.0e9;
  double flux_offset = 0.0;
  double flux_period = 1.0;
  double pi_amplitude = 0.5;
  double reference_duration = 40e-9;
  double t1 = 10e-6;
  double t2 = 15e-6;
  IqPoint blob_0{1.0, 0.0};
  IqPoint blob_1{-1.0, 0.0};
  double blob_sigma = 0.5;

  bool operator==(const QubitModel&) const = default;
};

std::vector<std::string> validate_model(const QubitModel& model);

// JSON document with keys resonator_frequency, resonator_linewidth,
// dispersive_shift, qubit_frequency_max, flux_offset, flux_period,
// pi_amplitude, reference_duration, T1, T2, blob_0, blob_1, blob_sigma.
// blob_* are [i, q] pairs. Throws DecodeError/InvalidArgument.
QubitModel parse_model(std::string_view json_text);
QubitModel load_model(const std::filesystem::path& path);
std::string model_to_json(const QubitModel& model);

struct OverheadModel {
  double connection_overhead = 0.050;
  double program_load_overhead = 0.200;
  bool operator==(const OverheadModel&) const = default;
};

// f_max * sqrt(|cos(pi (flux - offset) / period)|)
double bias_to_frequency(const QubitModel& model, double flux_level);

// Amplitude of a dispersive readout at `readout_frequency` given the measured state.
double resonator_transmission(const QubitModel& model, double readout_frequency, int state);

double simulated_wall_time(std::size_t program_loads, std::size_t connections, double ideal,
                           const OverheadModel& overheads);

struct Discriminator {
  double axis_angle = 0.0;
  double threshold = 0.0;

  // Axis through both centers, threshold at their midpoint.
  static Discriminator from_centers(IqPoint zero, IqPoint one);
};

// 1 if the projection exceeds the threshold; ties go to 0.
int classify(double i, double q, const Discriminator& discriminator);

// Per-acquisition demodulated time series, already averaged over shots.
struct RawTrace {
  std::vector<double> i;
  std::vector<double> q;
};

// Stand-in for the controller: owns the device model, the clock phase drawn at
// power-up, and separate random streams for state collapse and readout noise.
// Copying a Backend replays its random streams exactly.
class Backend {
 public:
  Backend(QubitModel model, BoardProfile profile, std::uint64_t seed,
          OverheadModel overheads = {});

  const QubitModel& model() const { return model_; }
  const BoardProfile& profile() const { return profile_; }
  const OverheadModel& overheads() const { return overheads_; }
  double clock_phase() const { return clock_phase_; }
  std::uint64_t seed() const { return seed_; }

  // One preparation-evolution-measurement cycle; one point per acquisition.
  std::vector<IqPoint> run_shot(const programs::Schedule& schedule);

  // `shots` cycles appended shot-major to `out` (shot 0 acquisitions, shot 1, ...).
  void run_shots(const programs::Schedule& schedule, std::size_t shots,
                 std::vector<IqPoint>& out);

  std::vector<RawTrace> acquire_raw(const programs::Schedule& schedule, const Config& cfg);

  // Accounting used by the executors and the request log.
  void record_program_load() { ++program_loads_; }
  void add_hardware_time(double seconds) { hardware_time_ += seconds; }
  std::size_t program_loads() const { return program_loads_; }
  double hardware_time() const { return hardware_time_; }

 private:
  struct Timeline;
  Timeline prepare(const programs::Schedule& schedule) const;
  void evolve(const Timeline& timeline, std::vector<IqPoint>& centers);
  double uniform(std::mt19937_64& engine) const;
  IqPoint normal_pair();

  QubitModel model_;
  BoardProfile profile_;
  OverheadModel overheads_;
  std::uint64_t seed_;
  double clock_phase_;
  std::mt19937_64 collapse_rng_;
  std::mt19937_64 noise_rng_;
  std::size_t program_loads_ = 0;
  double hardware_time_ = 0.0;
};

}  // namespace rfseq::sim
