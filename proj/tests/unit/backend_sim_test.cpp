#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "rfseq/backend_sim.hpp"
#include "rfseq/errors.hpp"
#include "rfseq/programs.hpp"
#include "support.hpp"

namespace rfseq::sim {
namespace {

using testing::drive_pulse;
using testing::readout_pulse;
using testing::sequence_request;

constexpr double kTwoPi = 2.0 * std::numbers::pi;

programs::Schedule schedule_of(const ExperimentRequest& r) {
  return programs::compile(r, testing::zcu216());
}

// Fraction of shots that landed on the excited blob (noiseless readout).
double excited_fraction(Backend& backend, const programs::Schedule& s, std::size_t shots) {
  std::vector<IqPoint> out;
  backend.run_shots(s, shots, out);
  const auto& m = backend.model();
  const double ph = backend.clock_phase();
  auto rot = [&](IqPoint p) {
    return IqPoint{p.i * std::cos(ph) - p.q * std::sin(ph), p.i * std::sin(ph) + p.q * std::cos(ph)};
  };
  const auto disc = Discriminator::from_centers(rot(m.blob_0), rot(m.blob_1));
  std::size_t excited = 0;
  for (const auto& p : out) excited += classify(p.i, p.q, disc);
  return static_cast<double>(excited) / static_cast<double>(shots);
}

TEST(ClockPhase, DeterministicPerSeedAndInRange) {
  const QubitModel m;
  EXPECT_EQ(Backend(m, testing::zcu216(), 0).clock_phase(), Backend(m, testing::zcu216(), 0).clock_phase());
  EXPECT_NE(Backend(m, testing::zcu216(), 0).clock_phase(), Backend(m, testing::zcu216(), 1).clock_phase());
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const double ph = Backend(m, testing::zcu216(), seed).clock_phase();
    ASSERT_GE(ph, 0.0);
    ASSERT_LT(ph, kTwoPi);
  }
}

TEST(RunShot, NoiselessGroundIsScaledBlobCenter) {
  Backend b(testing::quiet_model(), testing::zcu216(), 9);
  const double f = 5.8e9 + 0.3e6;
  const auto s = schedule_of(sequence_request({readout_pulse(0.0, 1e-6, f)}));
  const auto shot = b.run_shot(s);
  ASSERT_EQ(shot.size(), 1u);
  const double x = 2.0 * 0.3e6 / 1e6;
  const double a = 1.0 / (1.0 + x * x);
  EXPECT_NEAR(std::hypot(shot[0].i, shot[0].q), a, 1e-12);
  EXPECT_NEAR(std::remainder(std::atan2(shot[0].q, shot[0].i) - b.clock_phase(), kTwoPi), 0.0, 1e-12);
}

TEST(RunShot, CanonicalPreparationProbabilities) {
  const QubitModel m = testing::quiet_model();
  const std::size_t n = 20000;
  struct Case {
    const char* name;
    std::vector<Pulse> pulses;
    double p;
  };
  const double pi_len = m.reference_duration;
  const std::vector<Case> cases{
      {"ground", {readout_pulse(0.0)}, 0.0},
      {"pi", {drive_pulse(0.0, pi_len, m.pi_amplitude), readout_pulse(pi_len)}, 1.0},
      {"pi + T1", {drive_pulse(0.0, pi_len, m.pi_amplitude), readout_pulse(pi_len + m.t1)}, std::exp(-1.0)},
  };
  for (const auto& c : cases) {
    Backend b(m, testing::zcu216(), 1234);
    const double measured = excited_fraction(b, schedule_of(sequence_request(c.pulses)), n);
    const double tol = 4.0 * std::sqrt(c.p * (1.0 - c.p) / static_cast<double>(n)) + 1e-12;
    EXPECT_NEAR(measured, c.p, tol) << c.name;
  }
}

TEST(RunShot, PiPulseOnlyResonantAtBiasedFrequency) {
  const QubitModel m = testing::quiet_model();
  const double bias = 0.2;
  const double fq = bias_to_frequency(m, bias);
  auto r = sequence_request({drive_pulse(0.0, 40e-9, 0.5, fq), readout_pulse(40e-9)});
  r.qubits[0] = Qubit{bias, 2};
  Backend on(m, testing::zcu216(), 2);
  EXPECT_NEAR(excited_fraction(on, schedule_of(r), 2000), 1.0, 1e-9);

  r.sequence[0].frequency = m.qubit_frequency_max;  // detuned by hundreds of MHz
  Backend off(m, testing::zcu216(), 2);
  EXPECT_LT(excited_fraction(off, schedule_of(r), 2000), 0.01);

  // A flux pulse over the drive brings the sweet-spot tone back on resonance.
  r.sequence.push_back(testing::flux_pulse(0.0, 40e-9, -bias, 2));
  Backend pulsed(m, testing::zcu216(), 2);
  EXPECT_NEAR(excited_fraction(pulsed, schedule_of(r), 2000), 1.0, 1e-9);
}

TEST(RunShot, DeterministicForSeedAndRequest) {
  const auto s = schedule_of(sequence_request({drive_pulse(0.0, 40e-9, 0.3), readout_pulse(40e-9)}));
  Backend a(QubitModel{}, testing::zcu216(), 55), b(QubitModel{}, testing::zcu216(), 55);
  std::vector<IqPoint> x, y;
  a.run_shots(s, 500, x);
  b.run_shots(s, 500, y);
  EXPECT_EQ(x, y);
}

TEST(PhaseCoherence, ConstantWithinBackendRigidAcrossSeeds) {
  const auto s = schedule_of(sequence_request({readout_pulse(0.0)}));
  Backend a(testing::quiet_model(), testing::zcu216(), 100);
  Backend b(testing::quiet_model(), testing::zcu216(), 200);
  const auto first = a.run_shot(s)[0];
  for (int k = 0; k < 50; ++k) {
    const auto again = a.run_shot(s)[0];
    EXPECT_EQ(again, first);
  }
  const auto other = b.run_shot(s)[0];
  const double shift = std::atan2(other.q, other.i) - std::atan2(first.q, first.i);
  EXPECT_NEAR(std::remainder(shift - (b.clock_phase() - a.clock_phase()), kTwoPi), 0.0, 1e-12);
  EXPECT_NEAR(std::hypot(other.i, other.q), std::hypot(first.i, first.q), 1e-12);
}

TEST(BiasToFrequency, Examples) {
  QubitModel m;
  m.flux_offset = 0.13;
  m.flux_period = 0.8;
  EXPECT_DOUBLE_EQ(bias_to_frequency(m, 0.13), m.qubit_frequency_max);
  EXPECT_NEAR(bias_to_frequency(m, 0.13 + 0.4), 0.0, 1e-3 * m.qubit_frequency_max);
  const double oracle = m.qubit_frequency_max * std::sqrt(std::cos(std::numbers::pi / 6.0));
  EXPECT_NEAR(bias_to_frequency(m, 0.13 + 0.8 / 6.0), oracle, 1e-6);
  EXPECT_NEAR(oracle / m.qubit_frequency_max, 0.9306, 5e-5);
}

TEST(BiasToFrequency, PeriodicAndEven) {
  QubitModel m;
  m.flux_offset = -0.05;
  m.flux_period = 1.7;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 500; ++k) {
    const double b = u(rng);
    EXPECT_NEAR(bias_to_frequency(m, b + m.flux_period), bias_to_frequency(m, b), 1e-3);
    EXPECT_NEAR(bias_to_frequency(m, m.flux_offset + b), bias_to_frequency(m, m.flux_offset - b), 1e-3);
  }
}

TEST(WallTime, AffineOverheadModel) {
  const OverheadModel o{0.05, 0.2};
  EXPECT_EQ(simulated_wall_time(0, 0, 1.5, o), 1.5);
  EXPECT_DOUBLE_EQ(simulated_wall_time(1, 1, 1.5, o), 1.5 + 0.05 + 0.2);
  EXPECT_DOUBLE_EQ(simulated_wall_time(1000, 1000, 2.0, o), 2.0 + 1000 * 0.25);
  for (std::size_t n : {0u, 3u, 17u}) {
    const double d_load = simulated_wall_time(n + 1, 4, 1.0, o) - simulated_wall_time(n, 4, 1.0, o);
    const double d_conn = simulated_wall_time(4, n + 1, 1.0, o) - simulated_wall_time(4, n, 1.0, o);
    EXPECT_NEAR(d_load, 0.2, 1e-12);
    EXPECT_NEAR(d_conn, 0.05, 1e-12);
  }
}

TEST(Classify, CentersAndTies) {
  const IqPoint zero{1.0, 0.5}, one{-0.5, -1.0};
  const auto d = Discriminator::from_centers(zero, one);
  EXPECT_EQ(classify(one.i, one.q, d), 1);
  EXPECT_EQ(classify(zero.i, zero.q, d), 0);
  // Midpoint lies exactly on the threshold.
  const auto d_axis = Discriminator::from_centers({1.0, 0.0}, {-1.0, 0.0});
  EXPECT_EQ(classify(0.0, 0.0, d_axis), 0);
}

TEST(Classify, FidelityAtSeparationForNinetyFivePercent) {
  // F = 1 - erfc(d / (2 sqrt(2) sigma)) / 2 = 0.95  =>  d / sigma = 2 sqrt(2) erfcinv(0.1).
  // erfcinv(0.1) solved here by bisection on std::erfc.
  double lo = 0.0, hi = 3.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (std::erfc(mid) > 0.1 ? lo : hi) = mid;
  }
  const double ratio = 2.0 * std::sqrt(2.0) * lo;
  EXPECT_NEAR(ratio, 3.29, 0.005);

  QubitModel m;
  m.blob_0 = {1.0, 0.0};
  m.blob_1 = {-1.0, 0.0};
  m.blob_sigma = 2.0 * resonator_transmission(m, m.resonator_frequency + m.dispersive_shift / 2, 0) / ratio;
  const std::size_t shots = 5000;
  auto ground = sequence_request({readout_pulse(40e-9)});
  auto excited = sequence_request({drive_pulse(0.0, 40e-9, m.pi_amplitude), readout_pulse(40e-9)});
  Backend b(m, testing::zcu216(), 808);
  std::vector<IqPoint> g, e;
  b.run_shots(schedule_of(ground), shots, g);
  b.run_shots(schedule_of(excited), shots, e);
  IqPoint cg{}, ce{};
  for (const auto& p : g) cg = {cg.i + p.i / shots, cg.q + p.q / shots};
  for (const auto& p : e) ce = {ce.i + p.i / shots, ce.q + p.q / shots};
  const auto d = Discriminator::from_centers(cg, ce);
  std::size_t wrong = 0;
  for (const auto& p : g) wrong += classify(p.i, p.q, d) == 1;
  for (const auto& p : e) wrong += classify(p.i, p.q, d) == 0;
  const double fidelity = 1.0 - static_cast<double>(wrong) / (2.0 * shots);
  EXPECT_NEAR(fidelity, 0.95, 0.02);
}

TEST(AcquireRaw, NoiselessIsConstant) {
  Backend b(testing::quiet_model(), testing::zcu216(), 6);
  Config cfg;
  cfg.reps = 10;
  const auto traces = b.acquire_raw(schedule_of(sequence_request({readout_pulse(0.0)})), cfg);
  ASSERT_EQ(traces.size(), 1u);
  for (double v : traces[0].i) EXPECT_EQ(v, traces[0].i.front());
  for (double v : traces[0].q) EXPECT_EQ(v, traces[0].q.front());
}

TEST(AcquireRaw, SeriesMeanVarianceMatchesIntegratedShot) {
  QubitModel m;  // noise on, ground state only
  const QubitModel quiet = testing::quiet_model();
  const auto s = schedule_of(sequence_request({readout_pulse(0.0, 0.2e-6)}));
  Config cfg;
  const int trials = 4000;
  std::vector<double> raw_means, integrated;
  for (int t = 0; t < trials; ++t) {
    Backend a(m, testing::zcu216(), 10000 + static_cast<std::uint64_t>(t));
    Backend b(m, testing::zcu216(), 90000 + static_cast<std::uint64_t>(t));
    // Each seed has its own clock phase; compare deviations from the noiseless center.
    Backend a_center(quiet, testing::zcu216(), 10000 + static_cast<std::uint64_t>(t));
    Backend b_center(quiet, testing::zcu216(), 90000 + static_cast<std::uint64_t>(t));
    const auto trace = a.acquire_raw(s, cfg)[0];
    double sum = 0.0;
    for (double v : trace.i) sum += v;
    raw_means.push_back(sum / static_cast<double>(trace.i.size()) - a_center.run_shot(s)[0].i);
    integrated.push_back(b.run_shot(s)[0].i - b_center.run_shot(s)[0].i);
  }
  auto variance = [](const std::vector<double>& v) {
    double mean = 0.0, ss = 0.0;
    for (double x : v) mean += x / static_cast<double>(v.size());
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
  };
  const double ratio = variance(raw_means) / variance(integrated);
  EXPECT_NEAR(ratio, 1.0, 0.10);
  EXPECT_NEAR(variance(integrated), m.blob_sigma * m.blob_sigma, 0.1 * m.blob_sigma * m.blob_sigma);
}

TEST(Model, DefaultFileMatchesDefaults) {
  const QubitModel m = load_model(std::string(RFSEQ_DATA_DIR) + "/default_model.json");
  EXPECT_EQ(m, QubitModel{});
  EXPECT_TRUE(validate_model(m).empty());
  EXPECT_EQ(parse_model(model_to_json(m)), m);
}

TEST(Model, StrictKeysAndValidation) {
  std::string json = model_to_json(QubitModel{});
  std::string extra = json;
  extra.insert(extra.find('{') + 1, "\"colour\": 1,");
  EXPECT_THROW(parse_model(extra), DecodeError);
  QubitModel bad;
  bad.t1 = -1.0;
  EXPECT_FALSE(validate_model(bad).empty());
  EXPECT_THROW(Backend(bad, testing::zcu216(), 0), InvalidArgument);
}

}  // namespace
}  // namespace rfseq::sim
