// Runs each acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <thread>

#include <spdlog/spdlog.h>

#include "rfseq/bench.hpp"
#include "rfseq/client.hpp"
#include "rfseq/errors.hpp"
#include "rfseq/programs.hpp"
#include "rfseq/server.hpp"
#include "rfseq/wire.hpp"
#include "server_harness.hpp"
#include "support.hpp"

namespace {

using namespace rfseq;
using Clock = std::chrono::steady_clock;

// Collects failed checks; a criterion passes when none fail.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    std::string s;
    for (const auto& f : failures_) s += "\n    " + f;
    if (failed_ > failures_.size()) s += "\n    ... " + std::to_string(failed_ - failures_.size()) + " more";
    return s;
  }
  std::string note;

 private:
  std::vector<std::string> failures_;
  std::size_t failed_ = 0;
};

std::string num(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

wire::Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return wire::Bytes(std::istreambuf_iterator<char>(in), {});
}

// ---------------------------------------------------------------------------

void wire_golden(Check& c) {
  const auto t0 = Clock::now();
  const wire::Bytes expected{0x00, 0x00, 0x00, 0x02, 0x7B, 0x7D};
  c.expect(wire::frame_write(wire::to_bytes("{}")) == expected, "frame of {} differs from 00 00 00 02 7B 7D");
  c.expect(read_file(std::string(RFSEQ_GOLDEN_DIR) + "/frame_empty_object.bin") == expected,
           "golden file frame_empty_object.bin differs");

  testing::RequestGenerator gen(20240611);
  for (int k = 0; k < 1000; ++k) {
    const auto request = gen.request();
    const auto payload = wire::encode_request(request);
    wire::MemorySource source(wire::frame_write(payload));
    const auto back = wire::decode_request(wire::frame_read(source));
    c.expect(back == request, "request " + std::to_string(k) + " changed in round trip");
    c.expect(wire::encode_request(back) == payload, "request " + std::to_string(k) + " re-encodes differently");
  }
  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 10.0, "runtime " + num(elapsed) + " s");
  c.note = "1000 round trips in " + num(elapsed) + " s";
}

void ideal_time_exactness(Check& c) {
  const std::vector<double> durations{2e-6};
  const double t = bench::ideal_time(4096, durations, 300e-6);
  // 2e-6 and 300e-6 are not representable; the oracle is the exact value of
  // the binary inputs (exact in 64-bit mantissa), rounded once.
  const long double exact = 4096.0L * (static_cast<long double>(2e-6) + static_cast<long double>(300e-6));
  const double ulp = std::nextafter(1.236992, 2.0) - 1.236992;
  c.expect(t == static_cast<double>(exact), "not correctly rounded: " + num(t));
  c.expect(std::abs(t - 1.236992) <= ulp, "more than 1 ulp from 1.236992: " + num(t));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dur(0.0, 50e-6), relax(0.0, 500e-6);
  std::uniform_int_distribution<std::size_t> shots(1, 100000), count(0, 200), factor(2, 9);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> a(count(rng)), b(count(rng));
    for (auto& x : a) x = dur(rng);
    for (auto& x : b) x = dur(rng);
    const double r = relax(rng);
    const std::size_t n = shots(rng), k = factor(rng);
    auto ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const double whole = bench::ideal_time(n, ab, r);
    const double tol = 1e-13 * (whole + 1e-12);
    c.expect(std::abs(whole - (bench::ideal_time(n, a, r) + bench::ideal_time(n, b, r))) <= tol,
             "additivity, trial " + std::to_string(trial));
    const double single = bench::ideal_time(n, a, r);
    c.expect(std::abs(bench::ideal_time(k * n, a, r) - static_cast<double>(k) * single) <= 1e-13 * (k * single + 1e-12),
             "linearity, trial " + std::to_string(trial));
  }
  c.note = "ideal_time = " + num(t);
}

// Same request executed as one RTS and as a per-point loop, each on its own
// copy of one backend so both consume identical random streams.
bool rts_matches_loop(const ExperimentRequest& r, const sim::Backend& origin, std::string& why) {
  sim::Backend rts = origin, loop = origin;
  const auto& board = origin.profile();
  const auto out = programs::execute_sweeps(r, programs::compile(r, board), rts);
  const auto grid = sweep_grid(r.sweepers);
  const std::size_t points = grid.assignments.size();
  for (std::size_t p = 0; p < points; ++p) {
    const auto single = programs::execute_sequence(
        programs::compile(programs::apply_assignment(r, grid.assignments[p]), board), r.cfg, loop);
    for (std::size_t ro = 0; ro < single.i.size(); ++ro) {
      if (out.i[ro * points + p] != single.i[ro] || out.q[ro * points + p] != single.q[ro]) {
        why = "point " + std::to_string(p);
        return false;
      }
    }
  }
  return true;
}

void sweep_semantics(Check& c) {
  using testing::sweeper;
  auto linear = [](double a, double b, int n, int k) { return n == 1 ? a : a + (b - a) * k / (n - 1); };
  auto close = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y)); };

  const std::vector<Sweeper> one{sweeper(Parameter::kAmplitude, 0, 0.1, 0.9, 3)};
  const std::vector<Sweeper> two{sweeper(Parameter::kAmplitude, 0, 0.1, 0.9, 3),
                                 sweeper(Parameter::kFrequency, 0, 4.99e9, 5.01e9, 4)};
  for (const auto* sweeps : {&one, &two}) {
    const auto grid = sweep_grid(*sweeps);
    std::vector<Assignment> oracle;
    const auto& s0 = (*sweeps)[0];
    for (int a = 0; a < s0.expts; ++a) {
      Assignment outer{{s0.parameters[0], s0.indexes[0], linear(s0.starts[0], s0.stops[0], s0.expts, a)}};
      if (sweeps->size() == 1) {
        oracle.push_back(outer);
        continue;
      }
      const auto& s1 = (*sweeps)[1];
      for (int b = 0; b < s1.expts; ++b) {
        auto both = outer;
        both.push_back({s1.parameters[0], s1.indexes[0], linear(s1.starts[0], s1.stops[0], s1.expts, b)});
        oracle.push_back(both);
      }
    }
    const std::size_t expected = sweeps->size() == 1 ? 3 : 12;
    c.expect(grid.assignments.size() == expected, "grid has " + std::to_string(grid.assignments.size()) + " points");
    c.expect(oracle.size() == expected, "oracle size");
    for (std::size_t p = 0; p < std::min(oracle.size(), grid.assignments.size()); ++p) {
      const auto& got = grid.assignments[p];
      bool same = got.size() == oracle[p].size();
      for (std::size_t u = 0; same && u < got.size(); ++u) {
        same = got[u].parameter == oracle[p][u].parameter && got[u].index == oracle[p][u].index &&
               close(got[u].value, oracle[p][u].value);
      }
      c.expect(same, "grid point " + std::to_string(p) + " differs from nested loop");
    }
  }

  sim::Backend origin(sim::QubitModel{}, testing::zcu216(), 1234);
  auto base = testing::sequence_request({testing::drive_pulse(0.0, 40e-9, 0.5), testing::readout_pulse(40e-9)}, 64);
  base.operation_code = OperationCode::kExecuteSweeps;
  base.qubits[0] = Qubit{0.0, 2};
  const std::vector<std::vector<Sweeper>> cases{
      {sweeper(Parameter::kFrequency, 0, 4.98e9, 5.02e9, 100)},
      {sweeper(Parameter::kAmplitude, 0, 0.0, 1.0, 50)},
      {sweeper(Parameter::kRelativePhase, 1, 0.0, 3.0, 20)},
      {sweeper(Parameter::kStart, 1, 40e-9, 20e-6, 25)},
      {sweeper(Parameter::kBias, 0, 0.0, 0.2, 15)},
      two,
      {sweeper(Parameter::kAmplitude, 0, 0.0, 1.0, 10), sweeper(Parameter::kFrequency, 0, 4.99e9, 5.01e9, 10)},
  };
  for (std::size_t k = 0; k < cases.size(); ++k) {
    auto r = base;
    r.sweepers = cases[k];
    std::string why;
    c.expect(rts_matches_loop(r, origin, why), "RTS case " + std::to_string(k) + " differs at " + why);
  }
  c.note = "3/12-point grids match nested loops; " + std::to_string(cases.size()) + " RTS grids bit-identical";
}

void feature_matrix(Check& c) {
  auto endpoint = bench::InProcessEndpoint(sim::Backend(sim::QubitModel{}, testing::zcu216(), 3));
  auto base = testing::sequence_request({testing::drive_pulse(0.0, 40e-9, 0.5), testing::readout_pulse(40e-9)}, 16);
  base.operation_code = OperationCode::kExecuteSweeps;
  base.qubits[0] = Qubit{0.0, 2};

  auto rejected = [&](Sweeper s, const std::string& message) {
    auto r = base;
    r.sweepers = {s};
    try {
      endpoint.execute(r);
      c.expect(false, message + ": accepted");
    } catch (const RemoteError& e) {
      c.expect(std::string(e.what()).find(message) != std::string::npos,
               "expected '" + message + "', got '" + e.what() + "'");
    }
  };
  rejected(testing::sweeper(Parameter::kDuration, 0, 20e-9, 60e-9, 3), "unsupported sweeper parameter: Duration");
  rejected(testing::sweeper(Parameter::kFrequency, 1, 5.79e9, 5.81e9, 3),
           "unsupported sweeper parameter: Frequency on readout pulse");
  c.expect(endpoint.backend().program_loads() == 0, "rejected sweeps reached the backend");

  const std::vector<Sweeper> supported{
      testing::sweeper(Parameter::kFrequency, 0, 4.98e9, 5.02e9, 5),
      testing::sweeper(Parameter::kAmplitude, 0, 0.0, 1.0, 5),
      testing::sweeper(Parameter::kRelativePhase, 1, 0.0, 3.0, 5),
      testing::sweeper(Parameter::kStart, 1, 40e-9, 2e-6, 5),
      testing::sweeper(Parameter::kBias, 0, 0.0, 0.2, 5),
  };
  for (const auto& s : supported) {
    auto r = base;
    r.sweepers = {s};
    try {
      const auto out = endpoint.execute(r);
      c.expect(out.shape == std::vector<std::size_t>{1, 5},
               std::string(display_name(s.parameters[0])) + " sweep has wrong shape");
    } catch (const std::exception& e) {
      c.expect(false, std::string(display_name(s.parameters[0])) + " sweep failed: " + e.what());
    }
  }
  c.note = "Duration and readout Frequency rejected; 5 supported parameters executed";
}

void physics_recovery(Check& c) {
  const auto t0 = Clock::now();
  sim::QubitModel model;
  testing::RunningServer srv(sim::Backend(model, testing::zcu216(), 42));
  bench::TcpEndpoint endpoint(srv.endpoint());

  auto t1p = bench::default_params(bench::ExperimentKind::kT1);
  t1p.shots = 4096;
  const double t1 = bench::estimate_t1(bench::run_experiment(bench::ExperimentKind::kT1, endpoint, t1p));
  c.expect(std::abs(t1 - model.t1) <= 0.05 * model.t1, "T1 " + num(t1));

  auto rp = bench::default_params(bench::ExperimentKind::kRabiAmplitude);
  rp.shots = 4096;
  const double pi_amp =
      bench::estimate_pi_amplitude(bench::run_experiment(bench::ExperimentKind::kRabiAmplitude, endpoint, rp));
  c.expect(std::abs(pi_amp - model.pi_amplitude) <= 0.03 * model.pi_amplitude, "pi amplitude " + num(pi_amp));

  auto sp = bench::default_params(bench::ExperimentKind::kQubitSpectroscopy);
  sp.shots = 4096;
  sp.flux_dac = 2;
  sp.bias = 0.1;
  const double fq = sim::bias_to_frequency(model, sp.bias);
  sp.drive_frequency = fq;
  sp.sweep_start = fq - 5e6;
  sp.sweep_stop = fq + 5e6;
  const double step = (sp.sweep_stop - sp.sweep_start) / static_cast<double>(sp.points - 1);
  const double peak =
      bench::spectroscopy_peak(bench::run_experiment(bench::ExperimentKind::kQubitSpectroscopy, endpoint, sp));
  c.expect(std::abs(peak - fq) <= step, "spectroscopy peak " + num(peak) + " vs " + num(fq));

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 60.0, "runtime " + num(elapsed) + " s");
  c.note = "T1 " + num(t1) + ", pi amp " + num(pi_amp) + ", peak offset " + num(peak - fq) + " Hz, " +
           num(elapsed) + " s";
}

// Solves erfc(x) = y by bisection; erfc is strictly decreasing.
double inverse_erfc(double y) {
  double lo = 0.0, hi = 6.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (std::erfc(mid) > y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

void assignment_fidelity(Check& c) {
  sim::QubitModel model;
  auto p = bench::default_params(bench::ExperimentKind::kSingleshot);
  p.shots = 5000;
  const double ratio = 2.0 * std::sqrt(2.0) * inverse_erfc(2.0 * (1.0 - 0.95));
  c.expect(std::abs(ratio - 3.29) < 0.01, "d/sigma " + num(ratio));
  // Readout blobs sit at +-1 scaled by the transmission at the readout frequency.
  const double d = 2.0 * sim::resonator_transmission(model, p.readout_frequency, 0);
  model.blob_sigma = d / ratio;
  bench::InProcessEndpoint endpoint(sim::Backend(model, testing::zcu216(), 2025));
  const auto ds = bench::run_experiment(bench::ExperimentKind::kSingleshot, endpoint, p);
  const double f = ds.fidelity.value_or(-1.0);
  c.expect(std::abs(f - 0.95) <= 0.02, "fidelity " + num(f));
  c.note = "d/sigma " + num(ratio) + ", fidelity " + num(f);
}

void scaling_law(Check& c) {
  const auto t0 = Clock::now();
  const std::vector<std::size_t> counts{1, 10, 100, 1000, 10000};
  const sim::OverheadModel overheads;
  auto run = [&](bench::ExperimentKind kind) {
    const auto p = bench::default_params(kind);
    bench::InProcessEndpoint endpoint(sim::Backend(sim::QubitModel{}, testing::zcu216(), 11));
    return bench::scaling_report(kind, counts, p.shots, p.relaxation, endpoint, overheads);
  };
  const auto rts = run(bench::ExperimentKind::kQubitSpectroscopy);
  const auto loop = run(bench::ExperimentKind::kResonatorSpectroscopy);
  c.expect(rts.size() == counts.size() && loop.size() == counts.size(), "missing rows");
  if (!c.ok()) return;
  for (std::size_t k = 1; k < rts.size(); ++k) {
    c.expect(rts[k].ratio <= rts[k - 1].ratio,
             "RTS ratio increases at N=" + std::to_string(counts[k]) + ": " + num(rts[k].ratio));
  }
  const double r_rts = rts.back().ratio, r_loop = loop.back().ratio;
  c.expect(r_rts < 1.2, "ratio_RTS(1e4) " + num(r_rts));
  c.expect(r_loop / r_rts > 10.0, "per-point/RTS at 1e4 " + num(r_loop / r_rts));

  auto rows = rts;
  rows.insert(rows.end(), loop.begin(), loop.end());
  const auto csv = bench::scaling_csv(rows);
  c.expect(bench::parse_scaling_csv(csv) == rows, "CSV round trip lost information");
  c.expect(bench::scaling_csv(bench::parse_scaling_csv(csv)) == csv, "CSV re-emission differs");

  const double elapsed = seconds_since(t0);
  c.expect(elapsed < 120.0, "runtime " + num(elapsed) + " s");
  c.note = "ratio_RTS(1e4) " + num(r_rts) + ", per-point/RTS " + num(r_loop / r_rts) + ", " + num(elapsed) + " s";
}

void server_robustness(Check& c) {
  const auto probe = testing::sequence_request({testing::readout_pulse(0.0)});
  {
    testing::RunningServer srv(sim::Backend(testing::quiet_model(), testing::zcu216(), 9));
    testing::PayloadFuzzer fuzz(31337, wire::frame_write(wire::encode_request(probe)));
    std::size_t bad_replies = 0;
    for (int k = 0; k < 10000; ++k) {
      try {
        const auto reply = testing::raw_exchange(srv.endpoint(), fuzz.next());
        wire::MemorySource src(reply);
        wire::decode_results(wire::frame_read(src));
      } catch (const std::exception&) {
        ++bad_replies;
      }
    }
    c.expect(bad_replies == 0, std::to_string(bad_replies) + " fuzzed payloads got no well-formed reply");
    try {
      const auto out = client::Client(srv.endpoint()).execute(probe);
      c.expect(out.shape == std::vector<std::size_t>{1}, "server answered oddly after fuzzing");
    } catch (const std::exception& e) {
      c.expect(false, std::string("server unusable after fuzzing: ") + e.what());
    }
  }

  {
    testing::RunningServer srv(sim::Backend(testing::quiet_model(), testing::zcu216(), 5));
    // Distinct readout frequencies identify each reply by its magnitude.
    const double f_a = 5.8e9, f_b = 5.8e9 + 0.8e6;
    auto lorentz = [](double f) {
      const double x = 2.0 * (f - 5.8e9) / 1e6;
      return 1.0 / (1.0 + x * x);
    };
    AcquisitionResult ra, rb;
    std::string err;
    auto worker = [&](double f, AcquisitionResult& out) {
      try {
        out = client::Client(srv.endpoint()).execute(testing::sequence_request({testing::readout_pulse(0.0, 1e-6, f)}, 200000));
      } catch (const std::exception& e) {
        err = e.what();
      }
    };
    std::thread ta(worker, f_a, std::ref(ra)), tb(worker, f_b, std::ref(rb));
    ta.join();
    tb.join();
    c.expect(err.empty(), "overlapping client failed: " + err);
    if (err.empty()) {
      c.expect(std::abs(std::hypot(ra.i[0], ra.q[0]) - lorentz(f_a)) < 1e-9, "client A got the wrong reply");
      c.expect(std::abs(std::hypot(rb.i[0], rb.q[0]) - lorentz(f_b)) < 1e-9, "client B got the wrong reply");
    }
    srv.wait_for_handled(2);
    const auto records = srv.server().records();
    c.expect(records.size() == 2 && records[0].finished <= records[1].started, "requests interleaved");
  }

  auto angle = [&](const net::Endpoint& e) {
    const auto out = client::Client(e).execute(probe);
    return std::atan2(out.q[0], out.i[0]);
  };
  std::vector<double> phases;
  for (std::uint64_t seed : {41, 42, 43}) {
    testing::RunningServer srv(sim::Backend(testing::quiet_model(), testing::zcu216(), seed));
    const double first = angle(srv.endpoint());
    for (int k = 0; k < 10; ++k) c.expect(angle(srv.endpoint()) == first, "clock phase drifted between connections");
    c.expect(srv.server().clock_phase() == sim::Backend(testing::quiet_model(), testing::zcu216(), seed).clock_phase(),
             "clock phase not a function of the seed");
    phases.push_back(first);
  }
  for (std::size_t a = 0; a < phases.size(); ++a) {
    for (std::size_t b = a + 1; b < phases.size(); ++b) {
      c.expect(std::abs(std::remainder(phases[a] - phases[b], 2.0 * M_PI)) > 1e-6, "restart kept the clock phase");
    }
  }
  c.note = "10000 fuzzed payloads answered; overlapping clients serialized; phase fixed per lifetime";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"wire golden vectors and codec round trip", wire_golden},
      {"ideal time exactness, linearity, additivity", ideal_time_exactness},
      {"sweep grid order and RTS/per-point equivalence", sweep_semantics},
      {"sweeper feature matrix enforcement", feature_matrix},
      {"physics recovery over TCP", physics_recovery},
      {"assignment fidelity", assignment_fidelity},
      {"overhead scaling law and CSV", scaling_law},
      {"server robustness and serialization", server_robustness},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Check c;
    try {
      criteria[k].second(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    std::cout << (c.ok() ? "[PASS]" : "[FAIL]") << " criterion " << k + 1 << ": " << criteria[k].first;
    if (!c.note.empty()) std::cout << " (" << c.note << ")";
    std::cout << c.summary() << std::endl;
    failed += c.ok() ? 0 : 1;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
