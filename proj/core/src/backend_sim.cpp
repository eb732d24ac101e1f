#include "rfseq/backend_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "rfseq/errors.hpp"

namespace rfseq::sim {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

IqPoint rotate(IqPoint p, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {p.i * c - p.q * s, p.i * s + p.q * c};
}

}  // namespace

// ---------------------------------------------------------------------------
// Model

std::vector<std::string> validate_model(const QubitModel& m) {
  std::vector<std::string> out;
  const double values[] = {m.resonator_frequency, m.resonator_linewidth, m.dispersive_shift,
                           m.qubit_frequency_max, m.flux_offset,         m.flux_period,
                           m.pi_amplitude,        m.reference_duration,  m.t1,
                           m.t2,                  m.blob_0.i,            m.blob_0.q,
                           m.blob_1.i,            m.blob_1.q,            m.blob_sigma};
  if (!std::all_of(std::begin(values), std::end(values), [](double v) { return std::isfinite(v); })) {
    out.emplace_back("model contains non-finite values");
    return out;
  }
  if (!(m.resonator_linewidth > 0.0)) out.emplace_back("resonator_linewidth must be > 0");
  if (!(m.blob_sigma >= 0.0)) out.emplace_back("blob_sigma must be >= 0");
  if (!(m.pi_amplitude > 0.0 && m.pi_amplitude <= 1.0)) {
    out.emplace_back("pi_amplitude must be in (0, 1]");
  }
  if (!(m.reference_duration > 0.0)) out.emplace_back("reference_duration must be > 0");
  if (!(m.t1 > 0.0) || !(m.t2 > 0.0)) out.emplace_back("T1 and T2 must be > 0");
  if (m.t2 > 2.0 * m.t1) out.emplace_back("T2 must not exceed 2 T1");
  if (m.flux_period == 0.0) out.emplace_back("flux_period must be nonzero");
  if (m.qubit_frequency_max < 0.0 || m.resonator_frequency < 0.0) {
    out.emplace_back("frequencies must be >= 0");
  }
  return out;
}

namespace {

const char* const kModelKeys[] = {
    "resonator_frequency", "resonator_linewidth", "dispersive_shift", "qubit_frequency_max",
    "flux_offset",         "flux_period",         "pi_amplitude",     "reference_duration",
    "T1",                  "T2",                  "blob_0",           "blob_1",
    "blob_sigma"};

double number_at(const nlohmann::json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_number()) throw DecodeError(fmt::format("type mismatch at {}: expected number", key));
  return v.get<double>();
}

IqPoint point_at(const nlohmann::json& doc, const char* key) {
  const auto& v = doc.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw DecodeError(fmt::format("type mismatch at {}: expected [i, q]", key));
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

QubitModel parse_model(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DecodeError(std::string("malformed model JSON: ") + e.what());
  }
  if (!doc.is_object()) throw DecodeError("model must be a JSON object");
  for (const char* key : kModelKeys) {
    if (!doc.contains(key)) throw DecodeError(fmt::format("missing key: {}", key));
  }
  for (const auto& [key, value] : doc.items()) {
    if (std::find_if(std::begin(kModelKeys), std::end(kModelKeys),
                     [&](const char* k) { return key == k; }) == std::end(kModelKeys)) {
      throw DecodeError("unexpected key: " + key);
    }
  }

  QubitModel m;
  m.resonator_frequency = number_at(doc, "resonator_frequency");
  m.resonator_linewidth = number_at(doc, "resonator_linewidth");
  m.dispersive_shift = number_at(doc, "dispersive_shift");
  m.qubit_frequency_max = number_at(doc, "qubit_frequency_max");
  m.flux_offset = number_at(doc, "flux_offset");
  m.flux_period = number_at(doc, "flux_period");
  m.pi_amplitude = number_at(doc, "pi_amplitude");
  m.reference_duration = number_at(doc, "reference_duration");
  m.t1 = number_at(doc, "T1");
  m.t2 = number_at(doc, "T2");
  m.blob_0 = point_at(doc, "blob_0");
  m.blob_1 = point_at(doc, "blob_1");
  m.blob_sigma = number_at(doc, "blob_sigma");

  const auto problems = validate_model(m);
  if (!problems.empty()) throw InvalidArgument("invalid qubit model: " + problems.front());
  return m;
}

QubitModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open model file: " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_model(text.str());
}

std::string model_to_json(const QubitModel& m) {
  nlohmann::ordered_json doc;
  doc["resonator_frequency"] = m.resonator_frequency;
  doc["resonator_linewidth"] = m.resonator_linewidth;
  doc["dispersive_shift"] = m.dispersive_shift;
  doc["qubit_frequency_max"] = m.qubit_frequency_max;
  doc["flux_offset"] = m.flux_offset;
  doc["flux_period"] = m.flux_period;
  doc["pi_amplitude"] = m.pi_amplitude;
  doc["reference_duration"] = m.reference_duration;
  doc["T1"] = m.t1;
  doc["T2"] = m.t2;
  doc["blob_0"] = {m.blob_0.i, m.blob_0.q};
  doc["blob_1"] = {m.blob_1.i, m.blob_1.q};
  doc["blob_sigma"] = m.blob_sigma;
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Closed forms

double bias_to_frequency(const QubitModel& m, double flux_level) {
  const double c = std::cos(kPi * (flux_level - m.flux_offset) / m.flux_period);
  return m.qubit_frequency_max * std::sqrt(std::abs(c));
}

double resonator_transmission(const QubitModel& m, double readout_frequency, int state) {
  const double detuning = readout_frequency - m.resonator_frequency - state * m.dispersive_shift;
  const double x = 2.0 * detuning / m.resonator_linewidth;
  return 1.0 / (1.0 + x * x);
}

double simulated_wall_time(std::size_t program_loads, std::size_t connections, double ideal,
                           const OverheadModel& o) {
  return ideal + static_cast<double>(connections) * o.connection_overhead +
         static_cast<double>(program_loads) * o.program_load_overhead;
}

Discriminator Discriminator::from_centers(IqPoint zero, IqPoint one) {
  Discriminator d;
  d.axis_angle = std::atan2(one.q - zero.q, one.i - zero.i);
  const double c = std::cos(d.axis_angle);
  const double s = std::sin(d.axis_angle);
  d.threshold = 0.5 * ((zero.i + one.i) * c + (zero.q + one.q) * s);
  return d;
}

int classify(double i, double q, const Discriminator& d) {
  const double projection = i * std::cos(d.axis_angle) + q * std::sin(d.axis_angle);
  return projection > d.threshold ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Backend

struct Backend::Timeline {
  enum class Op { kRotate, kMeasure };
  struct Step {
    Op op = Op::kRotate;
    double start = 0.0;
    double end = 0.0;
    double theta = 0.0;
    double axis = 0.0;
    std::size_t acquisition = 0;
    IqPoint center_0;
    IqPoint center_1;
  };
  std::vector<Step> steps;
  std::size_t acquisitions = 0;
};

Backend::Backend(QubitModel model, BoardProfile profile, std::uint64_t seed,
                 OverheadModel overheads)
    : model_(model),
      profile_(std::move(profile)),
      overheads_(overheads),
      seed_(seed),
      collapse_rng_(splitmix64(seed ^ 0x636f6c6c61707365ull)),
      noise_rng_(splitmix64(seed ^ 0x6e6f697365000000ull)) {
  const auto problems = validate_model(model_);
  if (!problems.empty()) throw InvalidArgument("invalid qubit model: " + problems.front());
  std::mt19937_64 phase_rng(splitmix64(seed));
  clock_phase_ = 2.0 * kPi * uniform(phase_rng);
}

double Backend::uniform(std::mt19937_64& engine) const {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;  // [0, 1)
}

IqPoint Backend::normal_pair() {
  const double u1 = 1.0 - uniform(noise_rng_);  // (0, 1]
  const double u2 = uniform(noise_rng_);
  const double r = std::sqrt(-2.0 * std::log(u1));
  return {r * std::cos(2.0 * kPi * u2), r * std::sin(2.0 * kPi * u2)};
}

Backend::Timeline Backend::prepare(const programs::Schedule& s) const {
  using programs::ScheduledEvent;
  Timeline t;
  t.acquisitions = s.acquisitions.size();

  double static_bias = 0.0;
  if (s.flux_dac) {
    if (auto it = s.static_biases.find(*s.flux_dac); it != s.static_biases.end()) {
      static_bias = it->second;
    }
  }
  auto flux_level_at = [&](double time) {
    double level = static_bias;
    if (!s.flux_dac) return level;
    for (const ScheduledEvent& e : s.events) {
      if (e.kind != PulseKind::kFlux || e.channel != *s.flux_dac) continue;
      if (s.event_start(e) <= time && time < s.event_end(e)) level += e.amplitude;
    }
    return level;
  };

  for (const ScheduledEvent& e : s.events) {
    if (e.kind != PulseKind::kDrive || e.amplitude == 0.0) continue;
    Timeline::Step step;
    step.op = Timeline::Op::kRotate;
    step.start = s.event_start(e);
    step.end = s.event_end(e);
    const double qubit_frequency =
        bias_to_frequency(model_, flux_level_at(0.5 * (step.start + step.end)));
    const double rabi = std::abs(e.amplitude) / model_.pi_amplitude /
                        (2.0 * model_.reference_duration);
    const double x = 2.0 * (e.frequency - qubit_frequency) / rabi;
    const double lineshape = 1.0 / (1.0 + x * x);
    step.theta = kPi * e.envelope_area / (model_.pi_amplitude * model_.reference_duration) *
                 lineshape;
    step.axis = e.phase;
    t.steps.push_back(step);
  }

  for (std::size_t k = 0; k < s.acquisitions.size(); ++k) {
    const auto& w = s.acquisitions[k];
    Timeline::Step step;
    step.op = Timeline::Op::kMeasure;
    step.start = s.window_start(w);
    step.end = step.start;
    step.acquisition = k;
    const double angle = clock_phase_ + w.phase;
    const double a0 = resonator_transmission(model_, w.frequency, 0);
    const double a1 = resonator_transmission(model_, w.frequency, 1);
    step.center_0 = rotate({a0 * model_.blob_0.i, a0 * model_.blob_0.q}, angle);
    step.center_1 = rotate({a1 * model_.blob_1.i, a1 * model_.blob_1.q}, angle);
    t.steps.push_back(step);
  }

  std::stable_sort(t.steps.begin(), t.steps.end(), [](const auto& a, const auto& b) {
    if (a.start != b.start) return a.start < b.start;
    return a.op == Timeline::Op::kRotate && b.op == Timeline::Op::kMeasure;
  });
  return t;
}

void Backend::evolve(const Timeline& t, std::vector<IqPoint>& centers) {
  // Bloch vector, ground state at z = +1.
  double x = 0.0, y = 0.0, z = 1.0;
  double now = 0.0;
  centers.assign(t.acquisitions, IqPoint{});

  for (const auto& step : t.steps) {
    const double idle = step.start - now;
    if (idle > 0.0) {
      const double relax = std::exp(-idle / model_.t1);
      const double dephase = std::exp(-idle / model_.t2);
      z = 1.0 - (1.0 - z) * relax;
      x *= dephase;
      y *= dephase;
    }
    if (step.op == Timeline::Op::kRotate) {
      // Rodrigues rotation about (cos axis, sin axis, 0).
      const double nx = std::cos(step.axis);
      const double ny = std::sin(step.axis);
      const double c = std::cos(step.theta);
      const double s = std::sin(step.theta);
      const double dot = nx * x + ny * y;
      const double cx = ny * z;
      const double cy = -nx * z;
      const double cz = nx * y - ny * x;
      const double x2 = x * c + cx * s + nx * dot * (1.0 - c);
      const double y2 = y * c + cy * s + ny * dot * (1.0 - c);
      const double z2 = z * c + cz * s;
      x = x2;
      y = y2;
      z = z2;
      now = std::max(now, step.end);
    } else {
      const double p_excited = std::clamp((1.0 - z) / 2.0, 0.0, 1.0);
      const bool excited = uniform(collapse_rng_) < p_excited;
      x = 0.0;
      y = 0.0;
      z = excited ? -1.0 : 1.0;
      centers[step.acquisition] = excited ? step.center_1 : step.center_0;
      now = std::max(now, step.start);
    }
  }
}

std::vector<IqPoint> Backend::run_shot(const programs::Schedule& schedule) {
  std::vector<IqPoint> out;
  run_shots(schedule, 1, out);
  return out;
}

void Backend::run_shots(const programs::Schedule& schedule, std::size_t shots,
                        std::vector<IqPoint>& out) {
  const Timeline timeline = prepare(schedule);
  std::vector<IqPoint> centers;
  out.reserve(out.size() + shots * timeline.acquisitions);
  for (std::size_t shot = 0; shot < shots; ++shot) {
    evolve(timeline, centers);
    for (const IqPoint& c : centers) {
      const IqPoint n = normal_pair();
      out.push_back({c.i + model_.blob_sigma * n.i, c.q + model_.blob_sigma * n.q});
    }
  }
}

std::vector<RawTrace> Backend::acquire_raw(const programs::Schedule& schedule, const Config& cfg) {
  const Timeline timeline = prepare(schedule);
  std::vector<RawTrace> traces(schedule.acquisitions.size());
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const auto n = static_cast<std::size_t>(schedule.acquisitions[k].length);
    traces[k].i.assign(n, 0.0);
    traces[k].q.assign(n, 0.0);
  }

  const auto shots = static_cast<std::size_t>(std::max(cfg.shots(), 1));
  std::vector<IqPoint> centers;
  for (std::size_t shot = 0; shot < shots; ++shot) {
    evolve(timeline, centers);
    for (std::size_t k = 0; k < traces.size(); ++k) {
      auto& trace = traces[k];
      const double sigma =
          model_.blob_sigma * std::sqrt(static_cast<double>(trace.i.size()));
      for (std::size_t s = 0; s < trace.i.size(); ++s) {
        const IqPoint n = normal_pair();
        trace.i[s] += centers[k].i + sigma * n.i;
        trace.q[s] += centers[k].q + sigma * n.q;
      }
    }
  }
  for (auto& trace : traces) {
    for (double& v : trace.i) v /= static_cast<double>(shots);
    for (double& v : trace.q) v /= static_cast<double>(shots);
  }
  return traces;
}

}  // namespace rfseq::sim
