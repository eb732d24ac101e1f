#include "rfseq/wire.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <initializer_list>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

#include "rfseq/errors.hpp"

namespace rfseq::wire {

using nlohmann::json;
using nlohmann::ordered_json;

MemorySource::MemorySource(Bytes data, std::size_t chunk)
    : data_(std::move(data)), chunk_(std::max<std::size_t>(chunk, 1)) {}

std::size_t MemorySource::read_some(std::span<std::uint8_t> buffer) {
  const std::size_t n = std::min({buffer.size(), chunk_, data_.size() - offset_});
  std::memcpy(buffer.data(), data_.data() + offset_, n);
  offset_ += n;
  return n;
}

void MemorySink::write_all(std::span<const std::uint8_t> bytes) {
  bytes_.insert(bytes_.end(), bytes.begin(), bytes.end());
}

std::array<std::uint8_t, kHeaderSize> frame_header(std::uint64_t payload_size) {
  if (payload_size == 0) throw FramingError("empty frame");
  if (payload_size > kMaxPayloadSize) {
    throw FramingError(fmt::format("payload of {} bytes exceeds 32-bit length", payload_size));
  }
  const auto n = static_cast<std::uint32_t>(payload_size);
  return {static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16),
          static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n)};
}

Bytes frame_write(std::span<const std::uint8_t> payload) {
  const auto header = frame_header(payload.size());
  Bytes out(kHeaderSize + payload.size());
  std::copy(header.begin(), header.end(), out.begin());
  std::copy(payload.begin(), payload.end(), out.begin() + kHeaderSize);
  return out;
}

namespace {

void read_exact(ByteSource& source, std::uint8_t* dst, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const std::size_t k = source.read_some({dst + got, n - got});
    if (k == 0) throw FramingError("truncated frame");
    got += k;
  }
}

}  // namespace

Bytes frame_read(ByteSource& source, std::uint64_t max_payload) {
  std::array<std::uint8_t, kHeaderSize> header{};
  read_exact(source, header.data(), header.size());
  const std::uint32_t length = (std::uint32_t{header[0]} << 24) |
                               (std::uint32_t{header[1]} << 16) |
                               (std::uint32_t{header[2]} << 8) | std::uint32_t{header[3]};
  if (length == 0) throw FramingError("empty frame");
  if (length > max_payload) {
    throw FramingError(fmt::format("frame too large: {} bytes (limit {})", length, max_payload));
  }

  constexpr std::size_t kChunk = 1 << 16;
  Bytes payload;
  while (payload.size() < length) {
    const std::size_t want = std::min<std::size_t>(kChunk, length - payload.size());
    const std::size_t old = payload.size();
    payload.resize(old + want);
    read_exact(source, payload.data() + old, want);
  }
  return payload;
}

Bytes to_bytes(std::string_view text) { return Bytes(text.begin(), text.end()); }

std::string to_string(std::span<const std::uint8_t> bytes) {
  return std::string(bytes.begin(), bytes.end());
}

// ---------------------------------------------------------------------------
// Encoding

namespace {

double checked(double v, std::string_view what) {
  if (!std::isfinite(v)) throw EncodeError(fmt::format("non-finite value in {}", what));
  return v;
}

ordered_json encode_shape(const PulseShape& shape) {
  ordered_json j;
  if (std::holds_alternative<Rectangular>(shape)) {
    j["name"] = "rectangular";
  } else if (const auto* g = std::get_if<Gaussian>(&shape)) {
    j["name"] = "gaussian";
    j["rel_sigma"] = checked(g->rel_sigma, "rel_sigma");
  } else if (const auto* d = std::get_if<Drag>(&shape)) {
    j["name"] = "drag";
    j["rel_sigma"] = checked(d->rel_sigma, "rel_sigma");
    j["beta"] = checked(d->beta, "beta");
  } else {
    const auto& a = std::get<Arbitrary>(shape);
    j["name"] = "arbitrary";
    ordered_json i = ordered_json::array();
    ordered_json q = ordered_json::array();
    for (double v : a.i_samples) i.push_back(checked(v, "i_samples"));
    for (double v : a.q_samples) q.push_back(checked(v, "q_samples"));
    j["i_samples"] = std::move(i);
    j["q_samples"] = std::move(q);
  }
  return j;
}

template <typename T>
ordered_json optional_value(const std::optional<T>& v) {
  if (!v) return nullptr;
  if constexpr (std::is_floating_point_v<T>) {
    return checked(*v, "optional field");
  } else {
    return *v;
  }
}

// Error messages may quote arbitrary client bytes, so results replace invalid
// UTF-8 instead of failing; requests stay strict.
Bytes dump(const ordered_json& doc, bool lenient = false) {
  try {
    const auto handler = lenient ? nlohmann::json::error_handler_t::replace
                                 : nlohmann::json::error_handler_t::strict;
    return to_bytes(doc.dump(-1, ' ', false, handler));
  } catch (const nlohmann::json::exception& e) {
    throw EncodeError(std::string("cannot serialize: ") + e.what());
  }
}

}  // namespace

Bytes encode_request(const ExperimentRequest& r) {
  ordered_json doc;
  doc["operation_code"] = std::string(to_string(r.operation_code));

  ordered_json cfg;
  cfg["reps"] = r.cfg.reps;
  cfg["soft_avgs"] = r.cfg.soft_avgs;
  cfg["repetition_duration"] = checked(r.cfg.repetition_duration, "repetition_duration");
  cfg["average"] = r.cfg.average;
  doc["cfg"] = std::move(cfg);

  ordered_json seq = ordered_json::array();
  for (const auto& p : r.sequence) {
    ordered_json j;
    j["kind"] = std::string(to_string(p.kind));
    j["shape"] = encode_shape(p.shape);
    j["frequency"] = checked(p.frequency, "frequency");
    j["amplitude"] = checked(p.amplitude, "amplitude");
    j["relative_phase"] = checked(p.relative_phase, "relative_phase");
    j["start"] = checked(p.start, "start");
    j["duration"] = checked(p.duration, "duration");
    j["dac"] = p.dac;
    j["adc"] = optional_value(p.adc);
    j["name"] = p.name;
    seq.push_back(std::move(j));
  }
  doc["sequence"] = std::move(seq);

  ordered_json qubits = ordered_json::array();
  for (const auto& q : r.qubits) {
    ordered_json j;
    j["bias"] = optional_value(q.bias);
    j["dac"] = optional_value(q.dac);
    qubits.push_back(std::move(j));
  }
  doc["qubits"] = std::move(qubits);

  ordered_json sweepers = ordered_json::array();
  for (const auto& s : r.sweepers) {
    ordered_json j;
    ordered_json params = ordered_json::array();
    for (auto p : s.parameters) params.push_back(std::string(to_string(p)));
    j["parameters"] = std::move(params);
    j["indexes"] = s.indexes;
    ordered_json starts = ordered_json::array();
    ordered_json stops = ordered_json::array();
    for (double v : s.starts) starts.push_back(checked(v, "starts"));
    for (double v : s.stops) stops.push_back(checked(v, "stops"));
    j["starts"] = std::move(starts);
    j["stops"] = std::move(stops);
    j["expts"] = s.expts;
    sweepers.push_back(std::move(j));
  }
  doc["sweepers"] = std::move(sweepers);
  return dump(doc);
}

// ---------------------------------------------------------------------------
// Decoding

namespace {

json parse(std::span<const std::uint8_t> payload) {
  try {
    return json::parse(payload.begin(), payload.end());
  } catch (const json::parse_error& e) {
    throw DecodeError(std::string("malformed JSON: ") + e.what());
  }
}

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

// Checks the object carries exactly `keys`.
const json& object_at(const json& j, const std::string& path,
                      std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) {
    throw DecodeError(fmt::format("type mismatch at {}: expected object",
                                  path.empty() ? "<root>" : path));
  }
  for (auto key : keys) {
    if (!j.contains(key)) throw DecodeError("missing key: " + join(path, key));
  }
  for (const auto& [key, value] : j.items()) {
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      throw DecodeError("unexpected key: " + join(path, key));
    }
  }
  return j;
}

[[noreturn]] void mismatch(const std::string& path, std::string_view expected) {
  throw DecodeError(fmt::format("type mismatch at {}: expected {}", path, expected));
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) mismatch(path, "number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) mismatch(path, "integer");
  if (j.is_number_unsigned()) {
    const auto v = j.get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
      mismatch(path, "32-bit integer");
    }
    return static_cast<int>(v);
  }
  const auto v = j.get<std::int64_t>();
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    mismatch(path, "32-bit integer");
  }
  return static_cast<int>(v);
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) mismatch(path, "boolean");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) mismatch(path, "string");
  return j.get<std::string>();
}

const json& get_array(const json& j, const std::string& path) {
  if (!j.is_array()) mismatch(path, "array");
  return j;
}

std::vector<double> get_numbers(const json& j, const std::string& path) {
  std::vector<double> out;
  std::size_t k = 0;
  for (const auto& v : get_array(j, path)) {
    out.push_back(get_number(v, fmt::format("{}[{}]", path, k++)));
  }
  return out;
}

PulseShape decode_shape(const json& j, const std::string& path) {
  if (!j.is_object()) mismatch(path, "object");
  if (!j.contains("name")) throw DecodeError("missing key: " + join(path, "name"));
  const std::string name = get_string(j.at("name"), join(path, "name"));
  if (name == "rectangular") {
    object_at(j, path, {"name"});
    return Rectangular{};
  }
  if (name == "gaussian") {
    object_at(j, path, {"name", "rel_sigma"});
    return Gaussian{get_number(j.at("rel_sigma"), join(path, "rel_sigma"))};
  }
  if (name == "drag") {
    object_at(j, path, {"name", "rel_sigma", "beta"});
    return Drag{get_number(j.at("rel_sigma"), join(path, "rel_sigma")),
                get_number(j.at("beta"), join(path, "beta"))};
  }
  if (name == "arbitrary") {
    object_at(j, path, {"name", "i_samples", "q_samples"});
    return Arbitrary{get_numbers(j.at("i_samples"), join(path, "i_samples")),
                     get_numbers(j.at("q_samples"), join(path, "q_samples"))};
  }
  throw DecodeError(fmt::format("unknown pulse shape at {}: {}", path, name));
}

Pulse decode_pulse(const json& j, const std::string& path) {
  object_at(j, path, {"kind", "shape", "frequency", "amplitude", "relative_phase", "start",
                      "duration", "dac", "adc", "name"});
  Pulse p;
  const std::string kind = get_string(j.at("kind"), join(path, "kind"));
  const auto parsed = parse_pulse_kind(kind);
  if (!parsed) throw DecodeError(fmt::format("unknown pulse kind at {}: {}", path, kind));
  p.kind = *parsed;
  p.shape = decode_shape(j.at("shape"), join(path, "shape"));
  p.frequency = get_number(j.at("frequency"), join(path, "frequency"));
  p.amplitude = get_number(j.at("amplitude"), join(path, "amplitude"));
  p.relative_phase = get_number(j.at("relative_phase"), join(path, "relative_phase"));
  p.start = get_number(j.at("start"), join(path, "start"));
  p.duration = get_number(j.at("duration"), join(path, "duration"));
  p.dac = get_int(j.at("dac"), join(path, "dac"));
  if (!j.at("adc").is_null()) p.adc = get_int(j.at("adc"), join(path, "adc"));
  p.name = get_string(j.at("name"), join(path, "name"));
  return p;
}

Sweeper decode_sweeper(const json& j, const std::string& path) {
  object_at(j, path, {"parameters", "indexes", "starts", "stops", "expts"});
  Sweeper s;
  std::size_t k = 0;
  for (const auto& v : get_array(j.at("parameters"), join(path, "parameters"))) {
    const std::string item = fmt::format("{}[{}]", join(path, "parameters"), k++);
    const std::string text = get_string(v, item);
    const auto p = parse_parameter(text);
    if (!p) throw DecodeError(fmt::format("unknown sweeper parameter at {}: {}", item, text));
    s.parameters.push_back(*p);
  }
  k = 0;
  for (const auto& v : get_array(j.at("indexes"), join(path, "indexes"))) {
    s.indexes.push_back(get_int(v, fmt::format("{}[{}]", join(path, "indexes"), k++)));
  }
  s.starts = get_numbers(j.at("starts"), join(path, "starts"));
  s.stops = get_numbers(j.at("stops"), join(path, "stops"));
  s.expts = get_int(j.at("expts"), join(path, "expts"));
  return s;
}

}  // namespace

ExperimentRequest decode_request(std::span<const std::uint8_t> payload) {
  const json doc = parse(payload);
  object_at(doc, "", {"operation_code", "cfg", "sequence", "qubits", "sweepers"});

  ExperimentRequest r;
  const std::string op = get_string(doc.at("operation_code"), "operation_code");
  const auto code = parse_operation_code(op);
  if (!code) throw DecodeError("unknown operation_code: " + op);
  r.operation_code = *code;

  const json& cfg = object_at(doc.at("cfg"), "cfg",
                              {"reps", "soft_avgs", "repetition_duration", "average"});
  r.cfg.reps = get_int(cfg.at("reps"), "cfg.reps");
  r.cfg.soft_avgs = get_int(cfg.at("soft_avgs"), "cfg.soft_avgs");
  r.cfg.repetition_duration = get_number(cfg.at("repetition_duration"), "cfg.repetition_duration");
  r.cfg.average = get_bool(cfg.at("average"), "cfg.average");

  std::size_t k = 0;
  for (const auto& p : get_array(doc.at("sequence"), "sequence")) {
    r.sequence.push_back(decode_pulse(p, fmt::format("sequence[{}]", k++)));
  }
  k = 0;
  for (const auto& q : get_array(doc.at("qubits"), "qubits")) {
    const std::string path = fmt::format("qubits[{}]", k++);
    object_at(q, path, {"bias", "dac"});
    Qubit qubit;
    if (!q.at("bias").is_null()) qubit.bias = get_number(q.at("bias"), join(path, "bias"));
    if (!q.at("dac").is_null()) qubit.dac = get_int(q.at("dac"), join(path, "dac"));
    r.qubits.push_back(qubit);
  }
  k = 0;
  for (const auto& s : get_array(doc.at("sweepers"), "sweepers")) {
    r.sweepers.push_back(decode_sweeper(s, fmt::format("sweepers[{}]", k++)));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Results

namespace {

ordered_json nest(const std::vector<double>& flat, const std::vector<std::size_t>& shape,
                  std::size_t dim, std::size_t& offset) {
  ordered_json arr = ordered_json::array();
  const std::size_t n = shape[dim];
  for (std::size_t k = 0; k < n; ++k) {
    if (dim + 1 == shape.size()) {
      arr.push_back(checked(flat[offset++], "results"));
    } else {
      arr.push_back(nest(flat, shape, dim + 1, offset));
    }
  }
  return arr;
}

ordered_json nest(const std::vector<double>& flat, const std::vector<std::size_t>& shape) {
  std::size_t offset = 0;
  if (shape.empty()) return ordered_json::array();
  return nest(flat, shape, 0, offset);
}

std::vector<std::size_t> infer_shape(const json& j, const std::string& path) {
  std::vector<std::size_t> shape;
  const json* cur = &j;
  while (true) {
    if (!cur->is_array()) mismatch(path, "nested numeric array");
    shape.push_back(cur->size());
    if (cur->empty() || !cur->front().is_array()) break;
    cur = &cur->front();
  }
  return shape;
}

void flatten(const json& j, const std::vector<std::size_t>& shape, std::size_t dim,
             const std::string& path, std::vector<double>& out) {
  if (!j.is_array() || j.size() != shape[dim]) {
    throw DecodeError(fmt::format("ragged array at {}", path));
  }
  std::size_t k = 0;
  for (const auto& v : j) {
    const std::string item = fmt::format("{}[{}]", path, k++);
    if (dim + 1 == shape.size()) {
      out.push_back(get_number(v, item));
    } else {
      flatten(v, shape, dim + 1, item, out);
    }
  }
}

}  // namespace

Bytes encode_results(const ResponseEnvelope& envelope) {
  ordered_json doc;
  if (const auto* r = std::get_if<AcquisitionResult>(&envelope)) {
    if (r->i.size() != r->element_count() || r->q.size() != r->element_count()) {
      throw EncodeError("result arrays do not match their shape");
    }
    doc["status"] = "ok";
    doc["i"] = nest(r->i, r->shape);
    doc["q"] = nest(r->q, r->shape);
  } else {
    doc["status"] = "error";
    doc["message"] = std::get<ErrorReply>(envelope).message;
  }
  return dump(doc, true);
}

ResponseEnvelope decode_results(std::span<const std::uint8_t> payload) {
  const json doc = parse(payload);
  if (!doc.is_object()) mismatch("<root>", "object");
  if (!doc.contains("status")) throw DecodeError("missing key: status");
  const std::string status = get_string(doc.at("status"), "status");
  if (status == "error") {
    object_at(doc, "", {"status", "message"});
    return ErrorReply{get_string(doc.at("message"), "message")};
  }
  if (status != "ok") throw DecodeError("unknown status: " + status);
  object_at(doc, "", {"status", "i", "q"});

  AcquisitionResult r;
  r.shape = infer_shape(doc.at("i"), "i");
  flatten(doc.at("i"), r.shape, 0, "i", r.i);
  if (infer_shape(doc.at("q"), "q") != r.shape) {
    throw DecodeError("shape mismatch between i and q");
  }
  flatten(doc.at("q"), r.shape, 0, "q", r.q);
  return r;
}

}  // namespace rfseq::wire
