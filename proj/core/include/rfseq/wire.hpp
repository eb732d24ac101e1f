#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rfseq/components.hpp"

namespace rfseq::wire {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::size_t kHeaderSize = 4;
inline constexpr std::uint64_t kMaxPayloadSize = 0xFFFFFFFFull;

// Ordered byte stream. read_some blocks until at least one byte is available
// and returns 0 once the stream is closed.
class ByteSource {
 public:
  virtual ~ByteSource() = default;
  virtual std::size_t read_some(std::span<std::uint8_t> buffer) = 0;
};

class ByteSink {
 public:
  virtual ~ByteSink() = default;
  virtual void write_all(std::span<const std::uint8_t> bytes) = 0;
};

// In-memory source delivering at most `chunk` bytes per read.
class MemorySource final : public ByteSource {
 public:
  explicit MemorySource(Bytes data, std::size_t chunk = SIZE_MAX);
  std::size_t read_some(std::span<std::uint8_t> buffer) override;

 private:
  Bytes data_;
  std::size_t offset_ = 0;
  std::size_t chunk_;
};

class MemorySink final : public ByteSink {
 public:
  void write_all(std::span<const std::uint8_t> bytes) override;
  const Bytes& bytes() const { return bytes_; }

 private:
  Bytes bytes_;
};

// 4-byte big-endian length. Throws FramingError for 0 or > 2^32 - 1.
std::array<std::uint8_t, kHeaderSize> frame_header(std::uint64_t payload_size);

Bytes frame_write(std::span<const std::uint8_t> payload);

// Reads one complete frame. Throws FramingError("truncated frame") if the
// stream ends early, "empty frame" for a zero length, "frame too large" above
// max_payload. Payload memory grows with the bytes actually received.
Bytes frame_read(ByteSource& source, std::uint64_t max_payload = kMaxPayloadSize);

Bytes to_bytes(std::string_view text);
std::string to_string(std::span<const std::uint8_t> bytes);

Bytes encode_request(const ExperimentRequest& request);
ExperimentRequest decode_request(std::span<const std::uint8_t> payload);

struct ErrorReply {
  std::string message;
  bool operator==(const ErrorReply&) const = default;
};

using ResponseEnvelope = std::variant<AcquisitionResult, ErrorReply>;

Bytes encode_results(const ResponseEnvelope& envelope);
ResponseEnvelope decode_results(std::span<const std::uint8_t> payload);

}  // namespace rfseq::wire
