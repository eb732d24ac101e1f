#pragma once

#include <chrono>

#include "rfseq/components.hpp"
#include "rfseq/net.hpp"
#include "rfseq/wire.hpp"

namespace rfseq::client {

// One connection per request, mirroring the server lifecycle.
class Client {
 public:
  explicit Client(net::Endpoint endpoint,
                  std::chrono::milliseconds timeout = std::chrono::seconds(30));

  // Throws RemoteError carrying the server's message for error envelopes.
  AcquisitionResult execute(const ExperimentRequest& request);

  // Raw exchange of one framed payload for one framed response payload.
  wire::Bytes exchange(std::span<const std::uint8_t> payload);

  const net::Endpoint& endpoint() const { return endpoint_; }

 private:
  net::Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

}  // namespace rfseq::client
