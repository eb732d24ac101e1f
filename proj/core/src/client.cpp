#include "rfseq/client.hpp"

#include "rfseq/errors.hpp"

namespace rfseq::client {

Client::Client(net::Endpoint endpoint, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), timeout_(timeout) {
  if (timeout_.count() <= 0) throw InvalidArgument("client timeout must be > 0");
}

wire::Bytes Client::exchange(std::span<const std::uint8_t> payload) {
  net::Socket socket = net::connect(endpoint_, timeout_);
  net::SocketStream stream(socket);
  stream.write_all(wire::frame_write(payload));
  return wire::frame_read(stream);
}

AcquisitionResult Client::execute(const ExperimentRequest& request) {
  const wire::Bytes reply = exchange(wire::encode_request(request));
  auto envelope = wire::decode_results(reply);
  if (auto* error = std::get_if<wire::ErrorReply>(&envelope)) throw RemoteError(error->message);
  return std::get<AcquisitionResult>(std::move(envelope));
}

}  // namespace rfseq::client
