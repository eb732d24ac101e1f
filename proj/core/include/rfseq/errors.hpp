#pragma once

#include <stdexcept>
#include <string>

namespace rfseq {

// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Length-prefix framing failures: empty/oversized payloads, truncated streams.
class FramingError : public Error {
 public:
  using Error::Error;
};

class EncodeError : public Error {
 public:
  using Error::Error;
};

// Payload does not match the wire schema. The message names the offending key.
class DecodeError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class CompileError : public Error {
 public:
  using Error::Error;
};

class ExecutionError : public Error {
 public:
  using Error::Error;
};

class NetworkError : public Error {
 public:
  using Error::Error;
};

class TimeoutError : public NetworkError {
 public:
  using NetworkError::NetworkError;
};

// The server answered with an error envelope; what() is its message verbatim.
class RemoteError : public Error {
 public:
  using Error::Error;
};

}  // namespace rfseq
