// Copyright 2026 The chil-cosim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace chil {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite input to the converter model.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// The integrator produced a non-finite state.
class DivergenceError : public Error {
 public:
  DivergenceError(std::uint64_t step, const std::string& what)
      : Error("divergence at step " + std::to_string(step) + ": " + what), step_(step) {}
  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t step_;
};

class MetricsError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Protocol family. Everything here maps to CLI exit code 3.

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class EncodeError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class ParseError : public ProtocolError {
 public:
  ParseError(std::size_t offset, const std::string& what)
      : ProtocolError("parse error at byte " + std::to_string(offset) + ": " + what), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnsupportedFrameError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class ProtocolOrderError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class PeerTimeoutError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class RemoteFailureError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

class HandshakeError : public ProtocolError {
 public:
  using ProtocolError::ProtocolError;
};

}  // namespace chil
