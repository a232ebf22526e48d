// Copyright (c) 2026 btlab developers. SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace btlab {

enum class ErrorCode {
  Config,     // malformed configuration, trees, parameter spaces
  Structure,  // structurally invalid tree (arity, kinds)
  Binding,    // parameter vector does not match bound slots
  Splice,     // splice target missing or ambiguous
  Io,         // file read/write problems
  Fault,      // numerical fault during simulation or optimization
  Internal,   // broken invariant; indicates a bug
};

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::Config: return "config";
    case ErrorCode::Structure: return "structure";
    case ErrorCode::Binding: return "binding";
    case ErrorCode::Splice: return "splice";
    case ErrorCode::Io: return "io";
    case ErrorCode::Fault: return "fault";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace btlab
