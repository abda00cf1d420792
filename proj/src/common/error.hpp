#pragma once

#include <stdexcept>
#include <string>

namespace stylenet {

// Caller passed something unusable (bad flag value, unknown genre, ...).
// The C API maps this to SN_INVALID_ARGUMENT; the CLI exits 2 on it.
class InvalidArgument : public std::runtime_error {
public:
  explicit InvalidArgument(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or unsupported MIDI / checkpoint / manifest bytes.
class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Numeric failure at run time (non-finite gradient, divergence, ...).
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace stylenet
