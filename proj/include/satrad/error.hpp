#pragma once

#include <stdexcept>
#include <string>

namespace satrad {

// Machine-readable category carried by every library error. The CLI prints it
// in the JSON error object on stderr.
enum class ErrorKind {
  io,
  parse,
  validation,
  geometry,
  range,
  config,
  statistics,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace satrad
