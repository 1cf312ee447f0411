#pragma once

#include <stdexcept>
#include <string>

namespace mdlvae {

enum class ErrorKind {
  shape,
  domain,
  convergence,
  numeric,
  lookup,
  parse,
  contract,
  training,
  degenerate,
  io,
};

const char* error_kind_name(ErrorKind kind) noexcept;

// Every failure raised by the library carries a kind so the C layer can map
// it onto a stable status code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace mdlvae
