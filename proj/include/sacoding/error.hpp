#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sacoding {

// Broad failure classes. The service maps these onto HTTP statuses and the
// CLI onto exit codes, so keep the set small and stable.
enum class Errc {
  parse,           // malformed document
  validation,      // well-formed but violates an invariant
  not_found,       // unknown id
  conflict,        // operation not legal in the current state
  mismatch,        // fingerprint / dataset / schema disagreement
  unavailable,     // requested mode cannot be computed for this input
  io,              // filesystem or network
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace sacoding
