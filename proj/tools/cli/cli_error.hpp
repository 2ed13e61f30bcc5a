#pragma once

#include <stdexcept>
#include <string>

namespace mateoptix::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNoConvergence = 3;

// Failure raised by the front end itself; `reason` becomes the bracketed
// prefix of the single error line.
class CliError : public std::runtime_error {
 public:
  CliError(std::string reason, const std::string& message, int code = kExitInput)
      : std::runtime_error(message), reason_(std::move(reason)), code_(code) {}

  const std::string& reason() const noexcept { return reason_; }
  int code() const noexcept { return code_; }

 private:
  std::string reason_;
  int code_;
};

}  // namespace mateoptix::cli
