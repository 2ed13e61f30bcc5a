#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mateoptix {

enum class ErrorKind {
  kInvalidArgument,
  kRootNotFound,
  kDegenerateConfiguration,
  kDivisionByZero,
  kDiscontinuity,
  kFitFailed,
  kNumerical,
  kQuadratureNotConverged,
};

std::string_view to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can map it
// to a machine-parsable reason prefix.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

// Non-fatal conditions reported alongside results.
enum class Warning : std::uint32_t {
  kShortCavity = 1u << 0,          // L < 100 wavelengths
  kOutsideMimRange = 1u << 1,      // |dx| > L/20 for a MIM closed form
  kOutsideMateRange = 1u << 2,     // 4 dx / L >= |t_m|^2 / 10
  kLosslessCavity = 1u << 3,       // both end-mirror transmissions vanish
  kTiltExpansionInvalid = 1u << 4, // k theta sigma >= 0.3
  kCoarseGrid = 1u << 5,           // detuning grid does not resolve linewidth
  kAmbiguousL0 = 1u << 6,
  kDegenerateParameters = 1u << 7, // condition number above 1e8
  kNonMonotoneStretch = 1u << 8,
  kMembraneUnconstrained = 1u << 9,
};

class Warnings {
 public:
  constexpr Warnings() = default;
  constexpr Warnings(Warning w) : bits_(static_cast<std::uint32_t>(w)) {}  // NOLINT

  constexpr bool has(Warning w) const {
    return (bits_ & static_cast<std::uint32_t>(w)) != 0;
  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr Warnings& operator|=(Warnings other) {
    bits_ |= other.bits_;
    return *this;
  }
  friend constexpr Warnings operator|(Warnings a, Warnings b) { return a |= b; }
  friend constexpr bool operator==(Warnings, Warnings) = default;

  std::vector<std::string> names() const;

 private:
  std::uint32_t bits_ = 0;
};

template <class T>
struct Flagged {
  T value;
  Warnings warnings;
};

}  // namespace mateoptix
