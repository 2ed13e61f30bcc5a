#include "mateoptix/error.hpp"

#include <array>
#include <utility>

namespace mateoptix {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return "invalid-argument";
    case ErrorKind::kRootNotFound:
      return "root-not-found";
    case ErrorKind::kDegenerateConfiguration:
      return "degenerate-configuration";
    case ErrorKind::kDivisionByZero:
      return "division-by-zero";
    case ErrorKind::kDiscontinuity:
      return "discontinuity";
    case ErrorKind::kFitFailed:
      return "fit-failed";
    case ErrorKind::kNumerical:
      return "numerical-error";
    case ErrorKind::kQuadratureNotConverged:
      return "quadrature-not-converged";
  }
  return "unknown";
}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

std::vector<std::string> Warnings::names() const {
  static constexpr std::array<std::pair<Warning, const char*>, 10> kNames{{
      {Warning::kShortCavity, "short-cavity"},
      {Warning::kOutsideMimRange, "outside-mim-range"},
      {Warning::kOutsideMateRange, "outside-mate-range"},
      {Warning::kLosslessCavity, "lossless-cavity"},
      {Warning::kTiltExpansionInvalid, "tilt-expansion-invalid"},
      {Warning::kCoarseGrid, "coarse-grid"},
      {Warning::kAmbiguousL0, "ambiguous-l0"},
      {Warning::kDegenerateParameters, "degenerate-parameters"},
      {Warning::kNonMonotoneStretch, "non-monotone-stretch"},
      {Warning::kMembraneUnconstrained, "membrane-unconstrained"},
  }};
  std::vector<std::string> out;
  for (const auto& [w, name] : kNames) {
    if (has(w)) out.emplace_back(name);
  }
  return out;
}

}  // namespace mateoptix
