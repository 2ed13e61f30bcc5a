#include "mateoptix/stretch.hpp"

#include <algorithm>

#include "mateoptix/error.hpp"
#include "mateoptix/numeric.hpp"

namespace mateoptix {

double PolyStretch::normalized(double raw) const {
  return (2.0 * raw - (raw_min + raw_max)) / (raw_max - raw_min);
}

double PolyStretch::operator()(double raw) const {
  const double s = normalized(raw);
  return scale * (c0 + s * (1.0 + s * (c2 + s * (c3 + s * c4))));
}

double PolyStretch::derivative(double raw) const {
  const double s = normalized(raw);
  const double ds = 1.0 + s * (2.0 * c2 + s * (3.0 * c3 + s * 4.0 * c4));
  return scale * ds * 2.0 / (raw_max - raw_min);
}

bool PolyStretch::monotone(int samples) const {
  const double sign = scale > 0 ? 1.0 : -1.0;
  for (int i = 0; i < samples; ++i) {
    const double raw = raw_min + (raw_max - raw_min) * i / (samples - 1.0);
    if (!(sign * derivative(raw) > 0.0)) return false;
  }
  return true;
}

double PolyStretch::inverse(double phys) const {
  const double lo = (*this)(raw_min);
  const double hi = (*this)(raw_max);
  if (phys < std::min(lo, hi) || phys > std::max(lo, hi)) {
    fail(ErrorKind::kInvalidArgument, "value outside the stretch range");
  }
  return numeric::find_root([&](double raw) { return (*this)(raw) - phys; }, raw_min, raw_max);
}

void PolyStretch::validate() const {
  if (!(raw_max > raw_min)) fail(ErrorKind::kInvalidArgument, "stretch needs raw_max > raw_min");
  if (!(scale != 0.0)) fail(ErrorKind::kInvalidArgument, "stretch scale must be nonzero");
}

}  // namespace mateoptix
