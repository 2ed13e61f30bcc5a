#pragma once

// Fourth-order polynomial map from raw actuator units to metres, with the
// linear coefficient pinned to 1 over raw data normalized to [-1, 1].

namespace mateoptix {

struct PolyStretch {
  double raw_min = -1.0;
  double raw_max = 1.0;
  double scale = 1.0;  // metres per unit of normalized raw coordinate
  double c0 = 0.0;
  double c2 = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;

  double normalized(double raw) const;
  double operator()(double raw) const;
  double derivative(double raw) const;  // metres per raw unit
  // Strictly monotone on [raw_min, raw_max], sampled densely.
  bool monotone(int samples = 2001) const;
  // Raw value mapping to phys; throws when phys lies outside the range.
  double inverse(double phys) const;

  void validate() const;
};

}  // namespace mateoptix
