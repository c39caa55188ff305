#pragma once

#include <cstdint>

#include "irnav/problem.hpp"

namespace irnav {

struct PhantomSpec {
  /// The phantom is a grid x grid square of voxels.
  int grid = 8;
  int beamlets = 4;
  /// Number of beam directions; 0 picks min(beamlets, max(1, beamlets / 2)).
  int angles = 0;
  std::uint64_t seed = 1;
  /// Relative dose uncertainty the bounds are fitted to (a reference plan stays feasible at r = 1).
  double uncertainty = 0.02;
  /// Prescription in Gy.
  double prescription = 50.0;
};

/// Disc target (PTV), a ring organ at risk around it, an outer skin band and the whole body.
/// Beamlets are parallel rays with Gaussian lateral profiles and exponential depth fall-off.
ProblemModel generate_phantom(const PhantomSpec& spec);

}  // namespace irnav
