#pragma once

#include <stdexcept>

namespace tfib {

class ClosureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Value placed at the first ghost cell beyond a wall crossing along one axis.
/// q_i is the owner value, q_im1 the owner's neighbour on the far side from
/// the wall, d the owner-centre-to-crossing distance. Both branches are exact
/// for fields linear along the axis.
template <class Scalar>
Scalar ghost_value(Scalar q_i, Scalar q_im1, Scalar q_ib, Scalar d, Scalar dx) {
  if (!(dx > Scalar(0))) throw ClosureError("ghost_value: cell size must be positive");
  if (d < Scalar(0) || d >= dx) throw ClosureError("ghost_value: distance outside [0, dx)");
  const Scalar r = d / dx;
  if (r >= Scalar(0.5)) return (dx / d) * q_ib + ((d - dx) / d) * q_i;
  return Scalar(2) * q_ib + ((Scalar(2) * d - dx) / dx) * q_im1 - (Scalar(2) * d / dx) * q_i;
}

enum class ForceRegion { kDummyFluid, kGhost, kFarFluid };

/// Linear distribution weight of the wall force at axis distance d.
template <class Scalar>
Scalar distribution_weight(Scalar d, Scalar dx, ForceRegion region) {
  switch (region) {
    case ForceRegion::kDummyFluid:
      return d / (dx + d);
    case ForceRegion::kGhost:
      return (dx - d) / (dx + d);
    case ForceRegion::kFarFluid:
      break;
  }
  return Scalar(0);
}

}  // namespace tfib
