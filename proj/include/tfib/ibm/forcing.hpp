#pragma once

#include <array>
#include <string>
#include <vector>

#include "tfib/ibm/dummy.hpp"

namespace tfib {

/// How the forced velocity of a wall-region cell is built from its nearest
/// crossing closer than dx (distance d, weight w = dx / (dx + d), the sum of
/// the fluid-side and ghost-side distribution weights):
///  kBlend        u* = (1 - w) u_pred + w u_IB
///  kInterpolate  u* = w u_IB + (1 - w) u_opposite (linear between the wall
///                and the opposite axis neighbour)
///  kNone         no forcing; the wall enters only through the ghost stencil.
enum class ForcingRule { kBlend, kInterpolate, kNone };

ForcingRule parse_forcing_rule(const std::string& s);
std::string to_string(ForcingRule r);

/// Forced value for one component.
template <class Scalar>
Scalar forced_value(ForcingRule rule, Scalar u_pred, Scalar u_opposite, Scalar u_ib, Scalar d,
                    Scalar dx) {
  const Scalar w = distribution_weight(d, dx, ForceRegion::kDummyFluid) +
                   distribution_weight(d, dx, ForceRegion::kGhost);
  switch (rule) {
    case ForcingRule::kBlend:
      return (Scalar(1) - w) * u_pred + w * u_ib;
    case ForcingRule::kInterpolate:
      return (Scalar(1) - w) * u_opposite + w * u_ib;
    case ForcingRule::kNone:
      break;
  }
  return u_pred;
}

struct ForcingSite {
  std::size_t flat = 0;
  int block = 0;
  int direction = 0;
  double d = 0.0;
  double dx = 0.0;
  double weight = 0.0;
};

/// Forcing per site and component: f = (u* - u_pred) / dt, zero elsewhere.
struct ForcingField {
  std::vector<ForcingSite> sites;
  std::vector<std::array<double, 3>> f;
};

/// Cells with a crossing closer than dx that are not dead ends.
std::vector<ForcingSite> forcing_sites(const DummyBlocks& blocks, const CellMask& mask);

/// Evaluates the forcing from predicted velocities (halo-exchanged raw
/// arrays, one per component) and, when `apply` is set, overwrites the
/// predicted velocities with the forced ones.
void compute_forcing(const CubeForest& forest, const DummyBlocks& blocks,
                     const std::vector<ForcingSite>& sites, ForcingRule rule,
                     std::array<std::vector<double>*, 3> u_pred, int components, double dt,
                     ForcingField& out, bool apply);

}  // namespace tfib
