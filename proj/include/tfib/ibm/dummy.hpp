#pragma once

#include <array>
#include <bitset>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "tfib/geom/raycast.hpp"
#include "tfib/ibm/mask.hpp"

namespace tfib {

/// First surface crossing along one axis direction from a cell centre.
struct AxisCrossing {
  double d = std::numeric_limits<double>::infinity();  // recorded only when < 2 dx
  Vec3 point = Vec3::Zero();
  Vec3 wall_velocity = Vec3::Zero();
  int triangle = -1;
  bool present() const { return std::isfinite(d); }
};

/// Wall velocity u_IB(x, t) evaluated at crossing points.
using WallVelocity = std::function<Vec3(const Vec3&, double)>;

/// Private 5^d stencil of one wall-region cell. Only the axis lines through
/// the owner are populated, matching the axis-projected closure.
struct DummyBlock {
  std::size_t flat = 0;
  int cube = 0, i = 0, j = 0, k = 0;
  double dx = 0.0;
  std::array<AxisCrossing, 6> crossing;  // indexed by direction = face_id(axis, side)

  /// Offset of the first ghost cell in a direction: 1, 2, or 3 when none.
  int first_ghost(int dir) const {
    const double d = crossing[static_cast<std::size_t>(dir)].d;
    if (d < dx) return 1;
    if (d < 2.0 * dx) return 2;
    return 3;
  }
  /// Ghost flag of block cell (di, dj, dk) in [-2, 2]^3; off-axis cells are
  /// never ghosts.
  bool ghost(int di, int dj, int dk) const;
  std::bitset<125> ghost_bits() const;
  /// Direction of the nearest crossing closer than dx, or -1.
  int nearest_direction() const;
};

/// Dirichlet ghosts mirror a wall value, Neumann ghosts copy the owner side.
enum class GhostRule { kDirichlet, kNeumann };

/// Distances at (numerically) the cell centre are moved to this fraction of
/// dx towards the fluid.
constexpr double kCentreNudge = 1e-6;

class DummyBlocks {
 public:
  std::vector<DummyBlock> blocks;
  std::vector<int> index;  // flat cell index -> block id, -1 if none

  const DummyBlock* find(std::size_t flat) const {
    const int b = index[flat];
    return b < 0 ? nullptr : &blocks[static_cast<std::size_t>(b)];
  }
  std::size_t ghost_count() const;
  /// Evaluates u_IB at every recorded crossing for time t.
  void update_wall_velocity(const WallVelocity& u_ib, double t);
};

/// One block per wall-region cell: rays along the 2d axis directions record
/// the first crossing closer than 2 dx.
DummyBlocks build_dummy_blocks(const CubeForest& forest, const CellMask& mask,
                               const RayAccelerator& acc, const RayOptions& opts = {});

/// Values at offsets -2..2 along `axis` through the block owner, read from a
/// halo-exchanged field, with ghost cells replaced by the closure. `wall`
/// returns the boundary value at the crossing of a direction (Dirichlet).
template <class WallValue>
void line_values(const DummyBlock& b, const double* field, std::ptrdiff_t stride, int axis,
                 GhostRule rule, WallValue&& wall, double out[5]);

/// Full 5^d copy (x fastest, 125 entries in 3D, 25 in 2D) with ghosts
/// replaced on the axis lines and NaN off the axis lines.
std::vector<double> gather_block(const CubeForest& forest, const DummyBlock& b,
                                 const std::vector<double>& field, GhostRule rule, int component);

double nudged_distance(double d, double dx);

}  // namespace tfib

#include "tfib/ibm/dummy_impl.hpp"
