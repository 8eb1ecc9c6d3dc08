#include "tfib/ibm/mask.hpp"

namespace tfib {
namespace {

Box3 cell_box(const CubeForest& forest, int cube, int i, int j, int k) {
  const Cube& c = forest.cube(cube);
  const Vec3 ctr = forest.cell_center(cube, i, j, k);
  const Vec3 h = Vec3::Constant(0.5 * c.dx);
  return Box3(ctr - h, ctr + h);
}

}  // namespace

CellMask classify_cells(const CubeForest& forest, const HaloPlan& plan, const RayAccelerator& acc) {
  const std::size_t total = forest.cube_count() * forest.block_size();
  CellMask mask;
  mask.kind.assign(total, CellKind::kFluid);
  mask.dead_end.assign(total, 0);
  const auto e = forest.extent();

  std::vector<double> inc(total, 0.0);
  for (const Cube& cube : forest.cubes()) {
    Vec3 lo = cube.origin;
    Vec3 hi = cube.origin + Vec3::Constant(cube.size);
    if (forest.dim() == 2) {
      lo.z() = forest.plane_z() - 0.5 * cube.dx;
      hi.z() = forest.plane_z() + 0.5 * cube.dx;
    }
    if (acc.candidates(Box3(lo, hi)).empty()) continue;
    for (int k = 0; k < e[2]; ++k)
      for (int j = 0; j < e[1]; ++j)
        for (int i = 0; i < e[0]; ++i) {
          if (acc.any_overlap(cell_box(forest, cube.id, i, j, k))) {
            inc[forest.flat(cube.id, i, j, k)] = 1.0;
          }
        }
  }
  plan.exchange(inc);

  const auto s = forest.strides();
  for_each_cell(forest, [&](int c, int i, int j, int k) {
    const std::size_t f = forest.flat(c, i, j, k);
    if (inc[f] > 0.0) {
      mask.kind[f] = CellKind::kWallIncluding;
      ++mask.wall_including;
      return;
    }
    bool adj = false;
    for (int a = 0; a < forest.dim() && !adj; ++a) {
      adj = inc[f + static_cast<std::size_t>(s[static_cast<std::size_t>(a)])] > 0.0 ||
            inc[f - static_cast<std::size_t>(s[static_cast<std::size_t>(a)])] > 0.0;
    }
    if (adj) {
      mask.kind[f] = CellKind::kWallAdjacent;
      ++mask.wall_adjacent;
    } else {
      ++mask.fluid;
    }
  });
  // Halo entries carry only the wall-including indicator of the neighbour.
  for (const Cube& cube : forest.cubes()) {
    const std::size_t base = static_cast<std::size_t>(cube.id) * forest.block_size();
    for (std::size_t q = 0; q < forest.block_size(); ++q) {
      if (inc[base + q] > 0.0 && mask.kind[base + q] == CellKind::kFluid) {
        mask.kind[base + q] = CellKind::kWallIncluding;
      }
    }
  }
  dead_end_filter(forest, mask);
  return mask;
}

int wall_including_neighbours(const CubeForest& forest, const CellMask& mask, int cube, int i,
                              int j, int k) {
  const std::size_t f = forest.flat(cube, i, j, k);
  const auto s = forest.strides();
  int n = 0;
  for (int a = 0; a < forest.dim(); ++a) {
    const auto st = static_cast<std::size_t>(s[static_cast<std::size_t>(a)]);
    n += mask.kind[f + st] == CellKind::kWallIncluding;
    n += mask.kind[f - st] == CellKind::kWallIncluding;
  }
  return n;
}

void dead_end_filter(const CubeForest& forest, CellMask& mask) {
  std::fill(mask.dead_end.begin(), mask.dead_end.end(), 0);
  mask.dead_end_count = 0;
  const int threshold = 2 * forest.dim() - 1;
  for_each_cell(forest, [&](int c, int i, int j, int k) {
    if (wall_including_neighbours(forest, mask, c, i, j, k) >= threshold) {
      mask.dead_end[forest.flat(c, i, j, k)] = 1;
      ++mask.dead_end_count;
    }
  });
}

}  // namespace tfib
