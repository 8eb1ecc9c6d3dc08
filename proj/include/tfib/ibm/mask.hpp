#pragma once

#include <cstdint>
#include <vector>

#include "tfib/geom/raycast.hpp"
#include "tfib/grid/field.hpp"

namespace tfib {

enum class CellKind : std::uint8_t { kFluid = 0, kWallIncluding = 1, kWallAdjacent = 2 };

/// Per-cell classification against the immersed surface. Arrays are indexed by
/// the forest's flat (halo-padded) index; halo entries mirror neighbours.
struct CellMask {
  std::vector<CellKind> kind;
  std::vector<std::uint8_t> dead_end;  // 1: forcing cancelled
  std::size_t fluid = 0, wall_including = 0, wall_adjacent = 0, dead_end_count = 0;

  bool dummy(std::size_t flat) const { return kind[flat] != CellKind::kFluid; }
};

/// A cell is wall-including when a facet overlaps its closed box (which
/// covers every crossing of the half segments to its axis neighbours); axis
/// neighbours of those cells become wall-adjacent. No flood fill is used.
CellMask classify_cells(const CubeForest& forest, const HaloPlan& plan, const RayAccelerator& acc);

/// Number of wall-including axis neighbours of a cell.
int wall_including_neighbours(const CubeForest& forest, const CellMask& mask, int cube, int i,
                              int j, int k);

/// Flags cells with at least 2d - 1 wall-including axis neighbours, i.e. at
/// most one open direction. Flags are recomputed from scratch.
void dead_end_filter(const CubeForest& forest, CellMask& mask);

}  // namespace tfib
