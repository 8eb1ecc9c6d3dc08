#pragma once

#include <cstddef>
#include <vector>

#include "tfib/grid/forest.hpp"

namespace tfib {

/// Scalar per cell on every cube, stored as contiguous padded blocks
/// (cube c occupies [c * block_size, (c + 1) * block_size)).
class CellField {
 public:
  CellField() = default;
  explicit CellField(const CubeForest& forest, double value = 0.0)
      : forest_(&forest), data_(forest.cube_count() * forest.block_size(), value) {}

  bool allocated() const { return forest_ != nullptr; }
  const CubeForest& forest() const { return *forest_; }

  double* cube(int c) { return data_.data() + static_cast<std::size_t>(c) * forest_->block_size(); }
  const double* cube(int c) const {
    return data_.data() + static_cast<std::size_t>(c) * forest_->block_size();
  }
  double& at(int c, int i, int j, int k) { return data_[forest_->flat(c, i, j, k)]; }
  double at(int c, int i, int j, int k) const { return data_[forest_->flat(c, i, j, k)]; }
  double& at(const CellRef& r) { return at(r.cube, r.i, r.j, r.k); }
  double at(const CellRef& r) const { return at(r.cube, r.i, r.j, r.k); }
  double& operator[](std::size_t flat) { return data_[flat]; }
  double operator[](std::size_t flat) const { return data_[flat]; }

  std::vector<double>& raw() { return data_; }
  const std::vector<double>& raw() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

 private:
  const CubeForest* forest_ = nullptr;
  std::vector<double> data_;
};

/// Calls f(cube, i, j, k) for every interior cell, cube by cube.
template <class F>
void for_each_cell(const CubeForest& forest, F&& f) {
  const auto e = forest.extent();
  for (int c = 0; c < static_cast<int>(forest.cube_count()); ++c) {
    for (int k = 0; k < e[2]; ++k)
      for (int j = 0; j < e[1]; ++j)
        for (int i = 0; i < e[0]; ++i) f(c, i, j, k);
  }
}

/// Halo cell lying outside a non-periodic domain face; filled by boundary
/// conditions. `mirror` is the interior cell reflected across the face.
struct BoundaryHalo {
  std::size_t halo = 0;
  std::size_t mirror = 0;
  int face = 0;   // domain face id
  int layer = 1;  // 1 adjacent to the face, 2 beyond
  int cube = 0;
};

/// Face shared by a fine cell and the coarser cell across a level jump.
/// Face indices follow the face layout (entry (c, i, j, k) of an axis is the
/// face on the low side of cell (i, j, k)); each coarse face is covered by
/// 2^(d-1) fine faces.
struct CoarseFineFace {
  int axis = 0;
  std::size_t fine_cell = 0;
  std::size_t fine_face = 0;
  std::size_t coarse_cell = 0;
  std::size_t coarse_face = 0;
};

/// Precomputed exchange between cube blocks. Sources are always interior
/// cells, so a single pass realises the read-then-write semantics.
class HaloPlan {
 public:
  HaloPlan() = default;
  explicit HaloPlan(const CubeForest& forest);

  /// Same-level copy, fine-to-coarse mean, coarse-to-fine copy.
  void exchange(CellField& field) const;
  void exchange(std::vector<double>& raw) const;

  const std::vector<BoundaryHalo>& boundary() const { return boundary_; }
  const std::vector<CoarseFineFace>& coarse_fine() const { return coarse_fine_; }
  std::size_t entry_count() const { return dst_.size(); }
  /// Number of source cells feeding halo entry e (1 or 2^d).
  int source_count(std::size_t e) const { return static_cast<int>(begin_[e + 1] - begin_[e]); }
  std::size_t destination(std::size_t e) const { return dst_[e]; }
  std::size_t source(std::size_t e, int q) const { return src_[begin_[e] + static_cast<std::size_t>(q)]; }

 private:
  std::vector<std::size_t> dst_;
  std::vector<std::size_t> begin_;
  std::vector<std::size_t> src_;
  std::vector<BoundaryHalo> boundary_;
  std::vector<CoarseFineFace> coarse_fine_;
  double inv_children_ = 1.0;
};

/// Exchanges halos of one field using a plan built on the fly; throws
/// GridError if the field is not allocated.
void exchange_halos(const CubeForest& forest, CellField& field);

}  // namespace tfib
