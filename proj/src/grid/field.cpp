#include "tfib/grid/field.hpp"

#include <algorithm>
#include <cmath>

namespace tfib {

HaloPlan::HaloPlan(const CubeForest& forest) {
  const int dim = forest.dim();
  const int n = forest.cells_per_side();
  const auto ext = forest.extent();
  inv_children_ = 1.0 / (dim == 3 ? 8.0 : 4.0);
  begin_.push_back(0);

  auto interior_flat = [&](const Vec3& p) {
    const CellRef r = forest.locate_cell(p);
    return forest.flat(r.cube, r.i, r.j, r.k);
  };

  for (int c = 0; c < static_cast<int>(forest.cube_count()); ++c) {
    const Cube& cube = forest.cube(c);
    for (int axis = 0; axis < dim; ++axis) {
      for (int side = -1; side <= 1; side += 2) {
        for (int layer = 1; layer <= CubeForest::kHalo; ++layer) {
          const int ia = side > 0 ? n - 1 + layer : -layer;
          const int t1 = (axis + 1) % 3;
          const int t2 = (axis + 2) % 3;
          for (int b = 0; b < ext[static_cast<std::size_t>(t2)]; ++b) {
            for (int a = 0; a < ext[static_cast<std::size_t>(t1)]; ++a) {
              std::array<int, 3> idx{};
              idx[static_cast<std::size_t>(axis)] = ia;
              idx[static_cast<std::size_t>(t1)] = a;
              idx[static_cast<std::size_t>(t2)] = b;
              const std::size_t dst = forest.flat(c, idx[0], idx[1], idx[2]);
              const Vec3 center = forest.cell_center(c, idx[0], idx[1], idx[2]);
              const auto wrapped = forest.wrap(center);
              if (!wrapped) {
                std::array<int, 3> m = idx;
                m[static_cast<std::size_t>(axis)] = side > 0 ? n - layer : layer - 1;
                boundary_.push_back({dst, forest.flat(c, m[0], m[1], m[2]), face_id(axis, side), layer, c});
                continue;
              }
              const CellRef owner = forest.locate_cell(*wrapped);
              const Cube& oc = forest.cube(owner.cube);
              dst_.push_back(dst);
              if (oc.level <= cube.level) {
                const std::size_t src = forest.flat(owner.cube, owner.i, owner.j, owner.k);
                src_.push_back(src);
                if (layer == 1 && oc.level < cube.level) {
                  std::array<int, 3> m = idx;
                  m[static_cast<std::size_t>(axis)] = side > 0 ? n - 1 : 0;
                  const auto st = static_cast<std::size_t>(forest.strides()[static_cast<std::size_t>(axis)]);
                  CoarseFineFace cf;
                  cf.axis = axis;
                  cf.fine_cell = forest.flat(c, m[0], m[1], m[2]);
                  cf.fine_face = side > 0 ? dst : cf.fine_cell;
                  cf.coarse_cell = src;
                  cf.coarse_face = side > 0 ? src : src + st;
                  coarse_fine_.push_back(cf);
                }
              } else {
                // The halo centre is a corner of 2^d finer cells; average them.
                const double q = 0.25 * cube.dx;
                const int nz = dim == 3 ? 2 : 1;
                for (int kz = 0; kz < nz; ++kz)
                  for (int ky = 0; ky < 2; ++ky)
                    for (int kx = 0; kx < 2; ++kx) {
                      Vec3 p = *wrapped + q * Vec3(kx ? 1 : -1, ky ? 1 : -1, kz ? 1 : -1);
                      if (dim == 2) p.z() = wrapped->z();
                      src_.push_back(interior_flat(*forest.wrap(p)));
                    }
              }
              begin_.push_back(src_.size());
            }
          }
        }
      }
    }
  }
}

void HaloPlan::exchange(std::vector<double>& raw) const {
  const std::size_t m = dst_.size();
  for (std::size_t e = 0; e < m; ++e) {
    const std::size_t b = begin_[e];
    const std::size_t cnt = begin_[e + 1] - b;
    if (cnt == 1) {
      raw[dst_[e]] = raw[src_[b]];
    } else {
      double s = 0.0;
      for (std::size_t q = 0; q < cnt; ++q) s += raw[src_[b + q]];
      raw[dst_[e]] = s * inv_children_;
    }
  }
}

void HaloPlan::exchange(CellField& field) const { exchange(field.raw()); }

void exchange_halos(const CubeForest& forest, CellField& field) {
  if (!field.allocated()) throw GridError("halo exchange on an unallocated field");
  HaloPlan(forest).exchange(field);
}

}  // namespace tfib
