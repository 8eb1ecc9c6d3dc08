#include "tfib/ibm/dummy.hpp"

namespace tfib {

bool DummyBlock::ghost(int di, int dj, int dk) const {
  const int nonzero = (di != 0) + (dj != 0) + (dk != 0);
  if (nonzero != 1) return false;
  const int axis = di != 0 ? 0 : (dj != 0 ? 1 : 2);
  const int off = di + dj + dk;
  const int dir = face_id(axis, off > 0 ? 1 : -1);
  return std::abs(off) >= first_ghost(dir);
}

std::bitset<125> DummyBlock::ghost_bits() const {
  std::bitset<125> bits;
  for (int dk = -2; dk <= 2; ++dk)
    for (int dj = -2; dj <= 2; ++dj)
      for (int di = -2; di <= 2; ++di) {
        if (ghost(di, dj, dk)) bits.set(static_cast<std::size_t>((dk + 2) * 25 + (dj + 2) * 5 + di + 2));
      }
  return bits;
}

int DummyBlock::nearest_direction() const {
  int best = -1;
  double bd = dx;
  for (int dir = 0; dir < 6; ++dir) {
    const double d = crossing[static_cast<std::size_t>(dir)].d;
    if (d < bd) {
      bd = d;
      best = dir;
    }
  }
  return best;
}

std::size_t DummyBlocks::ghost_count() const {
  std::size_t n = 0;
  for (const DummyBlock& b : blocks) n += b.ghost_bits().count();
  return n;
}

void DummyBlocks::update_wall_velocity(const WallVelocity& u_ib, double t) {
  for (DummyBlock& b : blocks) {
    for (AxisCrossing& c : b.crossing) {
      if (c.present()) c.wall_velocity = u_ib(c.point, t);
    }
  }
}

DummyBlocks build_dummy_blocks(const CubeForest& forest, const CellMask& mask,
                               const RayAccelerator& acc, const RayOptions& opts) {
  DummyBlocks out;
  out.index.assign(mask.kind.size(), -1);
  for_each_cell(forest, [&](int c, int i, int j, int k) {
    const std::size_t f = forest.flat(c, i, j, k);
    if (!mask.dummy(f)) return;
    DummyBlock b;
    b.flat = f;
    b.cube = c;
    b.i = i;
    b.j = j;
    b.k = k;
    b.dx = forest.cube(c).dx;
    const Vec3 ctr = forest.cell_center(c, i, j, k);
    for (int a = 0; a < forest.dim(); ++a) {
      for (int side = -1; side <= 1; side += 2) {
        Vec3 dir = Vec3::Zero();
        dir[a] = side;
        const auto hits = acc.ray_intersections(ctr, dir, 2.0 * b.dx, opts);
        if (hits.empty() || !(hits.front().t < 2.0 * b.dx)) continue;
        AxisCrossing& x = b.crossing[static_cast<std::size_t>(face_id(a, side))];
        x.d = hits.front().t;
        x.point = ctr + x.d * dir;
        x.triangle = hits.front().triangle;
      }
    }
    out.index[f] = static_cast<int>(out.blocks.size());
    out.blocks.push_back(b);
  });
  return out;
}

std::vector<double> gather_block(const CubeForest& forest, const DummyBlock& b,
                                 const std::vector<double>& field, GhostRule rule, int component) {
  const int n2 = forest.dim() == 3 ? 5 : 1;
  std::vector<double> out(static_cast<std::size_t>(25 * n2), std::nan(""));
  const auto s = forest.strides();
  auto wall = [&](int dir) {
    return b.crossing[static_cast<std::size_t>(dir)].wall_velocity[component];
  };
  for (int a = 0; a < forest.dim(); ++a) {
    double line[5];
    line_values(b, field.data(), s[static_cast<std::size_t>(a)], a, rule, wall, line);
    for (int o = -2; o <= 2; ++o) {
      int idx[3] = {2, 2, n2 == 5 ? 2 : 0};
      idx[a] += o;
      out[static_cast<std::size_t>(idx[2] * 25 + idx[1] * 5 + idx[0])] = line[o + 2];
    }
  }
  return out;
}

}  // namespace tfib
