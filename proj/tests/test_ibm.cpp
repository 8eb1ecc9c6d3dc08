#include <algorithm>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "tfib/geom/shapes.hpp"
#include "tfib/ibm/closure.hpp"
#include "tfib/ibm/dummy.hpp"
#include "tfib/ibm/forcing.hpp"
#include "tfib/ibm/mask.hpp"

using namespace tfib;

namespace {

ForestSpec box_spec(int dim, int cubes_per_dir, int n) {
  ForestSpec s;
  s.dim = dim;
  s.cells_per_side = n;
  s.finest_dx = 1.0 / (cubes_per_dir * n);
  s.max_levels = 0;
  s.domain = Box3(Vec3(0, 0, dim == 3 ? 0 : -0.5), Vec3(1, 1, dim == 3 ? 1 : 0.5));
  return s;
}

void add_quad(TriangleSoup& s, const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  s.add(a, b, c);
  s.add(a, c, d);
}

// Quad in the plane x = x0 (axis 0), y = y0 (axis 1) or z = z0 (axis 2)
// covering [lo, hi] in the other two coordinates.
void add_axis_quad(TriangleSoup& s, int axis, double at, const Vec3& lo, const Vec3& hi) {
  const int t1 = (axis + 1) % 3, t2 = (axis + 2) % 3;
  auto p = [&](double u, double v) {
    Vec3 x;
    x[axis] = at;
    x[t1] = u;
    x[t2] = v;
    return x;
  };
  add_quad(s, p(lo[t1], lo[t2]), p(hi[t1], lo[t2]), p(hi[t1], hi[t2]), p(lo[t1], hi[t2]));
}

struct Setup {
  CubeForest forest;
  HaloPlan plan;
  TriangleSoup soup;
  RayAccelerator acc;
  CellMask mask;

  Setup(const ForestSpec& spec, TriangleSoup s)
      : forest(generate_forest(spec, TriangleSoup{})),
        plan(forest),
        soup(std::move(s)),
        acc(soup),
        mask(classify_cells(forest, plan, acc)) {}
};

Box3 box_of(const CubeForest& f, int c, int i, int j, int k) {
  const Vec3 ctr = f.cell_center(c, i, j, k);
  const Vec3 h = Vec3::Constant(0.5 * f.cube(c).dx);
  return Box3(ctr - h, ctr + h);
}

}  // namespace

TEST_CASE("ghost_value worked examples") {
  CHECK(ghost_value(3.0, 7.0, 0.0, 0.75, 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
  // Branch boundary: both formulas give the mirror value.
  CHECK(ghost_value(2.0, 5.0, 0.0, 0.5, 1.0) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(ghost_value(2.0, 5.0, 0.0, 0.5 - 1e-15, 1.0) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(ghost_value(1.0, 1.0, 1.0, 0.25, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(ghost_value(1.0, 1.0, 1.0, 1.0, 1.0), ClosureError);
  CHECK_THROWS_AS(ghost_value(1.0, 1.0, 1.0, -0.1, 1.0), ClosureError);
  CHECK_THROWS_AS(ghost_value(1.0, 1.0, 1.0, 0.1, 0.0), ClosureError);
}

TEST_CASE("ghost_value is continuous at half a cell and exact for linear fields") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> dd(0.0, 1.0);
  for (int n = 0; n < 10000; ++n) {
    const double dx = 0.1 + std::abs(u(rng));
    const double qi = u(rng), qm = u(rng), qb = u(rng);
    const double left = ghost_value(qi, qm, qb, std::nextafter(0.5 * dx, 0.0), dx);
    const double right = ghost_value(qi, qm, qb, 0.5 * dx, dx);
    CHECK(std::abs(left - right) <= 1e-12 * (1.0 + std::abs(qi) + std::abs(qm) + std::abs(qb)) * (dx + 1.0 / dx));

    // Linear field along the axis; the owner sits at 0, the wall at d.
    const double a = u(rng), b = u(rng);
    const double d = dd(rng) * dx * 0.999;
    const double g = ghost_value(a, a - b * dx, a + b * d, d, dx);
    CHECK(g == doctest::Approx(a + b * dx).epsilon(1e-9).scale(1.0 + std::abs(a) + std::abs(b)));
  }
}

TEST_CASE("distribution weights") {
  CHECK(distribution_weight(0.5, 1.0, ForceRegion::kDummyFluid) == doctest::Approx(1.0 / 3.0));
  CHECK(distribution_weight(0.5, 1.0, ForceRegion::kGhost) == doctest::Approx(1.0 / 3.0));
  CHECK(distribution_weight(0.0, 1.0, ForceRegion::kDummyFluid) == 0.0);
  CHECK(distribution_weight(0.0, 1.0, ForceRegion::kGhost) == 1.0);
  for (double d : {0.0, 0.2, 0.7, 1.0}) {
    CHECK(distribution_weight(d, 1.0, ForceRegion::kFarFluid) == 0.0);
    const double pair = distribution_weight(d, 1.0, ForceRegion::kDummyFluid) +
                        distribution_weight(d, 1.0, ForceRegion::kGhost);
    CHECK(pair == doctest::Approx(1.0 / (1.0 + d)).epsilon(1e-15));
    CHECK(distribution_weight(d, 1.0, ForceRegion::kDummyFluid) >= 0.0);
    CHECK(distribution_weight(d, 1.0, ForceRegion::kGhost) <= 1.0);
  }
}

TEST_CASE("classification without geometry is all fluid") {
  Setup s(box_spec(3, 2, 4), TriangleSoup{});
  CHECK(s.mask.fluid == s.forest.cell_count());
  CHECK(s.mask.wall_including == 0);
  CHECK(s.mask.wall_adjacent == 0);
  const DummyBlocks blocks = build_dummy_blocks(s.forest, s.mask, s.acc);
  CHECK(blocks.blocks.empty());
  CHECK(forcing_sites(blocks, s.mask).empty());
}

TEST_CASE("a triangle inside one cell marks it and its axis neighbours") {
  // 8^3 cells of size 1/8; cell (3,3,3) spans [0.375, 0.5]^3.
  TriangleSoup t;
  t.add(Vec3(0.40, 0.40, 0.42), Vec3(0.47, 0.41, 0.44), Vec3(0.41, 0.46, 0.46));
  t.refresh();
  Setup s(box_spec(3, 1, 8), t);
  CHECK(s.mask.wall_including == 1);
  CHECK(s.mask.wall_adjacent == 6);
  CHECK(s.mask.kind[s.forest.flat(0, 3, 3, 3)] == CellKind::kWallIncluding);
  for (int a = 0; a < 3; ++a) {
    for (int side = -1; side <= 1; side += 2) {
      int idx[3] = {3, 3, 3};
      idx[a] += side;
      CHECK(s.mask.kind[s.forest.flat(0, idx[0], idx[1], idx[2])] == CellKind::kWallAdjacent);
    }
  }
  CHECK(s.mask.kind[s.forest.flat(0, 4, 4, 3)] == CellKind::kFluid);
}

TEST_CASE("sphere classification matches a brute-force overlap scan") {
  const TriangleSoup sphere = shapes::icosphere(Vec3(0.52, 0.47, 0.49), 0.3, 2);
  Setup s(box_spec(3, 2, 12), sphere);
  const auto& f = s.forest;
  const auto st = f.strides();
  std::size_t inc = 0, adj = 0, fluid = 0;
  std::vector<std::uint8_t> brute(f.cube_count() * f.block_size(), 0);
  for_each_cell(f, [&](int c, int i, int j, int k) {
    const Box3 b = box_of(f, c, i, j, k);
    for (const Triangle& tri : sphere.triangles()) {
      if (triangle_box_overlap(tri, b)) {
        brute[f.flat(c, i, j, k)] = 1;
        break;
      }
    }
  });
  for_each_cell(f, [&](int c, int i, int j, int k) {
    const std::size_t q = f.flat(c, i, j, k);
    const Vec3 x = f.cell_center(c, i, j, k);
    bool near_inc = false;
    for (int a = 0; a < 3; ++a) {
      for (int side = -1; side <= 1; side += 2) {
        Vec3 y = x;
        y[a] += side * f.cube(c).dx;
        if (y[a] < 0.0 || y[a] > 1.0) continue;
        const CellRef r = f.locate_cell(y);
        near_inc = near_inc || brute[f.flat(r.cube, r.i, r.j, r.k)];
      }
    }
    const CellKind expect =
        brute[q] ? CellKind::kWallIncluding : (near_inc ? CellKind::kWallAdjacent : CellKind::kFluid);
    CHECK(s.mask.kind[q] == expect);
    inc += expect == CellKind::kWallIncluding;
    adj += expect == CellKind::kWallAdjacent;
    fluid += expect == CellKind::kFluid;
    // Every wall-adjacent cell touches a wall-including one along an axis.
    if (s.mask.kind[q] == CellKind::kWallAdjacent) {
      bool touches = false;
      for (int a = 0; a < 3; ++a) {
        touches = touches || s.mask.kind[q + static_cast<std::size_t>(st[static_cast<std::size_t>(a)])] == CellKind::kWallIncluding ||
                  s.mask.kind[q - static_cast<std::size_t>(st[static_cast<std::size_t>(a)])] == CellKind::kWallIncluding;
      }
      CHECK(touches);
    }
  });
  CHECK(inc == s.mask.wall_including);
  CHECK(adj == s.mask.wall_adjacent);
  CHECK(fluid == s.mask.fluid);
  CHECK(inc + adj + fluid == f.cell_count());
  CHECK(inc > 0);
}

TEST_CASE("classification and ghosts ignore triangle order and duplicates") {
  const TriangleSoup sphere = shapes::icosphere(Vec3(0.5, 0.5, 0.5), 0.27, 2);
  TriangleSoup shuffled;
  std::vector<std::size_t> order(sphere.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937 rng(5);
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t q : order) shuffled.add(sphere[q].v0, sphere[q].v1, sphere[q].v2);
  shuffled.refresh();
  const TriangleSoup dup = shapes::duplicate_faces(sphere, 0.3, 9);

  Setup a(box_spec(3, 2, 8), sphere);
  Setup b(box_spec(3, 2, 8), shuffled);
  Setup c(box_spec(3, 2, 8), dup);
  CHECK(a.mask.kind == b.mask.kind);
  CHECK(a.mask.kind == c.mask.kind);
  const DummyBlocks ba = build_dummy_blocks(a.forest, a.mask, a.acc);
  const DummyBlocks bb = build_dummy_blocks(b.forest, b.mask, b.acc);
  const DummyBlocks bc = build_dummy_blocks(c.forest, c.mask, c.acc);
  REQUIRE(ba.blocks.size() == bb.blocks.size());
  REQUIRE(ba.blocks.size() == bc.blocks.size());
  for (std::size_t q = 0; q < ba.blocks.size(); ++q) {
    CHECK(ba.blocks[q].ghost_bits() == bb.blocks[q].ghost_bits());
    CHECK(ba.blocks[q].ghost_bits() == bc.blocks[q].ghost_bits());
    for (int dir = 0; dir < 6; ++dir) {
      const double da = ba.blocks[q].crossing[static_cast<std::size_t>(dir)].d;
      const double db = bb.blocks[q].crossing[static_cast<std::size_t>(dir)].d;
      CHECK((da == db || std::abs(da - db) <= 1e-12));
    }
  }
}

TEST_CASE("an open sphere differs from the closed one only near the hole") {
  const TriangleSoup closed = shapes::icosphere(Vec3(0.5, 0.5, 0.5), 0.3, 2);
  std::vector<std::size_t> removed;
  for (std::size_t q = 0; q < closed.size(); ++q) {
    if (closed[q].centroid().z() > 0.72) removed.push_back(q);
  }
  REQUIRE(!removed.empty());
  const TriangleSoup open = shapes::remove_faces(closed, removed);
  Setup a(box_spec(3, 2, 8), closed);
  Setup b(box_spec(3, 2, 8), open);
  const auto& f = a.forest;
  // Cells touched by a removed facet.
  std::vector<std::uint8_t> touched(f.cube_count() * f.block_size(), 0);
  for_each_cell(f, [&](int c, int i, int j, int k) {
    for (std::size_t q : removed) {
      if (triangle_box_overlap(closed[q], box_of(f, c, i, j, k))) touched[f.flat(c, i, j, k)] = 1;
    }
  });
  std::vector<double> t(touched.begin(), touched.end());
  a.plan.exchange(t);
  const auto st = f.strides();
  int differing = 0;
  for_each_cell(f, [&](int c, int i, int j, int k) {
    const std::size_t q = f.flat(c, i, j, k);
    if (a.mask.kind[q] == b.mask.kind[q]) return;
    ++differing;
    bool near = t[q] > 0.0;
    for (int ax = 0; ax < 3; ++ax) {
      const auto s = static_cast<std::size_t>(st[static_cast<std::size_t>(ax)]);
      near = near || t[q + s] > 0.0 || t[q - s] > 0.0;
    }
    CHECK(near);
  });
  CHECK(differing > 0);
  // The far side of the sphere is untouched.
  const CellRef r = f.locate_cell(Vec3(0.5, 0.5, 0.2));
  CHECK(a.mask.kind[f.flat(r.cube, r.i, r.j, r.k)] == b.mask.kind[f.flat(r.cube, r.i, r.j, r.k)]);
}

TEST_CASE("walls towards S, E and W make exactly those six ghosts") {
  // 2D, 16 x 16 cells of 1/16; owner cell (8, 8) centred at (0.53125, 0.53125).
  const ForestSpec spec = box_spec(2, 1, 16);
  const double dx = 1.0 / 16;
  const Vec3 c(8.5 * dx, 8.5 * dx, 0.0);
  TriangleSoup t;
  add_axis_quad(t, 1, c.y() - 0.3 * dx, Vec3(c.x() - 0.7 * dx, 0, -1), Vec3(c.x() + 0.5 * dx, 0, 1));
  add_axis_quad(t, 0, c.x() + 0.4 * dx, Vec3(0, c.y() - 0.4 * dx, -1), Vec3(0, c.y() + 0.2 * dx, 1));
  add_axis_quad(t, 0, c.x() - 0.6 * dx, Vec3(0, c.y() - 0.4 * dx, -1), Vec3(0, c.y() + 0.2 * dx, 1));
  t.refresh();
  Setup s(spec, t);
  const DummyBlocks blocks = build_dummy_blocks(s.forest, s.mask, s.acc);
  const DummyBlock* b = blocks.find(s.forest.flat(0, 8, 8, 0));
  REQUIRE(b != nullptr);
  std::bitset<125> expect;
  auto bit = [](int di, int dj) { return static_cast<std::size_t>(2 * 25 + (dj + 2) * 5 + di + 2); };
  for (int o : {1, 2}) {
    expect.set(bit(0, -o));  // S1, S2
    expect.set(bit(o, 0));   // E1, E2
    expect.set(bit(-o, 0));  // W1, W2
  }
  CHECK(b->ghost_bits() == expect);
  CHECK(b->crossing[static_cast<std::size_t>(face_id(1, -1))].d == doctest::Approx(0.3 * dx));
  CHECK(b->crossing[static_cast<std::size_t>(face_id(0, 1))].d == doctest::Approx(0.4 * dx));
  CHECK(b->crossing[static_cast<std::size_t>(face_id(0, -1))].d == doctest::Approx(0.6 * dx));
  CHECK(!b->crossing[static_cast<std::size_t>(face_id(1, 1))].present());
  CHECK(b->first_ghost(face_id(1, 1)) == 3);
}

TEST_CASE("a zero-thickness plate splits its two sides locally") {
  const ForestSpec spec = box_spec(2, 1, 16);
  const double dx = 1.0 / 16;
  // Plate at y between rows 8 and 9, spanning a few cells in x.
  const double y = 9.0 * dx + 0.2 * dx;
  TriangleSoup t;
  add_axis_quad(t, 1, y, Vec3(4 * dx, 0, -1), Vec3(12 * dx, 0, 1));
  t.refresh();
  Setup s(spec, t);
  const DummyBlocks blocks = build_dummy_blocks(s.forest, s.mask, s.acc);
  const DummyBlock* below = blocks.find(s.forest.flat(0, 8, 8, 0));
  const DummyBlock* above = blocks.find(s.forest.flat(0, 8, 9, 0));
  REQUIRE(below != nullptr);
  REQUIRE(above != nullptr);
  CHECK(below->ghost(0, 1, 0));
  CHECK(below->ghost(0, 2, 0));
  CHECK(!below->ghost(0, -1, 0));
  CHECK(above->ghost(0, -1, 0));
  CHECK(above->ghost(0, -2, 0));
  CHECK(!above->ghost(0, 1, 0));
  CHECK(below->crossing[static_cast<std::size_t>(face_id(1, 1))].d == doctest::Approx(0.7 * dx));
  CHECK(above->crossing[static_cast<std::size_t>(face_id(1, -1))].d == doctest::Approx(0.3 * dx));
  // Second-ring ghost from a crossing between dx and 2 dx.
  const DummyBlock* two_above = blocks.find(s.forest.flat(0, 8, 10, 0));
  REQUIRE(two_above != nullptr);
  CHECK(two_above->first_ghost(face_id(1, -1)) == 2);
  CHECK(!two_above->ghost(0, -1, 0));
  CHECK(two_above->ghost(0, -2, 0));
}

TEST_CASE("recorded crossings stay within two cells and blocks without crossings have no ghosts") {
  const TriangleSoup sphere = shapes::icosphere(Vec3(0.5, 0.5, 0.5), 0.3, 3);
  Setup s(box_spec(3, 2, 8), sphere);
  const DummyBlocks blocks = build_dummy_blocks(s.forest, s.mask, s.acc);
  CHECK(blocks.blocks.size() == s.mask.wall_including + s.mask.wall_adjacent);
  int pure_copies = 0;
  for (const DummyBlock& b : blocks.blocks) {
    bool any = false;
    for (const AxisCrossing& x : b.crossing) {
      if (!x.present()) continue;
      any = true;
      CHECK(x.d >= 0.0);
      CHECK(x.d < 2.0 * b.dx);
    }
    if (!any) {
      ++pure_copies;
      CHECK(b.ghost_bits().none());
    }
  }
  CHECK(pure_copies > 0);
}

TEST_CASE("line values reproduce linear fields through the wall") {
  // Plane x = x0 with a linear field q = a + b x; ghosts must stay on the line.
  const ForestSpec spec = box_spec(3, 1, 8);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.3, 0.7);
  for (int trial = 0; trial < 20; ++trial) {
    const double x0 = u(rng);
    TriangleSoup t;
    add_axis_quad(t, 0, x0, Vec3(0, -1, -1), Vec3(0, 2, 2));
    t.refresh();
    Setup s(spec, t);
    DummyBlocks blocks = build_dummy_blocks(s.forest, s.mask, s.acc);
    const double a = 0.7, b = -1.9;
    auto q = [&](const Vec3& x) { return a + b * x.x(); };
    blocks.update_wall_velocity([&](const Vec3& x, double) { return Vec3(q(x), 0, 0); }, 0.0);
    CellField field(s.forest);
    for_each_cell(s.forest, [&](int c, int i, int j, int k) { field.at(c, i, j, k) = q(s.forest.cell_center(c, i, j, k)); });
    s.plan.exchange(field);
    for (const BoundaryHalo& h : s.plan.boundary()) field.raw()[h.halo] = 2.0 * field.raw()[h.mirror];
    const double dx = 1.0 / 8;
    int checked = 0;
    for (const DummyBlock& blk : blocks.blocks) {
      double L[5];
      line_values(blk, field.raw().data(), s.forest.strides()[0], 0, GhostRule::kDirichlet,
                  [&](int dir) { return blk.crossing[static_cast<std::size_t>(dir)].wall_velocity.x(); }, L);
      const Vec3 ctr = s.forest.cell_center(blk.cube, blk.i, blk.j, blk.k);
      for (int side = -1; side <= 1; side += 2) {
        const int g = blk.first_ghost(face_id(0, side));
        if (g == 3) continue;
        for (int o = g; o <= 2; ++o) {
          CHECK(L[2 + side * o] == doctest::Approx(q(ctr + Vec3(side * o * dx, 0, 0))).epsilon(1e-9));
          ++checked;
        }
      }
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("axis projection agrees with the bilinear image-point closure on an axis-aligned wall") {
  // Bilinear field q = c1 x y + c2 x + c3 y + c4, wall at x = x0. The image
  // point of a ghost lies on the owner's grid line, so the four-point
  // Vandermonde interpolation and the axis closure must coincide.
  const double c1 = 0.8, c2 = -1.3, c3 = 0.4, c4 = 2.0;
  auto q = [&](double x, double y) { return c1 * x * y + c2 * x + c3 * y + c4; };
  const double dx = 0.1;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> frac(0.0, 0.999);
  for (int trial = 0; trial < 200; ++trial) {
    const double xi = 0.0, y = 0.3;
    const double d = frac(rng) * dx;
    const double x0 = xi + d;
    const double qib = q(x0, y);
    const double ghost_axis = ghost_value(q(xi, y), q(xi - dx, y), qib, d, dx);
    // Image point of the ghost at xi + dx mirrored across x0.
    const double xip = 2.0 * x0 - (xi + dx);
    const double x_lo = std::floor((xip - xi) / dx) * dx + xi;
    const double y_lo = y - 0.5 * dx, y_hi = y + 0.5 * dx;
    Eigen::Matrix4d V;
    Eigen::Vector4d vals;
    const double px[4] = {x_lo, x_lo + dx, x_lo, x_lo + dx};
    const double py[4] = {y_lo, y_lo, y_hi, y_hi};
    for (int r = 0; r < 4; ++r) {
      V.row(r) << px[r] * py[r], px[r], py[r], 1.0;
      vals[r] = q(px[r], py[r]);
    }
    const Eigen::Vector4d coef = V.fullPivLu().solve(vals);
    const double q_ip = coef[0] * xip * y + coef[1] * xip + coef[2] * y + coef[3];
    const double ghost_mittal = 2.0 * qib - q_ip;
    CHECK(ghost_axis == doctest::Approx(ghost_mittal).epsilon(1e-10));
  }
}

TEST_CASE("a crossing at the cell centre is nudged into the fluid") {
  CHECK(nudged_distance(0.0, 0.1) == doctest::Approx(1e-7));
  CHECK(nudged_distance(1e-14, 0.1) == doctest::Approx(1e-7));
  CHECK(nudged_distance(0.03, 0.1) == 0.03);
  // Wall through the centre of cell 3 along x.
  const ForestSpec spec = box_spec(3, 1, 8);
  TriangleSoup t;
  add_axis_quad(t, 0, 3.5 / 8, Vec3(0, -1, -1), Vec3(0, 2, 2));
  t.refresh();
  Setup s(spec, t);
  const DummyBlocks blocks = build_dummy_blocks(s.forest, s.mask, s.acc);
  const DummyBlock* b = blocks.find(s.forest.flat(0, 3, 4, 4));
  REQUIRE(b != nullptr);
  CellField field(s.forest, 1.0);
  double L[5];
  line_values(*b, field.raw().data(), s.forest.strides()[0], 0, GhostRule::kDirichlet, [](int) { return 0.0; }, L);
  for (double v : L) CHECK(std::isfinite(v));
}

TEST_CASE("Neumann ghosts copy the owner side") {
  const ForestSpec spec = box_spec(2, 1, 16);
  const double dx = 1.0 / 16;
  TriangleSoup t;
  add_axis_quad(t, 0, 8.5 * dx + 0.3 * dx, Vec3(0, -1, -1), Vec3(0, 2, 2));
  t.refresh();
  Setup s(spec, t);
  const DummyBlocks blocks = build_dummy_blocks(s.forest, s.mask, s.acc);
  CellField field(s.forest);
  for_each_cell(s.forest, [&](int c, int i, int j, int k) { field.at(c, i, j, k) = i * 10.0 + j; });
  const DummyBlock* b = blocks.find(s.forest.flat(0, 8, 5, 0));
  REQUIRE(b != nullptr);
  double L[5];
  line_values(*b, field.raw().data(), s.forest.strides()[0], 0, GhostRule::kNeumann, [](int) { return 0.0; }, L);
  CHECK(L[3] == L[2]);
  CHECK(L[4] == L[2]);
  CHECK(L[1] == field.at(0, 7, 5, 0));
}

TEST_CASE("dead-end filter threshold and sealed one-cell cavity") {
  // Closed box whose faces lie in the six axis neighbours of cell (4, 4, 4).
  const ForestSpec spec = box_spec(3, 1, 8);
  const double dx = 1.0 / 8;
  const Vec3 c(4.5 * dx, 4.5 * dx, 4.5 * dx);
  const TriangleSoup cavity = shapes::box(c - Vec3::Constant(0.9 * dx), c + Vec3::Constant(0.9 * dx));
  Setup s(spec, cavity);
  CHECK(s.mask.kind[s.forest.flat(0, 4, 4, 4)] != CellKind::kWallIncluding);
  CHECK(wall_including_neighbours(s.forest, s.mask, 0, 4, 4, 4) == 6);
  CHECK(s.mask.dead_end[s.forest.flat(0, 4, 4, 4)] == 1);
  // Exhaustive neighbour-count oracle over every cell.
  const auto st = s.forest.strides();
  for_each_cell(s.forest, [&](int cb, int i, int j, int k) {
    const std::size_t q = s.forest.flat(cb, i, j, k);
    int n = 0;
    for (int a = 0; a < 3; ++a) {
      const auto sa = static_cast<std::size_t>(st[static_cast<std::size_t>(a)]);
      n += s.mask.kind[q + sa] == CellKind::kWallIncluding;
      n += s.mask.kind[q - sa] == CellKind::kWallIncluding;
    }
    CHECK(s.mask.dead_end[q] == (n >= 5 ? 1 : 0));
  });
  const DummyBlocks blocks = build_dummy_blocks(s.forest, s.mask, s.acc);
  for (const ForcingSite& site : forcing_sites(blocks, s.mask)) CHECK(site.flat != s.forest.flat(0, 4, 4, 4));

  // One-cell channel open along x: interior cells keep forcing (4 of 6).
  TriangleSoup channel;
  add_axis_quad(channel, 1, c.y() - 0.9 * dx, Vec3(0, 0, 0), Vec3(1, 0, 1));
  add_axis_quad(channel, 1, c.y() + 0.9 * dx, Vec3(0, 0, 0), Vec3(1, 0, 1));
  add_axis_quad(channel, 2, c.z() - 0.9 * dx, Vec3(0, 0, 0), Vec3(1, 1, 0));
  add_axis_quad(channel, 2, c.z() + 0.9 * dx, Vec3(0, 0, 0), Vec3(1, 1, 0));
  channel.refresh();
  Setup ch(spec, channel);
  CHECK(wall_including_neighbours(ch.forest, ch.mask, 0, 4, 4, 4) == 4);
  CHECK(ch.mask.dead_end[ch.forest.flat(0, 4, 4, 4)] == 0);
}

TEST_CASE("forcing vanishes without geometry and at rest") {
  const TriangleSoup sphere = shapes::icosphere(Vec3(0.5, 0.5, 0.5), 0.3, 2);
  Setup s(box_spec(3, 2, 8), sphere);
  const DummyBlocks blocks = build_dummy_blocks(s.forest, s.mask, s.acc);
  const auto sites = forcing_sites(blocks, s.mask);
  REQUIRE(!sites.empty());
  for (const ForcingSite& site : sites) CHECK(s.mask.dummy(site.flat));
  std::array<CellField, 3> u{CellField(s.forest), CellField(s.forest), CellField(s.forest)};
  for (ForcingRule rule : {ForcingRule::kBlend, ForcingRule::kInterpolate, ForcingRule::kNone}) {
    ForcingField out;
    compute_forcing(s.forest, blocks, sites, rule, {&u[0].raw(), &u[1].raw(), &u[2].raw()}, 3, 1e-3, out,
                    true);
    for (const auto& f : out.f) {
      for (double v : f) CHECK(v == 0.0);
    }
  }
  CHECK(parse_forcing_rule(to_string(ForcingRule::kInterpolate)) == ForcingRule::kInterpolate);
  CHECK_THROWS(parse_forcing_rule("sideways"));
}

TEST_CASE("lid wall over quiescent fluid: linear reconstruction hits the wall velocity") {
  // Wall at y = y0 moving with (1, 0, 0) above fluid at rest.
  const ForestSpec spec = box_spec(2, 1, 16);
  const double dx = 1.0 / 16;
  // A wall exactly on a cell face would make both rows wall-including and
  // the dead-end filter would cancel their forcing, so 0.5 is avoided.
  for (double frac : {0.1, 0.35, 0.49, 0.8}) {
    const double y0 = 10.5 * dx + frac * dx;
    TriangleSoup t;
    add_axis_quad(t, 1, y0, Vec3(-1, 0, -1), Vec3(2, 0, 1));
    t.refresh();
    Setup s(spec, t);
    DummyBlocks blocks = build_dummy_blocks(s.forest, s.mask, s.acc);
    blocks.update_wall_velocity([](const Vec3&, double) { return Vec3(1, 0, 0); }, 0.0);
    const auto sites = forcing_sites(blocks, s.mask);
    std::array<CellField, 3> u{CellField(s.forest), CellField(s.forest), CellField(s.forest)};
    ForcingField out;
    compute_forcing(s.forest, blocks, sites, ForcingRule::kInterpolate, {&u[0].raw(), &u[1].raw(), &u[2].raw()}, 2,
                    1e-3, out, true);
    int checked = 0;
    for (const ForcingSite& site : sites) {
      const DummyBlock& b = blocks.blocks[static_cast<std::size_t>(site.block)];
      if (site.direction != face_id(1, 1) || b.first_ghost(face_id(1, -1)) != 3) continue;
      const double u_cell = u[0].raw()[site.flat];
      const double u_opp = u[0].raw()[site.flat - static_cast<std::size_t>(s.forest.strides()[1])];
      const double at_wall = u_opp + (u_cell - u_opp) * (dx + site.d) / dx;
      CHECK(at_wall == doctest::Approx(1.0).epsilon(1e-10));
      ++checked;
    }
    CHECK(checked == 16);
  }
}
