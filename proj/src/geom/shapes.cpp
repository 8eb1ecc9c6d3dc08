#include "tfib/geom/shapes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <set>

namespace tfib::shapes {

TriangleSoup box(const Vec3& lo, const Vec3& hi) {
  const auto corner = [&](int i) {
    return Vec3((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(), (i & 4) ? hi.z() : lo.z());
  };
  // Quads as corner indices, wound counter-clockwise seen from outside.
  static constexpr std::array<std::array<int, 4>, 6> quads{{{0, 2, 3, 1},
                                                            {4, 5, 7, 6},
                                                            {0, 1, 5, 4},
                                                            {2, 6, 7, 3},
                                                            {0, 4, 6, 2},
                                                            {1, 3, 7, 5}}};
  TriangleSoup soup;
  for (const auto& q : quads) {
    soup.add(corner(q[0]), corner(q[1]), corner(q[2]));
    soup.add(corner(q[0]), corner(q[2]), corner(q[3]));
  }
  soup.refresh();
  return soup;
}

TriangleSoup icosphere(const Vec3& center, double radius, int subdivisions) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {{-1, phi, 0}, {1, phi, 0}, {-1, -phi, 0}, {1, -phi, 0},
                             {0, -1, phi}, {0, 1, phi}, {0, -1, -phi}, {0, 1, -phi},
                             {phi, 0, -1}, {phi, 0, 1}, {-phi, 0, -1}, {-phi, 0, 1}};
  for (Vec3& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
      {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
      {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<int, int>, int> midpoint;
    const auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      verts.push_back((verts[a] + verts[b]).normalized());
      const int id = static_cast<int>(verts.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces.swap(next);
  }
  TriangleSoup soup;
  for (const auto& f : faces) {
    soup.add(center + radius * verts[f[0]], center + radius * verts[f[1]],
             center + radius * verts[f[2]]);
  }
  soup.refresh();
  return soup;
}

TriangleSoup extrude_polygon(const std::vector<Eigen::Vector2d>& polygon, double z_lo,
                             double z_hi) {
  TriangleSoup soup;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector2d& a = polygon[i];
    const Eigen::Vector2d& b = polygon[(i + 1) % n];
    const Vec3 a0(a.x(), a.y(), z_lo), b0(b.x(), b.y(), z_lo);
    const Vec3 a1(a.x(), a.y(), z_hi), b1(b.x(), b.y(), z_hi);
    soup.add(a0, b0, b1);
    soup.add(a0, b1, a1);
  }
  soup.refresh();
  return soup;
}

std::vector<Eigen::Vector2d> circle_polygon(const Eigen::Vector2d& center, double radius,
                                            int segments) {
  std::vector<Eigen::Vector2d> pts;
  pts.reserve(static_cast<std::size_t>(segments));
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * std::numbers::pi * i / segments;
    pts.emplace_back(center + radius * Eigen::Vector2d(std::cos(a), std::sin(a)));
  }
  return pts;
}

std::vector<Eigen::Vector2d> square_polygon(const Eigen::Vector2d& center, double side,
                                            double angle, int segments_per_side) {
  const double h = 0.5 * side;
  const std::array<Eigen::Vector2d, 4> corners = {
      Eigen::Vector2d(-h, -h), Eigen::Vector2d(h, -h), Eigen::Vector2d(h, h),
      Eigen::Vector2d(-h, h)};
  const Eigen::Rotation2Dd rot(angle);
  std::vector<Eigen::Vector2d> pts;
  for (int c = 0; c < 4; ++c) {
    const Eigen::Vector2d& a = corners[c];
    const Eigen::Vector2d& b = corners[(c + 1) % 4];
    for (int s = 0; s < segments_per_side; ++s) {
      const double f = static_cast<double>(s) / segments_per_side;
      pts.emplace_back(center + rot * (a + f * (b - a)));
    }
  }
  return pts;
}

namespace {

Vec3 plate_point(const Vec3& center, double alpha, double x, double y, double z) {
  // Rotation about +z by -alpha raises the leading edge (x < 0) for alpha > 0.
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  return center + Vec3(c * x + s * y, -s * x + c * y, z);
}

}  // namespace

TriangleSoup flat_plate(const Vec3& center, double chord, double span, double alpha, int nx,
                        int nz) {
  TriangleSoup soup;
  for (int i = 0; i < nx; ++i) {
    for (int k = 0; k < nz; ++k) {
      const double x0 = -0.5 * chord + chord * i / nx;
      const double x1 = -0.5 * chord + chord * (i + 1) / nx;
      const double z0 = -0.5 * span + span * k / nz;
      const double z1 = -0.5 * span + span * (k + 1) / nz;
      const Vec3 p00 = plate_point(center, alpha, x0, 0.0, z0);
      const Vec3 p10 = plate_point(center, alpha, x1, 0.0, z0);
      const Vec3 p11 = plate_point(center, alpha, x1, 0.0, z1);
      const Vec3 p01 = plate_point(center, alpha, x0, 0.0, z1);
      // Winding gives a +y (suction side) normal at alpha = 0.
      soup.add(p00, p01, p11);
      soup.add(p00, p11, p10);
    }
  }
  soup.refresh();
  return soup;
}

TriangleSoup subdivide(const TriangleSoup& soup, int levels) {
  TriangleSoup cur = soup;
  for (int l = 0; l < levels; ++l) {
    TriangleSoup next;
    for (const Triangle& t : cur.triangles()) {
      const Vec3 a = 0.5 * (t.v0 + t.v1), b = 0.5 * (t.v1 + t.v2), c = 0.5 * (t.v2 + t.v0);
      next.add(t.v0, a, c);
      next.add(a, t.v1, b);
      next.add(c, b, t.v2);
      next.add(a, b, c);
    }
    cur = std::move(next);
  }
  cur.refresh();
  return cur;
}

TriangleSoup thin_plate_box(const Vec3& center, double chord, double span, double thickness,
                            double alpha) {
  const TriangleSoup local = box(Vec3(-0.5 * chord, -0.5 * thickness, -0.5 * span),
                                 Vec3(0.5 * chord, 0.5 * thickness, 0.5 * span));
  TriangleSoup soup;
  for (const Triangle& t : local.triangles()) {
    soup.add(plate_point(center, alpha, t.v0.x(), t.v0.y(), t.v0.z()),
             plate_point(center, alpha, t.v1.x(), t.v1.y(), t.v1.z()),
             plate_point(center, alpha, t.v2.x(), t.v2.y(), t.v2.z()));
  }
  soup.refresh();
  return soup;
}

namespace {

Triangle shrink(const Triangle& t, double factor) {
  const Vec3 c = t.centroid();
  Triangle s = t;
  s.v0 = c + factor * (t.v0 - c);
  s.v1 = c + factor * (t.v1 - c);
  s.v2 = c + factor * (t.v2 - c);
  return s;
}

std::vector<bool> pick(std::size_t n, double fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<bool> chosen(n);
  for (std::size_t i = 0; i < n; ++i) chosen[i] = uni(rng) < fraction;
  return chosen;
}

}  // namespace

TriangleSoup inject_gaps(const TriangleSoup& soup, double gap, double fraction,
                         std::uint64_t seed) {
  const std::vector<bool> chosen = pick(soup.size(), fraction, seed);
  TriangleSoup out;
  for (std::size_t i = 0; i < soup.size(); ++i) {
    Triangle t = soup[i];
    if (chosen[i]) {
      // Pull each vertex `gap` towards the centroid.
      const Vec3 c = t.centroid();
      for (Vec3* v : {&t.v0, &t.v1, &t.v2}) {
        const Vec3 d = c - *v;
        const double len = d.norm();
        if (len > gap) *v += gap * d / len;
      }
    }
    out.add(t.v0, t.v1, t.v2);
  }
  out.refresh();
  return out;
}

TriangleSoup reduce_faces(const TriangleSoup& soup, double fraction) {
  const double factor = std::sqrt(std::max(0.0, 1.0 - fraction));
  TriangleSoup out;
  for (const Triangle& t : soup.triangles()) {
    const Triangle s = shrink(t, factor);
    out.add(s.v0, s.v1, s.v2);
  }
  out.refresh();
  return out;
}

TriangleSoup duplicate_faces(const TriangleSoup& soup, double fraction, std::uint64_t seed) {
  const std::vector<bool> chosen = pick(soup.size(), fraction, seed);
  TriangleSoup out;
  for (const Triangle& t : soup.triangles()) out.add(t.v0, t.v1, t.v2);
  for (std::size_t i = 0; i < soup.size(); ++i) {
    if (chosen[i]) out.add(soup[i].v0, soup[i].v1, soup[i].v2);
  }
  out.refresh();
  return out;
}

TriangleSoup flip_faces(const TriangleSoup& soup, double fraction, std::uint64_t seed) {
  const std::vector<bool> chosen = pick(soup.size(), fraction, seed);
  TriangleSoup out;
  for (std::size_t i = 0; i < soup.size(); ++i) {
    const Triangle& t = soup[i];
    if (chosen[i]) {
      out.add(t.v0, t.v2, t.v1);
    } else {
      out.add(t.v0, t.v1, t.v2);
    }
  }
  out.refresh();
  return out;
}

TriangleSoup remove_faces(const TriangleSoup& soup, const std::vector<std::size_t>& ids) {
  const std::set<std::size_t> drop(ids.begin(), ids.end());
  TriangleSoup out;
  for (std::size_t i = 0; i < soup.size(); ++i) {
    if (!drop.count(i)) out.add(soup[i].v0, soup[i].v1, soup[i].v2);
  }
  out.refresh();
  return out;
}

}  // namespace tfib::shapes
