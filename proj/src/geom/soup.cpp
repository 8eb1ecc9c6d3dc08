#include "tfib/geom/soup.hpp"

#include <algorithm>

namespace tfib {

double Triangle::longest_edge() const {
  return std::max({(v1 - v0).norm(), (v2 - v1).norm(), (v0 - v2).norm()});
}

Box3 Triangle::bounds() const {
  Box3 b(v0);
  b.extend(v1);
  b.extend(v2);
  return b;
}

void TriangleSoup::add(const Vec3& a, const Vec3& b, const Vec3& c) {
  if (!a.allFinite() || !b.allFinite() || !c.allFinite()) {
    throw GeometryError("triangle " + std::to_string(triangles_.size()) +
                        " has a non-finite vertex");
  }
  Triangle t;
  t.v0 = a;
  t.v1 = b;
  t.v2 = c;
  const Vec3 cross = (b - a).cross(c - a);
  t.area = 0.5 * cross.norm();
  t.normal = t.area > 0.0 ? Vec3(cross.normalized()) : Vec3::Zero();
  triangles_.push_back(t);
  bounds_.extend(a);
  bounds_.extend(b);
  bounds_.extend(c);
}

void TriangleSoup::append(const TriangleSoup& other) {
  for (const Triangle& t : other.triangles_) add(t.v0, t.v1, t.v2);
  refresh();
}

void TriangleSoup::refresh() {
  bounds_.setEmpty();
  for (const Triangle& t : triangles_) {
    bounds_.extend(t.v0);
    bounds_.extend(t.v1);
    bounds_.extend(t.v2);
  }
  const double diag = diagonal();
  for (Triangle& t : triangles_) {
    const Vec3 cross = (t.v1 - t.v0).cross(t.v2 - t.v0);
    t.area = 0.5 * cross.norm();
    t.normal = t.area > 0.0 ? Vec3(cross.normalized()) : Vec3::Zero();
    t.degenerate = t.area <= kDegenerateAreaRel * diag * diag;
  }
}

double TriangleSoup::diagonal() const {
  if (bounds_.isEmpty()) return 0.0;
  return bounds_.diagonal().norm();
}

std::size_t TriangleSoup::degenerate_count() const {
  return static_cast<std::size_t>(std::count_if(
      triangles_.begin(), triangles_.end(), [](const Triangle& t) { return t.degenerate; }));
}

double TriangleSoup::total_area() const {
  double a = 0.0;
  for (const Triangle& t : triangles_) a += t.area;
  return a;
}

void TriangleSoup::scale(double factor) {
  for (Triangle& t : triangles_) {
    t.v0 *= factor;
    t.v1 *= factor;
    t.v2 *= factor;
  }
  refresh();
}

void TriangleSoup::translate(const Vec3& offset) {
  for (Triangle& t : triangles_) {
    t.v0 += offset;
    t.v1 += offset;
    t.v2 += offset;
  }
  refresh();
}

}  // namespace tfib
