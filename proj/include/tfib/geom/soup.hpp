#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Geometry>

namespace tfib {

using Vec3 = Eigen::Vector3d;
using Box3 = Eigen::AlignedBox3d;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One facet of the immersed surface. The normal follows the vertex winding
/// (right-hand rule); nothing guarantees that neighbouring facets agree.
struct Triangle {
  Vec3 v0 = Vec3::Zero();
  Vec3 v1 = Vec3::Zero();
  Vec3 v2 = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  double area = 0.0;
  bool degenerate = false;

  Vec3 centroid() const { return (v0 + v1 + v2) / 3.0; }
  double longest_edge() const;
  Box3 bounds() const;
};

/// Unordered set of triangles with no connectivity, closedness or orientation
/// guarantee. Degenerate facets are kept and flagged.
class TriangleSoup {
 public:
  TriangleSoup() = default;

  /// Relative area threshold (times bounding-box diagonal squared) below
  /// which a facet is flagged degenerate.
  static constexpr double kDegenerateAreaRel = 1e-14;

  /// Appends a facet. Degenerate flags are only valid after refresh().
  void add(const Vec3& a, const Vec3& b, const Vec3& c);
  void append(const TriangleSoup& other);
  /// Recomputes normals, areas, flags and the bounding box.
  void refresh();

  std::size_t size() const { return triangles_.size(); }
  bool empty() const { return triangles_.empty(); }
  const Triangle& operator[](std::size_t i) const { return triangles_[i]; }
  const std::vector<Triangle>& triangles() const { return triangles_; }

  const Box3& bounds() const { return bounds_; }
  double diagonal() const;
  std::size_t degenerate_count() const;
  double total_area() const;

  void scale(double factor);
  void translate(const Vec3& offset);

 private:
  std::vector<Triangle> triangles_;
  Box3 bounds_;
};

}  // namespace tfib
