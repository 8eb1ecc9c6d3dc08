#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <unsupported/Eigen/BVH>

#include "tfib/geom/soup.hpp"

namespace tfib {

struct RayHit {
  double t = 0.0;  // distance along the (unit) ray direction
  int triangle = -1;
  double u = 0.0;  // barycentric weight of v1
  double v = 0.0;  // barycentric weight of v2
};

struct RayOptions {
  /// Determinant threshold, relative to the squared longest edge of each
  /// facet. Facets below it are treated as parallel and skipped.
  double det_eps = 1e-12;
  /// Slack on the barycentric bounds; keeps rays through shared edges of an
  /// unwelded soup from slipping between the two facets.
  double bary_eps = 1e-9;
  /// Hits closer than this in t collapse to one (coincident facets).
  /// Negative selects 1e-9 times the soup bounding-box diagonal.
  double t_weld = -1.0;
};

/// Möller–Trumbore test of one facet. Returns nullopt for a miss or a
/// (near-)parallel facet; no division happens in that case.
std::optional<RayHit> intersect_triangle(const Triangle& tri, int id, const Vec3& origin,
                                         const Vec3& dir, const RayOptions& opts);

/// Separating-axis overlap test between a facet and a closed box.
bool triangle_box_overlap(const Triangle& tri, const Box3& box);

/// Read-only spatial index over a soup; safe for concurrent queries. The soup
/// must outlive the index.
class RayAccelerator {
 public:
  explicit RayAccelerator(const TriangleSoup& soup);

  const TriangleSoup& soup() const { return *soup_; }

  /// All hits with 0 <= t <= max_distance, ascending in t, coincident hits
  /// merged. `dir` must be a unit vector.
  std::vector<RayHit> ray_intersections(const Vec3& origin, const Vec3& dir, double max_distance,
                                        const RayOptions& opts = {}) const;
  /// Same contract, scanning every facet.
  std::vector<RayHit> ray_intersections_exhaustive(const Vec3& origin, const Vec3& dir,
                                                   double max_distance,
                                                   const RayOptions& opts = {}) const;

  /// Facets whose bounding box meets `box` (superset of true overlaps).
  std::vector<int> candidates(const Box3& box) const;
  /// Facets that truly overlap the closed box.
  std::vector<int> overlapping(const Box3& box) const;
  bool any_overlap(const Box3& box) const;

 private:
  std::vector<RayHit> finalize(std::vector<RayHit> hits, const RayOptions& opts) const;

  const TriangleSoup* soup_;
  Eigen::KdBVH<double, 3, int> tree_;
  bool empty_ = true;
};

}  // namespace tfib
