#pragma once

#include <cstdint>
#include <vector>

#include "tfib/geom/soup.hpp"

namespace tfib::shapes {

/// Closed axis-aligned box, 12 facets, outward winding.
TriangleSoup box(const Vec3& lo, const Vec3& hi);

/// Icosahedron refined `subdivisions` times and projected onto the sphere.
TriangleSoup icosphere(const Vec3& center, double radius, int subdivisions);

/// Prism over a closed planar polygon (x, y), spanning z in [z_lo, z_hi];
/// the 2D immersed boundary representation. Each segment becomes two facets.
TriangleSoup extrude_polygon(const std::vector<Eigen::Vector2d>& polygon, double z_lo,
                             double z_hi);

std::vector<Eigen::Vector2d> circle_polygon(const Eigen::Vector2d& center, double radius,
                                            int segments);
/// Square of the given side rotated by `angle` radians about its centre.
std::vector<Eigen::Vector2d> square_polygon(const Eigen::Vector2d& center, double side,
                                            double angle, int segments_per_side);

/// Zero-thickness rectangular plate: chord along x, span along z, tilted by
/// `alpha` radians about the span axis (nose up for positive alpha),
/// centred at `center`. Split into `nx` x `nz` quads.
TriangleSoup flat_plate(const Vec3& center, double chord, double span, double alpha, int nx,
                        int nz);

/// Closed thin box around the same plate: thickness `thickness` along the
/// plate normal.
TriangleSoup thin_plate_box(const Vec3& center, double chord, double span, double thickness,
                            double alpha);

/// Splits every facet into four through its edge midpoints, `levels` times.
TriangleSoup subdivide(const TriangleSoup& soup, int levels);

// Synthetic dirty-geometry generators.

/// Shrinks a random fraction of facets towards their centroid by an absolute
/// distance `gap`, disconnecting them from their neighbours while keeping the
/// outer surface in place to within `gap`.
TriangleSoup inject_gaps(const TriangleSoup& soup, double gap, double fraction,
                         std::uint64_t seed);

/// Shrinks every facet about its centroid so its area drops by `fraction`.
TriangleSoup reduce_faces(const TriangleSoup& soup, double fraction);

/// Appends exact copies of a random fraction of facets.
TriangleSoup duplicate_faces(const TriangleSoup& soup, double fraction, std::uint64_t seed);

/// Reverses the winding of a random fraction of facets.
TriangleSoup flip_faces(const TriangleSoup& soup, double fraction, std::uint64_t seed);

/// Removes the facets whose ids are listed.
TriangleSoup remove_faces(const TriangleSoup& soup, const std::vector<std::size_t>& ids);

}  // namespace tfib::shapes
