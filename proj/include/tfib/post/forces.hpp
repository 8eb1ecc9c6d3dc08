#pragma once

#include <array>
#include <optional>
#include <vector>

#include "tfib/geom/raycast.hpp"
#include "tfib/grid/field.hpp"
#include "tfib/ibm/mask.hpp"

namespace tfib {

/// Inverse-square-distance weight of cell centre xk for surface point X on
/// the side the normal n faces; zero for cells on the other side
/// (n . (X - xk) >= 0).
double shepard_weight(const Vec3& X, const Vec3& n, const Vec3& xk);

/// Shepard average of `values` at `points` for the side n faces; nullopt
/// when no point is admissible.
std::optional<double> shepard_sample(const Vec3& X, const Vec3& n, const std::vector<Vec3>& points,
                                     const std::vector<double>& values);

/// One surrounding fluid cell of a surface sample.
struct SampleCell {
  Vec3 x = Vec3::Zero();
  double p = 0.0;
  Vec3 u = Vec3::Zero();
  double weight = 0.0;
  bool filtered = false;  // removed by the thin-plate filter
};

/// Surface node X of one facet corner, seen from one side of the facet.
struct SurfaceSample {
  int triangle = -1;
  int corner = 0;
  int side = 1;                // +1 front (facet normal), -1 back
  Vec3 x = Vec3::Zero();
  Vec3 n = Vec3::UnitX();      // unit normal pointing into the sampled side
  std::vector<SampleCell> cells;

  bool valid() const;
  double pressure() const;
  /// Shepard average of the one-sided wall gradient (u_k - u_wall) / d_k
  /// with d_k the normal distance of cell k.
  Vec3 wall_gradient(const Vec3& u_wall = Vec3::Zero()) const;
};

struct SurfaceFields {
  const CubeForest* forest = nullptr;
  const CellField* p = nullptr;
  const std::array<CellField, 3>* u = nullptr;  // optional
  const CellMask* mask = nullptr;               // dead-end cells are skipped
};

/// Samples both sides of every facet corner. The surrounding cells are the
/// axis neighbours of the cell containing X (at most 2d) that lie inside
/// the domain, are not dead-ended and sit on the sampled side.
std::vector<SurfaceSample> sample_surface(const SurfaceFields& fields, const TriangleSoup& soup);

/// Thin-plate filter: a surrounding cell is dropped from a sample when the
/// segment from X to it crosses another facet facing within 60 degrees of
/// +-n, i.e. the cell belongs to the fluid on the far side of a
/// sub-cell-thickness body. Returns the
/// number of cells dropped. Leaves samples of resolved bodies unchanged.
std::size_t thin_plate_filter(std::vector<SurfaceSample>& samples, const RayAccelerator& acc,
                              double dx);

struct ForceReference {
  double rho = 1.0;
  double u0 = 1.0;
  double area = 1.0;
  double mu = 0.0;  // dynamic viscosity for the viscous traction
};

double sphere_reference_area(double diameter);
/// Plate reference 6 C^2 (span six chords).
double plate_reference_area(double chord);

struct ForceReport {
  Vec3 force = Vec3::Zero();
  Vec3 pressure = Vec3::Zero();
  Vec3 viscous = Vec3::Zero();
  double cd = 0.0;  // f_x / (q A)
  double cl = 0.0;  // f_y / (q A)
  double area = 0.0;
  double dynamic_pressure = 0.0;  // q = rho U0^2 / 2
  std::size_t invalid_samples = 0;
};

/// Sums (-p n + mu du_t/dn) over facets and sides: each facet side carries
/// its area times the mean traction of its valid corner samples. Summation
/// runs in facet order.
ForceReport integrate_forces(const std::vector<SurfaceSample>& samples, const TriangleSoup& soup,
                             const ForceReference& ref);

/// Pressure coefficient averaged over meridian angle bins; the angle is
/// measured at `center` from the upstream stagnation direction -flow.
/// Front-side samples only; empty bins hold NaN.
std::vector<double> cp_profile(const std::vector<SurfaceSample>& samples, const Vec3& center,
                               const Vec3& flow, int bins, double p_inf, double dynamic_pressure);

}  // namespace tfib
