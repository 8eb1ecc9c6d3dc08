#pragma once

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfib/solver/config.hpp"

namespace tfib {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CaseKind { kTgv, kBody, kIsotropic };

CaseKind parse_case_kind(const std::string& s);
std::string to_string(CaseKind k);

/// Built-in geometry used when no STL path is given.
enum class ShapeKind { kNone, kSquare, kCircle, kSphere, kPlate, kThinPlate, kBox };

ShapeKind parse_shape(const std::string& s);
std::string to_string(ShapeKind k);

/// One case, read from `key = value` lines. Unset keys keep these defaults.
struct CaseConfig {
  std::string name = "case";
  CaseKind kind = CaseKind::kTgv;

  // Geometry: STL files (relative paths resolve against the config file)
  // or a built-in shape, then optional synthetic defects.
  std::vector<std::string> geometry;
  double geometry_scale = 1.0;
  ShapeKind shape = ShapeKind::kNone;
  double shape_size = 1.0;  // square side, circle/sphere diameter, plate chord
  Vec3 shape_center = Vec3::Zero();
  int shape_resolution = 0;  // segments (2D) or subdivisions (3D); 0 = default
  double plate_alpha = 0.0;  // degrees
  double plate_thickness = 0.0;
  double dirty_gap = 0.0;
  double dirty_gap_fraction = 0.0;
  double dirty_reduce = 0.0;
  double dirty_duplicate = 0.0;
  double dirty_flip = 0.0;

  // Grid.
  int dim = 2;
  Vec3 domain_lo = Vec3(-2, -2, -0.5);
  Vec3 domain_hi = Vec3(2, 2, 0.5);
  int resolution = 40;  // finest-level cells along x
  int root_cubes = 4;   // root cubes along x
  int max_levels = 0;
  int pad_cells = 4;
  std::array<BcType, 6> bc{BcType::kPeriodic, BcType::kPeriodic, BcType::kPeriodic,
                           BcType::kPeriodic, BcType::kPeriodic, BcType::kPeriodic};

  // Physics and scheme.
  double re = 100.0;
  double rho = 1.0;
  double u0 = 1.0;
  double dt = 1e-4;
  long steps = 3000;
  TimeIntegrator integrator = TimeIntegrator::kAdamsBashforth;
  double quick_blend = 0.0;
  PoissonMethod poisson = PoissonMethod::kBiCGStab;
  double poisson_tol = 1e-8;
  int poisson_max = 20000;
  bool multigrid = true;
  PressureCoupling pressure_coupling = PressureCoupling::kNeumann;
  ForcingRule forcing = ForcingRule::kInterpolate;
  bool turbulence = false;
  bool dead_end_filter = true;
  bool thin_plate_filter = true;

  // Isotropic initial field.
  std::string spectrum;
  int spectrum_modes = 5000;
  double spectrum_kmin = 0.0;
  double spectrum_kmax = 0.0;

  // Output plan.
  int history_every = 1;
  int force_every = 0;   // 0: final step only
  int fields_every = 0;  // 0: final step only; < 0: never
  int slice_axis = 2;    // -1: no slice
  double slice_position = 0.0;
  std::vector<Vec3> probes;

  std::uint64_t seed = 1;
  int threads = 0;  // 0: OpenMP default
  /// Permit grids above the desk-scale cell budget.
  bool allow_large = false;

  /// Directory that relative paths resolve against.
  std::filesystem::path base_dir;

  BoundarySpec boundary() const;
  SchemeConfig scheme() const;
  double finest_dx() const;
  /// Kinematic viscosity u0 * L / Re with the body size (or 1) as L.
  double nu() const;
  std::filesystem::path resolve(const std::string& path) const;
  /// Checks value ranges and that referenced files exist.
  void validate() const;
};

/// Cells above which validate() refuses to run unless allow_large is set.
constexpr double kDeskCellBudget = 4.0e6;

CaseConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
CaseConfig read_config(const std::filesystem::path& path);
/// Every key in a fixed order; parse_config(serialize(c)) reproduces c.
std::string serialize(const CaseConfig& config);

}  // namespace tfib
