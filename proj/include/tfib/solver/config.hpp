#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "tfib/geom/soup.hpp"
#include "tfib/grid/forest.hpp"
#include "tfib/ibm/forcing.hpp"

namespace tfib {

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BcType { kPeriodic, kInflow, kOutflow, kSlip, kNoSlip };

struct FaceBc {
  BcType type = BcType::kPeriodic;
  Vec3 velocity = Vec3::Zero();  // inflow velocity
};

/// Conditions per domain face, indexed by face_id(axis, side).
struct BoundarySpec {
  std::array<FaceBc, 6> face;

  static BoundarySpec all_periodic();
  /// Throws SolverError when a periodic face is paired with a non-periodic
  /// one or disagrees with the forest's periodic flags.
  void validate(const CubeForest& forest) const;
  bool has_dirichlet_pressure() const;
};

BcType parse_bc_type(const std::string& s);
std::string to_string(BcType t);

enum class TimeIntegrator { kCrankNicolson, kAdamsBashforth };
enum class PoissonMethod { kBiCGStab, kRedBlackSor };
/// kGlobal: the pressure equation ignores the immersed surface.
/// kNeumann: faces crossed by the surface are removed from the pressure
/// equation and carry the wall velocity; ghost pressure is zero-gradient.
enum class PressureCoupling { kGlobal, kNeumann };

TimeIntegrator parse_integrator(const std::string& s);
PoissonMethod parse_poisson(const std::string& s);
PressureCoupling parse_pressure_coupling(const std::string& s);
std::string to_string(TimeIntegrator v);
std::string to_string(PoissonMethod v);
std::string to_string(PressureCoupling v);

struct SchemeConfig {
  double dt = 1e-3;
  double re = 100.0;
  double quick_blend = 0.1;
  TimeIntegrator integrator = TimeIntegrator::kCrankNicolson;
  double inner_tol = 1e-8;
  int inner_max = 50;
  PoissonMethod poisson = PoissonMethod::kBiCGStab;
  /// Target for max |div U| after projection.
  double poisson_tol = 1e-8;
  int poisson_max = 20000;
  double sor_omega = 1.7;
  /// Geometric multigrid preconditioning for BiCGStab.
  bool poisson_multigrid = true;
  PressureCoupling pressure_coupling = PressureCoupling::kNeumann;
  ForcingRule forcing = ForcingRule::kBlend;
  bool turbulence = false;
  bool dead_end_filter = true;
  double cfl_warn = 1.0;

  void validate() const;
};

}  // namespace tfib
