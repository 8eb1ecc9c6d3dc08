#include "tfib/solver/config.hpp"

#include <cmath>

namespace tfib {

BoundarySpec BoundarySpec::all_periodic() { return BoundarySpec{}; }

void BoundarySpec::validate(const CubeForest& forest) const {
  for (int a = 0; a < forest.dim(); ++a) {
    const bool lo = face[static_cast<std::size_t>(face_id(a, -1))].type == BcType::kPeriodic;
    const bool hi = face[static_cast<std::size_t>(face_id(a, 1))].type == BcType::kPeriodic;
    if (lo != hi) {
      throw SolverError("inconsistent periodic pairing on axis " + std::to_string(a));
    }
    if (lo != forest.periodic()[static_cast<std::size_t>(a)]) {
      throw SolverError("boundary periodicity on axis " + std::to_string(a) +
                        " does not match the grid");
    }
  }
}

bool BoundarySpec::has_dirichlet_pressure() const {
  for (const FaceBc& f : face) {
    if (f.type == BcType::kOutflow) return true;
  }
  return false;
}

BcType parse_bc_type(const std::string& s) {
  if (s == "periodic") return BcType::kPeriodic;
  if (s == "inflow") return BcType::kInflow;
  if (s == "outflow") return BcType::kOutflow;
  if (s == "slip") return BcType::kSlip;
  if (s == "noslip" || s == "no_slip" || s == "no-slip") return BcType::kNoSlip;
  throw SolverError("unknown boundary condition '" + s + "'");
}

std::string to_string(BcType t) {
  switch (t) {
    case BcType::kPeriodic:
      return "periodic";
    case BcType::kInflow:
      return "inflow";
    case BcType::kOutflow:
      return "outflow";
    case BcType::kSlip:
      return "slip";
    case BcType::kNoSlip:
      break;
  }
  return "noslip";
}

TimeIntegrator parse_integrator(const std::string& s) {
  if (s == "crank_nicolson" || s == "cn") return TimeIntegrator::kCrankNicolson;
  if (s == "adams_bashforth" || s == "ab2") return TimeIntegrator::kAdamsBashforth;
  throw SolverError("unknown time integrator '" + s + "'");
}

PoissonMethod parse_poisson(const std::string& s) {
  if (s == "bicgstab") return PoissonMethod::kBiCGStab;
  if (s == "redblack_sor" || s == "sor") return PoissonMethod::kRedBlackSor;
  throw SolverError("unknown poisson solver '" + s + "'");
}

PressureCoupling parse_pressure_coupling(const std::string& s) {
  if (s == "global") return PressureCoupling::kGlobal;
  if (s == "neumann") return PressureCoupling::kNeumann;
  throw SolverError("unknown pressure coupling '" + s + "'");
}

std::string to_string(TimeIntegrator v) {
  return v == TimeIntegrator::kCrankNicolson ? "crank_nicolson" : "adams_bashforth";
}
std::string to_string(PoissonMethod v) {
  return v == PoissonMethod::kBiCGStab ? "bicgstab" : "redblack_sor";
}
std::string to_string(PressureCoupling v) {
  return v == PressureCoupling::kGlobal ? "global" : "neumann";
}

void SchemeConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw SolverError("dt must be positive");
  if (!(re > 0.0) || !std::isfinite(re)) throw SolverError("Re must be positive");
  if (!(quick_blend >= 0.0 && quick_blend <= 1.0)) throw SolverError("quick_blend must lie in [0, 1]");
  if (!(inner_tol > 0.0) || inner_max < 1) throw SolverError("invalid inner iteration settings");
  if (!(poisson_tol > 0.0) || poisson_max < 1) throw SolverError("invalid poisson settings");
  if (!(sor_omega > 0.0 && sor_omega < 2.0)) throw SolverError("SOR omega must lie in (0, 2)");
}

}  // namespace tfib
