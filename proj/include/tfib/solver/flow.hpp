#pragma once

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "tfib/geom/raycast.hpp"
#include "tfib/ibm/dummy.hpp"
#include "tfib/ibm/forcing.hpp"
#include "tfib/ibm/mask.hpp"
#include "tfib/solver/config.hpp"
#include "tfib/solver/poisson.hpp"

namespace tfib {

/// Collocated cell velocities and pressure, face-normal velocities per axis
/// (entry (c, i, j, k) of U[a] is the face on the low side of that cell) and
/// eddy viscosity. Components beyond the grid dimension stay zero.
struct FieldState {
  std::array<CellField, 3> u;
  CellField p;
  std::array<CellField, 3> U;
  CellField nu_t;
  double t = 0.0;
  long step = 0;
};

struct StepStats {
  long step = 0;
  double t = 0.0;
  int inner_iterations = 0;
  double inner_residual = 0.0;
  int poisson_iterations = 0;
  double poisson_residual = 0.0;
  double max_divergence = 0.0;  // max |div U| after projection
  double kinetic_energy = 0.0;  // volume mean of |u|^2 / 2
  double max_velocity = 0.0;
  double cfl = 0.0;
  double max_forcing = 0.0;
};

using VectorFunction = std::function<Vec3(const Vec3&, double)>;
using ScalarFunction = std::function<double(const Vec3&, double)>;

/// Fractional-step incompressible solver on a cube forest with an optional
/// immersed triangle soup.
class FlowSolver {
 public:
  /// `soup` may be null (no immersed boundary); it must outlive the solver.
  FlowSolver(const CubeForest& forest, const SchemeConfig& scheme, const BoundarySpec& bc,
             const TriangleSoup* soup = nullptr, WallVelocity wall_velocity = {});

  const CubeForest& forest() const { return *forest_; }
  const HaloPlan& plan() const { return plan_; }
  const SchemeConfig& scheme() const { return scheme_; }
  SchemeConfig& scheme() { return scheme_; }
  const BoundarySpec& boundary() const { return bc_; }
  FieldState& state() { return state_; }
  const FieldState& state() const { return state_; }
  const CellMask* mask() const { return mask_ ? &*mask_ : nullptr; }
  const DummyBlocks* blocks() const { return blocks_ ? &*blocks_ : nullptr; }
  const std::vector<ForcingSite>& forcing_sites() const { return sites_; }
  const ForcingField& last_forcing() const { return forcing_; }
  const RayAccelerator* accelerator() const { return acc_.get(); }
  int components() const { return forest_->dim(); }

  /// Sets cell velocities (and pressure) from functions of position at time
  /// t, then face velocities by plain interpolation.
  void initialize(const VectorFunction& u0, const ScalarFunction& p0 = {}, double t0 = 0.0);

  /// One full time step.
  StepStats advance();

  // Stages, exposed for testing.
  void fill_velocity_halos(std::array<CellField, 3>& u) const;
  void fill_pressure_halos(CellField& p) const;
  void apply_outer_bcs();
  /// RHS = -div(U u) + (1/Re) lap u + div(nu_t (grad u + grad u^T)), per
  /// component, using the current face velocities U for advection.
  void assemble_momentum_rhs(std::array<CellField, 3>& u, std::array<CellField, 3>& rhs) const;
  /// Cell-centred pressure gradient component along `axis`.
  void cell_gradient(const CellField& p, int axis, CellField& out) const;
  /// Face velocities from cell velocities: plain average plus, when `p` is
  /// given, the pressure-dissipation correction with step dt.
  void rhie_chow_faces(std::array<CellField, 3>& u, const CellField* p, double dt,
                       std::array<CellField, 3>& U) const;
  /// Cell divergence of face velocities into `div`; returns the max |div|.
  double divergence(const std::array<CellField, 3>& U, CellField& div) const;
  /// Subtracts dt * grad(phi) from cell and face velocities and adds phi to p.
  void correct_velocity(CellField& phi, double dt);
  void update_eddy_viscosity();
  double kinetic_energy() const;
  /// Throws SolverError if any interior value is not finite.
  void check_finite() const;

  const PoissonProblem& poisson() const { return *poisson_; }
  /// Recomputes wall velocities for time t.
  void set_wall_time(double t);

 private:
  template <class F>
  void for_cubes(F&& f) const;
  double face_inv(int axis, std::size_t face_flat, double inv) const;
  /// Coarse faces on a level jump take the mean of their fine faces.
  void sync_jump_faces(int axis, std::vector<double>& Ua) const;
  bool face_cut(int axis, std::size_t face_flat) const;
  Vec3 cut_face_velocity(int axis, std::size_t face_flat) const;
  void set_boundary_faces(std::array<CellField, 3>& U, const std::array<CellField, 3>& u) const;
  void build_cut_faces();
  void momentum_solve(std::array<CellField, 3>& rhs_now, StepStats& stats);
  void apply_forcing(std::array<CellField, 3>& u_pred, double dt, bool record);

  const CubeForest* forest_;
  HaloPlan plan_;
  SchemeConfig scheme_;
  BoundarySpec bc_;
  const TriangleSoup* soup_;
  WallVelocity wall_velocity_;
  std::unique_ptr<RayAccelerator> acc_;
  std::optional<CellMask> mask_;
  std::optional<DummyBlocks> blocks_;
  std::vector<ForcingSite> sites_;
  ForcingField forcing_;
  // Faces crossed by the surface (closed in the pressure equation).
  std::array<std::vector<std::uint8_t>, 3> open_;
  std::array<std::vector<int>, 3> cut_block_;  // block id owning the crossing, or -1
  std::array<std::vector<std::int8_t>, 3> cut_dir_;
  std::unique_ptr<PoissonProblem> poisson_;
  std::unique_ptr<PoissonMultigrid> multigrid_;

  FieldState state_;
  std::array<CellField, 3> rhs_prev_;
  bool have_prev_ = false;
  // Work arrays.
  mutable std::array<CellField, 3> work_u_, work_rhs_;
  mutable CellField phi_, div_, grad_tmp_;
  mutable std::vector<CellField> grad_;  // dim*dim velocity gradient components
};

}  // namespace tfib
