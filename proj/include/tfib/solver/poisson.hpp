#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tfib/grid/field.hpp"
#include "tfib/solver/config.hpp"

namespace tfib {

struct PoissonResult {
  int iterations = 0;
  double residual = 0.0;  // max |b - L phi| over cells
  bool converged = false;
};

/// Compact Laplacian on the cube forest with zero-gradient or zero-value
/// domain faces and optional closed (removed) faces along the immersed
/// surface. Across a level jump the fine faces carry the flux, with the
/// gradient taken over the 1.5 fine-cell centre distance, and the coarse
/// face flux is their mean, so the operator stays conservative and
/// symmetric in the volume-weighted inner product. Face arrays follow the face-velocity layout: entry (c, i, j, k)
/// of axis a is the face on the low side of cell (i, j, k).
class PoissonProblem {
 public:
  PoissonProblem(const CubeForest& forest, const HaloPlan& plan, const BoundarySpec& bc,
                 std::array<std::vector<std::uint8_t>, 3> open_faces = {});

  const CubeForest& forest() const { return *forest_; }
  const BoundarySpec& boundary() const { return bc_; }
  const std::vector<BoundaryHalo>& boundary_halos() const { return plan_->boundary(); }
  /// Fills halos of x: exchange, then domain-face conditions.
  void fill_halos(std::vector<double>& x) const;
  /// y = L x (x halos are refreshed first).
  void apply(std::vector<double>& x, std::vector<double>& y) const;
  /// max over cells of |b - L x|; also returns r.
  double residual(std::vector<double>& x, const std::vector<double>& b,
                  std::vector<double>* r = nullptr) const;
  bool open(int axis, std::size_t face_flat) const {
    return open_[static_cast<std::size_t>(axis)].empty() ||
           open_[static_cast<std::size_t>(axis)][face_flat] != 0;
  }
  /// Projects b onto the range (removes the volume mean on every connected
  /// region without a zero-value face) and returns the removed means' max.
  double make_compatible(std::vector<double>& b) const;
  /// Removes the volume mean of x on every gauge region.
  void fix_gauge(std::vector<double>& x) const;

  /// Coupling of a cell to a cell across a level jump, weighted in units of
  /// the cell's own 1 / dx^2.
  struct Link {
    std::size_t other = 0;
    double weight = 0.0;
  };
  std::span<const Link> links(std::size_t cell) const {
    return {links_.data() + link_begin_[cell], links_.data() + link_begin_[cell + 1]};
  }
  /// Faces on a level jump; the regular stencil skips them.
  bool jump_face(int axis, std::size_t face_flat) const {
    return !jump_[static_cast<std::size_t>(axis)].empty() &&
           jump_[static_cast<std::size_t>(axis)][face_flat] != 0;
  }
  /// Regular stencil link through face_flat along axis.
  bool regular(int axis, std::size_t face_flat) const {
    return open(axis, face_flat) && !jump_face(axis, face_flat);
  }

  const std::array<std::vector<std::uint8_t>, 3>& open_faces() const { return open_; }
  const HaloPlan& plan() const { return *plan_; }

  double dot(const std::vector<double>& a, const std::vector<double>& b) const;
  double max_abs(const std::vector<double>& a) const;

 private:
  void label_regions();
  void build_links();

  const CubeForest* forest_;
  const HaloPlan* plan_;
  BoundarySpec bc_;
  std::array<std::vector<std::uint8_t>, 3> open_;
  std::vector<int> region_;           // per flat cell, -1 for halos
  std::vector<std::uint8_t> gauged_;  // per region: needs a mean-zero gauge
  std::vector<double> region_volume_;
  std::array<std::vector<std::uint8_t>, 3> jump_;
  std::vector<std::size_t> link_begin_;
  std::vector<Link> links_;
};

/// Coupling count of every cell (interior links, doubled for zero-value
/// domain faces, none for zero-gradient ones); zero for isolated cells.
std::vector<double> poisson_diagonal(const PoissonProblem& problem);

/// One red-black Gauss-Seidel/SOR sweep; `reverse` visits black first.
void redblack_sweep(const PoissonProblem& problem, const std::vector<double>& diag,
                    const std::vector<double>& b, std::vector<double>& x, double omega,
                    bool reverse = false);

/// Geometric multigrid V-cycle over copies of the forest with halved cells
/// per cube edge. Coarse faces are open when any of their fine faces is.
/// Used as a fixed linear preconditioner.
class PoissonMultigrid {
 public:
  /// Coarsens while cells_per_side stays even and at least `min_cells`.
  explicit PoissonMultigrid(const PoissonProblem& fine, int min_cells = 4, int pre_sweeps = 2,
                            int post_sweeps = 2, int coarse_sweeps = 60);
  PoissonMultigrid(const PoissonMultigrid&) = delete;
  PoissonMultigrid& operator=(const PoissonMultigrid&) = delete;

  int levels() const { return static_cast<int>(levels_.size()); }
  /// z = one V-cycle applied to r from a zero initial guess.
  void apply(const std::vector<double>& r, std::vector<double>& z) const;

 private:
  struct Level {
    std::unique_ptr<CubeForest> forest;
    std::unique_ptr<HaloPlan> plan;
    std::unique_ptr<PoissonProblem> owned;
    const PoissonProblem* problem = nullptr;
    std::vector<double> diag;
    mutable std::vector<double> x, b, r;
  };
  void cycle(std::size_t l) const;

  std::vector<Level> levels_;
  int pre_, post_, coarse_;
};

/// Solves L phi = b to max |b - L phi| <= tol (phi holds the initial guess).
/// A multigrid preconditioner is used by BiCGStab when given.
PoissonResult solve_pressure_poisson(const PoissonProblem& problem, const std::vector<double>& b,
                                     std::vector<double>& phi, PoissonMethod method, double tol,
                                     int max_iterations, double sor_omega = 1.7,
                                     const PoissonMultigrid* multigrid = nullptr);

}  // namespace tfib
