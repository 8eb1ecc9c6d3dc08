#include "tfib/solver/flow.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

#include "tfib/turb/csm.hpp"

namespace tfib {
namespace {

inline void raw_line(const double* q, std::size_t f, std::ptrdiff_t s, double out[5]) {
  const double* c = q + f;
  out[0] = c[-2 * s];
  out[1] = c[-s];
  out[2] = c[0];
  out[3] = c[s];
  out[4] = c[2 * s];
}

inline std::size_t shift(std::size_t f, std::ptrdiff_t s) {
  return static_cast<std::size_t>(static_cast<std::ptrdiff_t>(f) + s);
}

}  // namespace

template <class F>
void FlowSolver::for_cubes(F&& f) const {
  const int n = static_cast<int>(forest_->cube_count());
#pragma omp parallel for schedule(static)
  for (int c = 0; c < n; ++c) f(c);
}

FlowSolver::FlowSolver(const CubeForest& forest, const SchemeConfig& scheme,
                       const BoundarySpec& bc, const TriangleSoup* soup,
                       WallVelocity wall_velocity)
    : forest_(&forest),
      plan_(forest),
      scheme_(scheme),
      bc_(bc),
      soup_(soup),
      wall_velocity_(std::move(wall_velocity)) {
  scheme_.validate();
  bc_.validate(forest);
  if (!wall_velocity_) wall_velocity_ = [](const Vec3&, double) { return Vec3::Zero().eval(); };

  for (int c = 0; c < 3; ++c) {
    state_.u[static_cast<std::size_t>(c)] = CellField(forest);
    state_.U[static_cast<std::size_t>(c)] = CellField(forest);
    rhs_prev_[static_cast<std::size_t>(c)] = CellField(forest);
    work_u_[static_cast<std::size_t>(c)] = CellField(forest);
    work_rhs_[static_cast<std::size_t>(c)] = CellField(forest);
  }
  state_.p = CellField(forest);
  state_.nu_t = CellField(forest);
  phi_ = CellField(forest);
  div_ = CellField(forest);
  grad_tmp_ = CellField(forest);

  const std::size_t total = forest.cube_count() * forest.block_size();
  for (int a = 0; a < 3; ++a) {
    open_[static_cast<std::size_t>(a)].assign(total, 1);
    cut_block_[static_cast<std::size_t>(a)].assign(total, -1);
    cut_dir_[static_cast<std::size_t>(a)].assign(total, -1);
  }
  if (soup_ && !soup_->empty()) {
    acc_ = std::make_unique<RayAccelerator>(*soup_);
    mask_ = classify_cells(forest, plan_, *acc_);
    if (!scheme_.dead_end_filter) {
      std::fill(mask_->dead_end.begin(), mask_->dead_end.end(), 0);
      mask_->dead_end_count = 0;
    }
    blocks_ = build_dummy_blocks(forest, *mask_, *acc_);
    sites_ = tfib::forcing_sites(*blocks_, *mask_);
    blocks_->update_wall_velocity(wall_velocity_, 0.0);
    build_cut_faces();
  }
  if (scheme_.pressure_coupling == PressureCoupling::kNeumann && blocks_) {
    poisson_ = std::make_unique<PoissonProblem>(forest, plan_, bc_, open_);
  } else {
    poisson_ = std::make_unique<PoissonProblem>(forest, plan_, bc_);
  }
  const int n = forest.cells_per_side();
  if (scheme_.poisson_multigrid && scheme_.poisson == PoissonMethod::kBiCGStab && n % 2 == 0 && n / 2 >= 4) {
    multigrid_ = std::make_unique<PoissonMultigrid>(*poisson_);
  }
}

void FlowSolver::build_cut_faces() {
  const auto s = forest_->strides();
  for (std::size_t b = 0; b < blocks_->blocks.size(); ++b) {
    const DummyBlock& blk = blocks_->blocks[b];
    for (int a = 0; a < forest_->dim(); ++a) {
      for (int side = -1; side <= 1; side += 2) {
        const int dir = face_id(a, side);
        if (blk.first_ghost(dir) != 1) continue;
        const std::size_t face = side > 0 ? shift(blk.flat, s[static_cast<std::size_t>(a)]) : blk.flat;
        open_[static_cast<std::size_t>(a)][face] = 0;
        // Keep the nearer crossing when both neighbours see the face as cut.
        const int prev = cut_block_[static_cast<std::size_t>(a)][face];
        if (prev >= 0) {
          const DummyBlock& pb = blocks_->blocks[static_cast<std::size_t>(prev)];
          const int pd = cut_dir_[static_cast<std::size_t>(a)][face];
          if (pb.crossing[static_cast<std::size_t>(pd)].d <= blk.crossing[static_cast<std::size_t>(dir)].d) continue;
        }
        cut_block_[static_cast<std::size_t>(a)][face] = static_cast<int>(b);
        cut_dir_[static_cast<std::size_t>(a)][face] = static_cast<std::int8_t>(dir);
      }
    }
  }

  // A face on a cube boundary has one slot in each cube. Close both when
  // either side sees the crossing; a fine face closes the coarse face it
  // lies on and the reverse.
  std::vector<int> entry_of(forest_->cube_count() * forest_->block_size(), -1);
  for (std::size_t e = 0; e < plan_.entry_count(); ++e) entry_of[plan_.destination(e)] = static_cast<int>(e);
  const int n = forest_->cells_per_side();
  const auto ext = forest_->extent();
  for (int pass = 0; pass < 2; ++pass) {
    for (const Cube& cube : forest_->cubes()) {
      for (int a = 0; a < forest_->dim(); ++a) {
        const std::ptrdiff_t st = s[static_cast<std::size_t>(a)];
        const auto ai = static_cast<std::size_t>(a);
        const int t1 = (a + 1) % 3, t2 = (a + 2) % 3;
        for (int side = -1; side <= 1; side += 2) {
          for (int b2 = 0; b2 < ext[static_cast<std::size_t>(t2)]; ++b2)
            for (int b1 = 0; b1 < ext[static_cast<std::size_t>(t1)]; ++b1) {
              int idx[3];
              idx[a] = side < 0 ? 0 : n - 1;
              idx[t1] = b1;
              idx[t2] = b2;
              const std::size_t cell = forest_->flat(cube.id, idx[0], idx[1], idx[2]);
              const std::size_t halo = shift(cell, side * st);
              const int e = entry_of[halo];
              if (e < 0 || plan_.source_count(static_cast<std::size_t>(e)) != 1) continue;
              const std::size_t src = plan_.source(static_cast<std::size_t>(e), 0);
              const std::size_t mine = side < 0 ? cell : halo;
              const std::size_t theirs = side < 0 ? shift(src, st) : src;
              std::uint8_t& om = open_[ai][mine];
              std::uint8_t& ot = open_[ai][theirs];
              if (om == ot) continue;
              const std::size_t from = om == 0 ? mine : theirs;
              const std::size_t to = om == 0 ? theirs : mine;
              open_[ai][to] = 0;
              cut_block_[ai][to] = cut_block_[ai][from];
              cut_dir_[ai][to] = cut_dir_[ai][from];
            }
        }
      }
    }
  }
}

bool FlowSolver::face_cut(int axis, std::size_t face_flat) const {
  return scheme_.pressure_coupling == PressureCoupling::kNeumann &&
         open_[static_cast<std::size_t>(axis)][face_flat] == 0;
}

Vec3 FlowSolver::cut_face_velocity(int axis, std::size_t face_flat) const {
  const int b = cut_block_[static_cast<std::size_t>(axis)][face_flat];
  const int d = cut_dir_[static_cast<std::size_t>(axis)][face_flat];
  return blocks_->blocks[static_cast<std::size_t>(b)].crossing[static_cast<std::size_t>(d)].wall_velocity;
}

double FlowSolver::face_inv(int axis, std::size_t face_flat, double inv) const {
  // Fine side of a level jump: centres are 1.5 fine cells apart.
  return poisson_->jump_face(axis, face_flat) ? inv / 1.5 : inv;
}

void FlowSolver::sync_jump_faces(int axis, std::vector<double>& Ua) const {
  const auto& cf = plan_.coarse_fine();
  if (cf.empty()) return;
  const double share = forest_->dim() == 3 ? 0.25 : 0.5;
  for (const CoarseFineFace& f : cf) {
    if (f.axis == axis) Ua[f.coarse_face] = 0.0;
  }
  for (const CoarseFineFace& f : cf) {
    if (f.axis == axis) Ua[f.coarse_face] += share * Ua[f.fine_face];
  }
}

void FlowSolver::set_wall_time(double t) {
  if (blocks_) blocks_->update_wall_velocity(wall_velocity_, t);
}

void FlowSolver::fill_velocity_halos(std::array<CellField, 3>& u) const {
  const int nc = components();
  for (int c = 0; c < nc; ++c) plan_.exchange(u[static_cast<std::size_t>(c)]);
  for (const BoundaryHalo& h : plan_.boundary()) {
    const FaceBc& fb = bc_.face[static_cast<std::size_t>(h.face)];
    const int axis = face_axis(h.face);
    for (int c = 0; c < nc; ++c) {
      std::vector<double>& q = u[static_cast<std::size_t>(c)].raw();
      const double m = q[h.mirror];
      switch (fb.type) {
        case BcType::kInflow:
          q[h.halo] = 2.0 * fb.velocity[c] - m;
          break;
        case BcType::kOutflow:
          q[h.halo] = m;
          break;
        case BcType::kSlip:
          q[h.halo] = c == axis ? -m : m;
          break;
        case BcType::kNoSlip:
          q[h.halo] = -m;
          break;
        case BcType::kPeriodic:
          break;
      }
    }
  }
}

void FlowSolver::fill_pressure_halos(CellField& p) const { poisson_->fill_halos(p.raw()); }

void FlowSolver::apply_outer_bcs() {
  fill_velocity_halos(state_.u);
  fill_pressure_halos(state_.p);
}

void FlowSolver::initialize(const VectorFunction& u0, const ScalarFunction& p0, double t0) {
  state_.t = t0;
  state_.step = 0;
  have_prev_ = false;
  for (auto& f : state_.u) f.fill(0.0);
  state_.p.fill(0.0);
  state_.nu_t.fill(0.0);
  phi_.fill(0.0);
  const int nc = components();
  for_each_cell(*forest_, [&](int c, int i, int j, int k) {
    const Vec3 x = forest_->cell_center(c, i, j, k);
    const Vec3 v = u0(x, t0);
    for (int q = 0; q < nc; ++q) state_.u[static_cast<std::size_t>(q)].at(c, i, j, k) = v[q];
    if (p0) state_.p.at(c, i, j, k) = p0(x, t0);
  });
  set_wall_time(t0);
  apply_outer_bcs();
  rhie_chow_faces(state_.u, nullptr, 0.0, state_.U);
}

void FlowSolver::assemble_momentum_rhs(std::array<CellField, 3>& u,
                                       std::array<CellField, 3>& rhs) const {
  fill_velocity_halos(u);
  const int dim = forest_->dim();
  const int nc = components();
  const auto s = forest_->strides();
  const auto e = forest_->extent();
  const double nu = 1.0 / scheme_.re;
  const double beta = scheme_.quick_blend;
  const bool sgs = scheme_.turbulence;
  const DummyBlocks* blocks = blocks_ ? &*blocks_ : nullptr;
  for_cubes([&](int cube) {
    const double dx = forest_->cube(cube).dx;
    const double inv = 1.0 / dx;
    const double inv2 = inv * inv;
    for (int k = 0; k < e[2]; ++k)
      for (int j = 0; j < e[1]; ++j)
        for (int i = 0; i < e[0]; ++i) {
          const std::size_t f = forest_->flat(cube, i, j, k);
          const DummyBlock* blk = blocks ? blocks->find(f) : nullptr;
          for (int c = 0; c < nc; ++c) {
            const double* q = u[static_cast<std::size_t>(c)].raw().data();
            double acc = 0.0;
            for (int a = 0; a < dim; ++a) {
              const std::ptrdiff_t st = s[static_cast<std::size_t>(a)];
              double L[5];
              if (blk) {
                line_values(*blk, q, st, a, GhostRule::kDirichlet,
                            [&](int dir) { return blk->crossing[static_cast<std::size_t>(dir)].wall_velocity[c]; },
                            L);
              } else {
                raw_line(q, f, st, L);
              }
              const std::vector<double>& Ua = state_.U[static_cast<std::size_t>(a)].raw();
              const double um = Ua[f];
              const double up = Ua[shift(f, st)];
              const double cp = 0.5 * (L[2] + L[3]);
              const double cm = 0.5 * (L[1] + L[2]);
              double fp = cp, fm = cm;
              if (beta > 0.0) {
                const double qp = up >= 0.0 ? (6.0 * L[2] + 3.0 * L[3] - L[1]) * 0.125
                                            : (6.0 * L[3] + 3.0 * L[2] - L[4]) * 0.125;
                const double qm = um >= 0.0 ? (6.0 * L[1] + 3.0 * L[2] - L[0]) * 0.125
                                            : (6.0 * L[2] + 3.0 * L[1] - L[3]) * 0.125;
                fp = (1.0 - beta) * cp + beta * qp;
                fm = (1.0 - beta) * cm + beta * qm;
              }
              acc -= (up * fp - um * fm) * inv;
              acc += nu * (L[3] - 2.0 * L[2] + L[1]) * inv2;
              if (sgs) {
                const std::vector<double>& nt = state_.nu_t.raw();
                const std::vector<double>& gt = grad_[static_cast<std::size_t>(a * dim + c)].raw();
                const double ntp = 0.5 * (nt[f] + nt[shift(f, st)]);
                const double ntm = 0.5 * (nt[f] + nt[shift(f, -st)]);
                const double gp = 0.5 * (gt[f] + gt[shift(f, st)]);
                const double gm = 0.5 * (gt[f] + gt[shift(f, -st)]);
                acc += (ntp * ((L[3] - L[2]) * inv + gp) - ntm * ((L[2] - L[1]) * inv + gm)) * inv;
              }
            }
            rhs[static_cast<std::size_t>(c)].raw()[f] = acc;
          }
        }
  });
}

void FlowSolver::cell_gradient(const CellField& p, int axis, CellField& out) const {
  const auto s = forest_->strides();
  const auto e = forest_->extent();
  const std::ptrdiff_t st = s[static_cast<std::size_t>(axis)];
  const bool neumann = scheme_.pressure_coupling == PressureCoupling::kNeumann && blocks_;
  const double* q = p.raw().data();
  for_cubes([&](int cube) {
    const double h = 0.5 / forest_->cube(cube).dx;
    for (int k = 0; k < e[2]; ++k)
      for (int j = 0; j < e[1]; ++j)
        for (int i = 0; i < e[0]; ++i) {
          const std::size_t f = forest_->flat(cube, i, j, k);
          const DummyBlock* blk = neumann ? blocks_->find(f) : nullptr;
          double L[5];
          if (blk) {
            line_values(*blk, q, st, axis, GhostRule::kNeumann, [](int) { return 0.0; }, L);
          } else {
            raw_line(q, f, st, L);
          }
          out.raw()[f] = (L[3] - L[1]) * h;
        }
  });
}

void FlowSolver::set_boundary_faces(std::array<CellField, 3>& U,
                                    const std::array<CellField, 3>& u) const {
  const int dim = forest_->dim();
  const int n = forest_->cells_per_side();
  const auto e = forest_->extent();
  const Box3& dom = forest_->domain();
  double q_fixed = 0.0;  // net outward flux through non-outflow faces
  double q_out = 0.0, a_out = 0.0;
  struct OutFace {
    std::size_t flat;
    int axis;
    int side;
    double area;
  };
  std::vector<OutFace> outs;
  for (const Cube& cube : forest_->cubes()) {
    const double area = std::pow(cube.dx, dim - 1);
    for (int a = 0; a < dim; ++a) {
      for (int side = -1; side <= 1; side += 2) {
        const FaceBc& fb = bc_.face[static_cast<std::size_t>(face_id(a, side))];
        if (fb.type == BcType::kPeriodic) continue;
        const bool on = side < 0 ? std::abs(cube.origin[a] - dom.min()[a]) < 1e-9 * cube.size
                                 : std::abs(cube.origin[a] + cube.size - dom.max()[a]) < 1e-9 * cube.size;
        if (!on) continue;
        const int t1 = (a + 1) % 3, t2 = (a + 2) % 3;
        for (int b2 = 0; b2 < e[static_cast<std::size_t>(t2)]; ++b2)
          for (int b1 = 0; b1 < e[static_cast<std::size_t>(t1)]; ++b1) {
            int idx[3];
            idx[a] = side < 0 ? 0 : n;
            idx[t1] = b1;
            idx[t2] = b2;
            const std::size_t face = forest_->flat(cube.id, idx[0], idx[1], idx[2]);
            double& uf = U[static_cast<std::size_t>(a)].raw()[face];
            switch (fb.type) {
              case BcType::kInflow:
                uf = fb.velocity[a];
                break;
              case BcType::kSlip:
              case BcType::kNoSlip:
                uf = 0.0;
                break;
              case BcType::kOutflow: {
                int ci[3] = {idx[0], idx[1], idx[2]};
                ci[a] = side < 0 ? 0 : n - 1;
                uf = u[static_cast<std::size_t>(a)].at(cube.id, ci[0], ci[1], ci[2]);
                outs.push_back({face, a, side, area});
                q_out += side * uf * area;
                a_out += area;
                break;
              }
              case BcType::kPeriodic:
                break;
            }
            if (fb.type != BcType::kOutflow) q_fixed += side * uf * area;
          }
      }
    }
  }
  if (a_out > 0.0) {
    // Uniform outward shift so the domain is mass balanced.
    const double shift_out = -(q_fixed + q_out) / a_out;
    for (const OutFace& o : outs) U[static_cast<std::size_t>(o.axis)].raw()[o.flat] += o.side * shift_out;
  }
}

void FlowSolver::rhie_chow_faces(std::array<CellField, 3>& u, const CellField* p, double dt,
                                 std::array<CellField, 3>& U) const {
  const int dim = forest_->dim();
  const auto s = forest_->strides();
  const int n = forest_->cells_per_side();
  const auto e = forest_->extent();
  for (int a = 0; a < dim; ++a) {
    const std::ptrdiff_t st = s[static_cast<std::size_t>(a)];
    if (p) {
      cell_gradient(*p, a, grad_tmp_);
      plan_.exchange(grad_tmp_);
      for (const BoundaryHalo& h : plan_.boundary()) grad_tmp_.raw()[h.halo] = grad_tmp_.raw()[h.mirror];
    }
    const std::vector<double>& ua = u[static_cast<std::size_t>(a)].raw();
    std::vector<double>& Ua = U[static_cast<std::size_t>(a)].raw();
    const std::vector<double>* pr = p ? &p->raw() : nullptr;
    const std::vector<double>& g = grad_tmp_.raw();
    for_cubes([&](int cube) {
      const double inv = 1.0 / forest_->cube(cube).dx;
      int hi[3] = {e[0], e[1], e[2]};
      hi[a] = n + 1;
      for (int k = 0; k < hi[2]; ++k)
        for (int j = 0; j < hi[1]; ++j)
          for (int i = 0; i < hi[0]; ++i) {
            const std::size_t r = forest_->flat(cube, i, j, k);
            const std::size_t l = shift(r, -st);
            if (face_cut(a, r)) {
              Ua[r] = cut_face_velocity(a, r)[a];
              continue;
            }
            double v = 0.5 * (ua[l] + ua[r]);
            if (pr) v += dt * (0.5 * (g[l] + g[r]) - ((*pr)[r] - (*pr)[l]) * face_inv(a, r, inv));
            Ua[r] = v;
          }
    });
    sync_jump_faces(a, Ua);
  }
  set_boundary_faces(U, u);
}

double FlowSolver::divergence(const std::array<CellField, 3>& U, CellField& div) const {
  const int dim = forest_->dim();
  const auto s = forest_->strides();
  const auto e = forest_->extent();
  std::vector<double> part(forest_->cube_count(), 0.0);
  for_cubes([&](int cube) {
    const double inv = 1.0 / forest_->cube(cube).dx;
    double m = 0.0;
    for (int k = 0; k < e[2]; ++k)
      for (int j = 0; j < e[1]; ++j)
        for (int i = 0; i < e[0]; ++i) {
          const std::size_t f = forest_->flat(cube, i, j, k);
          double d = 0.0;
          for (int a = 0; a < dim; ++a) {
            const std::vector<double>& Ua = U[static_cast<std::size_t>(a)].raw();
            d += Ua[shift(f, s[static_cast<std::size_t>(a)])] - Ua[f];
          }
          d *= inv;
          div.raw()[f] = d;
          m = std::max(m, std::abs(d));
        }
    part[static_cast<std::size_t>(cube)] = m;
  });
  return part.empty() ? 0.0 : *std::max_element(part.begin(), part.end());
}

void FlowSolver::correct_velocity(CellField& phi, double dt) {
  const int dim = forest_->dim();
  const auto s = forest_->strides();
  const int n = forest_->cells_per_side();
  const auto e = forest_->extent();
  poisson_->fill_halos(phi.raw());
  for_each_cell(*forest_, [&](int c, int i, int j, int k) {
    const std::size_t f = forest_->flat(c, i, j, k);
    state_.p.raw()[f] += phi.raw()[f];
  });
  for (int a = 0; a < dim; ++a) {
    cell_gradient(phi, a, grad_tmp_);
    std::vector<double>& ua = state_.u[static_cast<std::size_t>(a)].raw();
    for_each_cell(*forest_, [&](int c, int i, int j, int k) {
      const std::size_t f = forest_->flat(c, i, j, k);
      ua[f] -= dt * grad_tmp_.raw()[f];
    });
    const std::ptrdiff_t st = s[static_cast<std::size_t>(a)];
    std::vector<double>& Ua = state_.U[static_cast<std::size_t>(a)].raw();
    const std::vector<double>& q = phi.raw();
    for_cubes([&](int cube) {
      const double inv = 1.0 / forest_->cube(cube).dx;
      int hi[3] = {e[0], e[1], e[2]};
      hi[a] = n + 1;
      for (int k = 0; k < hi[2]; ++k)
        for (int j = 0; j < hi[1]; ++j)
          for (int i = 0; i < hi[0]; ++i) {
            const std::size_t r = forest_->flat(cube, i, j, k);
            if (face_cut(a, r)) continue;
            Ua[r] -= dt * (q[r] - q[shift(r, -st)]) * face_inv(a, r, inv);
          }
    });
    sync_jump_faces(a, Ua);
  }
}

void FlowSolver::update_eddy_viscosity() {
  const int dim = forest_->dim();
  const auto s = forest_->strides();
  const auto e = forest_->extent();
  if (grad_.size() != static_cast<std::size_t>(dim * dim)) {
    grad_.assign(static_cast<std::size_t>(dim * dim), CellField(*forest_));
  }
  fill_velocity_halos(state_.u);
  const DummyBlocks* blocks = blocks_ ? &*blocks_ : nullptr;
  for_cubes([&](int cube) {
    const double dx = forest_->cube(cube).dx;
    const double h = 0.5 / dx;
    for (int k = 0; k < e[2]; ++k)
      for (int j = 0; j < e[1]; ++j)
        for (int i = 0; i < e[0]; ++i) {
          const std::size_t f = forest_->flat(cube, i, j, k);
          const DummyBlock* blk = blocks ? blocks->find(f) : nullptr;
          Eigen::Matrix3d g = Eigen::Matrix3d::Zero();
          for (int c = 0; c < dim; ++c) {
            const double* q = state_.u[static_cast<std::size_t>(c)].raw().data();
            for (int a = 0; a < dim; ++a) {
              double L[5];
              if (blk) {
                line_values(*blk, q, s[static_cast<std::size_t>(a)], a, GhostRule::kDirichlet,
                            [&](int dir) { return blk->crossing[static_cast<std::size_t>(dir)].wall_velocity[c]; },
                            L);
              } else {
                raw_line(q, f, s[static_cast<std::size_t>(a)], L);
              }
              g(c, a) = (L[3] - L[1]) * h;
              grad_[static_cast<std::size_t>(c * dim + a)].raw()[f] = g(c, a);
            }
          }
          state_.nu_t.raw()[f] = csm_eddy_viscosity(g, dx);
        }
  });
  plan_.exchange(state_.nu_t);
  for (const BoundaryHalo& b : plan_.boundary()) state_.nu_t.raw()[b.halo] = state_.nu_t.raw()[b.mirror];
  for (CellField& g : grad_) {
    plan_.exchange(g);
    for (const BoundaryHalo& b : plan_.boundary()) g.raw()[b.halo] = g.raw()[b.mirror];
  }
}

void FlowSolver::apply_forcing(std::array<CellField, 3>& u_pred, double dt, bool record) {
  if (!blocks_ || sites_.empty() || scheme_.forcing == ForcingRule::kNone) return;
  fill_velocity_halos(u_pred);
  std::array<std::vector<double>*, 3> ptr{&u_pred[0].raw(), &u_pred[1].raw(), &u_pred[2].raw()};
  ForcingField tmp;
  compute_forcing(*forest_, *blocks_, sites_, scheme_.forcing, ptr, components(), dt,
                  record ? forcing_ : tmp, true);
}

void FlowSolver::momentum_solve(std::array<CellField, 3>& rhs_now, StepStats& stats) {
  const int nc = components();
  const double dt = scheme_.dt;
  // Cell pressure gradient of p^n.
  std::array<CellField, 3>& gp = work_rhs_;
  for (int a = 0; a < nc; ++a) cell_gradient(state_.p, a, gp[static_cast<std::size_t>(a)]);

  if (scheme_.integrator == TimeIntegrator::kAdamsBashforth) {
    for (int c = 0; c < nc; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      const std::vector<double>& un = state_.u[ci].raw();
      const std::vector<double>& r = rhs_now[ci].raw();
      const std::vector<double>& rp = rhs_prev_[ci].raw();
      std::vector<double>& out = work_u_[ci].raw();
      for_each_cell(*forest_, [&](int cube, int i, int j, int k) {
        const std::size_t f = forest_->flat(cube, i, j, k);
        const double expl = have_prev_ ? 1.5 * r[f] - 0.5 * rp[f] : r[f];
        out[f] = un[f] + dt * (expl - gp[ci].raw()[f]);
      });
      rhs_prev_[ci].raw() = r;
    }
    have_prev_ = true;
    apply_forcing(work_u_, dt, true);
    return;
  }

  // Crank-Nicolson by Jacobi-preconditioned Picard iteration on
  // u = u^n + dt (R^n / 2 + R(u) / 2 - grad p^n), advecting face velocity
  // frozen at U^n.
  const double nu = 1.0 / scheme_.re;
  const int dim = forest_->dim();
  std::array<CellField, 3> base;
  for (int c = 0; c < nc; ++c) {
    const auto ci = static_cast<std::size_t>(c);
    base[ci] = CellField(*forest_);
    for_each_cell(*forest_, [&](int cube, int i, int j, int k) {
      const std::size_t f = forest_->flat(cube, i, j, k);
      base[ci].raw()[f] = state_.u[ci].raw()[f] + dt * (0.5 * rhs_now[ci].raw()[f] - gp[ci].raw()[f]);
      work_u_[ci].raw()[f] = state_.u[ci].raw()[f] + dt * (rhs_now[ci].raw()[f] - gp[ci].raw()[f]);
    });
  }
  apply_forcing(work_u_, dt, false);
  std::array<CellField, 3> r_it;
  for (int c = 0; c < nc; ++c) r_it[static_cast<std::size_t>(c)] = CellField(*forest_);
  int it = 0;
  double delta = 0.0, scale = 0.0;
  for (it = 1; it <= scheme_.inner_max; ++it) {
    assemble_momentum_rhs(work_u_, r_it);
    delta = 0.0;
    scale = 0.0;
    for (int c = 0; c < nc; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      std::vector<double>& u = work_u_[ci].raw();
      for_each_cell(*forest_, [&](int cube, int i, int j, int k) {
        const std::size_t f = forest_->flat(cube, i, j, k);
        const double dx = forest_->cube(cube).dx;
        const double diag = 0.5 * dt * (nu + state_.nu_t.raw()[f]) * 2.0 * dim / (dx * dx);
        const double res = base[ci].raw()[f] + 0.5 * dt * r_it[ci].raw()[f] - u[f];
        const double du = res / (1.0 + diag);
        u[f] += du;
        delta = std::max(delta, std::abs(du));
        scale = std::max(scale, std::abs(u[f]));
      });
    }
    apply_forcing(work_u_, dt, it == scheme_.inner_max);
    if (delta <= scheme_.inner_tol * scale) break;
  }
  stats.inner_iterations = std::min(it, scheme_.inner_max);
  stats.inner_residual = scale > 0.0 ? delta / scale : delta;
  if (it > scheme_.inner_max) {
    std::ostringstream os;
    os << "Crank-Nicolson inner iteration did not converge in " << scheme_.inner_max
       << " iterations (relative update " << stats.inner_residual << ")";
    throw SolverError(os.str());
  }
  apply_forcing(work_u_, dt, true);
}

StepStats FlowSolver::advance() {
  StepStats st;
  const double dt = scheme_.dt;
  const double t_new = state_.t + dt;
  set_wall_time(t_new);
  apply_outer_bcs();
  if (scheme_.turbulence) update_eddy_viscosity();

  std::array<CellField, 3> rhs;
  for (auto& r : rhs) r = CellField(*forest_);
  assemble_momentum_rhs(state_.u, rhs);
  momentum_solve(rhs, st);

  // u* into the state, then face velocities with the pressure correction.
  const int nc = components();
  for (int c = 0; c < nc; ++c) {
    state_.u[static_cast<std::size_t>(c)].raw().swap(work_u_[static_cast<std::size_t>(c)].raw());
  }
  fill_velocity_halos(state_.u);
  fill_pressure_halos(state_.p);
  rhie_chow_faces(state_.u, &state_.p, dt, state_.U);

  divergence(state_.U, div_);
  std::vector<double> b = div_.raw();
  for (double& v : b) v /= dt;
  PoissonResult pr = solve_pressure_poisson(*poisson_, b, phi_.raw(), scheme_.poisson,
                                            scheme_.poisson_tol / dt, scheme_.poisson_max,
                                            scheme_.sor_omega, multigrid_.get());
  st.poisson_iterations = pr.iterations;
  st.poisson_residual = pr.residual * dt;
  correct_velocity(phi_, dt);
  apply_outer_bcs();

  state_.t = t_new;
  ++state_.step;
  st.step = state_.step;
  st.t = state_.t;
  st.max_divergence = divergence(state_.U, div_);
  st.kinetic_energy = kinetic_energy();
  double umax = 0.0, cfl = 0.0;
  for_each_cell(*forest_, [&](int c, int i, int j, int k) {
    double sum = 0.0, mag = 0.0;
    for (int q = 0; q < nc; ++q) {
      const double v = state_.u[static_cast<std::size_t>(q)].at(c, i, j, k);
      sum += std::abs(v);
      mag += v * v;
    }
    umax = std::max(umax, std::sqrt(mag));
    cfl = std::max(cfl, sum * dt / forest_->cube(c).dx);
  });
  st.max_velocity = umax;
  st.cfl = cfl;
  for (const auto& f : forcing_.f) {
    for (double v : f) st.max_forcing = std::max(st.max_forcing, std::abs(v));
  }
  check_finite();
  if (!pr.converged) {
    std::ostringstream os;
    os << "pressure solver stopped after " << pr.iterations << " iterations with max |div U| "
       << st.poisson_residual << " above tolerance " << scheme_.poisson_tol;
    throw SolverError(os.str());
  }
  return st;
}

double FlowSolver::kinetic_energy() const {
  const int nc = components();
  std::vector<double> part(forest_->cube_count(), 0.0), vol(forest_->cube_count(), 0.0);
  for_each_cell(*forest_, [&](int c, int i, int j, int k) {
    double m = 0.0;
    for (int q = 0; q < nc; ++q) {
      const double v = state_.u[static_cast<std::size_t>(q)].at(c, i, j, k);
      m += v * v;
    }
    part[static_cast<std::size_t>(c)] += 0.5 * m * forest_->cell_volume(c);
    vol[static_cast<std::size_t>(c)] += forest_->cell_volume(c);
  });
  return std::accumulate(part.begin(), part.end(), 0.0) / std::accumulate(vol.begin(), vol.end(), 0.0);
}

void FlowSolver::check_finite() const {
  const int nc = components();
  for_each_cell(*forest_, [&](int c, int i, int j, int k) {
    bool ok = std::isfinite(state_.p.at(c, i, j, k));
    for (int q = 0; q < nc; ++q) ok = ok && std::isfinite(state_.u[static_cast<std::size_t>(q)].at(c, i, j, k));
    if (!ok) {
      std::ostringstream os;
      os << "non-finite value at step " << state_.step << " in cube " << c << " cell (" << i << ", " << j
         << ", " << k << ")";
      throw SolverError(os.str());
    }
  });
}

}  // namespace tfib
