#include "tfib/solver/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tfib {
namespace {

int find_root(std::vector<int>& parent, int a) {
  while (parent[static_cast<std::size_t>(a)] != a) {
    parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
    a = parent[static_cast<std::size_t>(a)];
  }
  return a;
}

void unite(std::vector<int>& parent, int a, int b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
}

// Calls f(row_start_flat, length) for every interior x-row.
template <class F>
void for_rows(const CubeForest& forest, F&& f) {
  const auto e = forest.extent();
  for (int c = 0; c < static_cast<int>(forest.cube_count()); ++c)
    for (int k = 0; k < e[2]; ++k)
      for (int j = 0; j < e[1]; ++j) f(c, forest.flat(c, 0, j, k), static_cast<std::size_t>(e[0]));
}

}  // namespace

PoissonProblem::PoissonProblem(const CubeForest& forest, const HaloPlan& plan,
                               const BoundarySpec& bc,
                               std::array<std::vector<std::uint8_t>, 3> open_faces)
    : forest_(&forest), plan_(&plan), bc_(bc), open_(std::move(open_faces)) {
  build_links();
  label_regions();
}

void PoissonProblem::build_links() {
  const std::size_t total = forest_->cube_count() * forest_->block_size();
  const auto& cf = plan_->coarse_fine();
  link_begin_.assign(total + 1, 0);
  if (cf.empty()) return;
  for (int a = 0; a < forest_->dim(); ++a) jump_[static_cast<std::size_t>(a)].assign(total, 0);
  const double fine_w = 2.0 / 3.0;
  const double coarse_w = (4.0 / 3.0) / (forest_->dim() == 3 ? 4.0 : 2.0);
  std::vector<std::pair<std::size_t, Link>> all;
  for (const CoarseFineFace& f : cf) {
    jump_[static_cast<std::size_t>(f.axis)][f.fine_face] = 1;
    jump_[static_cast<std::size_t>(f.axis)][f.coarse_face] = 1;
    if (!open(f.axis, f.fine_face)) continue;
    all.push_back({f.fine_cell, {f.coarse_cell, fine_w}});
    all.push_back({f.coarse_cell, {f.fine_cell, coarse_w}});
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& l : all) ++link_begin_[l.first + 1];
  for (std::size_t q = 0; q < total; ++q) link_begin_[q + 1] += link_begin_[q];
  links_.reserve(all.size());
  for (const auto& l : all) links_.push_back(l.second);
}

void PoissonProblem::fill_halos(std::vector<double>& x) const {
  plan_->exchange(x);
  for (const BoundaryHalo& h : plan_->boundary()) {
    const bool dirichlet = bc_.face[static_cast<std::size_t>(h.face)].type == BcType::kOutflow;
    x[h.halo] = dirichlet ? -x[h.mirror] : x[h.mirror];
  }
}

void PoissonProblem::apply(std::vector<double>& x, std::vector<double>& y) const {
  fill_halos(x);
  const auto s = forest_->strides();
  const int dim = forest_->dim();
  for_rows(*forest_, [&](int c, std::size_t row, std::size_t len) {
    const double dx = forest_->cube(c).dx;
    const double inv = 1.0 / (dx * dx);
    for (std::size_t q = 0; q < len; ++q) {
      const std::size_t f = row + q;
      const double xc = x[f];
      double acc = 0.0;
      for (int a = 0; a < dim; ++a) {
        const auto st = static_cast<std::size_t>(s[static_cast<std::size_t>(a)]);
        if (regular(a, f + st)) acc += x[f + st] - xc;
        if (regular(a, f)) acc -= xc - x[f - st];
      }
      for (const Link& l : links(f)) acc += l.weight * (x[l.other] - xc);
      y[f] = acc * inv;
    }
  });
}

double PoissonProblem::residual(std::vector<double>& x, const std::vector<double>& b,
                                std::vector<double>* r) const {
  std::vector<double> lx(x.size(), 0.0);
  apply(x, lx);
  double m = 0.0;
  if (r) r->assign(x.size(), 0.0);
  for_rows(*forest_, [&](int, std::size_t row, std::size_t len) {
    for (std::size_t q = row; q < row + len; ++q) {
      const double v = b[q] - lx[q];
      if (r) (*r)[q] = v;
      m = std::max(m, std::abs(v));
    }
  });
  return m;
}

double PoissonProblem::dot(const std::vector<double>& a, const std::vector<double>& b) const {
  // Per-cube partial sums added in cube order: reproducible for any worker count.
  std::vector<double> part(forest_->cube_count(), 0.0);
  for_rows(*forest_, [&](int c, std::size_t row, std::size_t len) {
    double sum = 0.0;
    for (std::size_t q = row; q < row + len; ++q) sum += a[q] * b[q];
    part[static_cast<std::size_t>(c)] += sum;
  });
  return std::accumulate(part.begin(), part.end(), 0.0);
}

double PoissonProblem::max_abs(const std::vector<double>& a) const {
  double m = 0.0;
  for_rows(*forest_, [&](int, std::size_t row, std::size_t len) {
    for (std::size_t q = row; q < row + len; ++q) m = std::max(m, std::abs(a[q]));
  });
  return m;
}

void PoissonProblem::label_regions() {
  const std::size_t total = forest_->cube_count() * forest_->block_size();
  std::vector<int> parent(total);
  std::iota(parent.begin(), parent.end(), 0);
  std::vector<int> entry_of(total, -1);
  for (std::size_t e = 0; e < plan_->entry_count(); ++e) entry_of[plan_->destination(e)] = static_cast<int>(e);
  std::vector<std::int8_t> boundary_face(total, -1);
  for (const BoundaryHalo& h : plan_->boundary()) boundary_face[h.halo] = static_cast<std::int8_t>(h.face);

  std::vector<std::uint8_t> touches_dirichlet(total, 0);
  const auto s = forest_->strides();
  auto link = [&](std::size_t cell, std::size_t halo_or_cell, bool interior) {
    if (interior) {
      unite(parent, static_cast<int>(cell), static_cast<int>(halo_or_cell));
      return;
    }
    const int e = entry_of[halo_or_cell];
    if (e >= 0) {
      for (int q = 0; q < plan_->source_count(static_cast<std::size_t>(e)); ++q) {
        unite(parent, static_cast<int>(cell), static_cast<int>(plan_->source(static_cast<std::size_t>(e), q)));
      }
    } else if (boundary_face[halo_or_cell] >= 0 &&
               bc_.face[static_cast<std::size_t>(boundary_face[halo_or_cell])].type == BcType::kOutflow) {
      touches_dirichlet[cell] = 1;
    }
  };
  const int n = forest_->cells_per_side();
  for_each_cell(*forest_, [&](int c, int i, int j, int k) {
    const std::size_t f = forest_->flat(c, i, j, k);
    const int idx[3] = {i, j, k};
    for (int a = 0; a < forest_->dim(); ++a) {
      const auto st = static_cast<std::size_t>(s[static_cast<std::size_t>(a)]);
      if (open(a, f + st)) link(f, f + st, idx[a] + 1 < n);
      if (open(a, f)) link(f, f - st, idx[a] > 0);
    }
  });

  region_.assign(total, -1);
  std::vector<int> root_region(total, -1);
  int count = 0;
  for_each_cell(*forest_, [&](int c, int i, int j, int k) {
    const std::size_t f = forest_->flat(c, i, j, k);
    const int r = find_root(parent, static_cast<int>(f));
    int& id = root_region[static_cast<std::size_t>(r)];
    if (id < 0) id = count++;
    region_[f] = id;
  });
  gauged_.assign(static_cast<std::size_t>(count), 1);
  region_volume_.assign(static_cast<std::size_t>(count), 0.0);
  for_each_cell(*forest_, [&](int c, int i, int j, int k) {
    const std::size_t f = forest_->flat(c, i, j, k);
    const auto r = static_cast<std::size_t>(region_[f]);
    if (touches_dirichlet[f]) gauged_[r] = 0;
    region_volume_[r] += forest_->cell_volume(c);
  });
}

double PoissonProblem::make_compatible(std::vector<double>& b) const {
  std::vector<double> sum(gauged_.size(), 0.0);
  for_each_cell(*forest_, [&](int c, int i, int j, int k) {
    const std::size_t f = forest_->flat(c, i, j, k);
    sum[static_cast<std::size_t>(region_[f])] += b[f] * forest_->cell_volume(c);
  });
  double worst = 0.0;
  for (std::size_t r = 0; r < sum.size(); ++r) {
    sum[r] = gauged_[r] ? sum[r] / region_volume_[r] : 0.0;
    worst = std::max(worst, std::abs(sum[r]));
  }
  for_each_cell(*forest_, [&](int c, int i, int j, int k) {
    const std::size_t f = forest_->flat(c, i, j, k);
    b[f] -= sum[static_cast<std::size_t>(region_[f])];
  });
  return worst;
}

void PoissonProblem::fix_gauge(std::vector<double>& x) const {
  std::vector<double> sum(gauged_.size(), 0.0);
  for_each_cell(*forest_, [&](int c, int i, int j, int k) {
    const std::size_t f = forest_->flat(c, i, j, k);
    sum[static_cast<std::size_t>(region_[f])] += x[f] * forest_->cell_volume(c);
  });
  for (std::size_t r = 0; r < sum.size(); ++r) sum[r] = gauged_[r] ? sum[r] / region_volume_[r] : 0.0;
  for_each_cell(*forest_, [&](int c, int i, int j, int k) {
    const std::size_t f = forest_->flat(c, i, j, k);
    x[f] -= sum[static_cast<std::size_t>(region_[f])];
  });
}

std::vector<double> poisson_diagonal(const PoissonProblem& P) {
  const CubeForest& forest = P.forest();
  const auto s = forest.strides();
  const int dim = forest.dim();
  const std::size_t total = forest.cube_count() * forest.block_size();
  // Interior links count 1, zero-value domain faces 2 (negated mirror),
  // zero-gradient domain faces 0 (the halo mirrors the cell).
  std::vector<std::int8_t> halo_kind(total, 1);
  for (const BoundaryHalo& h : P.boundary_halos()) {
    halo_kind[h.halo] = P.boundary().face[static_cast<std::size_t>(h.face)].type == BcType::kOutflow ? 2 : 0;
  }
  std::vector<double> diag(total, 0.0);
  for_each_cell(forest, [&](int c, int i, int j, int k) {
    const std::size_t f = forest.flat(c, i, j, k);
    double d = 0.0;
    for (int a = 0; a < dim; ++a) {
      const auto st = static_cast<std::size_t>(s[static_cast<std::size_t>(a)]);
      if (P.regular(a, f + st)) d += halo_kind[f + st];
      if (P.regular(a, f)) d += halo_kind[f - st];
    }
    for (const PoissonProblem::Link& l : P.links(f)) d += l.weight;
    diag[f] = d;
  });
  return diag;
}

void redblack_sweep(const PoissonProblem& P, const std::vector<double>& diag,
                    const std::vector<double>& b, std::vector<double>& x, double omega, bool reverse) {
  const CubeForest& forest = P.forest();
  const auto s = forest.strides();
  const int dim = forest.dim();
  const auto e = forest.extent();
  for (int pass = 0; pass < 2; ++pass) {
    const int colour = reverse ? 1 - pass : pass;
    P.fill_halos(x);
    for (int c = 0; c < static_cast<int>(forest.cube_count()); ++c) {
      const double dx = forest.cube(c).dx;
      const double h2 = dx * dx;
      for (int k = 0; k < e[2]; ++k)
        for (int j = 0; j < e[1]; ++j)
          for (int i = ((j + k + colour) & 1); i < e[0]; i += 2) {
            const std::size_t f = forest.flat(c, i, j, k);
            if (diag[f] <= 0.0) continue;
            const double xc = x[f];
            double off = 0.0;
            for (int a = 0; a < dim; ++a) {
              const auto st = static_cast<std::size_t>(s[static_cast<std::size_t>(a)]);
              if (P.regular(a, f + st)) off += x[f + st] - xc;
              if (P.regular(a, f)) off += x[f - st] - xc;
            }
            for (const PoissonProblem::Link& l : P.links(f)) off += l.weight * (x[l.other] - xc);
            // off + diag * xc is the sum of neighbour couplings (boundary
            // halos already hold their mirrored values).
            const double gs = (off + diag[f] * xc - b[f] * h2) / diag[f];
            x[f] = (1.0 - omega) * xc + omega * gs;
          }
    }
  }
}

PoissonMultigrid::PoissonMultigrid(const PoissonProblem& fine, int min_cells, int pre_sweeps,
                                   int post_sweeps, int coarse_sweeps)
    : pre_(pre_sweeps), post_(post_sweeps), coarse_(coarse_sweeps) {
  Level top;
  top.problem = &fine;
  top.diag = poisson_diagonal(fine);
  levels_.push_back(std::move(top));
  while (true) {
    const PoissonProblem& P = *levels_.back().problem;
    const CubeForest& f = P.forest();
    const int n = f.cells_per_side();
    if (n % 2 != 0 || n / 2 < min_cells) break;
    Level lv;
    lv.forest = std::make_unique<CubeForest>(f.coarsened());
    lv.plan = std::make_unique<HaloPlan>(*lv.forest);
    std::array<std::vector<std::uint8_t>, 3> open;
    const auto& fine_open = P.open_faces();
    const int nc = n / 2;
    const auto ec = lv.forest->extent();
    for (int a = 0; a < f.dim(); ++a) {
      const auto ai = static_cast<std::size_t>(a);
      if (fine_open[ai].empty()) continue;
      open[ai].assign(lv.forest->cube_count() * lv.forest->block_size(), 1);
      const int t1 = (a + 1) % 3, t2 = (a + 2) % 3;
      for (int c = 0; c < static_cast<int>(lv.forest->cube_count()); ++c) {
        int hi[3] = {ec[0], ec[1], ec[2]};
        hi[a] = nc + 1;
        for (int k = 0; k < hi[2]; ++k)
          for (int j = 0; j < hi[1]; ++j)
            for (int i = 0; i < hi[0]; ++i) {
              const int ci[3] = {i, j, k};
              bool any = false;
              const int m1 = t1 < f.dim() ? 2 : 1, m2 = t2 < f.dim() ? 2 : 1;
              for (int q2 = 0; q2 < m2; ++q2)
                for (int q1 = 0; q1 < m1; ++q1) {
                  int fi[3];
                  fi[a] = 2 * ci[a];
                  fi[t1] = t1 < f.dim() ? 2 * ci[t1] + q1 : 0;
                  fi[t2] = t2 < f.dim() ? 2 * ci[t2] + q2 : 0;
                  any = any || P.open(a, f.flat(c, fi[0], fi[1], fi[2]));
                }
              open[ai][lv.forest->flat(c, i, j, k)] = any ? 1 : 0;
            }
      }
    }
    lv.owned = std::make_unique<PoissonProblem>(*lv.forest, *lv.plan, P.boundary(), std::move(open));
    lv.problem = lv.owned.get();
    lv.diag = poisson_diagonal(*lv.problem);
    const std::size_t total = lv.forest->cube_count() * lv.forest->block_size();
    lv.x.assign(total, 0.0);
    lv.b.assign(total, 0.0);
    lv.r.assign(total, 0.0);
    levels_.push_back(std::move(lv));
  }
  const std::size_t total = fine.forest().cube_count() * fine.forest().block_size();
  levels_.front().x.assign(total, 0.0);
  levels_.front().b.assign(total, 0.0);
  levels_.front().r.assign(total, 0.0);
}

void PoissonMultigrid::apply(const std::vector<double>& r, std::vector<double>& z) const {
  Level& top = const_cast<Level&>(levels_.front());
  top.b = r;
  std::fill(top.x.begin(), top.x.end(), 0.0);
  cycle(0);
  z = top.x;
}

void PoissonMultigrid::cycle(std::size_t l) const {
  const Level& lv = levels_[l];
  const PoissonProblem& P = *lv.problem;
  if (l + 1 == levels_.size()) {
    for (int it = 0; it < coarse_; ++it) redblack_sweep(P, lv.diag, lv.b, lv.x, 1.0, (it & 1) != 0);
    return;
  }
  for (int it = 0; it < pre_; ++it) redblack_sweep(P, lv.diag, lv.b, lv.x, 1.0, false);
  P.residual(lv.x, lv.b, &lv.r);

  const Level& cl = levels_[l + 1];
  const CubeForest& f = P.forest();
  const CubeForest& cf = cl.problem->forest();
  const auto e = f.extent();
  const double share = 1.0 / (f.dim() == 3 ? 8.0 : 4.0);
  std::fill(cl.b.begin(), cl.b.end(), 0.0);
  std::fill(cl.x.begin(), cl.x.end(), 0.0);
  const int kz = f.dim() == 3 ? 2 : 1;
  for (int c = 0; c < static_cast<int>(f.cube_count()); ++c)
    for (int k = 0; k < e[2]; ++k)
      for (int j = 0; j < e[1]; ++j)
        for (int i = 0; i < e[0]; ++i) {
          cl.b[cf.flat(c, i / 2, j / 2, k / kz)] += share * lv.r[f.flat(c, i, j, k)];
        }
  cycle(l + 1);
  for (int c = 0; c < static_cast<int>(f.cube_count()); ++c)
    for (int k = 0; k < e[2]; ++k)
      for (int j = 0; j < e[1]; ++j)
        for (int i = 0; i < e[0]; ++i) {
          lv.x[f.flat(c, i, j, k)] += cl.x[cf.flat(c, i / 2, j / 2, k / kz)];
        }
  for (int it = 0; it < post_; ++it) redblack_sweep(P, lv.diag, lv.b, lv.x, 1.0, true);
}

namespace {

PoissonResult bicgstab(const PoissonProblem& P, const std::vector<double>& b, std::vector<double>& x,
                       double tol, int max_it, const PoissonMultigrid* M) {
  const std::size_t n = x.size();
  std::vector<double> r, rhat, p(n, 0.0), v(n, 0.0), s(n, 0.0), t(n, 0.0), ph(n, 0.0), sh(n, 0.0);
  auto precondition = [&](std::vector<double>& in, std::vector<double>& out) {
    if (M) {
      M->apply(in, out);
    } else {
      out = in;
    }
  };
  PoissonResult res;
  res.residual = P.residual(x, b, &r);
  if (res.residual <= tol) {
    res.converged = true;
    return res;
  }
  int it = 0;
  while (it < max_it) {
    // (Re)start from the true residual.
    rhat = r;
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    std::fill(p.begin(), p.end(), 0.0);
    std::fill(v.begin(), v.end(), 0.0);
    bool restart = false;
    while (it < max_it && !restart) {
      ++it;
      const double rho_new = P.dot(rhat, r);
      if (std::abs(rho_new) < 1e-300) {
        restart = true;
        break;
      }
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      for (std::size_t q = 0; q < n; ++q) p[q] = r[q] + beta * (p[q] - omega * v[q]);
      precondition(p, ph);
      P.apply(ph, v);
      const double rv = P.dot(rhat, v);
      if (std::abs(rv) < 1e-300) {
        restart = true;
        break;
      }
      alpha = rho / rv;
      for (std::size_t q = 0; q < n; ++q) s[q] = r[q] - alpha * v[q];
      if (P.max_abs(s) <= tol) {
        for (std::size_t q = 0; q < n; ++q) x[q] += alpha * ph[q];
        restart = true;
        break;
      }
      precondition(s, sh);
      P.apply(sh, t);
      const double tt = P.dot(t, t);
      omega = tt > 0.0 ? P.dot(t, s) / tt : 0.0;
      for (std::size_t q = 0; q < n; ++q) {
        x[q] += alpha * ph[q] + omega * sh[q];
        r[q] = s[q] - omega * t[q];
      }
      if (P.max_abs(r) <= tol || omega == 0.0) restart = true;
    }
    res.residual = P.residual(x, b, &r);
    if (res.residual <= tol) {
      res.converged = true;
      break;
    }
  }
  res.iterations = it;
  return res;
}

PoissonResult redblack_sor(const PoissonProblem& P, const std::vector<double>& b,
                           std::vector<double>& x, double tol, int max_it, double omega) {
  const std::vector<double> diag = poisson_diagonal(P);
  PoissonResult res;
  int sweep = 0;
  for (; sweep < max_it; ++sweep) {
    if (sweep % 10 == 0) {
      res.residual = P.residual(x, b);
      if (res.residual <= tol) {
        res.converged = true;
        break;
      }
    }
    redblack_sweep(P, diag, b, x, omega);
  }
  if (!res.converged) res.residual = P.residual(x, b);
  res.converged = res.residual <= tol;
  res.iterations = sweep;
  return res;
}

}  // namespace

PoissonResult solve_pressure_poisson(const PoissonProblem& problem, const std::vector<double>& b_in,
                                     std::vector<double>& phi, PoissonMethod method, double tol,
                                     int max_iterations, double sor_omega,
                                     const PoissonMultigrid* multigrid) {
  std::vector<double> b = b_in;
  problem.make_compatible(b);
  PoissonResult r = method == PoissonMethod::kBiCGStab
                        ? bicgstab(problem, b, phi, tol, max_iterations, multigrid)
                        : redblack_sor(problem, b, phi, tol, max_iterations, sor_omega);
  problem.fix_gauge(phi);
  problem.fill_halos(phi);
  return r;
}

}  // namespace tfib
