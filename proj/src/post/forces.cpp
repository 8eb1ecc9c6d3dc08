#include "tfib/post/forces.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tfib {
namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3 corner(const Triangle& t, int c) { return c == 0 ? t.v0 : c == 1 ? t.v1 : t.v2; }

}  // namespace

double shepard_weight(const Vec3& X, const Vec3& n, const Vec3& xk) {
  if (!(n.dot(X - xk) < 0.0)) return 0.0;
  const double d2 = (X - xk).squaredNorm();
  return d2 > 0.0 ? 1.0 / d2 : 0.0;
}

std::optional<double> shepard_sample(const Vec3& X, const Vec3& n, const std::vector<Vec3>& points,
                                     const std::vector<double>& values) {
  double sw = 0.0, sv = 0.0;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double w = shepard_weight(X, n, points[k]);
    sw += w;
    sv += w * values[k];
  }
  if (sw <= 0.0) return std::nullopt;
  return sv / sw;
}

bool SurfaceSample::valid() const {
  for (const SampleCell& c : cells) {
    if (!c.filtered && c.weight > 0.0) return true;
  }
  return false;
}

double SurfaceSample::pressure() const {
  double sw = 0.0, sv = 0.0;
  for (const SampleCell& c : cells) {
    if (c.filtered) continue;
    sw += c.weight;
    sv += c.weight * c.p;
  }
  return sw > 0.0 ? sv / sw : std::numeric_limits<double>::quiet_NaN();
}

Vec3 SurfaceSample::wall_gradient(const Vec3& u_wall) const {
  double sw = 0.0;
  Vec3 sv = Vec3::Zero();
  for (const SampleCell& c : cells) {
    if (c.filtered) continue;
    const double d = n.dot(c.x - x);
    if (!(d > 0.0)) continue;
    sw += c.weight;
    sv += c.weight * (c.u - u_wall) / d;
  }
  return sw > 0.0 ? Vec3(sv / sw) : Vec3::Zero();
}

std::vector<SurfaceSample> sample_surface(const SurfaceFields& fields, const TriangleSoup& soup) {
  const CubeForest& forest = *fields.forest;
  const int dim = forest.dim();
  std::vector<SurfaceSample> out;
  out.reserve(soup.size() * 6);
  for (std::size_t t = 0; t < soup.size(); ++t) {
    const Triangle& tri = soup[t];
    if (tri.degenerate) continue;
    for (int c = 0; c < 3; ++c) {
      Vec3 X = corner(tri, c);
      if (dim == 2) X.z() = forest.plane_z();
      const auto wrapped = forest.wrap(X);
      std::vector<SampleCell> around;
      if (wrapped && forest.locate_cube(*wrapped)) {
        const CellRef owner = forest.locate_cell(*wrapped);
        const Vec3 oc = forest.cell_center(owner);
        // Work in the frame of X: neighbour centres relative to the owner.
        const Vec3 shift_back = X - *wrapped;
        const double dx = forest.cube(owner.cube).dx;
        for (int a = 0; a < dim; ++a) {
          for (int s = -1; s <= 1; s += 2) {
            Vec3 q = oc;
            q[a] += s * dx;
            const auto wq = forest.wrap(q);
            if (!wq) continue;
            const CellRef r = forest.locate_cell(*wq);
            const std::size_t f = forest.flat(r.cube, r.i, r.j, r.k);
            if (fields.mask && fields.mask->dead_end[f]) continue;
            SampleCell sc;
            sc.x = forest.cell_center(r) + (q - *wq) + shift_back;
            sc.p = (*fields.p)[f];
            if (fields.u) {
              for (int k = 0; k < 3; ++k) sc.u[k] = (*fields.u)[static_cast<std::size_t>(k)][f];
            }
            around.push_back(sc);
          }
        }
      }
      for (int side = 1; side >= -1; side -= 2) {
        SurfaceSample smp;
        smp.triangle = static_cast<int>(t);
        smp.corner = c;
        smp.side = side;
        smp.x = X;
        smp.n = side * tri.normal;
        for (const SampleCell& sc : around) {
          const double w = shepard_weight(X, smp.n, sc.x);
          if (w <= 0.0) continue;
          SampleCell kept = sc;
          kept.weight = w;
          smp.cells.push_back(kept);
        }
        out.push_back(std::move(smp));
      }
    }
  }
  return out;
}

std::size_t thin_plate_filter(std::vector<SurfaceSample>& samples, const RayAccelerator& acc,
                              double dx) {
  const double t_min = 1e-6 * dx;
  std::size_t dropped = 0;
  for (SurfaceSample& s : samples) {
    for (SampleCell& c : s.cells) {
      if (c.filtered) continue;
      const Vec3 d = c.x - s.x;
      const double len = d.norm();
      if (len <= t_min) continue;
      const auto hits = acc.ray_intersections(s.x, d / len, len);
      for (const RayHit& h : hits) {
        if (h.t <= t_min || h.triangle == s.triangle) continue;
        // Only an opposing facet (thin-body back face) hides the cell;
        // crossing a side face at a convex edge does not.
        if (std::abs(acc.soup()[static_cast<std::size_t>(h.triangle)].normal.dot(s.n)) >= 0.5) {
          c.filtered = true;
          ++dropped;
          break;
        }
      }
    }
  }
  return dropped;
}

double sphere_reference_area(double diameter) { return kPi * diameter * diameter / 4.0; }

double plate_reference_area(double chord) { return 6.0 * chord * chord; }

ForceReport integrate_forces(const std::vector<SurfaceSample>& samples, const TriangleSoup& soup,
                             const ForceReference& ref) {
  ForceReport r;
  r.area = ref.area;
  r.dynamic_pressure = 0.5 * ref.rho * ref.u0 * ref.u0;
  // Per facet and side: accumulate corner tractions.
  struct Acc {
    Vec3 p = Vec3::Zero(), v = Vec3::Zero();
    int n = 0;
  };
  std::vector<std::array<Acc, 2>> acc(soup.size());
  for (const SurfaceSample& s : samples) {
    if (!s.valid()) {
      ++r.invalid_samples;
      continue;
    }
    Acc& a = acc[static_cast<std::size_t>(s.triangle)][s.side > 0 ? 0 : 1];
    a.p += -s.pressure() * s.n;
    if (ref.mu != 0.0) {
      const Vec3 g = s.wall_gradient();
      a.v += ref.mu * (g - g.dot(s.n) * s.n);
    }
    ++a.n;
  }
  for (std::size_t t = 0; t < soup.size(); ++t) {
    for (const Acc& a : acc[t]) {
      if (a.n == 0) continue;
      r.pressure += soup[t].area * a.p / a.n;
      r.viscous += soup[t].area * a.v / a.n;
    }
  }
  r.force = r.pressure + r.viscous;
  const double qa = r.dynamic_pressure * r.area;
  r.cd = qa > 0.0 ? r.force.x() / qa : 0.0;
  r.cl = qa > 0.0 ? r.force.y() / qa : 0.0;
  return r;
}

std::vector<double> cp_profile(const std::vector<SurfaceSample>& samples, const Vec3& center,
                               const Vec3& flow, int bins, double p_inf, double dynamic_pressure) {
  std::vector<double> sum(static_cast<std::size_t>(bins), 0.0), cnt(static_cast<std::size_t>(bins), 0.0);
  const Vec3 up = -flow.normalized();
  for (const SurfaceSample& s : samples) {
    if (s.side < 0 || !s.valid()) continue;
    const Vec3 r = (s.x - center).normalized();
    const double phi = std::acos(std::clamp(r.dot(up), -1.0, 1.0));
    const int b = std::min(bins - 1, static_cast<int>(phi / kPi * bins));
    sum[static_cast<std::size_t>(b)] += (s.pressure() - p_inf) / dynamic_pressure;
    cnt[static_cast<std::size_t>(b)] += 1.0;
  }
  for (std::size_t b = 0; b < sum.size(); ++b) {
    sum[b] = cnt[b] > 0.0 ? sum[b] / cnt[b] : std::numeric_limits<double>::quiet_NaN();
  }
  return sum;
}

}  // namespace tfib
