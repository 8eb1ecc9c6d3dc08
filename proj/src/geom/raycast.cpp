#include "tfib/geom/raycast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tfib {

std::optional<RayHit> intersect_triangle(const Triangle& tri, int id, const Vec3& origin,
                                         const Vec3& dir, const RayOptions& opts) {
  const Vec3 e1 = tri.v1 - tri.v0;
  const Vec3 e2 = tri.v2 - tri.v0;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  const double scale = tri.longest_edge();
  if (!(std::abs(det) >= opts.det_eps * scale * scale) || scale == 0.0) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = origin - tri.v0;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < -opts.bary_eps || u > 1.0 + opts.bary_eps) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv_det;
  if (v < -opts.bary_eps || u + v > 1.0 + opts.bary_eps) return std::nullopt;
  const double t = e2.dot(qvec) * inv_det;
  if (!std::isfinite(t)) return std::nullopt;
  return RayHit{t, id, u, v};
}

namespace {

bool axis_separates(const Vec3& axis, const Vec3& a, const Vec3& b, const Vec3& c,
                    const Vec3& half) {
  const double pa = axis.dot(a);
  const double pb = axis.dot(b);
  const double pc = axis.dot(c);
  const double r = half.x() * std::abs(axis.x()) + half.y() * std::abs(axis.y()) +
                   half.z() * std::abs(axis.z());
  return std::min({pa, pb, pc}) > r || std::max({pa, pb, pc}) < -r;
}

struct RayQuery {
  const TriangleSoup& soup;
  const Vec3& origin;
  const Vec3& dir;
  double max_t;
  const RayOptions& opts;
  double t_slack;
  std::vector<RayHit>& hits;

  bool intersectVolume(const Box3& box) const {
    double t0 = -t_slack;
    double t1 = max_t + t_slack;
    for (int a = 0; a < 3; ++a) {
      const double lo = box.min()[a];
      const double hi = box.max()[a];
      if (dir[a] == 0.0) {
        if (origin[a] < lo || origin[a] > hi) return false;
        continue;
      }
      double ta = (lo - origin[a]) / dir[a];
      double tb = (hi - origin[a]) / dir[a];
      if (ta > tb) std::swap(ta, tb);
      // Small absolute pad: a ray grazing a flat (zero-thickness) box face
      // must not be culled by rounding.
      const double pad = 1e-12 * (1.0 + std::abs(ta) + std::abs(tb));
      t0 = std::max(t0, ta - pad);
      t1 = std::min(t1, tb + pad);
      if (t0 > t1) return false;
    }
    return true;
  }

  bool intersectObject(int id) const {
    if (auto hit = intersect_triangle(soup[static_cast<std::size_t>(id)], id, origin, dir, opts)) {
      hits.push_back(*hit);
    }
    return false;
  }
};

struct BoxQuery {
  const Box3& box;
  const TriangleSoup& soup;
  std::vector<int>& out;
  bool intersectVolume(const Box3& v) const { return v.intersects(box); }
  bool intersectObject(int id) const {
    if (soup[static_cast<std::size_t>(id)].bounds().intersects(box)) out.push_back(id);
    return false;
  }
};

struct AnyOverlapQuery {
  const Box3& box;
  const TriangleSoup& soup;
  bool found = false;
  bool intersectVolume(const Box3& v) const { return v.intersects(box); }
  bool intersectObject(int id) {
    const Triangle& tri = soup[static_cast<std::size_t>(id)];
    found = tri.bounds().intersects(box) && triangle_box_overlap(tri, box);
    return found;
  }
};

}  // namespace

bool triangle_box_overlap(const Triangle& tri, const Box3& box) {
  const Vec3 center = box.center();
  const Vec3 half = 0.5 * box.sizes();
  const Vec3 a = tri.v0 - center;
  const Vec3 b = tri.v1 - center;
  const Vec3 c = tri.v2 - center;
  for (int k = 0; k < 3; ++k) {
    const Vec3 axis = Vec3::Unit(k);
    if (axis_separates(axis, a, b, c, half)) return false;
  }
  const Vec3 n = (b - a).cross(c - a);
  if (n.squaredNorm() > 0.0 && axis_separates(n, a, b, c, half)) return false;
  const Vec3 edges[3] = {b - a, c - b, a - c};
  for (const Vec3& e : edges) {
    for (int k = 0; k < 3; ++k) {
      const Vec3 axis = Vec3::Unit(k).cross(e);
      if (axis.squaredNorm() == 0.0) continue;
      if (axis_separates(axis, a, b, c, half)) return false;
    }
  }
  return true;
}

RayAccelerator::RayAccelerator(const TriangleSoup& soup) : soup_(&soup) {
  std::vector<int> ids(soup.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<Box3> boxes;
  boxes.reserve(soup.size());
  // Inflated so that hits accepted through the barycentric slack are never
  // culled by the box test.
  for (const Triangle& t : soup.triangles()) {
    Box3 b = t.bounds();
    const Vec3 pad = Vec3::Constant(1e-6 * t.longest_edge() + 1e-300);
    boxes.emplace_back(b.min() - pad, b.max() + pad);
  }
  empty_ = ids.empty();
  if (!empty_) tree_.init(ids.begin(), ids.end(), boxes.begin(), boxes.end());
}

std::vector<RayHit> RayAccelerator::finalize(std::vector<RayHit> hits,
                                             const RayOptions& opts) const {
  const double t_weld = opts.t_weld >= 0.0 ? opts.t_weld : 1e-9 * soup_->diagonal();
  std::sort(hits.begin(), hits.end(), [](const RayHit& a, const RayHit& b) {
    return a.t != b.t ? a.t < b.t : a.triangle < b.triangle;
  });
  std::vector<RayHit> merged;
  merged.reserve(hits.size());
  for (const RayHit& h : hits) {
    if (!merged.empty() && h.t - merged.back().t <= t_weld) continue;
    merged.push_back(h);
  }
  return merged;
}

std::vector<RayHit> RayAccelerator::ray_intersections(const Vec3& origin, const Vec3& dir,
                                                      double max_distance,
                                                      const RayOptions& opts) const {
  std::vector<RayHit> hits;
  if (empty_) return hits;
  const double t_slack = 1e-9 * soup_->diagonal();
  RayQuery query{*soup_, origin, dir, max_distance, opts, t_slack, hits};
  Eigen::BVIntersect(tree_, query);
  std::vector<RayHit> in_range;
  for (RayHit h : hits) {
    if (h.t >= -t_slack && h.t <= max_distance) {
      h.t = std::max(h.t, 0.0);
      in_range.push_back(h);
    }
  }
  return finalize(std::move(in_range), opts);
}

std::vector<RayHit> RayAccelerator::ray_intersections_exhaustive(const Vec3& origin,
                                                                 const Vec3& dir,
                                                                 double max_distance,
                                                                 const RayOptions& opts) const {
  std::vector<RayHit> hits;
  const double t_slack = 1e-9 * soup_->diagonal();
  for (std::size_t i = 0; i < soup_->size(); ++i) {
    auto h = intersect_triangle((*soup_)[i], static_cast<int>(i), origin, dir, opts);
    if (h && h->t >= -t_slack && h->t <= max_distance) {
      h->t = std::max(h->t, 0.0);
      hits.push_back(*h);
    }
  }
  return finalize(std::move(hits), opts);
}

std::vector<int> RayAccelerator::candidates(const Box3& box) const {
  std::vector<int> out;
  if (empty_) return out;
  BoxQuery query{box, *soup_, out};
  Eigen::BVIntersect(tree_, query);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> RayAccelerator::overlapping(const Box3& box) const {
  std::vector<int> out;
  for (int id : candidates(box)) {
    if (triangle_box_overlap((*soup_)[static_cast<std::size_t>(id)], box)) out.push_back(id);
  }
  return out;
}

bool RayAccelerator::any_overlap(const Box3& box) const {
  if (empty_) return false;
  AnyOverlapQuery query{box, *soup_};
  Eigen::BVIntersect(tree_, query);
  return query.found;
}

}  // namespace tfib
