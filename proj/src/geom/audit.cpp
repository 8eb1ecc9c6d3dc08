#include "tfib/geom/audit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

namespace tfib {
namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::size_t h = static_cast<std::size_t>(k.x) * 73856093u;
    h ^= static_cast<std::size_t>(k.y) * 19349663u;
    h ^= static_cast<std::size_t>(k.z) * 83492791u;
    return h;
  }
};

// Proximity weld on a hash grid whose spacing equals the tolerance, so any
// partner lies in one of the 27 surrounding buckets.
class VertexWelder {
 public:
  explicit VertexWelder(double tol) : tol_(tol) {}

  std::size_t id(const Vec3& p) {
    const CellKey base = key(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = buckets_.find({base.x + dx, base.y + dy, base.z + dz});
          if (it == buckets_.end()) continue;
          for (std::size_t cand : it->second) {
            if ((points_[cand] - p).norm() <= tol_) return cand;
          }
        }
      }
    }
    points_.push_back(p);
    buckets_[base].push_back(points_.size() - 1);
    return points_.size() - 1;
  }

  std::size_t count() const { return points_.size(); }

 private:
  CellKey key(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x() / tol_)),
            static_cast<std::int64_t>(std::floor(p.y() / tol_)),
            static_cast<std::int64_t>(std::floor(p.z() / tol_))};
  }

  double tol_;
  std::vector<Vec3> points_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellKeyHash> buckets_;
};

}  // namespace

double default_weld_tolerance(const TriangleSoup& soup) {
  const double diag = soup.diagonal();
  return diag > 0.0 ? 1e-6 * diag : 1e-12;
}

IssueReport audit_geometry(const TriangleSoup& soup, double weld_tolerance) {
  IssueReport report;
  report.triangle_count = soup.size();
  report.weld_tolerance = weld_tolerance;

  // Weld in a canonical (lexicographic) vertex order so that the ids, and
  // therefore every count, do not depend on facet order.
  std::vector<Vec3> all;
  all.reserve(3 * soup.size());
  for (const Triangle& t : soup.triangles()) {
    all.push_back(t.v0);
    all.push_back(t.v1);
    all.push_back(t.v2);
  }
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(all[a].data(), all[a].data() + 3, all[b].data(),
                                        all[b].data() + 3);
  });
  VertexWelder welder(weld_tolerance);
  std::vector<std::size_t> vid(all.size());
  for (std::size_t i : order) vid[i] = welder.id(all[i]);
  report.welded_vertex_count = welder.count();

  std::map<WeldedEdge, std::size_t> edge_use;
  std::set<std::array<std::size_t, 3>> seen_faces;
  for (std::size_t f = 0; f < soup.size(); ++f) {
    std::array<std::size_t, 3> ids{vid[3 * f], vid[3 * f + 1], vid[3 * f + 2]};
    const bool collapsed = ids[0] == ids[1] || ids[1] == ids[2] || ids[0] == ids[2];
    if (soup[f].degenerate || collapsed) report.zero_area_faces.push_back(f);
    std::array<std::size_t, 3> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    if (!collapsed && !seen_faces.insert(sorted).second) report.duplicate_faces.push_back(f);
    for (int e = 0; e < 3; ++e) {
      std::size_t a = ids[e];
      std::size_t b = ids[(e + 1) % 3];
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      ++edge_use[{a, b}];
    }
  }
  for (const auto& [edge, uses] : edge_use) {
    if (uses == 1) report.gap_edges.push_back(edge);
    if (uses >= 3) report.over_connected_edges.push_back(edge);
  }
  return report;
}

nlohmann::json to_json(const IssueReport& report) {
  nlohmann::json j;
  j["triangle_count"] = report.triangle_count;
  j["welded_vertex_count"] = report.welded_vertex_count;
  j["weld_tolerance"] = report.weld_tolerance;
  j["gap_edge_count"] = report.gap_edge_count();
  j["over_connected_edge_count"] = report.over_connected_edge_count();
  j["duplicate_face_count"] = report.duplicate_face_count();
  j["zero_area_count"] = report.zero_area_count();
  j["gap_edges"] = report.gap_edges;
  j["over_connected_edges"] = report.over_connected_edges;
  j["duplicate_faces"] = report.duplicate_faces;
  j["zero_area_faces"] = report.zero_area_faces;
  return j;
}

}  // namespace tfib
