#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "json.hpp"

#include "tfib/geom/soup.hpp"

namespace tfib {

/// Edge between two welded vertex ids (first < second).
using WeldedEdge = std::array<std::size_t, 2>;

struct IssueReport {
  std::size_t triangle_count = 0;
  std::size_t welded_vertex_count = 0;
  double weld_tolerance = 0.0;

  std::vector<WeldedEdge> gap_edges;             // used by exactly one facet
  std::vector<WeldedEdge> over_connected_edges;  // used by three or more facets
  std::vector<std::size_t> duplicate_faces;      // repeats of an earlier facet
  std::vector<std::size_t> zero_area_faces;

  std::size_t gap_edge_count() const { return gap_edges.size(); }
  std::size_t over_connected_edge_count() const { return over_connected_edges.size(); }
  std::size_t duplicate_face_count() const { return duplicate_faces.size(); }
  std::size_t zero_area_count() const { return zero_area_faces.size(); }
  bool watertight() const { return gap_edges.empty() && over_connected_edges.empty(); }
};

/// Default weld distance: 1e-6 of the bounding-box diagonal.
double default_weld_tolerance(const TriangleSoup& soup);

/// Welds vertices closer than `weld_tolerance`, then classifies every edge by
/// the number of facets using it. Never fails; the report may be all zeros.
IssueReport audit_geometry(const TriangleSoup& soup, double weld_tolerance);

nlohmann::json to_json(const IssueReport& report);

}  // namespace tfib
