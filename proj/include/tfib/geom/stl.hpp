#pragma once

#include <filesystem>

#include "tfib/geom/soup.hpp"

namespace tfib {

enum class StlFormat { kBinary, kText };

/// Reads a text or little-endian binary STL file and scales every vertex by
/// `units_scale`. Facets are kept verbatim (duplicates and slivers included).
/// Throws GeometryError naming the byte offset or line of a malformed record.
TriangleSoup load_geometry(const std::filesystem::path& path, double units_scale = 1.0);

void save_stl(const TriangleSoup& soup, const std::filesystem::path& path,
              StlFormat format = StlFormat::kBinary);

}  // namespace tfib
