#pragma once

#include <array>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfib/grid/field.hpp"

namespace tfib {

class ExportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Q = (W:W - S:S) / 2 from central differences of u; halos of u must be
/// filled. Components beyond the forest dimension are treated as zero.
void q_criterion(const CubeForest& forest, const std::array<CellField, 3>& u, CellField& q);

/// Writes one legacy-VTK structured-points file per cube (cube_00000.vtk,
/// ...) holding the named cell fields, plus a blocks.visit index listing
/// them. Values are written with 17 significant digits so a read-back is
/// exact.
void write_vtk_blocks(const std::string& dir, const CubeForest& forest,
                      const std::map<std::string, const CellField*>& fields);

/// Reads the named fields back from write_vtk_blocks output.
std::map<std::string, CellField> read_vtk_blocks(const std::string& dir, const CubeForest& forest);

/// CSV of every cell whose centre lies within half a cell of the plane
/// x[axis] = position: columns x, y, z and the named fields.
void write_slice_csv(const std::string& path, const CubeForest& forest,
                     const std::map<std::string, const CellField*>& fields, int axis,
                     double position);

/// Time series of cell values at fixed points: one CSV row per record.
class ProbeWriter {
 public:
  ProbeWriter(const std::string& path, const CubeForest& forest, const std::vector<Vec3>& points,
              const std::vector<std::string>& names);
  void record(double t, const std::vector<const CellField*>& fields);

 private:
  std::ofstream out_;
  std::vector<std::size_t> cells_;
  std::size_t names_ = 0;
};

}  // namespace tfib
