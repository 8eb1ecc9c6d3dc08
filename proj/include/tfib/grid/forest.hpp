#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "tfib/geom/soup.hpp"

namespace tfib {

class GridError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Face of a cube or of the domain: axis * 2 + (high side ? 1 : 0).
constexpr int face_id(int axis, int side) { return 2 * axis + (side > 0 ? 1 : 0); }
constexpr int face_axis(int face) { return face / 2; }
constexpr int face_side(int face) { return (face % 2) ? 1 : -1; }

struct CubeNeighbor {
  int cube = -1;
  int relative_level = 0;  // neighbour level minus own level: -1, 0 or +1
};

struct Cube {
  int id = -1;
  int level = 0;
  Vec3 origin = Vec3::Zero();  // low corner
  double dx = 0.0;             // uniform cell size of this cube
  double size = 0.0;           // edge length, cells_per_side * dx
  /// Adjacent cubes per face (empty on a non-periodic domain face).
  std::array<std::vector<CubeNeighbor>, 6> neighbors;

  Box3 box(int dim) const;
};

struct CellRef {
  int cube = -1;
  int i = 0, j = 0, k = 0;
  bool operator==(const CellRef&) const = default;
};

struct ForestSpec {
  Box3 domain;
  int dim = 3;
  int cells_per_side = 16;
  double finest_dx = 0.0;
  int max_levels = 0;
  int pad_cells = 4;
  std::size_t max_cubes = 200000;
  std::array<bool, 3> periodic{false, false, false};
};

/// Two-level building-cube grid: a tree of cubes, each holding an identical
/// dense block of cells, refined by factors of two towards the geometry with
/// face-adjacent cubes at most one level apart. Immutable after generation.
class CubeForest {
 public:
  static constexpr int kHalo = 2;

  int dim() const { return dim_; }
  int cells_per_side() const { return n_; }
  const Box3& domain() const { return domain_; }
  const std::array<bool, 3>& periodic() const { return periodic_; }
  const std::vector<Cube>& cubes() const { return cubes_; }
  const Cube& cube(int id) const { return cubes_[static_cast<std::size_t>(id)]; }
  std::size_t cube_count() const { return cubes_.size(); }
  int max_level() const;
  double root_size() const { return root_size_; }
  double finest_dx() const;

  /// Interior cell counts per axis (z is 1 in 2D).
  std::array<int, 3> extent() const { return {n_, n_, dim_ == 3 ? n_ : 1}; }
  /// Padded (halo-inclusive) sizes and strides of one cube block.
  std::array<int, 3> padded() const { return padded_; }
  std::array<std::ptrdiff_t, 3> strides() const { return strides_; }
  std::size_t block_size() const { return block_; }
  std::size_t cell_count() const;
  /// Halo width per axis (0 along z in 2D).
  int halo(int axis) const { return axis < dim_ ? kHalo : 0; }

  /// Offset of (i, j, k) inside a cube block; indices may reach into halos.
  std::ptrdiff_t local(int i, int j, int k) const {
    return (i + kHalo) * strides_[0] + (j + kHalo) * strides_[1] + (k + halo(2)) * strides_[2];
  }
  std::size_t flat(int cube, int i, int j, int k) const {
    return static_cast<std::size_t>(cube) * block_ + static_cast<std::size_t>(local(i, j, k));
  }

  Vec3 cell_center(int cube, int i, int j, int k) const;
  Vec3 cell_center(const CellRef& c) const { return cell_center(c.cube, c.i, c.j, c.k); }
  double cell_volume(int cube) const;
  /// z coordinate used for every cell centre of a 2D forest.
  double plane_z() const { return 0.5 * (domain_.min().z() + domain_.max().z()); }

  /// Leaf cube containing `p` under half-open intervals; nullopt outside.
  std::optional<int> locate_cube(const Vec3& p) const;
  /// Owning cube and cell of `p`; throws GridError outside the domain.
  CellRef locate_cell(const Vec3& p) const;
  /// Maps a point outside the domain back through periodic faces; returns
  /// nullopt if it leaves through a non-periodic face.
  std::optional<Vec3> wrap(const Vec3& p) const;

  nlohmann::json summary() const;

  /// Same cube tree with half the cells per cube edge; throws GridError when
  /// cells_per_side is odd or would drop below 2.
  CubeForest coarsened() const;

  friend CubeForest generate_forest(const ForestSpec& spec, const TriangleSoup& soup);

 private:
  struct Node {
    int level = 0;
    Vec3 origin = Vec3::Zero();
    double size = 0.0;
    std::array<int, 8> child{-1, -1, -1, -1, -1, -1, -1, -1};
    int cube = -1;
    bool leaf() const { return child[0] < 0; }
  };

  int child_count() const { return dim_ == 3 ? 8 : 4; }
  int locate_node(const Vec3& p) const;
  void split(int node);
  void finalize();

  int dim_ = 3;
  int n_ = 16;
  Box3 domain_;
  std::array<bool, 3> periodic_{false, false, false};
  double root_size_ = 0.0;
  std::array<int, 3> root_counts_{1, 1, 1};
  std::vector<Node> nodes_;
  std::vector<int> roots_;
  std::vector<Cube> cubes_;
  std::array<int, 3> padded_{};
  std::array<std::ptrdiff_t, 3> strides_{};
  std::size_t block_ = 0;
};

/// Builds the forest: cubes whose box meets the soup dilated by
/// pad_cells * finest_dx are refined to max_levels, then 2:1 balance is
/// enforced by cascading refinement. Throws GridError if the domain is not a
/// whole number of root cubes or the cube budget is exceeded.
CubeForest generate_forest(const ForestSpec& spec, const TriangleSoup& soup);

}  // namespace tfib
