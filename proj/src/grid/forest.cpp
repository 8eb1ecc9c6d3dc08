#include "tfib/grid/forest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <unsupported/Eigen/BVH>

namespace tfib {
namespace {

struct BoxHitQuery {
  const std::vector<Box3>& boxes;
  const Box3& box;
  bool found = false;
  bool intersectVolume(const Box3& v) const { return v.intersects(box); }
  bool intersectObject(int id) {
    found = boxes[static_cast<std::size_t>(id)].intersects(box);
    return found;
  }
};

bool any_box_overlap(const Eigen::KdBVH<double, 3, int>& bvh, const std::vector<Box3>& boxes,
                     const Box3& box) {
  BoxHitQuery q{boxes, box};
  Eigen::BVIntersect(bvh, q);
  return q.found;
}

}  // namespace

Box3 Cube::box(int dim) const {
  Vec3 hi = origin + Vec3::Constant(size);
  Vec3 lo = origin;
  if (dim == 2) {
    // 2D cubes are squares; z extent is handled by the caller.
    hi.z() = origin.z();
  }
  return Box3(lo, hi);
}

int CubeForest::max_level() const {
  int m = 0;
  for (const Cube& c : cubes_) m = std::max(m, c.level);
  return m;
}

double CubeForest::finest_dx() const {
  double d = root_size_ / n_;
  for (const Cube& c : cubes_) d = std::min(d, c.dx);
  return d;
}

std::size_t CubeForest::cell_count() const {
  const auto e = extent();
  return cubes_.size() * static_cast<std::size_t>(e[0]) * e[1] * e[2];
}

Vec3 CubeForest::cell_center(int cube, int i, int j, int k) const {
  const Cube& c = cubes_[static_cast<std::size_t>(cube)];
  Vec3 p = c.origin + c.dx * Vec3(i + 0.5, j + 0.5, k + 0.5);
  if (dim_ == 2) p.z() = plane_z();
  return p;
}

double CubeForest::cell_volume(int cube) const {
  const double dx = cubes_[static_cast<std::size_t>(cube)].dx;
  return dim_ == 3 ? dx * dx * dx : dx * dx;
}

std::optional<Vec3> CubeForest::wrap(const Vec3& p) const {
  Vec3 q = p;
  for (int a = 0; a < dim_; ++a) {
    const double lo = domain_.min()[a];
    const double hi = domain_.max()[a];
    if (q[a] >= lo && q[a] < hi) continue;
    if (!periodic_[static_cast<std::size_t>(a)]) return std::nullopt;
    const double len = hi - lo;
    q[a] = lo + (q[a] - lo) - len * std::floor((q[a] - lo) / len);
    if (q[a] >= hi) q[a] = lo;
  }
  return q;
}

int CubeForest::locate_node(const Vec3& p) const {
  std::array<int, 3> r{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    const double s = (p[a] - domain_.min()[a]) / root_size_;
    if (!(p[a] >= domain_.min()[a]) || !(p[a] < domain_.max()[a])) return -1;
    r[static_cast<std::size_t>(a)] =
        std::clamp(static_cast<int>(std::floor(s)), 0, root_counts_[static_cast<std::size_t>(a)] - 1);
  }
  int node = roots_[static_cast<std::size_t>(
      (r[2] * root_counts_[1] + r[1]) * root_counts_[0] + r[0])];
  while (!nodes_[static_cast<std::size_t>(node)].leaf()) {
    const Node& nd = nodes_[static_cast<std::size_t>(node)];
    const double half = 0.5 * nd.size;
    int idx = 0;
    for (int a = 0; a < dim_; ++a) {
      if (p[a] >= nd.origin[a] + half) idx |= 1 << a;
    }
    node = nd.child[static_cast<std::size_t>(idx)];
  }
  return node;
}

std::optional<int> CubeForest::locate_cube(const Vec3& p) const {
  const int node = locate_node(p);
  if (node < 0) return std::nullopt;
  return nodes_[static_cast<std::size_t>(node)].cube;
}

CellRef CubeForest::locate_cell(const Vec3& p) const {
  const auto c = locate_cube(p);
  if (!c) {
    throw GridError("point (" + std::to_string(p.x()) + ", " + std::to_string(p.y()) + ", " +
                    std::to_string(p.z()) + ") lies outside the domain");
  }
  const Cube& cube = cubes_[static_cast<std::size_t>(*c)];
  CellRef ref;
  ref.cube = *c;
  std::array<int, 3> idx{0, 0, 0};
  for (int a = 0; a < dim_; ++a) {
    const double s = (p[a] - cube.origin[a]) / cube.dx;
    idx[static_cast<std::size_t>(a)] = std::clamp(static_cast<int>(std::floor(s)), 0, n_ - 1);
  }
  ref.i = idx[0];
  ref.j = idx[1];
  ref.k = idx[2];
  return ref;
}

void CubeForest::split(int node) {
  const Node parent = nodes_[static_cast<std::size_t>(node)];
  const double half = 0.5 * parent.size;
  for (int c = 0; c < child_count(); ++c) {
    Node ch;
    ch.level = parent.level + 1;
    ch.size = half;
    ch.origin = parent.origin;
    for (int a = 0; a < dim_; ++a) {
      if (c & (1 << a)) ch.origin[a] += half;
    }
    nodes_[static_cast<std::size_t>(node)].child[static_cast<std::size_t>(c)] =
        static_cast<int>(nodes_.size());
    nodes_.push_back(ch);
  }
}

CubeForest CubeForest::coarsened() const {
  if (n_ % 2 != 0 || n_ / 2 < 2) {
    throw GridError("cannot coarsen a forest with " + std::to_string(n_) + " cells per cube edge");
  }
  CubeForest c = *this;
  c.n_ = n_ / 2;
  c.finalize();
  return c;
}

void CubeForest::finalize() {
  cubes_.clear();
  // Depth-first over roots in x-fastest order gives a deterministic numbering.
  std::vector<int> stack;
  for (int root : roots_) {
    stack.push_back(root);
    while (!stack.empty()) {
      const int id = stack.back();
      stack.pop_back();
      Node& nd = nodes_[static_cast<std::size_t>(id)];
      if (nd.leaf()) {
        Cube c;
        c.id = static_cast<int>(cubes_.size());
        c.level = nd.level;
        c.origin = nd.origin;
        if (dim_ == 2) c.origin.z() = domain_.min().z();
        c.size = nd.size;
        c.dx = nd.size / n_;
        nd.cube = c.id;
        cubes_.push_back(c);
      } else {
        for (int k = child_count() - 1; k >= 0; --k) stack.push_back(nd.child[static_cast<std::size_t>(k)]);
      }
    }
  }

  for (int a = 0; a < 3; ++a) {
    padded_[static_cast<std::size_t>(a)] = extent()[static_cast<std::size_t>(a)] + 2 * halo(a);
  }
  strides_ = {1, padded_[0], static_cast<std::ptrdiff_t>(padded_[0]) * padded_[1]};
  block_ = static_cast<std::size_t>(padded_[0]) * padded_[1] * padded_[2];

  // Face neighbours, probed at the finest sub-face centres just outside.
  const int maxl = max_level();
  for (Cube& c : cubes_) {
    const int sub = 1 << (maxl - c.level);
    const double h = c.size / sub;
    for (int axis = 0; axis < dim_; ++axis) {
      const int t1 = (axis + 1) % dim_;
      const int t2 = dim_ == 3 ? (axis + 2) % 3 : -1;
      for (int side = -1; side <= 1; side += 2) {
        std::map<int, int> found;
        const double eps = 0.25 * h;
        for (int s1 = 0; s1 < sub; ++s1) {
          for (int s2 = 0; s2 < (t2 >= 0 ? sub : 1); ++s2) {
            Vec3 p = c.origin;
            if (dim_ == 2) p.z() = plane_z();
            p[axis] += side > 0 ? c.size + eps : -eps;
            p[t1] += (s1 + 0.5) * h;
            if (t2 >= 0) p[t2] += (s2 + 0.5) * h;
            const auto w = wrap(p);
            if (!w) continue;
            const auto nb = locate_cube(*w);
            if (!nb || *nb == c.id) continue;
            found[*nb] = cubes_[static_cast<std::size_t>(*nb)].level - c.level;
          }
        }
        auto& list = c.neighbors[static_cast<std::size_t>(face_id(axis, side))];
        list.clear();
        for (const auto& [id, rel] : found) list.push_back({id, rel});
      }
    }
  }
}

nlohmann::json CubeForest::summary() const {
  nlohmann::json j;
  j["dimension"] = dim_;
  j["cells_per_side"] = n_;
  j["halo_width"] = kHalo;
  j["cube_count"] = cubes_.size();
  j["cell_count"] = cell_count();
  j["root_size"] = root_size_;
  j["root_counts"] = {root_counts_[0], root_counts_[1], root_counts_[2]};
  j["domain"] = {{"min", {domain_.min().x(), domain_.min().y(), domain_.min().z()}},
                 {"max", {domain_.max().x(), domain_.max().y(), domain_.max().z()}}};
  j["periodic"] = {periodic_[0], periodic_[1], periodic_[2]};
  std::map<int, std::size_t> per_level;
  for (const Cube& c : cubes_) ++per_level[c.level];
  nlohmann::json levels = nlohmann::json::array();
  for (const auto& [lvl, count] : per_level) {
    const double dx = root_size_ / n_ / static_cast<double>(1 << lvl);
    levels.push_back({{"level", lvl}, {"cubes", count}, {"dx", dx}});
  }
  j["levels"] = levels;
  return j;
}

CubeForest generate_forest(const ForestSpec& spec, const TriangleSoup& soup) {
  if (spec.dim != 2 && spec.dim != 3) throw GridError("dimension must be 2 or 3");
  if (!(spec.finest_dx > 0.0)) throw GridError("finest cell size must be positive");
  if (spec.max_levels < 0 || spec.max_levels > 20) throw GridError("max_levels out of range");
  if (spec.cells_per_side < 2 || spec.cells_per_side % 2 != 0) {
    throw GridError("cells per side must be an even number >= 2");
  }
  if (spec.pad_cells < 0) throw GridError("pad_cells must be non-negative");
  if (spec.domain.isEmpty()) throw GridError("empty domain");

  CubeForest f;
  f.dim_ = spec.dim;
  f.n_ = spec.cells_per_side;
  f.domain_ = spec.domain;
  f.periodic_ = spec.periodic;
  if (f.dim_ == 2) f.periodic_[2] = false;
  f.root_size_ = spec.cells_per_side * spec.finest_dx * std::ldexp(1.0, spec.max_levels);

  for (int a = 0; a < f.dim_; ++a) {
    const double len = spec.domain.max()[a] - spec.domain.min()[a];
    const double r = len / f.root_size_;
    const long n = std::lround(r);
    if (n < 1 || std::abs(r - static_cast<double>(n)) > 1e-9 * std::max(1.0, r)) {
      throw GridError("domain extent along axis " + std::to_string(a) + " (" + std::to_string(len) +
                      ") is not a whole number of root cubes of size " + std::to_string(f.root_size_));
    }
    f.root_counts_[static_cast<std::size_t>(a)] = static_cast<int>(n);
  }
  const std::size_t roots =
      static_cast<std::size_t>(f.root_counts_[0]) * f.root_counts_[1] * f.root_counts_[2];
  if (roots > spec.max_cubes) throw GridError("root cube count exceeds the cube budget");

  for (int k = 0; k < f.root_counts_[2]; ++k) {
    for (int j = 0; j < f.root_counts_[1]; ++j) {
      for (int i = 0; i < f.root_counts_[0]; ++i) {
        CubeForest::Node nd;
        nd.size = f.root_size_;
        nd.origin = spec.domain.min() + f.root_size_ * Vec3(i, j, f.dim_ == 3 ? k : 0);
        f.roots_.push_back(static_cast<int>(f.nodes_.size()));
        f.nodes_.push_back(nd);
      }
    }
  }

  std::size_t leaves = roots;
  auto grow = [&](int node) {
    f.split(node);
    leaves += static_cast<std::size_t>(f.child_count() - 1);
    if (leaves > spec.max_cubes) {
      throw GridError("refinement exceeds the cube budget of " + std::to_string(spec.max_cubes));
    }
  };

  // Geometry-driven refinement: AABB of the node against dilated triangle AABBs.
  if (!soup.empty() && spec.max_levels > 0) {
    std::vector<Box3> boxes;
    boxes.reserve(soup.size());
    const double pad = spec.pad_cells * spec.finest_dx;
    for (const Triangle& t : soup.triangles()) {
      Box3 b = t.bounds();
      b.min().array() -= pad;
      b.max().array() += pad;
      boxes.push_back(b);
    }
    Eigen::KdBVH<double, 3, int> bvh;
    {
      std::vector<int> ids(boxes.size());
      for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
      bvh.init(ids.begin(), ids.end(), boxes.begin(), boxes.end());
    }
    auto touches = [&](const CubeForest::Node& nd) {
      Vec3 lo = nd.origin;
      Vec3 hi = nd.origin + Vec3::Constant(nd.size);
      if (f.dim_ == 2) {
        lo.z() = spec.domain.min().z();
        hi.z() = spec.domain.max().z();
      }
      return any_box_overlap(bvh, boxes, Box3(lo, hi));
    };
    std::vector<int> work(f.roots_.begin(), f.roots_.end());
    while (!work.empty()) {
      const int id = work.back();
      work.pop_back();
      if (f.nodes_[static_cast<std::size_t>(id)].level >= spec.max_levels) continue;
      if (!touches(f.nodes_[static_cast<std::size_t>(id)])) continue;
      grow(id);
      for (int c = 0; c < f.child_count(); ++c) {
        work.push_back(f.nodes_[static_cast<std::size_t>(id)].child[static_cast<std::size_t>(c)]);
      }
    }
  }

  // 2:1 balance: a leaf is split while any face-adjacent leaf is two or more
  // levels finer. Probing at the finest sub-face centres finds every such leaf.
  bool changed = true;
  while (changed) {
    changed = false;
    const std::size_t count = f.nodes_.size();
    for (std::size_t id = 0; id < count; ++id) {
      const CubeForest::Node nd = f.nodes_[id];
      if (!nd.leaf()) continue;
      const int sub = 1 << std::max(0, spec.max_levels - nd.level);
      const double h = nd.size / sub;
      bool need = false;
      for (int axis = 0; axis < f.dim_ && !need; ++axis) {
        const int t1 = (axis + 1) % f.dim_;
        const int t2 = f.dim_ == 3 ? (axis + 2) % 3 : -1;
        for (int side = -1; side <= 1 && !need; side += 2) {
          for (int s1 = 0; s1 < sub && !need; ++s1) {
            for (int s2 = 0; s2 < (t2 >= 0 ? sub : 1) && !need; ++s2) {
              Vec3 p = nd.origin;
              if (f.dim_ == 2) p.z() = f.plane_z();
              p[axis] += side > 0 ? nd.size + 0.25 * h : -0.25 * h;
              p[t1] += (s1 + 0.5) * h;
              if (t2 >= 0) p[t2] += (s2 + 0.5) * h;
              const auto w = f.wrap(p);
              if (!w) continue;
              const int nb = f.locate_node(*w);
              if (nb >= 0 && f.nodes_[static_cast<std::size_t>(nb)].level > nd.level + 1) need = true;
            }
          }
        }
      }
      if (need) {
        grow(static_cast<int>(id));
        changed = true;
      }
    }
  }

  f.finalize();
  return f;
}

}  // namespace tfib
