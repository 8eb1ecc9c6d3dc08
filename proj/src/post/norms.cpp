#include "tfib/post/norms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tfib {

ErrorNorms error_norms(const std::vector<double>& errors) {
  ErrorNorms n;
  n.count = errors.size();
  if (errors.empty()) return n;
  double s1 = 0.0, s2 = 0.0;
  for (double e : errors) {
    const double a = std::abs(e);
    s1 += a;
    s2 += a * a;
    n.linf = std::max(n.linf, a);
  }
  n.l1 = s1 / static_cast<double>(errors.size());
  n.l2 = std::sqrt(s2 / static_cast<double>(errors.size()));
  // Rounding in the means must not break L1 <= L2 <= Linf.
  n.l2 = std::clamp(n.l2, n.l1, n.linf);
  return n;
}

ErrorNorms error_norms(const CubeForest& forest, const CellField& field,
                       const std::function<double(const Vec3&)>& reference,
                       const std::function<bool(int, int, int, int)>& include) {
  std::vector<double> e;
  e.reserve(forest.cube_count() * forest.block_size());
  for_each_cell(forest, [&](int c, int i, int j, int k) {
    if (include && !include(c, i, j, k)) return;
    e.push_back(field.at(c, i, j, k) - reference(forest.cell_center(c, i, j, k)));
  });
  return error_norms(e);
}

double bl_thickness(double diameter, double u0, double nu) {
  if (!(diameter > 0.0) || !(u0 > 0.0) || !(nu > 0.0)) {
    throw std::invalid_argument("boundary-layer estimate needs positive D, U0 and nu");
  }
  return 3.0 * std::sqrt(0.5 * diameter * nu / u0);
}

}  // namespace tfib
