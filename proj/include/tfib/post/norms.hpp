#pragma once

#include <functional>
#include <vector>

#include "tfib/grid/field.hpp"

namespace tfib {

struct ErrorNorms {
  double l1 = 0.0;    // mean |e|
  double l2 = 0.0;    // sqrt(mean e^2)
  double linf = 0.0;  // max |e|
  std::size_t count = 0;
};

ErrorNorms error_norms(const std::vector<double>& errors);

/// Norms of field - reference(x) over interior cells accepted by `include`
/// (all cells when empty).
ErrorNorms error_norms(const CubeForest& forest, const CellField& field,
                       const std::function<double(const Vec3&)>& reference,
                       const std::function<bool(int cube, int i, int j, int k)>& include = {});

/// Laminar boundary-layer thickness estimate 3 sqrt((D / 2) nu / U0).
/// Throws std::invalid_argument unless all arguments are positive.
double bl_thickness(double diameter, double u0, double nu);

}  // namespace tfib
