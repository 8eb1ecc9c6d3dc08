#pragma once

#include "tfib/ibm/closure.hpp"

namespace tfib {

inline double nudged_distance(double d, double dx) {
  return d <= 1e-12 * dx ? kCentreNudge * dx : d;
}

template <class WallValue>
void line_values(const DummyBlock& b, const double* field, std::ptrdiff_t stride, int axis,
                 GhostRule rule, WallValue&& wall, double out[5]) {
  const double* q = field + b.flat;
  for (int o = -2; o <= 2; ++o) out[o + 2] = q[o * stride];
  const int dir_lo = face_id(axis, -1);
  const int dir_hi = face_id(axis, 1);
  const int g_lo = b.first_ghost(dir_lo);
  const int g_hi = b.first_ghost(dir_hi);
  if (g_lo == 3 && g_hi == 3) return;
  const double q0 = out[2];
  const double raw_lo1 = out[1];
  const double raw_hi1 = out[3];
  for (int side = -1; side <= 1; side += 2) {
    const int dir = side > 0 ? dir_hi : dir_lo;
    const int g = side > 0 ? g_hi : g_lo;
    if (g == 3) continue;
    double& v1 = out[2 + side];
    double& v2 = out[2 + 2 * side];
    if (rule == GhostRule::kNeumann) {
      if (g == 1) {
        v1 = q0;
        v2 = q0;
      } else {
        v2 = side > 0 ? raw_hi1 : raw_lo1;
      }
      continue;
    }
    const double qib = wall(dir);
    const double d = b.crossing[static_cast<std::size_t>(dir)].d;
    if (g == 1) {
      const int g_opp = side > 0 ? g_lo : g_hi;
      const double q_opp = g_opp == 1 ? q0 : (side > 0 ? raw_lo1 : raw_hi1);
      const double g1 = ghost_value(q0, q_opp, qib, nudged_distance(d, b.dx), b.dx);
      v1 = g1;
      v2 = 2.0 * g1 - q0;
    } else {
      const double q1 = side > 0 ? raw_hi1 : raw_lo1;
      v2 = ghost_value(q1, q0, qib, nudged_distance(d - b.dx, b.dx), b.dx);
    }
  }
}

}  // namespace tfib
