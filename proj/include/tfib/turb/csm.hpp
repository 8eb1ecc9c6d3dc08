#pragma once

#include <Eigen/Core>
#include <cmath>

namespace tfib {

/// Floor on the invariant E below which the coherent-structure function is
/// taken as zero.
constexpr double kCsmEnergyFloor = 1e-30;

template <class Scalar>
struct CsmTerms {
  Scalar q = 0;         // second invariant, (W:W - S:S) / 2
  Scalar e = 0;         // (W:W + S:S) / 2
  Scalar f_cs = 0;      // q / e
  Scalar c = 0;         // model coefficient
  Scalar strain = 0;    // |S| = sqrt(S:S)
  Scalar nu_t = 0;
};

/// Coherent-structure eddy viscosity for velocity gradient g (g(i, j) =
/// du_i/dx_j) and filter width delta.
template <class Scalar>
CsmTerms<Scalar> csm_terms(const Eigen::Matrix<Scalar, 3, 3>& g, Scalar delta) {
  const Eigen::Matrix<Scalar, 3, 3> s = Scalar(0.5) * (g + g.transpose());
  const Eigen::Matrix<Scalar, 3, 3> w = Scalar(0.5) * (g - g.transpose());
  const Scalar ss = s.cwiseProduct(s).sum();
  const Scalar ww = w.cwiseProduct(w).sum();
  CsmTerms<Scalar> t;
  t.q = Scalar(0.5) * (ww - ss);
  t.e = Scalar(0.5) * (ww + ss);
  t.f_cs = t.e < Scalar(kCsmEnergyFloor) ? Scalar(0) : t.q / t.e;
  using std::abs;
  using std::pow;
  using std::sqrt;
  t.c = Scalar(1) / Scalar(20) * pow(abs(t.f_cs), Scalar(1.5));
  t.strain = sqrt(ss);
  t.nu_t = t.c * delta * delta * t.strain;
  return t;
}

template <class Scalar>
Scalar csm_eddy_viscosity(const Eigen::Matrix<Scalar, 3, 3>& g, Scalar delta) {
  return csm_terms(g, delta).nu_t;
}

}  // namespace tfib
