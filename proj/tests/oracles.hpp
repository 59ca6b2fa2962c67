#pragma once

// Independent reference computations used only by tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include "polsar/image.hpp"

namespace polsar::oracle {

/// Eigenvalues of a 3x3 Hermitian matrix from the trigonometric solution of
/// its characteristic cubic, sorted descending. Evaluated in long double:
/// acos loses about sqrt(eps) near a repeated root (rank-1 matrices).
inline std::array<double, 3> cubic_eigenvalues(const Coherency3d& m) {
  using R = long double;
  using C = std::complex<R>;
  const Eigen::Matrix<C, 3, 3> a = m.cast<C>();
  const R a11 = a(0, 0).real(), a22 = a(1, 1).real(), a33 = a(2, 2).real();
  const R p1 = std::norm(a(0, 1)) + std::norm(a(0, 2)) + std::norm(a(1, 2));
  const R q = (a11 + a22 + a33) / 3;
  const R p2 = (a11 - q) * (a11 - q) + (a22 - q) * (a22 - q) + (a33 - q) * (a33 - q) + 2 * p1;
  if (p2 <= 0) return {double(q), double(q), double(q)};
  const R p = std::sqrt(p2 / 6);
  // det((A - qI)/p), written out for a Hermitian matrix.
  const R b11 = (a11 - q) / p, b22 = (a22 - q) / p, b33 = (a33 - q) / p;
  const C b12 = a(0, 1) / p, b13 = a(0, 2) / p, b23 = a(1, 2) / p;
  const R det = b11 * b22 * b33 + 2 * (b12 * b23 * std::conj(b13)).real() - b11 * std::norm(b23) -
                b22 * std::norm(b13) - b33 * std::norm(b12);
  const R r = std::clamp(det / 2, R(-1), R(1));
  const R phi = std::acos(r) / 3;
  const R l1 = q + 2 * p * std::cos(phi);
  const R l3 = q + 2 * p * std::cos(phi + 2 * std::numbers::pi_v<R> / 3);
  const R l2 = 3 * q - l1 - l3;
  std::array<double, 3> out{double(l1), double(l2), double(l3)};
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

/// Circular-basis scattering matrix A^T S A with A = [[1, j], [j, 1]] / sqrt(2).
inline Eigen::Matrix2cd circular_matrix(const Scattering& s) {
  const std::complex<double> j(0, 1);
  Eigen::Matrix2cd a;
  a << 1.0, j, j, 1.0;
  a /= std::sqrt(2.0);
  Eigen::Matrix2cd m;
  m << s.hh, s.hv, s.hv, s.vv;
  return a.transpose() * m * a;
}

}  // namespace polsar::oracle
