#pragma once

// Per-pixel polarimetric target decompositions. Every function is a pure
// function of one coherency matrix (or one scattering matrix for Krogager)
// and is templated on the real scalar type.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "polsar/error.hpp"
#include "polsar/image.hpp"

namespace polsar {

// ---------------------------------------------------------------------------
// Coherency-matrix ratios

/// (|T13|/sqrt(T11 T33), |T23|/sqrt(T22 T33), T22/S, T33/S, 10 log10 S,
///  |T12|/sqrt(T11 T22)). A ratio whose denominator involves a diagonal
/// entry <= 1e-12 * span is defined as 0.
template <typename Scalar>
Eigen::Matrix<Scalar, 6, 1> coherency_features(const Coherency<Scalar>& t) {
  const Scalar s = span(t);
  if (!(s > Scalar(0))) fail(ErrorCode::InvalidArgument, "coherency features need span > 0");
  const Scalar eps = Scalar(1e-12) * s;
  const Scalar t11 = t(0, 0).real(), t22 = t(1, 1).real(), t33 = t(2, 2).real();
  auto ratio = [eps](const std::complex<Scalar>& off, Scalar a, Scalar b) {
    if (a <= eps || b <= eps) return Scalar(0);
    return std::min(Scalar(1), std::abs(off) / std::sqrt(a * b));
  };
  Eigen::Matrix<Scalar, 6, 1> f;
  f << ratio(t(0, 2), t11, t33), ratio(t(1, 2), t33, t22), t22 / s, t33 / s, Scalar(10) * std::log10(s),
      ratio(t(0, 1), t11, t22);
  return f;
}

// ---------------------------------------------------------------------------
// Freeman-Durden three-component model

template <typename Scalar>
struct FreemanPowers {
  Scalar odd{};
  Scalar dbl{};
  Scalar vol{};
};

/// Freeman-Durden decomposition evaluated on lexicographic covariance terms
/// recovered from T. Volume power comes from the cross-pol channel
/// (P_vol = 8 <|S_hv|^2>). When the volume estimate exhausts either
/// co-pol channel the pixel is all volume; a negative secondary power is
/// clamped to 0 and the residual is given to the dominant mechanism.
template <typename Scalar>
FreemanPowers<Scalar> freeman(const Coherency<Scalar>& t) {
  const Scalar total = span(t);
  if (!(total > Scalar(0))) fail(ErrorCode::InvalidArgument, "freeman needs span > 0");
  const Scalar eps = Scalar(1e-12) * total;

  const Scalar hhhh = (t(0, 0).real() + t(1, 1).real() + Scalar(2) * t(0, 1).real()) / Scalar(2);
  const Scalar vvvv = (t(0, 0).real() + t(1, 1).real() - Scalar(2) * t(0, 1).real()) / Scalar(2);
  const Scalar hvhv = t(2, 2).real() / Scalar(2);
  const std::complex<Scalar> hhvv((t(0, 0).real() - t(1, 1).real()) / Scalar(2), -t(0, 1).imag());

  // Random dipole cloud: <|Shh|^2> = <|Svv|^2> = fv, <ShhSvv*> = fv/3, <|Shv|^2> = fv/3.
  const Scalar fv = Scalar(3) * hvhv;
  const Scalar a = hhhh - fv;
  const Scalar b = vvvv - fv;
  const std::complex<Scalar> c = hhvv - fv / Scalar(3);

  FreemanPowers<Scalar> p;
  if (a <= eps || b <= eps) {
    p.vol = total;
    return p;
  }
  p.vol = Scalar(8) * hvhv;
  const Scalar residual = a + b;
  const Scalar det = a * b - std::norm(c);

  if (c.real() >= Scalar(0)) {
    // Surface dominant, alpha = -1.
    const Scalar fd = det / (a + b + Scalar(2) * c.real());
    if (fd <= Scalar(0)) {
      p.odd = residual;
      return p;
    }
    const Scalar fs = b - fd;
    p.dbl = Scalar(2) * fd;
    p.odd = fs > eps ? fs + std::norm(c + fd) / fs : Scalar(0);
    if (p.odd == Scalar(0)) p.dbl = residual;
  } else {
    // Double-bounce dominant, beta = 1.
    const Scalar fs = det / (a + b - Scalar(2) * c.real());
    if (fs <= Scalar(0)) {
      p.dbl = residual;
      return p;
    }
    const Scalar fd = b - fs;
    p.odd = Scalar(2) * fs;
    p.dbl = fd > eps ? fd + std::norm(c - fs) / fd : Scalar(0);
    if (p.dbl == Scalar(0)) p.odd = residual;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Krogager sphere / diplane / helix

template <typename Scalar>
struct KrogagerComponents {
  Scalar sphere{};       // K_s
  Scalar diplane{};      // K_d
  Scalar helix{};        // K_h
  Scalar orientation{};  // K_t, diplane orientation angle in [0, pi/2)
};

/// Circular-polarization basis: S_RR = j S_hv + (S_hh - S_vv)/2,
/// S_LL = j S_hv - (S_hh - S_vv)/2, S_RL = j (S_hh + S_vv)/2.
template <typename Scalar>
std::array<std::complex<Scalar>, 3> circular_basis(const ScatteringMatrix<Scalar>& s) {
  const std::complex<Scalar> j(0, 1);
  const auto half_diff = (s.hh - s.vv) / Scalar(2);
  return {j * s.hv + half_diff, j * s.hv - half_diff, j * (s.hh + s.vv) / Scalar(2)};
}

template <typename Scalar>
KrogagerComponents<Scalar> krogager(const ScatteringMatrix<Scalar>& s) {
  const auto [rr, ll, rl] = circular_basis(s);
  const Scalar arr = std::abs(rr), all = std::abs(ll);
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  constexpr Scalar quarter_turn = pi / Scalar(2);

  KrogagerComponents<Scalar> k;
  k.sphere = std::abs(rl);
  k.diplane = std::min(arr, all);
  k.helix = std::abs(arr - all);
  Scalar theta = (std::arg(rr) - std::arg(ll) + pi) / Scalar(4);
  theta = std::fmod(theta, quarter_turn);
  if (theta < Scalar(0)) theta += quarter_turn;
  if (theta >= quarter_turn) theta = Scalar(0);
  k.orientation = theta;
  return k;
}

// ---------------------------------------------------------------------------
// Yamaguchi four-component model with helix term

template <typename Scalar>
struct YamaguchiPowers {
  Scalar odd{};
  Scalar dbl{};
  Scalar vol{};
  Scalar hlx{};
};

/// Four-component decomposition in the coherency formulation. Helix power
/// is 2|Im T23|, capped at 2 T33 so the volume power stays non-negative.
/// The volume model is chosen from 10 log10(<|Svv|^2>/<|Shh|^2>): within
/// +-2 dB the symmetric dipole cloud, otherwise the asymmetric variant.
template <typename Scalar>
YamaguchiPowers<Scalar> yamaguchi4(const Coherency<Scalar>& t) {
  const Scalar total = span(t);
  if (!(total > Scalar(0))) fail(ErrorCode::InvalidArgument, "yamaguchi4 needs span > 0");
  const Scalar eps = Scalar(1e-12) * total;
  const Scalar t11 = t(0, 0).real(), t22 = t(1, 1).real(), t33 = t(2, 2).real();

  YamaguchiPowers<Scalar> p;
  p.hlx = std::min(Scalar(2) * std::abs(t(1, 2).imag()), Scalar(2) * t33);

  const Scalar hhhh = (t11 + t22 + Scalar(2) * t(0, 1).real()) / Scalar(2);
  const Scalar vvvv = (t11 + t22 - Scalar(2) * t(0, 1).real()) / Scalar(2);
  Scalar ratio_db = 0;
  if (hhhh > eps && vvvv > eps) {
    ratio_db = Scalar(10) * std::log10(vvvv / hhhh);
  } else if (hhhh > eps) {
    ratio_db = -std::numeric_limits<Scalar>::infinity();
  } else if (vvvv > eps) {
    ratio_db = std::numeric_limits<Scalar>::infinity();
  }

  // Residual surface (s), double-bounce (d) and correlation (c) terms after
  // removing the volume and helix contributions.
  Scalar s = 0, d = 0;
  std::complex<Scalar> c = t(0, 1);
  if (ratio_db >= Scalar(-2) && ratio_db <= Scalar(2)) {
    p.vol = Scalar(4) * t33 - Scalar(2) * p.hlx;
    s = t11 - p.vol / Scalar(2);
    d = t22 - p.vol / Scalar(4) - p.hlx / Scalar(2);
  } else {
    p.vol = Scalar(15) / Scalar(8) * (Scalar(2) * t33 - p.hlx);
    const Scalar sign = ratio_db < Scalar(-2) ? Scalar(1) : Scalar(-1);
    s = t11 - p.vol / Scalar(2);
    d = t22 - Scalar(7) * p.vol / Scalar(30) - p.hlx / Scalar(2);
    c -= sign * p.vol / Scalar(6);
  }
  p.vol = std::max(p.vol, Scalar(0));

  if (p.vol + p.hlx >= total) {
    p.vol = std::max(Scalar(0), total - p.hlx);
    return p;
  }

  const Scalar branch = t11 - t22 - t33 + p.hlx;
  if (branch > Scalar(0)) {
    const Scalar moved = s > eps ? std::norm(c) / s : Scalar(0);
    p.odd = s + moved;
    p.dbl = d - moved;
  } else {
    const Scalar moved = d > eps ? std::norm(c) / d : Scalar(0);
    p.dbl = d + moved;
    p.odd = s - moved;
  }
  const Scalar rest = total - p.vol - p.hlx;
  if (p.odd < Scalar(0) && p.dbl < Scalar(0)) {
    p.odd = p.dbl = 0;
    p.vol = total - p.hlx;
  } else if (p.odd < Scalar(0)) {
    p.odd = 0;
    p.dbl = rest;
  } else if (p.dbl < Scalar(0)) {
    p.dbl = 0;
    p.odd = rest;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Huynen parameters

template <typename Scalar>
struct HuynenParameters {
  Scalar a{}, b0{}, b{}, c{}, d{}, e{}, f{}, g{}, h{};

  Eigen::Matrix<Scalar, 9, 1> as_vector() const {
    Eigen::Matrix<Scalar, 9, 1> v;
    v << a, b0, b, c, d, e, f, g, h;
    return v;
  }
};

/// 2A = T11, B0 + B = T22, B0 - B = T33, T12 = C - jD, T23 = E + jF,
/// T13 = G + jH.
template <typename Scalar>
HuynenParameters<Scalar> huynen(const Coherency<Scalar>& t) {
  HuynenParameters<Scalar> p;
  p.a = t(0, 0).real() / Scalar(2);
  p.b0 = (t(1, 1).real() + t(2, 2).real()) / Scalar(2);
  p.b = (t(1, 1).real() - t(2, 2).real()) / Scalar(2);
  p.c = t(0, 1).real();
  p.d = -t(0, 1).imag();
  p.e = t(1, 2).real();
  p.f = t(1, 2).imag();
  p.g = t(0, 2).real();
  p.h = t(0, 2).imag();
  return p;
}

template <typename Scalar>
Coherency<Scalar> coherency_from_huynen(const HuynenParameters<Scalar>& p) {
  using C = std::complex<Scalar>;
  Coherency<Scalar> t;
  t(0, 0) = Scalar(2) * p.a;
  t(1, 1) = p.b0 + p.b;
  t(2, 2) = p.b0 - p.b;
  t(0, 1) = C(p.c, -p.d);
  t(1, 2) = C(p.e, p.f);
  t(0, 2) = C(p.g, p.h);
  t(1, 0) = std::conj(t(0, 1));
  t(2, 1) = std::conj(t(1, 2));
  t(2, 0) = std::conj(t(0, 2));
  return t;
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition

template <typename Scalar>
struct EigenDecomp3 {
  Eigen::Matrix<Scalar, 3, 1> values;             // descending, >= 0
  Eigen::Matrix<std::complex<Scalar>, 3, 3> vectors;  // column i pairs with values(i)
};

/// Eigenvalues sorted descending and clamped at 0; eigenvectors are the
/// matching orthonormal columns.
template <typename Scalar>
EigenDecomp3<Scalar> eigh3(const Coherency<Scalar>& t) {
  Eigen::SelfAdjointEigenSolver<Coherency<Scalar>> es(t);
  if (es.info() != Eigen::Success) fail(ErrorCode::ConvergenceFailure, "3x3 Hermitian eigensolver did not converge");
  EigenDecomp3<Scalar> out;
  // Eigen returns ascending order.
  for (int i = 0; i < 3; ++i) {
    out.values(i) = std::max(Scalar(0), es.eigenvalues()(2 - i));
    out.vectors.col(i) = es.eigenvectors().col(2 - i);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cloude-Pottier

template <typename Scalar>
struct CloudeParameters {
  Scalar alpha{};
  Scalar beta{};
  Scalar delta{};
  Scalar gamma{};
  Scalar lambda{};
  Scalar entropy{};
  Scalar anisotropy{};
};

/// Eigenvector angles for u = e^{j phi} (cos a, sin a cos b e^{j d},
/// sin a sin b e^{j g}). The phase gauge makes the first non-negligible
/// component real and positive; angles of negligible components are 0.
template <typename Scalar>
std::array<Scalar, 4> eigenvector_angles(Eigen::Matrix<std::complex<Scalar>, 3, 1> u) {
  const Scalar tiny = Scalar(1e-12) * std::max(Scalar(1), u.norm());
  for (int i = 0; i < 3; ++i) {
    if (std::abs(u(i)) > tiny) {
      u *= std::conj(u(i)) / std::abs(u(i));
      break;
    }
  }
  const Scalar m1 = std::min(Scalar(1), std::abs(u(0)));
  const Scalar m2 = std::abs(u(1)), m3 = std::abs(u(2));
  const Scalar alpha = std::acos(m1);
  const Scalar beta = (m2 > tiny || m3 > tiny) ? std::atan2(m3, m2) : Scalar(0);
  const Scalar delta = m2 > tiny ? std::arg(u(1)) : Scalar(0);
  const Scalar gamma = m3 > tiny ? std::arg(u(2)) : Scalar(0);
  return {alpha, beta, delta, gamma};
}

/// Entropy uses base-3 logarithms (0 log 0 = 0); anisotropy is 0 when
/// lambda2 + lambda3 is negligible; the mean angles and the mean
/// eigenvalue are weighted by the pseudo-probabilities p_i.
template <typename Scalar>
CloudeParameters<Scalar> cloude(const Coherency<Scalar>& t) {
  const Scalar total = span(t);
  if (!(total > Scalar(0))) fail(ErrorCode::InvalidArgument, "cloude needs span > 0");
  const auto ed = eigh3(t);
  const Scalar sum = ed.values.sum();
  const Scalar eps = Scalar(1e-12) * total;

  CloudeParameters<Scalar> out;
  if (!(sum > Scalar(0))) return out;
  const Eigen::Matrix<Scalar, 3, 1> p = ed.values / sum;
  for (int i = 0; i < 3; ++i) {
    if (p(i) > Scalar(0)) out.entropy -= p(i) * std::log(p(i)) / std::log(Scalar(3));
    const auto ang = eigenvector_angles<Scalar>(ed.vectors.col(i));
    out.alpha += p(i) * ang[0];
    out.beta += p(i) * ang[1];
    out.delta += p(i) * ang[2];
    out.gamma += p(i) * ang[3];
    out.lambda += p(i) * ed.values(i);
  }
  out.entropy = std::clamp(out.entropy, Scalar(0), Scalar(1));
  out.alpha = std::clamp(out.alpha, Scalar(0), std::numbers::pi_v<Scalar> / Scalar(2));
  const Scalar minor = ed.values(1) + ed.values(2);
  out.anisotropy = minor > eps ? std::clamp((ed.values(1) - ed.values(2)) / minor, Scalar(0), Scalar(1)) : Scalar(0);
  return out;
}

}  // namespace polsar
