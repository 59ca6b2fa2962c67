#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "polsar/error.hpp"

namespace polsar {

template <typename Scalar>
using PauliVector = Eigen::Matrix<std::complex<Scalar>, 3, 1>;

/// 3x3 Hermitian coherency matrix. The full matrix is kept so that Eigen
/// expressions apply directly; only constructors that preserve Hermitian
/// symmetry are used in this library.
template <typename Scalar>
using Coherency = Eigen::Matrix<std::complex<Scalar>, 3, 3>;

using Coherency3d = Coherency<double>;
using Pauli3d = PauliVector<double>;

/// Reciprocal scattering matrix: S_vh is identically S_hv and is not stored.
template <typename Scalar>
struct ScatteringMatrix {
  std::complex<Scalar> hh{};
  std::complex<Scalar> hv{};
  std::complex<Scalar> vv{};

  template <typename Other>
  ScatteringMatrix<Other> cast() const {
    return {std::complex<Other>(hh), std::complex<Other>(hv), std::complex<Other>(vv)};
  }

  bool operator==(const ScatteringMatrix&) const = default;
};

using Scattering = ScatteringMatrix<double>;

template <typename Scalar>
bool is_finite(const ScatteringMatrix<Scalar>& s) {
  auto ok = [](const std::complex<Scalar>& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); };
  return ok(s.hh) && ok(s.hv) && ok(s.vv);
}

/// Total backscattered power |S_hh|^2 + 2|S_hv|^2 + |S_vv|^2.
template <typename Scalar>
Scalar total_power(const ScatteringMatrix<Scalar>& s) {
  return std::norm(s.hh) + Scalar(2) * std::norm(s.hv) + std::norm(s.vv);
}

/// k = (S_hh + S_vv, S_hh - S_vv, 2 S_hv) / sqrt(2).
template <typename Scalar>
PauliVector<Scalar> pauli_vector(const ScatteringMatrix<Scalar>& s) {
  const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
  PauliVector<Scalar> k;
  k << r * (s.hh + s.vv), r * (s.hh - s.vv), r * Scalar(2) * s.hv;
  return k;
}

/// Inverse of pauli_vector.
template <typename Scalar>
ScatteringMatrix<Scalar> from_pauli(const PauliVector<Scalar>& k) {
  const Scalar r = Scalar(1) / std::sqrt(Scalar(2));
  return {r * (k(0) + k(1)), r * k(2), r * (k(0) - k(1))};
}

template <typename Scalar>
Scalar span(const Coherency<Scalar>& t) {
  return t.diagonal().real().sum();
}

/// Single-band H x W raster of scattering matrices, row-major.
struct BandRaster {
  std::string name;
  std::vector<ScatteringMatrix<float>> pixels;

  bool operator==(const BandRaster&) const = default;
};

/// Multifrequency image: every band shares width and height.
struct MultiBandImage {
  int width = 0;
  int height = 0;
  std::vector<BandRaster> bands;

  MultiBandImage() = default;
  MultiBandImage(int width, int height, const std::vector<std::string>& band_names);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
  std::vector<std::string> band_names() const;
  int band_index(const std::string& name) const;

  const ScatteringMatrix<float>& at(int band, int x, int y) const { return bands[band].pixels[index(x, y)]; }
  ScatteringMatrix<float>& at(int band, int x, int y) { return bands[band].pixels[index(x, y)]; }

  /// Copy restricted to the named bands, in the given order.
  MultiBandImage select_bands(const std::vector<std::string>& names) const;

  /// Throws DimensionMismatch / NonFiniteValue / EmptyImage on violations.
  void validate() const;

  bool operator==(const MultiBandImage&) const = default;
};

/// Per-pixel class ids, 0 = unlabeled, 1..C = classes.
struct LabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> ids;
  std::vector<std::string> class_names;

  LabelMap() = default;
  LabelMap(int width, int height, std::vector<std::string> names)
      : width(width), height(height), ids(static_cast<std::size_t>(width) * height, 0), class_names(std::move(names)) {}

  int class_count() const { return static_cast<int>(class_names.size()); }
  std::size_t pixel_count() const { return ids.size(); }
  std::uint16_t at(int x, int y) const { return ids[static_cast<std::size_t>(y) * width + x]; }
  std::uint16_t& at(int x, int y) { return ids[static_cast<std::size_t>(y) * width + x]; }

  /// Number of pixels per class, index 0 holds the unlabeled count.
  std::vector<std::size_t> class_counts() const;
  std::size_t labeled_count() const;

  void validate() const;

  bool operator==(const LabelMap&) const = default;
};

/// Row-major grid of coherency matrices.
struct CoherencyField {
  int width = 0;
  int height = 0;
  std::vector<Coherency3d> cells;

  const Coherency3d& at(int x, int y) const { return cells[static_cast<std::size_t>(y) * width + x]; }
};

/// Boxcar multilook over an odd window with replicated borders:
/// T(p) = mean of k k^H over the window.
CoherencyField multilook_coherency(const MultiBandImage& image, int band, int window);

}  // namespace polsar
