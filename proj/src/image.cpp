#include "polsar/image.hpp"

#include <algorithm>

#include "polsar/parallel.hpp"

namespace polsar {

MultiBandImage::MultiBandImage(int w, int h, const std::vector<std::string>& band_names) : width(w), height(h) {
  for (const auto& name : band_names) {
    bands.push_back({name, std::vector<ScatteringMatrix<float>>(pixel_count())});
  }
}

std::vector<std::string> MultiBandImage::band_names() const {
  std::vector<std::string> names;
  names.reserve(bands.size());
  for (const auto& b : bands) names.push_back(b.name);
  return names;
}

int MultiBandImage::band_index(const std::string& name) const {
  for (std::size_t i = 0; i < bands.size(); ++i) {
    if (bands[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

MultiBandImage MultiBandImage::select_bands(const std::vector<std::string>& names) const {
  MultiBandImage out;
  out.width = width;
  out.height = height;
  for (const auto& name : names) {
    const int b = band_index(name);
    if (b < 0) fail(ErrorCode::BandMismatch, "image has no band '" + name + "'");
    out.bands.push_back(bands[b]);
  }
  return out;
}

void MultiBandImage::validate() const {
  if (width <= 0 || height <= 0 || bands.empty()) fail(ErrorCode::EmptyImage, "image has no pixels or no bands");
  for (const auto& band : bands) {
    if (band.pixels.size() != pixel_count()) {
      fail(ErrorCode::DimensionMismatch, "band '" + band.name + "' has " + std::to_string(band.pixels.size()) +
                                             " pixels, expected " + std::to_string(pixel_count()));
    }
    for (const auto& s : band.pixels) {
      if (!is_finite(s)) fail(ErrorCode::NonFiniteValue, "band '" + band.name + "' contains a non-finite value");
    }
  }
}

std::vector<std::size_t> LabelMap::class_counts() const {
  std::vector<std::size_t> counts(class_names.size() + 1, 0);
  for (auto id : ids) {
    if (id < counts.size()) ++counts[id];
  }
  return counts;
}

std::size_t LabelMap::labeled_count() const {
  return static_cast<std::size_t>(std::count_if(ids.begin(), ids.end(), [](auto id) { return id != 0; }));
}

void LabelMap::validate() const {
  if (ids.size() != static_cast<std::size_t>(width) * height) fail(ErrorCode::DimensionMismatch, "label grid size");
  const auto c = class_names.size();
  for (auto id : ids) {
    if (id > c) fail(ErrorCode::InvalidArgument, "label id " + std::to_string(id) + " exceeds class count");
  }
}

CoherencyField multilook_coherency(const MultiBandImage& image, int band, int window) {
  if (image.width <= 0 || image.height <= 0 || band < 0 || band >= static_cast<int>(image.bands.size()) ||
      image.bands[band].pixels.empty()) {
    fail(ErrorCode::EmptyImage, "multilook on an empty image");
  }
  if (window < 1 || window % 2 == 0) fail(ErrorCode::InvalidArgument, "multilook window must be odd and >= 1");

  const int w = image.width;
  const int h = image.height;
  std::vector<Coherency3d> outer(image.pixel_count());
  for (std::size_t i = 0; i < outer.size(); ++i) {
    const Pauli3d k = pauli_vector(image.bands[band].pixels[i].cast<double>());
    outer[i] = k * k.adjoint();
  }

  CoherencyField field{w, h, std::vector<Coherency3d>(image.pixel_count())};
  const int r = window / 2;
  const double inv = 1.0 / (static_cast<double>(window) * window);
  parallel_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      Coherency3d acc = Coherency3d::Zero();
      for (int dy = -r; dy <= r; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = std::clamp(x + dx, 0, w - 1);
          acc += outer[static_cast<std::size_t>(yy) * w + xx];
        }
      }
      field.cells[static_cast<std::size_t>(y) * w + x] = acc * inv;
    }
  });
  return field;
}

}  // namespace polsar
