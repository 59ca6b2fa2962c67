#include "polsar/eval.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

namespace polsar {

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

Score score(const LabelMap& predicted, const LabelMap& truth) {
  truth.validate();
  if (predicted.width != truth.width || predicted.height != truth.height ||
      predicted.ids.size() != truth.ids.size()) {
    fail(ErrorCode::DimensionMismatch, "prediction and truth sizes differ");
  }
  const auto c = static_cast<std::size_t>(truth.class_count());
  Score s;
  s.confusion.class_names = truth.class_names;
  s.confusion.counts.assign(c * c, 0);
  for (std::size_t i = 0; i < truth.ids.size(); ++i) {
    const auto t = truth.ids[i];
    if (t == 0) continue;
    const auto p = predicted.ids[i];
    if (p == 0 || p > c) {
      fail(ErrorCode::InvalidArgument, "prediction id " + std::to_string(p) + " outside 1.." + std::to_string(c));
    }
    ++s.confusion.counts[(t - 1u) * c + (p - 1u)];
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::size_t diag = 0;
  double precision_sum = 0;
  int precision_n = 0;
  for (std::size_t k = 0; k < c; ++k) {
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < c; ++j) {
      row += s.confusion.counts[k * c + j];
      col += s.confusion.counts[j * c + k];
    }
    const auto hit = s.confusion.counts[k * c + k];
    diag += hit;
    s.recall.push_back(row ? static_cast<double>(hit) / static_cast<double>(row) : nan);
    s.precision.push_back(col ? static_cast<double>(hit) / static_cast<double>(col) : nan);
    if (col) {
      precision_sum += s.precision.back();
      ++precision_n;
    }
  }
  const auto total = s.confusion.total();
  if (total == 0) fail(ErrorCode::InvalidArgument, "truth map has no labeled pixels");
  s.overall_accuracy = static_cast<double>(diag) / static_cast<double>(total);
  s.macro_precision = precision_sum / precision_n;
  return s;
}

namespace {

std::ostringstream csv_stream() {
  std::ostringstream out;
  out << std::setprecision(10);
  return out;
}

}  // namespace

std::string score_csv(const Score& s) {
  auto out = csv_stream();
  out << "class,recall,precision,support\n";
  const int c = s.confusion.class_count();
  for (int k = 0; k < c; ++k) {
    std::size_t support = 0;
    for (int j = 0; j < c; ++j) support += s.confusion.at(k, j);
    out << s.confusion.class_names[static_cast<std::size_t>(k)] << ',' << s.recall[static_cast<std::size_t>(k)] << ','
        << s.precision[static_cast<std::size_t>(k)] << ',' << support << '\n';
  }
  out << "overall_accuracy," << s.overall_accuracy << ",," << s.confusion.total() << '\n';
  out << "macro_precision,," << s.macro_precision << ',' << s.confusion.total() << '\n';
  return out.str();
}

std::string confusion_csv(const ConfusionMatrix& m) {
  auto out = csv_stream();
  out << "truth\\predicted";
  for (const auto& n : m.class_names) out << ',' << n;
  out << '\n';
  for (int t = 0; t < m.class_count(); ++t) {
    out << m.class_names[static_cast<std::size_t>(t)];
    for (int p = 0; p < m.class_count(); ++p) out << ',' << m.at(t, p);
    out << '\n';
  }
  return out.str();
}

std::vector<std::vector<std::string>> all_band_subsets(const std::vector<std::string>& bands) {
  const std::size_t n = bands.size();
  std::vector<std::vector<std::string>> out;
  for (std::size_t size = 1; size <= n; ++size) {
    // lexicographic index combinations of the given size
    std::vector<std::size_t> idx(size);
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      std::vector<std::string> subset;
      for (auto i : idx) subset.push_back(bands[i]);
      out.push_back(subset);
      std::size_t k = size;
      while (k > 0 && idx[k - 1] == n - size + k - 1) --k;
      if (k == 0) break;
      ++idx[k - 1];
      for (std::size_t j = k; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return out;
}

namespace {

AblationRow ablation_cycle(const std::string& name, const MultiBandImage& image, const LabelMap& train,
                           const LabelMap& test, const PipelineConfig& config) {
  const auto fitted = fit(image, train, config);
  const auto pred = predict(fitted.model, image);
  return {name, score(pred.as_label_map(test.class_names), test)};
}

}  // namespace

std::vector<AblationRow> run_band_ablation(const MultiBandImage& image, const LabelMap& labels,
                                           const std::vector<std::vector<std::string>>& subsets,
                                           const PipelineConfig& config) {
  config.validate();
  const auto [train, test] = split(labels, {config.train_fraction, config.seed});
  std::vector<AblationRow> rows;
  for (const auto& subset : subsets) {
    if (subset.empty()) fail(ErrorCode::InvalidArgument, "band subsets must be non-empty");
    std::string name;
    for (const auto& b : subset) name += b;
    rows.push_back(ablation_cycle(name, image.select_bands(subset), train, test, config));
  }
  return rows;
}

std::vector<AblationRow> run_feature_ablation(const MultiBandImage& image, const LabelMap& labels,
                                              const std::vector<FamilySet>& subsets, const PipelineConfig& config) {
  config.validate();
  const auto [train, test] = split(labels, {config.train_fraction, config.seed});
  std::vector<AblationRow> rows;
  for (const auto& families : subsets) {
    if (families.empty()) fail(ErrorCode::InvalidArgument, "feature family subsets must be non-empty");
    std::string name;
    for (auto f : families) name += (name.empty() ? "" : "+") + std::string(family_name(f));
    PipelineConfig c = config;
    c.families = families;
    rows.push_back(ablation_cycle(name, image, train, test, c));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  auto out = csv_stream();
  out << "subset";
  if (!rows.empty())
    for (const auto& n : rows.front().score.confusion.class_names) out << ',' << n;
  out << ",oa,macro_precision\n";
  for (const auto& r : rows) {
    out << r.subset;
    for (double v : r.score.recall) out << ',' << v;
    out << ',' << r.score.overall_accuracy << ',' << r.score.macro_precision << '\n';
  }
  return out.str();
}

const std::array<Rgb, 16>& palette() {
  static const std::array<Rgb, 16> colors{{
      {0, 0, 0},       {230, 25, 75},   {60, 180, 75},   {255, 225, 25}, {0, 130, 200},  {245, 130, 48},
      {145, 30, 180},  {70, 240, 240},  {240, 50, 230},  {210, 245, 60}, {250, 190, 212}, {0, 128, 128},
      {220, 190, 255}, {170, 110, 40},  {128, 0, 0},     {255, 255, 255},
  }};
  return colors;
}

std::vector<std::uint8_t> RgbImage::ppm() const {
  const std::string head = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

RgbImage render_map(const LabelMap& map) {
  map.validate();
  if (map.class_count() >= static_cast<int>(palette().size())) {
    fail(ErrorCode::PaletteTooSmall, std::to_string(map.class_count()) + " classes exceed the " +
                                         std::to_string(palette().size() - 1) + "-color palette");
  }
  RgbImage img{map.width, map.height, {}};
  img.pixels.reserve(map.ids.size() * 3);
  for (auto id : map.ids) {
    const auto& c = palette()[id];
    img.pixels.insert(img.pixels.end(), c.begin(), c.end());
  }
  return img;
}

std::vector<bool> boundary_mask(const SuperpixelMap& sp) {
  const int w = sp.width, h = sp.height;
  std::vector<bool> mask(sp.labels.size(), false);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto l = sp.at(x, y);
      mask[static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + static_cast<std::size_t>(x)] =
          (x > 0 && sp.at(x - 1, y) != l) || (x + 1 < w && sp.at(x + 1, y) != l) || (y > 0 && sp.at(x, y - 1) != l) ||
          (y + 1 < h && sp.at(x, y + 1) != l);
    }
  }
  return mask;
}

RgbImage pauli_composite(const MultiBandImage& image, int band) {
  if (band < 0 || band >= static_cast<int>(image.bands.size())) fail(ErrorCode::BandMismatch, "band index out of range");
  const auto& px = image.bands[static_cast<std::size_t>(band)].pixels;
  std::vector<std::array<double, 3>> mag(px.size());
  std::array<double, 3> mean{0, 0, 0};
  for (std::size_t i = 0; i < px.size(); ++i) {
    const auto s = px[i].cast<double>();
    mag[i] = {std::abs(s.hh - s.vv), 2 * std::abs(s.hv), std::abs(s.hh + s.vv)};
    for (int c = 0; c < 3; ++c) mean[c] += mag[i][c] / static_cast<double>(px.size());
  }
  // each channel scaled so that twice its mean saturates
  RgbImage img{image.width, image.height, {}};
  img.pixels.reserve(px.size() * 3);
  for (const auto& m : mag) {
    for (int c = 0; c < 3; ++c) {
      const double v = mean[c] > 0 ? m[c] / (2 * mean[c]) : 0.0;
      img.pixels.push_back(static_cast<std::uint8_t>(std::lround(255 * std::clamp(v, 0.0, 1.0))));
    }
  }
  return img;
}

RgbImage render_boundaries(const SuperpixelMap& sp, const MultiBandImage& image, int band) {
  if (sp.width != image.width || sp.height != image.height) {
    fail(ErrorCode::DimensionMismatch, "superpixel map and image sizes differ");
  }
  auto img = pauli_composite(image, band);
  const auto mask = boundary_mask(sp);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    img.pixels[3 * i] = 255;
    img.pixels[3 * i + 1] = 255;
    img.pixels[3 * i + 2] = 0;
  }
  return img;
}

void write_ppm(const RgbImage& image, const fs::path& path) { write_file(path, image.ppm()); }

}  // namespace polsar
