#include "polsar/features.hpp"

#include "polsar/parallel.hpp"

namespace polsar {

int family_size(FeatureFamily family) {
  switch (family) {
    case FeatureFamily::Coherency: return 6;
    case FeatureFamily::Freeman: return 3;
    case FeatureFamily::Krogager: return 4;
    case FeatureFamily::Yamaguchi: return 4;
    case FeatureFamily::Huynen: return 9;
    case FeatureFamily::Cloude: return 7;
  }
  return 0;
}

const char* family_name(FeatureFamily family) {
  switch (family) {
    case FeatureFamily::Coherency: return "coherency";
    case FeatureFamily::Freeman: return "freeman";
    case FeatureFamily::Krogager: return "krogager";
    case FeatureFamily::Yamaguchi: return "yamaguchi";
    case FeatureFamily::Huynen: return "huynen";
    case FeatureFamily::Cloude: return "cloude";
  }
  return "?";
}

FeatureFamily family_from_name(const std::string& name) {
  for (auto f : kAllFamilies) {
    if (name == family_name(f)) return f;
  }
  fail(ErrorCode::InvalidArgument, "unknown feature family '" + name + "'");
}

std::vector<std::string> family_feature_names(FeatureFamily family) {
  switch (family) {
    case FeatureFamily::Coherency: return {"t13_ratio", "t23_ratio", "t22_span", "t33_span", "span_db", "t12_ratio"};
    case FeatureFamily::Freeman: return {"f_odd", "f_dbl", "f_vol"};
    case FeatureFamily::Krogager: return {"k_s", "k_d", "k_h", "k_t"};
    case FeatureFamily::Yamaguchi: return {"p_odd", "p_dbl", "p_vol", "p_hlx"};
    case FeatureFamily::Huynen: return {"a", "b0", "b", "c", "d", "e", "f", "g", "h"};
    case FeatureFamily::Cloude: return {"alpha", "beta", "delta", "gamma", "lambda", "entropy", "anisotropy"};
  }
  return {};
}

int features_per_band(const FamilySet& families) {
  int n = 0;
  for (auto f : families) n += family_size(f);
  return n;
}

Eigen::VectorXd pixel_features(const Coherency3d& t, const Scattering& single_look, const FamilySet& families) {
  Eigen::VectorXd out(features_per_band(families));
  int at = 0;
  for (auto family : kAllFamilies) {
    if (std::find(families.begin(), families.end(), family) == families.end()) continue;
    switch (family) {
      case FeatureFamily::Coherency:
        out.segment<6>(at) = coherency_features(t);
        break;
      case FeatureFamily::Freeman: {
        const auto p = freeman(t);
        out.segment<3>(at) << p.odd, p.dbl, p.vol;
        break;
      }
      case FeatureFamily::Krogager: {
        const auto k = krogager(single_look);
        out.segment<4>(at) << k.sphere, k.diplane, k.helix, k.orientation;
        break;
      }
      case FeatureFamily::Yamaguchi: {
        const auto p = yamaguchi4(t);
        out.segment<4>(at) << p.odd, p.dbl, p.vol, p.hlx;
        break;
      }
      case FeatureFamily::Huynen:
        out.segment<9>(at) = huynen(t).as_vector();
        break;
      case FeatureFamily::Cloude: {
        const auto c = cloude(t);
        out.segment<7>(at) << c.alpha, c.beta, c.delta, c.gamma, c.lambda, c.entropy, c.anisotropy;
        break;
      }
    }
    at += family_size(family);
  }
  return out;
}

std::vector<std::string> FeatureCube::feature_names() const {
  std::vector<std::string> names;
  for (const auto& band : bands) {
    for (auto family : kAllFamilies) {
      if (std::find(families.begin(), families.end(), family) == families.end()) continue;
      for (const auto& n : family_feature_names(family)) names.push_back(band + "." + n);
    }
  }
  return names;
}

FeatureCube extract_features(const MultiBandImage& image, int window, const FamilySet& families) {
  image.validate();
  if (families.empty()) fail(ErrorCode::InvalidArgument, "no feature families selected");
  const int per_band = features_per_band(families);

  FeatureCube cube;
  cube.width = image.width;
  cube.height = image.height;
  cube.bands = image.band_names();
  cube.families.clear();
  for (auto f : kAllFamilies) {
    if (std::find(families.begin(), families.end(), f) != families.end()) cube.families.push_back(f);
  }
  cube.data.resize(per_band * static_cast<Eigen::Index>(image.bands.size()), static_cast<Eigen::Index>(image.pixel_count()));

  for (int b = 0; b < static_cast<int>(image.bands.size()); ++b) {
    const auto field = multilook_coherency(image, b, window);
    parallel_rows(image.height, [&](int y) {
      for (int x = 0; x < image.width; ++x) {
        const auto idx = image.index(x, y);
        try {
          cube.data.col(static_cast<Eigen::Index>(idx)).segment(b * per_band, per_band) =
              pixel_features(field.cells[idx], image.bands[b].pixels[idx].cast<double>(), cube.families);
        } catch (const Error& e) {
          fail(e.code(), "pixel (" + std::to_string(x) + ", " + std::to_string(y) + ") band '" +
                             image.bands[b].name + "': " + e.message());
        }
      }
    });
  }
  return cube;
}

nlohmann::json NormalizerStats::to_json() const {
  return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
          {"std", std::vector<double>(std.data(), std.data() + std.size())}};
}

NormalizerStats NormalizerStats::from_json(const nlohmann::json& j) {
  const auto m = j.at("mean").get<std::vector<double>>();
  const auto s = j.at("std").get<std::vector<double>>();
  if (m.size() != s.size()) fail(ErrorCode::ShapeMismatch, "normalizer mean/std length differ");
  NormalizerStats stats;
  stats.mean = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
  stats.std = Eigen::Map<const Eigen::VectorXd>(s.data(), static_cast<Eigen::Index>(s.size()));
  return stats;
}

NormalizerStats fit_normalizer(const FeatureCube& cube, const LabelMap& mask) {
  if (mask.pixel_count() != cube.pixel_count()) fail(ErrorCode::DimensionMismatch, "mask and cube sizes differ");
  const auto dims = cube.data.rows();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dims);
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
    if (mask.ids[i] == 0) continue;
    sum += cube.data.col(static_cast<Eigen::Index>(i));
    ++n;
  }
  if (n < 2) fail(ErrorCode::TooFewSamples, "normalizer needs at least two selected pixels");
  NormalizerStats stats;
  stats.mean = sum / static_cast<double>(n);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dims);
  for (std::size_t i = 0; i < mask.pixel_count(); ++i) {
    if (mask.ids[i] == 0) continue;
    sq += (cube.data.col(static_cast<Eigen::Index>(i)) - stats.mean).array().square().matrix();
  }
  stats.std = (sq / static_cast<double>(n)).cwiseSqrt();
  return stats;
}

FeatureCube normalize(const FeatureCube& cube, const NormalizerStats& stats) {
  if (stats.mean.size() != cube.data.rows() || stats.std.size() != cube.data.rows()) {
    fail(ErrorCode::ShapeMismatch, "normalizer has " + std::to_string(stats.mean.size()) + " features, cube has " +
                                       std::to_string(cube.data.rows()));
  }
  FeatureCube out = cube;
  const Eigen::ArrayXd scale =
      stats.std.array().unaryExpr([](double s) { return s < 1e-12 ? 0.0 : 1.0 / s; });
  out.data = ((cube.data.colwise() - stats.mean).array().colwise() * scale).matrix();
  return out;
}

void save_feature_cube(const FeatureCube& cube, const fs::path& path) {
  std::vector<std::string> families;
  for (auto f : cube.families) families.emplace_back(family_name(f));
  const nlohmann::json header = {{"width", cube.width}, {"height", cube.height}, {"bands", cube.bands},
                                 {"dtype", "f32"},      {"kind", "features"},     {"dims", cube.dims()},
                                 {"families", families}};
  std::vector<std::uint8_t> payload;
  payload.reserve(cube.pixel_count() * cube.dims() * sizeof(float));
  for (Eigen::Index p = 0; p < cube.data.cols(); ++p) {
    for (Eigen::Index d = 0; d < cube.data.rows(); ++d) append_f32(payload, static_cast<float>(cube.data(d, p)));
  }
  write_plsr(path, header, payload);
}

FeatureCube load_feature_cube(const fs::path& path) {
  const auto env = read_plsr(path);
  FeatureCube cube;
  int dims = 0;
  try {
    if (env.header.at("kind").get<std::string>() != "features") fail(ErrorCode::MalformedHeader, "not a feature cube");
    cube.width = env.header.at("width").get<int>();
    cube.height = env.header.at("height").get<int>();
    cube.bands = env.header.at("bands").get<std::vector<std::string>>();
    dims = env.header.at("dims").get<int>();
    if (env.header.contains("families")) {
      cube.families.clear();
      for (const auto& n : env.header.at("families").get<std::vector<std::string>>()) {
        cube.families.push_back(family_from_name(n));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedHeader, std::string("feature cube header: ") + e.what());
  }
  const std::size_t n = static_cast<std::size_t>(cube.width) * cube.height;
  if (env.payload.size() != n * dims * sizeof(float)) fail(ErrorCode::DimensionMismatch, "feature payload size");
  cube.data.resize(dims, static_cast<Eigen::Index>(n));
  std::size_t off = 0;
  for (Eigen::Index p = 0; p < cube.data.cols(); ++p) {
    for (Eigen::Index d = 0; d < dims; ++d, off += sizeof(float)) cube.data(d, p) = read_f32(env.payload, off);
  }
  return cube;
}

}  // namespace polsar
