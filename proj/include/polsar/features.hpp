#pragma once

#include <Eigen/Core>

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsar/decompositions.hpp"
#include "polsar/image.hpp"
#include "polsar/io.hpp"

namespace polsar {

enum class FeatureFamily { Coherency, Freeman, Krogager, Yamaguchi, Huynen, Cloude };

inline constexpr std::array<FeatureFamily, 6> kAllFamilies = {
    FeatureFamily::Coherency, FeatureFamily::Freeman, FeatureFamily::Krogager,
    FeatureFamily::Yamaguchi, FeatureFamily::Huynen,  FeatureFamily::Cloude};

/// Features per band contributed by each family: 6, 3, 4, 4, 9, 7.
int family_size(FeatureFamily family);
const char* family_name(FeatureFamily family);
FeatureFamily family_from_name(const std::string& name);
std::vector<std::string> family_feature_names(FeatureFamily family);

using FamilySet = std::vector<FeatureFamily>;

/// Number of per-band features for a family subset (33 for all six).
int features_per_band(const FamilySet& families);

/// Features of one pixel for one band, families in canonical order.
/// `single_look` feeds Krogager, `t` (multilooked) feeds the rest.
Eigen::VectorXd pixel_features(const Coherency3d& t, const Scattering& single_look, const FamilySet& families);

/// Per-pixel feature vectors stored column-wise (dims x pixels).
struct FeatureCube {
  int width = 0;
  int height = 0;
  std::vector<std::string> bands;
  FamilySet families{kAllFamilies.begin(), kAllFamilies.end()};
  Eigen::MatrixXd data;

  int dims() const { return static_cast<int>(data.rows()); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(data.cols()); }
  std::vector<std::string> feature_names() const;
};

/// Concatenates per-band features in image band order. Decomposition
/// errors are rethrown with the failing pixel coordinates.
FeatureCube extract_features(const MultiBandImage& image, int window,
                             const FamilySet& families = {kAllFamilies.begin(), kAllFamilies.end()});

struct NormalizerStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;

  nlohmann::json to_json() const;
  static NormalizerStats from_json(const nlohmann::json& j);
};

/// Population mean and standard deviation over pixels with a non-zero id in
/// `mask`. Requires at least two selected pixels.
NormalizerStats fit_normalizer(const FeatureCube& cube, const LabelMap& mask);

/// z-score per feature; features whose std < 1e-12 map to 0.
FeatureCube normalize(const FeatureCube& cube, const NormalizerStats& stats);

void save_feature_cube(const FeatureCube& cube, const fs::path& path);
FeatureCube load_feature_cube(const fs::path& path);

}  // namespace polsar
