#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "polsar/features.hpp"
#include "polsar/image.hpp"
#include "polsar/neural.hpp"
#include "polsar/superpixels.hpp"

namespace polsar {

inline constexpr int kModelFormatVersion = 1;
inline constexpr std::string_view kModelMagic = "PLSRMODEL\n";

/// Every hyperparameter of a run. JSON keys are flat and match the CLI flags.
struct PipelineConfig {
  int window = 3;
  FamilySet families{kAllFamilies.begin(), kAllFamilies.end()};
  std::vector<int> ae1_hidden{32};
  int u1 = 5;
  int u2 = 10;
  nn::SparseAeWeights<double> ae1_weights{1.0, 1e-4, 0.1, 0.15};
  nn::SparseAeWeights<double> ae2_weights{1.0, 1e-4, 0.1, 0.15};
  nn::TrainConfig ae1_train;
  nn::TrainConfig ae2_train;
  nn::TrainConfig softmax_train;
  double softmax_l2 = 1e-4;
  int slic_k = 0;  // 0: ceil(H W / 256) for each image
  double slic_m = 10;
  int slic_iters = 10;
  double slic_min_frac = 0.25;
  double train_fraction = 0.1;
  std::uint64_t seed = 1;

  void validate() const;
  SlicParams slic_for(int width, int height) const;
  nlohmann::json to_json() const;
  /// Keys absent from `j` keep their current values; unknown keys throw.
  void merge_json(const nlohmann::json& j);
};

struct PipelineModel {
  int version = kModelFormatVersion;
  std::vector<std::string> bands;
  std::vector<std::string> class_names;
  int window = 3;
  FamilySet families;
  NormalizerStats normalizer;
  nn::FeedForward<double> encoder1;
  nn::FeedForward<double> encoder2;
  nn::SoftmaxClassifier<double> classifier;
  int slic_k = 0;
  double slic_m = 10;
  int slic_iters = 10;
  double slic_min_frac = 0.25;
  nlohmann::json config;  // effective configuration, informational

  SlicParams slic_for(int width, int height) const;
  int input_dim() const { return encoder1.in_dim(); }
  /// 33 B -> U1 -> 2 U1 -> U2 -> C.
  void validate() const;
};

/// Stage outputs kept for inspection.
struct Intermediates {
  FeatureCube features;  // normalized
  HiddenField hidden;
  SuperpixelMap superpixels;
  Eigen::MatrixXd robust;  // 2 U1 x pixels
  Eigen::MatrixXd code2;   // U2 x pixels
};

struct FitResult {
  PipelineModel model;
  std::vector<nn::LossBreakdown<double>> ae1_history;
  std::vector<nn::LossBreakdown<double>> ae2_history;
  std::vector<nn::LossBreakdown<double>> softmax_history;
  double train_accuracy = 0;
  Intermediates intermediates;
};

struct Prediction {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> classes;  // 1..C per pixel
  Eigen::MatrixXd probabilities;       // C x pixels
  Intermediates intermediates;

  LabelMap as_label_map(const std::vector<std::string>& class_names) const;
};

/// [h_i; c_j] per pixel.
Eigen::MatrixXd build_robust_features(const HiddenField& hidden, const SuperpixelMap& sp);

/// Trains every stage on the labeled pixels of `train_labels`.
FitResult fit(const MultiBandImage& image, const LabelMap& train_labels, const PipelineConfig& config);

/// Superpixels are recomputed on the predicted image.
Prediction predict(const PipelineModel& model, const MultiBandImage& image);

struct SplitSpec {
  double train_fraction = 0.1;
  std::uint64_t seed = 1;
};

/// Per-class random split; each class with pixels keeps at least one on each side.
std::pair<LabelMap, LabelMap> split(const LabelMap& labels, const SplitSpec& spec);

std::vector<std::uint8_t> encode_model(const PipelineModel& model);
PipelineModel decode_model(std::span<const std::uint8_t> bytes);
void save_model(const PipelineModel& model, const fs::path& path);
PipelineModel load_model(const fs::path& path);

/// Writes features, hidden field, segments, centers and robust features under `dir`.
void dump_intermediates(const Intermediates& im, const fs::path& dir);

}  // namespace polsar
