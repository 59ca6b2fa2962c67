#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "polsar/pipeline.hpp"

namespace polsar {

/// Rows are true classes, columns predicted classes (both 1..C, stored 0-based).
struct ConfusionMatrix {
  std::vector<std::string> class_names;
  std::vector<std::size_t> counts;  // C x C row-major

  int class_count() const { return static_cast<int>(class_names.size()); }
  std::size_t at(int truth, int pred) const {
    return counts[static_cast<std::size_t>(truth) * class_names.size() + static_cast<std::size_t>(pred)];
  }
  std::size_t total() const;
};

struct Score {
  ConfusionMatrix confusion;
  std::vector<double> recall;     // per class; NaN when the class has no truth pixels
  std::vector<double> precision;  // per class; NaN when nothing was predicted as the class
  double overall_accuracy = 0;    // trace / total
  double macro_precision = 0;     // mean precision over non-empty prediction columns
};

/// Unlabeled truth pixels are skipped.
Score score(const LabelMap& predicted, const LabelMap& truth);

/// Per-class table plus the two OA variants.
std::string score_csv(const Score& s);
std::string confusion_csv(const ConfusionMatrix& m);

struct AblationRow {
  std::string subset;
  Score score;
};

/// Non-empty subsets ordered by size, then by band position (L, P, C, LP, LC, PC, LPC).
std::vector<std::vector<std::string>> all_band_subsets(const std::vector<std::string>& bands);

/// One split (config seed and fraction) shared by every subset; each row is
/// a full fit / predict / score cycle on the test pixels.
std::vector<AblationRow> run_band_ablation(const MultiBandImage& image, const LabelMap& labels,
                                           const std::vector<std::vector<std::string>>& subsets,
                                           const PipelineConfig& config);
std::vector<AblationRow> run_feature_ablation(const MultiBandImage& image, const LabelMap& labels,
                                              const std::vector<FamilySet>& subsets, const PipelineConfig& config);

/// One row per subset: subset, recall per class, oa, macro_precision.
std::string ablation_csv(const std::vector<AblationRow>& rows);

using Rgb = std::array<std::uint8_t, 3>;

/// Index 0 (unlabeled) is black; classes 1..15 use the remaining entries.
const std::array<Rgb, 16>& palette();

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // RGB, row-major

  std::vector<std::uint8_t> ppm() const;
};

RgbImage render_map(const LabelMap& map);
/// Pixels with a 4-neighbor in another segment.
std::vector<bool> boundary_mask(const SuperpixelMap& sp);
/// Pauli composite (R = |hh - vv|, G = 2|hv|, B = |hh + vv|) of `band`.
RgbImage pauli_composite(const MultiBandImage& image, int band);
RgbImage render_boundaries(const SuperpixelMap& sp, const MultiBandImage& image, int band = 0);

void write_ppm(const RgbImage& image, const fs::path& path);

}  // namespace polsar
