#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "polsar/image.hpp"

namespace polsar {

/// Per-class ground truth: one Hermitian PSD Pauli-basis covariance per band.
struct ClassModel {
  std::string name;
  std::vector<Coherency3d> band_covariance;
};

struct SceneModel {
  std::vector<std::string> bands;
  std::vector<ClassModel> classes;
  int looks = 1;

  void validate() const;
};

struct SyntheticScene {
  MultiBandImage image;
  LabelMap labels;
};

enum class Mechanism { Surface, Dihedral, Volume, Helix };

/// Canonical coherency for a scattering mechanism with total power `power`.
/// `floor` adds floor*power*I/3 so the result is strictly positive definite.
Coherency3d canonical_coherency(Mechanism mechanism, double power, double floor = 0.02);

/// Draws single-look Pauli vectors k ~ CN(0, Sigma_c) for every pixel of
/// `layout` and stores the matching scattering matrices. Each pixel's
/// random stream depends only on (seed, band, x, y).
SyntheticScene synth_scene(const SceneModel& model, const LabelMap& layout, std::uint64_t seed);

/// Smallest odd boxcar window whose area covers `looks` samples.
int window_for_looks(int looks);

/// Tiles the grid with rectangular blocks, assigning classes 1..C cyclically
/// over a near-square block grid of at least C cells.
LabelMap block_layout(int width, int height, const std::vector<std::string>& class_names);

/// Vertical stripes of equal width, one per class.
LabelMap stripe_layout(int width, int height, const std::vector<std::string>& class_names);

/// Scene config JSON: {"bands":[...], "looks":n, "classes":[{"name":s,
/// "bands":{band: {"mechanism":m,"power":p} | {"t11":..,"t12":[re,im],...}}}]}.
SceneModel scene_model_from_json(const nlohmann::json& config);

}  // namespace polsar
