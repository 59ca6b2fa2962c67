#include "polsar/synth.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "polsar/parallel.hpp"

namespace polsar {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t pixel_stream_seed(std::uint64_t seed, int band, int x, int y) {
  std::uint64_t s = splitmix64(seed);
  s = splitmix64(s ^ static_cast<std::uint64_t>(band));
  s = splitmix64(s ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(y)) << 32 |
                      static_cast<std::uint32_t>(x)));
  return s;
}

/// Square-root factor L with L L^H = sigma, tolerant of singular sigma.
Eigen::Matrix3cd covariance_factor(const Coherency3d& sigma) {
  Eigen::SelfAdjointEigenSolver<Coherency3d> es(sigma);
  const Eigen::Vector3d root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.cast<std::complex<double>>().asDiagonal();
}

Coherency3d coherency_from_json(const nlohmann::json& j) {
  if (j.contains("mechanism")) {
    const auto name = j.at("mechanism").get<std::string>();
    const double power = j.value("power", 1.0);
    const double floor = j.value("floor", 0.02);
    Mechanism m;
    if (name == "surface") m = Mechanism::Surface;
    else if (name == "dihedral") m = Mechanism::Dihedral;
    else if (name == "volume") m = Mechanism::Volume;
    else if (name == "helix") m = Mechanism::Helix;
    else fail(ErrorCode::InvalidArgument, "unknown mechanism '" + name + "'");
    return canonical_coherency(m, power, floor);
  }
  auto cplx = [&](const char* key) {
    if (!j.contains(key)) return std::complex<double>{};
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 2) fail(ErrorCode::InvalidArgument, std::string(key) + " must be [re, im]");
    return std::complex<double>(v[0], v[1]);
  };
  Coherency3d t = Coherency3d::Zero();
  t(0, 0) = j.at("t11").get<double>();
  t(1, 1) = j.at("t22").get<double>();
  t(2, 2) = j.at("t33").get<double>();
  t(0, 1) = cplx("t12");
  t(0, 2) = cplx("t13");
  t(1, 2) = cplx("t23");
  t(1, 0) = std::conj(t(0, 1));
  t(2, 0) = std::conj(t(0, 2));
  t(2, 1) = std::conj(t(1, 2));
  return t;
}

}  // namespace

void SceneModel::validate() const {
  if (bands.empty()) fail(ErrorCode::InvalidArgument, "scene model has no bands");
  if (looks < 1) fail(ErrorCode::InvalidArgument, "looks must be >= 1");
  for (const auto& c : classes) {
    if (c.band_covariance.size() != bands.size()) {
      fail(ErrorCode::MissingClassModel, "class '" + c.name + "' lacks a covariance for every band");
    }
    for (const auto& sigma : c.band_covariance) {
      if (!sigma.allFinite()) fail(ErrorCode::InvalidArgument, "class '" + c.name + "' covariance is not finite");
      if ((sigma - sigma.adjoint()).norm() > 1e-12 * (1.0 + sigma.norm())) {
        fail(ErrorCode::InvalidArgument, "class '" + c.name + "' covariance is not Hermitian");
      }
      const double s = span(sigma);
      if (!(s > 0)) fail(ErrorCode::InvalidArgument, "class '" + c.name + "' covariance has zero span");
      Eigen::SelfAdjointEigenSolver<Coherency3d> es(sigma, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-9 * s) {
        fail(ErrorCode::InvalidArgument, "class '" + c.name + "' covariance is not positive semidefinite");
      }
    }
  }
}

Coherency3d canonical_coherency(Mechanism mechanism, double power, double floor) {
  using C = std::complex<double>;
  Coherency3d t = Coherency3d::Zero();
  switch (mechanism) {
    case Mechanism::Surface:
      // Bragg-like surface: strong k1, weak correlated k2.
      t(0, 0) = 0.9;
      t(1, 1) = 0.1;
      t(0, 1) = t(1, 0) = 0.25;
      break;
    case Mechanism::Dihedral:
      t(0, 0) = 0.1;
      t(1, 1) = 0.9;
      t(0, 1) = t(1, 0) = 0.2;
      break;
    case Mechanism::Volume:
      // Random thin-dipole cloud.
      t(0, 0) = 0.5;
      t(1, 1) = 0.25;
      t(2, 2) = 0.25;
      break;
    case Mechanism::Helix:
      t(1, 1) = 0.5;
      t(2, 2) = 0.5;
      t(1, 2) = C(0, 0.5);
      t(2, 1) = C(0, -0.5);
      break;
  }
  t = t * ((1.0 - floor) * power) + Coherency3d::Identity() * (floor * power / 3.0);
  return t;
}

int window_for_looks(int looks) {
  int w = 1;
  while (w * w < looks) w += 2;
  return w;
}

SyntheticScene synth_scene(const SceneModel& model, const LabelMap& layout, std::uint64_t seed) {
  model.validate();
  layout.validate();
  if (layout.width <= 0 || layout.height <= 0) fail(ErrorCode::EmptyImage, "layout has no pixels");
  for (auto id : layout.ids) {
    if (id == 0 || id > model.classes.size()) {
      fail(ErrorCode::MissingClassModel, "layout class id " + std::to_string(id) + " has no class model");
    }
  }

  std::vector<std::vector<Eigen::Matrix3cd>> factors(model.classes.size());
  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    for (const auto& sigma : model.classes[c].band_covariance) factors[c].push_back(covariance_factor(sigma));
  }

  SyntheticScene scene;
  scene.image = MultiBandImage(layout.width, layout.height, model.bands);
  scene.labels = layout;
  scene.labels.class_names.clear();
  for (const auto& c : model.classes) scene.labels.class_names.push_back(c.name);

  for (int b = 0; b < static_cast<int>(model.bands.size()); ++b) {
    parallel_rows(layout.height, [&](int y) {
      for (int x = 0; x < layout.width; ++x) {
        std::mt19937_64 rng(pixel_stream_seed(seed, b, x, y));
        std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
        Pauli3d z;
        for (int i = 0; i < 3; ++i) {
          const double re = normal(rng);
          const double im = normal(rng);
          z(i) = {re, im};
        }
        const Pauli3d k = factors[layout.at(x, y) - 1][b] * z;
        scene.image.at(b, x, y) = from_pauli(k).cast<float>();
      }
    });
  }
  return scene;
}

LabelMap block_layout(int width, int height, const std::vector<std::string>& class_names) {
  const int c = static_cast<int>(class_names.size());
  if (c < 1) fail(ErrorCode::InvalidArgument, "layout needs at least one class");
  int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(c))));
  int rows = (c + cols - 1) / cols;
  LabelMap labels(width, height, class_names);
  for (int y = 0; y < height; ++y) {
    const int by = std::min(rows - 1, y * rows / height);
    for (int x = 0; x < width; ++x) {
      const int bx = std::min(cols - 1, x * cols / width);
      labels.at(x, y) = static_cast<std::uint16_t>((by * cols + bx) % c + 1);
    }
  }
  return labels;
}

LabelMap stripe_layout(int width, int height, const std::vector<std::string>& class_names) {
  const int c = static_cast<int>(class_names.size());
  if (c < 1) fail(ErrorCode::InvalidArgument, "layout needs at least one class");
  LabelMap labels(width, height, class_names);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) labels.at(x, y) = static_cast<std::uint16_t>(x * c / width + 1);
  }
  return labels;
}

SceneModel scene_model_from_json(const nlohmann::json& config) {
  SceneModel model;
  try {
    model.bands = config.at("bands").get<std::vector<std::string>>();
    model.looks = config.value("looks", 1);
    for (const auto& jc : config.at("classes")) {
      ClassModel c;
      c.name = jc.at("name").get<std::string>();
      const auto& per_band = jc.at("bands");
      for (const auto& band : model.bands) {
        if (!per_band.contains(band)) {
          fail(ErrorCode::MissingClassModel, "class '" + c.name + "' has no model for band '" + band + "'");
        }
        c.band_covariance.push_back(coherency_from_json(per_band.at(band)));
      }
      model.classes.push_back(std::move(c));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("scene config: ") + e.what());
  }
  model.validate();
  return model;
}

}  // namespace polsar
