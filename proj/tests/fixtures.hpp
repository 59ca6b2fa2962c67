#pragma once

#include <string>
#include <vector>

#include "polsar/pipeline.hpp"
#include "polsar/synth.hpp"

namespace polsar::fixture {

inline const std::vector<std::string> kBands{"L", "P", "C"};

inline ClassModel make_class(const std::string& name, std::vector<Coherency3d> per_band) {
  return {name, std::move(per_band)};
}

/// Five classes over three bands. Each band maps one pair of classes to the
/// same mechanism, so no single band separates all five; the three bands
/// together do.
///            L          P          C
///   A     surface    surface    surface
///   B     surface    dihedral   dihedral
///   C     dihedral   volume     volume
///   D     volume     volume     helix
///   E     helix      helix      helix
inline SceneModel five_class_model() {
  using M = Mechanism;
  auto c = [](M m) { return canonical_coherency(m, 1.0); };
  SceneModel s;
  s.bands = kBands;
  s.looks = 9;
  s.classes = {
      make_class("A", {c(M::Surface), c(M::Surface), c(M::Surface)}),
      make_class("B", {c(M::Surface), c(M::Dihedral), c(M::Dihedral)}),
      make_class("C", {c(M::Dihedral), c(M::Volume), c(M::Volume)}),
      make_class("D", {c(M::Volume), c(M::Volume), c(M::Helix)}),
      make_class("E", {c(M::Helix), c(M::Helix), c(M::Helix)}),
  };
  return s;
}

/// Three classes; X differs from Y only in band P, Z is separable everywhere.
inline SceneModel band2_model() {
  using M = Mechanism;
  auto c = [](M m) { return canonical_coherency(m, 1.0); };
  SceneModel s;
  s.bands = kBands;
  s.looks = 9;
  s.classes = {
      make_class("X", {c(M::Volume), c(M::Dihedral), c(M::Volume)}),
      make_class("Y", {c(M::Volume), c(M::Volume), c(M::Volume)}),
      make_class("Z", {c(M::Surface), c(M::Surface), c(M::Surface)}),
  };
  return s;
}

/// Single band, surface versus dihedral.
inline SceneModel two_class_model() {
  SceneModel s;
  s.bands = {"C"};
  s.looks = 9;
  s.classes = {make_class("surface", {canonical_coherency(Mechanism::Surface, 1.0)}),
               make_class("dihedral", {canonical_coherency(Mechanism::Dihedral, 1.0)})};
  return s;
}

/// Single band. "helix" and "dipole" share the diagonal of T and differ
/// only in Im T23, which the Freeman model never sees.
inline SceneModel t23_model() {
  Coherency3d flat = canonical_coherency(Mechanism::Helix, 1.0);
  flat(1, 2) = flat(2, 1) = 0.0;
  SceneModel s;
  s.bands = {"C"};
  s.looks = 9;
  s.classes = {make_class("helix", {canonical_coherency(Mechanism::Helix, 1.0)}), make_class("dipole", {flat})};
  return s;
}

/// Short training budget for tests that only exercise plumbing.
inline PipelineConfig quick_config(std::uint64_t seed = 1) {
  PipelineConfig c;
  c.seed = seed;
  c.ae1_train.epochs = 30;
  c.ae2_train.epochs = 30;
  c.softmax_train.epochs = 60;
  c.softmax_train.step_size = 0.05;
  return c;
}

inline SyntheticScene scene(const SceneModel& model, std::uint64_t seed, int size = 64) {
  std::vector<std::string> names;
  for (const auto& c : model.classes) names.push_back(c.name);
  return synth_scene(model, block_layout(size, size, names), seed);
}

}  // namespace polsar::fixture
