#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polsar/io.hpp"

namespace polsar {

/// Per-pixel hidden representation, one column per pixel in row-major order.
struct HiddenField {
  int width = 0;
  int height = 0;
  Eigen::MatrixXd data;  // dims x (width * height)

  HiddenField() = default;
  HiddenField(int w, int h, Eigen::MatrixXd values);

  int dims() const { return static_cast<int>(data.rows()); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  Eigen::Index index(int x, int y) const { return static_cast<Eigen::Index>(y) * width + x; }
  auto at(int x, int y) const { return data.col(index(x, y)); }
  void validate() const;
};

struct SegmentCenter {
  double x = 0;
  double y = 0;
  Eigen::VectorXd c;
  std::size_t count = 0;
};

struct SlicParams {
  int k = 1;
  double m = 10;
  int max_iters = 10;
  double min_segment_frac = 0.25;

  void validate() const;
  /// K = ceil(H W / 256).
  static SlicParams defaults_for(int width, int height);
};

struct SuperpixelMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> labels;  // row-major, 0..K'-1
  std::vector<SegmentCenter> centers;

  std::size_t segment_count() const { return centers.size(); }
  std::uint32_t at(int x, int y) const {
    return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)];
  }
};

/// D = (m / s) * ||p_i - p_j|| + ||h_i - h_j||.
double slic_distance(double xi, double yi, double xj, double yj, const Eigen::Ref<const Eigen::VectorXd>& hi,
                     const Eigen::Ref<const Eigen::VectorXd>& hj, double m, double s);

struct InitialCenters {
  std::vector<SegmentCenter> centers;
  double s = 0;
  int nx = 0;
  int ny = 0;
};

/// Regular grid seeding, each seed moved to the lowest feature gradient in
/// its 3x3 neighborhood when the grid interval is at least 3 pixels.
InitialCenters init_centers(const HiddenField& field, int k);

struct SlicIteration {
  std::vector<std::uint32_t> labels;           // before connectivity cleanup
  std::vector<SegmentCenter> centers;          // means of the final assignment
  std::vector<SegmentCenter> assign_centers;   // centers the final assignment was made against
  double s = 0;
  int iterations = 0;
  bool converged = false;
};

/// Assignment/update loop without connectivity cleanup.
SlicIteration slic_iterate(const HiddenField& field, const SlicParams& params);

/// Components smaller than min_segment_frac * s^2 are merged into the
/// adjacent segment with the nearest feature centroid; every remaining
/// segment is 4-connected and ids are compacted to 0..K'-1.
std::vector<std::uint32_t> enforce_connectivity(const std::vector<std::uint32_t>& labels, const HiddenField& field,
                                                double min_segment_frac, double s);

std::vector<SegmentCenter> segment_centroids(const HiddenField& field, const std::vector<std::uint32_t>& labels);

SuperpixelMap slic_segment(const HiddenField& field, const SlicParams& params);

void save_segments(const SuperpixelMap& map, const fs::path& path);
/// Labels only; centers are left empty.
SuperpixelMap load_segments(const fs::path& path);
std::string centers_csv(const SuperpixelMap& map);

}  // namespace polsar
