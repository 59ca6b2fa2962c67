#include "polsar/superpixels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

namespace polsar {

HiddenField::HiddenField(int w, int h, Eigen::MatrixXd values) : width(w), height(h), data(std::move(values)) {
  validate();
}

void HiddenField::validate() const {
  if (width <= 0 || height <= 0) fail(ErrorCode::EmptyImage, "hidden field has no pixels");
  if (static_cast<std::size_t>(data.cols()) != pixel_count()) {
    fail(ErrorCode::DimensionMismatch, "hidden field has " + std::to_string(data.cols()) + " columns for " +
                                           std::to_string(pixel_count()) + " pixels");
  }
  if (data.rows() == 0) fail(ErrorCode::DimensionMismatch, "hidden field has zero dimensions");
  if (!data.allFinite()) fail(ErrorCode::NonFiniteValue, "hidden field contains non-finite values");
}

void SlicParams::validate() const {
  if (k < 1) fail(ErrorCode::InvalidArgument, "superpixel count K must be >= 1");
  if (!(m > 0)) fail(ErrorCode::InvalidArgument, "compactness m must be > 0");
  if (max_iters < 1) fail(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  if (!(min_segment_frac > 0 && min_segment_frac < 1)) {
    fail(ErrorCode::InvalidArgument, "min_segment_frac must lie in (0,1)");
  }
}

SlicParams SlicParams::defaults_for(int width, int height) {
  SlicParams p;
  const long long n = static_cast<long long>(width) * height;
  p.k = static_cast<int>(std::max(1LL, (n + 255) / 256));
  return p;
}

double slic_distance(double xi, double yi, double xj, double yj, const Eigen::Ref<const Eigen::VectorXd>& hi,
                     const Eigen::Ref<const Eigen::VectorXd>& hj, double m, double s) {
  if (!(s > 0)) fail(ErrorCode::InvalidArgument, "grid interval s must be > 0");
  return (m / s) * std::hypot(xi - xj, yi - yj) + (hi - hj).norm();
}

namespace {

double feature_gradient(const HiddenField& f, int x, int y) {
  auto clampx = [&](int v) { return std::clamp(v, 0, f.width - 1); };
  auto clampy = [&](int v) { return std::clamp(v, 0, f.height - 1); };
  return (f.at(clampx(x + 1), y) - f.at(clampx(x - 1), y)).squaredNorm() +
         (f.at(x, clampy(y + 1)) - f.at(x, clampy(y - 1))).squaredNorm();
}

double center_distance(const HiddenField& f, int x, int y, const SegmentCenter& c, double m, double s) {
  return (m / s) * std::hypot(x - c.x, y - c.y) + (f.at(x, y) - c.c).norm();
}

}  // namespace

InitialCenters init_centers(const HiddenField& field, int k) {
  field.validate();
  const std::size_t n = field.pixel_count();
  if (k < 1) fail(ErrorCode::InvalidArgument, "superpixel count K must be >= 1");
  if (static_cast<std::size_t>(k) > n) {
    fail(ErrorCode::KTooLarge, "K = " + std::to_string(k) + " exceeds the pixel count " + std::to_string(n));
  }
  InitialCenters out;
  out.s = std::sqrt(static_cast<double>(n) / k);
  out.nx = std::clamp(static_cast<int>(std::lround(field.width / out.s)), 1, field.width);
  out.ny = std::clamp(static_cast<int>(std::lround(field.height / out.s)), 1, field.height);
  const double step_x = static_cast<double>(field.width) / out.nx;
  const double step_y = static_cast<double>(field.height) / out.ny;
  const bool perturb = std::min(step_x, step_y) >= 3.0;

  for (int j = 0; j < out.ny; ++j) {
    for (int i = 0; i < out.nx; ++i) {
      int cx = static_cast<int>(std::floor((i + 0.5) * step_x));
      int cy = static_cast<int>(std::floor((j + 0.5) * step_y));
      if (perturb) {
        // the center itself wins ties
        double best = feature_gradient(field, cx, cy);
        int bx = cx, by = cy;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int x = cx + dx, y = cy + dy;
            if (x < 0 || y < 0 || x >= field.width || y >= field.height) continue;
            const double g = feature_gradient(field, x, y);
            if (g < best) {
              best = g;
              bx = x;
              by = y;
            }
          }
        }
        cx = bx;
        cy = by;
      }
      SegmentCenter c;
      c.x = cx;
      c.y = cy;
      c.c = field.at(cx, cy);
      out.centers.push_back(std::move(c));
    }
  }
  return out;
}

std::vector<SegmentCenter> segment_centroids(const HiddenField& field, const std::vector<std::uint32_t>& labels) {
  if (labels.size() != field.pixel_count()) fail(ErrorCode::DimensionMismatch, "label map does not match field");
  const std::uint32_t count = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<SegmentCenter> centers(count);
  for (auto& c : centers) c.c = Eigen::VectorXd::Zero(field.dims());
  for (int y = 0; y < field.height; ++y) {
    for (int x = 0; x < field.width; ++x) {
      auto& c = centers[labels[static_cast<std::size_t>(field.index(x, y))]];
      c.x += x;
      c.y += y;
      c.c += field.at(x, y);
      ++c.count;
    }
  }
  for (auto& c : centers) {
    if (c.count == 0) continue;
    const double n = static_cast<double>(c.count);
    c.x /= n;
    c.y /= n;
    c.c /= n;
  }
  return centers;
}

SlicIteration slic_iterate(const HiddenField& field, const SlicParams& params) {
  params.validate();
  auto init = init_centers(field, params.k);
  SlicIteration out;
  out.s = init.s;
  auto centers = std::move(init.centers);
  const double s = out.s;
  const std::size_t n = field.pixel_count();
  constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();

  std::vector<std::uint32_t> labels(n, kUnassigned);
  std::vector<double> best(n);
  for (int iter = 0; iter < params.max_iters; ++iter) {
    std::vector<std::uint32_t> next(n, kUnassigned);
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    // centers visited in id order with strict improvement: ties keep the lowest id
    for (std::uint32_t id = 0; id < centers.size(); ++id) {
      const auto& c = centers[id];
      if (c.c.size() == 0) continue;
      const int x0 = std::max(0, static_cast<int>(std::ceil(c.x - s)));
      const int x1 = std::min(field.width - 1, static_cast<int>(std::floor(c.x + s)));
      const int y0 = std::max(0, static_cast<int>(std::ceil(c.y - s)));
      const int y1 = std::min(field.height - 1, static_cast<int>(std::floor(c.y + s)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const auto p = static_cast<std::size_t>(field.index(x, y));
          const double d = center_distance(field, x, y, c, params.m, s);
          if (d < best[p]) {
            best[p] = d;
            next[p] = id;
          }
        }
      }
    }
    // pixels outside every window go to the globally nearest center
    for (int y = 0; y < field.height; ++y) {
      for (int x = 0; x < field.width; ++x) {
        const auto p = static_cast<std::size_t>(field.index(x, y));
        if (next[p] != kUnassigned) continue;
        for (std::uint32_t id = 0; id < centers.size(); ++id) {
          if (centers[id].c.size() == 0) continue;
          const double d = center_distance(field, x, y, centers[id], params.m, s);
          if (d < best[p]) {
            best[p] = d;
            next[p] = id;
          }
        }
      }
    }
    out.iterations = iter + 1;
    out.assign_centers = centers;
    const bool unchanged = next == labels;
    labels = std::move(next);

    auto means = segment_centroids(field, labels);
    means.resize(centers.size());
    for (std::size_t id = 0; id < centers.size(); ++id) {
      // an emptied center drops out of later assignments
      if (means[id].count == 0) {
        centers[id].c.resize(0);
        centers[id].count = 0;
      } else {
        centers[id] = means[id];
      }
    }
    if (unchanged) {
      out.converged = true;
      break;
    }
  }
  out.labels = std::move(labels);
  out.centers = std::move(centers);
  return out;
}

std::vector<std::uint32_t> enforce_connectivity(const std::vector<std::uint32_t>& labels, const HiddenField& field,
                                                double min_segment_frac, double s) {
  field.validate();
  if (labels.size() != field.pixel_count()) fail(ErrorCode::DimensionMismatch, "label map does not match field");
  const int w = field.width, h = field.height;
  const std::size_t n = labels.size();
  constexpr int kNone = -1;

  // 4-connected components in scan order
  std::vector<int> comp(n, kNone);
  struct Component {
    std::uint32_t label = 0;
    std::size_t count = 0;
    Eigen::VectorXd sum;
    std::set<int> adjacent;
    bool alive = true;
  };
  std::vector<Component> comps;
  std::vector<std::size_t> queue;
  for (std::size_t start = 0; start < n; ++start) {
    if (comp[start] != kNone) continue;
    const int id = static_cast<int>(comps.size());
    comps.push_back({labels[start], 0, Eigen::VectorXd::Zero(field.dims()), {}, true});
    queue.assign(1, start);
    comp[start] = id;
    for (std::size_t qi = 0; qi < queue.size(); ++qi) {
      const std::size_t p = queue[qi];
      comps[static_cast<std::size_t>(id)].count += 1;
      comps[static_cast<std::size_t>(id)].sum += field.data.col(static_cast<Eigen::Index>(p));
      const int x = static_cast<int>(p % static_cast<std::size_t>(w));
      const int y = static_cast<int>(p / static_cast<std::size_t>(w));
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (nx[k] < 0 || ny[k] < 0 || nx[k] >= w || ny[k] >= h) continue;
        const auto q = static_cast<std::size_t>(ny[k]) * static_cast<std::size_t>(w) + static_cast<std::size_t>(nx[k]);
        if (comp[q] == kNone && labels[q] == labels[p]) {
          comp[q] = id;
          queue.push_back(q);
        }
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    const int x = static_cast<int>(p % static_cast<std::size_t>(w));
    if (x + 1 < w && comp[p + 1] != comp[p]) {
      comps[static_cast<std::size_t>(comp[p])].adjacent.insert(comp[p + 1]);
      comps[static_cast<std::size_t>(comp[p + 1])].adjacent.insert(comp[p]);
    }
    if (p + static_cast<std::size_t>(w) < n && comp[p + static_cast<std::size_t>(w)] != comp[p]) {
      comps[static_cast<std::size_t>(comp[p])].adjacent.insert(comp[p + static_cast<std::size_t>(w)]);
      comps[static_cast<std::size_t>(comp[p + static_cast<std::size_t>(w)])].adjacent.insert(comp[p]);
    }
  }

  // merge undersized components until none is left (or it has no neighbor)
  std::vector<int> parent(comps.size());
  std::iota(parent.begin(), parent.end(), 0);
  const double min_size = min_segment_frac * s * s;
  bool merged = true;
  while (merged) {
    merged = false;
    std::vector<int> order;
    for (std::size_t i = 0; i < comps.size(); ++i)
      if (comps[i].alive) order.push_back(static_cast<int>(i));
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return comps[static_cast<std::size_t>(a)].count < comps[static_cast<std::size_t>(b)].count;
    });
    for (int c : order) {
      auto& small = comps[static_cast<std::size_t>(c)];
      if (!small.alive || static_cast<double>(small.count) >= min_size || small.adjacent.empty()) continue;
      const Eigen::VectorXd mean = small.sum / static_cast<double>(small.count);
      int target = kNone;
      double best = std::numeric_limits<double>::infinity();
      for (int a : small.adjacent) {  // ascending ids: ties keep the lowest
        const auto& other = comps[static_cast<std::size_t>(a)];
        const double d = (other.sum / static_cast<double>(other.count) - mean).norm();
        if (d < best) {
          best = d;
          target = a;
        }
      }
      auto& dst = comps[static_cast<std::size_t>(target)];
      dst.count += small.count;
      dst.sum += small.sum;
      for (int a : small.adjacent) {
        auto& adj = comps[static_cast<std::size_t>(a)].adjacent;
        adj.erase(c);
        if (a != target) {
          adj.insert(target);
          dst.adjacent.insert(a);
        }
      }
      small.alive = false;
      small.adjacent.clear();
      parent[static_cast<std::size_t>(c)] = target;
      merged = true;
    }
  }
  auto root = [&](int c) {
    while (parent[static_cast<std::size_t>(c)] != c) c = parent[static_cast<std::size_t>(c)];
    return c;
  };

  // the largest surviving piece of each label keeps it; other pieces get fresh ids
  const std::uint32_t label_end = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<int> keeper(label_end, kNone);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (!comps[i].alive) continue;
    int& k = keeper[comps[i].label];
    if (k == kNone || comps[i].count > comps[static_cast<std::size_t>(k)].count) k = static_cast<int>(i);
  }
  std::vector<std::uint64_t> provisional(comps.size(), 0);
  std::uint64_t fresh = label_end;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (!comps[i].alive) continue;
    provisional[i] = keeper[comps[i].label] == static_cast<int>(i) ? comps[i].label : fresh++;
  }
  std::vector<std::uint64_t> used;
  for (std::size_t i = 0; i < comps.size(); ++i)
    if (comps[i].alive) used.push_back(provisional[i]);
  std::sort(used.begin(), used.end());

  std::vector<std::uint32_t> out(n);
  for (std::size_t p = 0; p < n; ++p) {
    const auto v = provisional[static_cast<std::size_t>(root(comp[p]))];
    out[p] = static_cast<std::uint32_t>(std::lower_bound(used.begin(), used.end(), v) - used.begin());
  }
  return out;
}

SuperpixelMap slic_segment(const HiddenField& field, const SlicParams& params) {
  const auto it = slic_iterate(field, params);
  SuperpixelMap map;
  map.width = field.width;
  map.height = field.height;
  map.labels = enforce_connectivity(it.labels, field, params.min_segment_frac, it.s);
  map.centers = segment_centroids(field, map.labels);
  return map;
}

void save_segments(const SuperpixelMap& map, const fs::path& path) {
  nlohmann::json header = {{"kind", "segments"},
                           {"width", map.width},
                           {"height", map.height},
                           {"dtype", "u32"},
                           {"segments", map.segment_count()}};
  std::vector<std::uint8_t> payload;
  payload.reserve(map.labels.size() * 4);
  for (auto v : map.labels) append_u32(payload, v);
  write_plsr(path, header, payload);
}

SuperpixelMap load_segments(const fs::path& path) {
  const auto env = read_plsr(path);
  SuperpixelMap map;
  try {
    if (env.header.at("kind").get<std::string>() != "segments") fail(ErrorCode::MalformedHeader, "not a segment map");
    if (env.header.at("dtype").get<std::string>() != "u32") fail(ErrorCode::MalformedHeader, "unsupported dtype");
    map.width = env.header.at("width").get<int>();
    map.height = env.header.at("height").get<int>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedHeader, std::string("segment header: ") + e.what());
  }
  if (map.width <= 0 || map.height <= 0) fail(ErrorCode::MalformedHeader, "width and height must be positive");
  const std::size_t n = static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height);
  if (env.payload.size() != n * 4) fail(ErrorCode::DimensionMismatch, "segment payload size does not match header");
  map.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) map.labels[i] = read_u32(env.payload, i * 4);
  return map;
}

std::string centers_csv(const SuperpixelMap& map) {
  std::ostringstream out;
  out.precision(10);
  const int dims = map.centers.empty() ? 0 : static_cast<int>(map.centers.front().c.size());
  out << "id,x,y,count";
  for (int d = 1; d <= dims; ++d) out << ",c" << d;
  out << "\n";
  for (std::size_t id = 0; id < map.centers.size(); ++id) {
    const auto& c = map.centers[id];
    out << id << "," << c.x << "," << c.y << "," << c.count;
    for (Eigen::Index d = 0; d < c.c.size(); ++d) out << "," << c.c(d);
    out << "\n";
  }
  return out.str();
}

}  // namespace polsar
