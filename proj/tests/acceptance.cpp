// Acceptance checks; one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <string>

#include "fixtures.hpp"
#include "gradient_check.hpp"
#include "oracles.hpp"
#include "polsar/decompositions.hpp"
#include "polsar/eval.hpp"
#include "polsar/features.hpp"
#include "polsar/io.hpp"
#include "polsar/pipeline.hpp"
#include "polsar/superpixels.hpp"
#include "test_support.hpp"

using namespace polsar;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

nn::Matrix<double> random_batch(std::mt19937_64& rng, int rows, int cols) {
  std::normal_distribution<double> n(0, 0.7);
  nn::Matrix<double> x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  return x;
}

Coherency3d outer(const Pauli3d& k) { return k * k.adjoint(); }

double test_oa(const Prediction& p, const LabelMap& truth) {
  std::size_t n = 0, hit = 0;
  for (std::size_t i = 0; i < truth.ids.size(); ++i) {
    if (truth.ids[i] == 0) continue;
    ++n;
    hit += p.classes[i] == truth.ids[i];
  }
  return static_cast<double>(hit) / static_cast<double>(n);
}

Outcome gradients() {
  Outcome o;
  std::mt19937_64 rng(101);
  double worst = 0;
  int trials = 0;
  for (int t = 0; t < 20; ++t, ++trials) {
    auto ae = nn::make_autoencoder<double>({7, 5, 3}, {1.0, 0.01, 0.3, 0.15}, 200 + t);
    worst = std::max(worst, test::check_autoencoder_gradients(ae, random_batch(rng, 7, 6)).max_relative_error);
  }
  for (int t = 0; t < 20; ++t, ++trials) {
    // J2: single encoder layer, different term weights
    auto ae = nn::make_autoencoder<double>({6, 4}, {1.5, 0.02, 0.4, 0.2}, 300 + t);
    worst = std::max(worst, test::check_autoencoder_gradients(ae, random_batch(rng, 6, 5)).max_relative_error);
  }
  for (int t = 0; t < 20; ++t, ++trials) {
    auto clf = nn::make_softmax<double>(5, 4, 0.01, 400 + t, 0.5);
    std::vector<int> y(9);
    for (int i = 0; i < 9; ++i) y[i] = 1 + (i + t) % 4;
    worst = std::max(worst, test::check_softmax_gradients(clf, random_batch(rng, 5, 9), y).max_relative_error);
  }
  o.require(worst < 1e-4, "max relative error " + fmt("%.3g", worst));
  o.detail = std::to_string(trials) + " trials, max relative error " + fmt("%.3g", worst) +
             (o.pass ? "" : " | " + o.detail);
  return o;
}

Outcome decompositions() {
  Outcome o;
  std::mt19937_64 rng(202);
  double eig = 0, huy = 0;
  int bad_ha = 0, bad_power = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto t = test::random_wishart(rng, 1 + i % 9);
    const auto ed = eigh3(t);
    const auto ref = oracle::cubic_eigenvalues(t);
    for (int j = 0; j < 3; ++j) eig = std::max(eig, std::abs(ed.values(j) - ref[j]) / ref[0]);
  }
  for (int i = 0; i < 1000; ++i) {
    const auto t = test::random_wishart(rng, 1 + i % 9);
    huy = std::max(huy, (coherency_from_huynen(huynen(t)) - t).norm() / t.norm());
    const auto c = cloude(t);
    if (!(c.entropy >= 0 && c.entropy <= 1 && c.anisotropy >= 0 && c.anisotropy <= 1)) ++bad_ha;
    const double s = span(t);
    const auto f = freeman(t);
    const auto y = yamaguchi4(t);
    const bool fok = f.odd >= 0 && f.dbl >= 0 && f.vol >= 0 && f.odd + f.dbl + f.vol <= s * (1 + 1e-9);
    const bool yok =
        y.odd >= 0 && y.dbl >= 0 && y.vol >= 0 && y.hlx >= 0 && y.odd + y.dbl + y.vol + y.hlx <= s * (1 + 1e-9);
    if (!fok || !yok) ++bad_power;
  }
  o.require(eig <= 1e-9, "eigh3 error " + fmt("%.3g", eig));
  o.require(huy <= 1e-12, "huynen round trip " + fmt("%.3g", huy));
  o.require(bad_ha == 0, std::to_string(bad_ha) + " H/A out of range");
  o.require(bad_power == 0, std::to_string(bad_power) + " power violations");
  const std::string summary =
      "eigh3 rel err " + fmt("%.3g", eig) + ", huynen rel err " + fmt("%.3g", huy) + ", 1000+1000 samples";
  o.detail = o.pass ? summary : summary + " | " + o.detail;
  return o;
}

Outcome canonical() {
  Outcome o;
  const Scattering tri{{1, 0}, {0, 0}, {1, 0}};
  const Scattering dih{{1, 0}, {0, 0}, {-1, 0}};
  const auto tt = outer(pauli_vector(tri));
  const auto td = outer(pauli_vector(dih));
  const auto c = cloude(tt);
  o.require(std::abs(c.alpha) <= 1e-9, "trihedral alpha");
  o.require(std::abs(c.entropy) <= 1e-9, "trihedral entropy");
  o.require(std::abs(freeman(tt).odd - span(tt)) <= 1e-9, "trihedral F_odd");
  o.require(std::abs(yamaguchi4(tt).hlx) <= 1e-9, "trihedral P_hlx");
  o.require(std::abs(freeman(td).dbl - span(td)) <= 1e-9, "dihedral F_dbl");
  const Pauli3d k = pauli_vector(dih);
  o.require((k - Pauli3d(0, std::sqrt(2.0), 0)).norm() <= 1e-9, "dihedral Pauli vector");
  if (o.pass) o.detail = "trihedral and dihedral targets exact to 1e-9";
  return o;
}

Outcome slic() {
  Outcome o;
  const int n = 128;
  const HiddenField flat(n, n, Eigen::MatrixXd::Constant(4, n * n, 0.3));
  const auto params = SlicParams::defaults_for(n, n);
  const auto map = slic_segment(flat, params);
  const double s = std::sqrt(static_cast<double>(n * n) / params.k);
  for (const auto& c : map.centers) {
    if (c.count < s * s / 2 || c.count > 2 * s * s) {
      o.require(false, "segment of " + std::to_string(c.count) + " px vs s^2 " + fmt("%.0f", s * s));
      break;
    }
  }
  // 4-connectivity: each label is reached by one flood fill
  std::vector<int> pieces(map.segment_count(), 0);
  std::vector<bool> seen(map.labels.size(), false);
  for (int start = 0; start < n * n; ++start) {
    if (seen[start]) continue;
    ++pieces[map.labels[start]];
    std::vector<int> stack{start};
    seen[start] = true;
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int x = p % n, y = p / n;
      const int nb[4][2] = {{x - 1, y}, {x + 1, y}, {x, y - 1}, {x, y + 1}};
      for (const auto& q : nb) {
        if (q[0] < 0 || q[1] < 0 || q[0] >= n || q[1] >= n) continue;
        const int j = q[1] * n + q[0];
        if (!seen[j] && map.labels[j] == map.labels[p]) {
          seen[j] = true;
          stack.push_back(j);
        }
      }
    }
  }
  for (int count : pieces) {
    if (count != 1) {
      o.require(false, "disconnected segment");
      break;
    }
  }

  const int w = 48, h = 48, split = 21;
  Eigen::MatrixXd d(5, w * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) d.col(y * w + x).setConstant(x < split ? -0.5 : 0.5);
  const HiddenField plateau(w, h, d);
  SlicParams p;
  p.k = 36;
  p.m = 0.01;
  const auto tight = slic_segment(plateau, p);
  int straddle = 0;
  for (std::size_t j = 0; j < tight.segment_count(); ++j) {
    bool left = false, right = false;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (tight.at(x, y) == j) (x < split ? left : right) = true;
    straddle += left && right;
  }
  o.require(straddle == 0, std::to_string(straddle) + " segments straddle the plateau edge");

  std::mt19937_64 rng(7);
  std::normal_distribution<double> noise(0, 1);
  Eigen::MatrixXd r(6, 80 * 60);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = noise(rng);
  const HiddenField rough(80, 60, r);
  const auto a = slic_segment(rough, SlicParams::defaults_for(80, 60));
  const auto b = slic_segment(rough, SlicParams::defaults_for(80, 60));
  bool same = a.labels == b.labels && a.centers.size() == b.centers.size();
  for (std::size_t j = 0; same && j < a.centers.size(); ++j) {
    same = a.centers[j].x == b.centers[j].x && a.centers[j].y == b.centers[j].y && a.centers[j].c == b.centers[j].c;
  }
  o.require(same, "repeated runs differ");
  if (o.pass) {
    o.detail = std::to_string(map.segment_count()) + " segments on 128x128 (k=" + std::to_string(params.k) +
               "), no straddling, bit-exact repeats";
  }
  return o;
}

Outcome end_to_end() {
  Outcome o;
  const PipelineConfig defaults;
  const auto five = fixture::scene(fixture::five_class_model(), 1);
  auto [tr5, te5] = split(five.labels, {0.1, 1});
  const double oa5 = test_oa(predict(fit(five.image, tr5, defaults).model, five.image), te5);
  const auto two = fixture::scene(fixture::two_class_model(), 1);
  auto [tr2, te2] = split(two.labels, {0.1, 1});
  const double oa2 = test_oa(predict(fit(two.image, tr2, defaults).model, two.image), te2);
  o.require(oa5 >= 0.95, "5-class OA below 0.95");
  o.require(oa2 >= 0.99, "2-class OA below 0.99");
  o.detail = "5-class test OA " + fmt("%.4f", oa5) + ", 2-class test OA " + fmt("%.4f", oa2) +
             (o.pass ? "" : " | " + o.detail);
  return o;
}

Outcome band_ablation() {
  Outcome o;
  const auto sc = fixture::scene(fixture::band2_model(), 1);
  PipelineConfig config;
  const auto rows = run_band_ablation(sc.image, sc.labels, all_band_subsets(fixture::kBands), config);
  std::map<std::string, double> oa;
  for (const auto& r : rows) oa[r.subset] = r.score.overall_accuracy;

  // {P} has no band-free counterpart; compare it to always guessing the
  // largest test class.
  const auto& cm = rows.front().score.confusion;
  double largest = 0;
  for (int i = 0; i < static_cast<int>(cm.class_names.size()); ++i) {
    double row = 0;
    for (int j = 0; j < static_cast<int>(cm.class_names.size()); ++j) row += static_cast<double>(cm.at(i, j));
    largest = std::max(largest, row);
  }
  const double prior = largest / static_cast<double>(cm.total());

  const std::vector<std::pair<std::string, std::string>> pairs{{"LP", "L"}, {"PC", "C"}, {"LPC", "LC"}};
  std::string summary = "P " + fmt("%.4f", oa["P"]) + " > prior " + fmt("%.4f", prior);
  o.require(oa["P"] > prior, "P does not beat the class prior");
  for (const auto& [with, without] : pairs) {
    summary += ", " + with + " " + fmt("%.4f", oa[with]) + " > " + without + " " + fmt("%.4f", oa[without]);
    o.require(oa[with] > oa[without], with + " not above " + without);
  }
  o.detail = o.pass ? summary : summary + " | " + o.detail;
  return o;
}

Outcome multiband() {
  Outcome o;
  std::string summary;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto sc = fixture::scene(fixture::five_class_model(), seed);
    PipelineConfig config;
    config.seed = seed;
    const auto rows = run_band_ablation(sc.image, sc.labels, {{"L"}, {"P"}, {"C"}, {"L", "P", "C"}}, config);
    double best_single = 0;
    for (int i = 0; i < 3; ++i) best_single = std::max(best_single, rows[i].score.overall_accuracy);
    const double all = rows[3].score.overall_accuracy;
    summary += (summary.empty() ? "" : ", ") + std::string("seed ") + std::to_string(seed) + ": LPC " +
               fmt("%.4f", all) + " vs best single " + fmt("%.4f", best_single);
    o.require(all >= best_single, "seed " + std::to_string(seed));
  }
  o.detail = o.pass ? summary : summary + " | failed " + o.detail;
  return o;
}

double mean_activation(const Eigen::MatrixXd& x, double reconstruction, double gamma, const nn::TrainConfig& cfg) {
  const nn::SparseAeWeights<double> w{reconstruction, 1e-4, gamma, 0.15};
  auto ae = nn::make_autoencoder<double>({static_cast<int>(x.rows()), 32, 5}, w, cfg.seed);
  nn::train(ae, x, cfg);
  return nn::mean_remapped_activation<double>(nn::encode(ae, x)).mean();
}

Outcome sparsity() {
  Outcome o;
  const auto sc = fixture::scene(fixture::five_class_model(), 1);
  auto [tr, te] = split(sc.labels, {0.1, 1});
  const auto raw = extract_features(sc.image, 3);
  const auto cube = normalize(raw, fit_normalizer(raw, tr));
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < tr.ids.size(); ++i)
    if (tr.ids[i] != 0) idx.push_back(static_cast<Eigen::Index>(i));
  const Eigen::MatrixXd x = nn::detail::gather<double>(cube.data, idx);

  // Reconstruction weighted by 1/d so the KL term is not swamped by the
  // 99-dimensional squared error.
  nn::TrainConfig cfg;
  cfg.step_size = 0.05;
  cfg.epochs = 200;
  const double recon = 1.0 / static_cast<double>(x.rows());
  const double sparse = mean_activation(x, recon, 0.1, cfg);
  const double control = mean_activation(x, recon, 0.0, cfg);
  const double rho = 0.15;
  o.require(sparse >= 0.05 && sparse <= 0.35, "mean activation outside [0.05, 0.35]");
  o.require(std::abs(control - rho) > std::abs(sparse - rho), "control not farther from rho");
  const double stock = mean_activation(x, 1.0, 0.1, nn::TrainConfig{});
  o.detail = "reconstruction weight 1/" + std::to_string(x.rows()) + ": gamma=0.1 mean " + fmt("%.4f", sparse) +
             ", gamma=0 control " + fmt("%.4f", control) + " (info: default weights give " + fmt("%.4f", stock) + ")" +
             (o.pass ? "" : " | " + o.detail);
  return o;
}

Outcome persistence() {
  Outcome o;
  const auto dir = test::temp_dir("acceptance");
  const auto sc = fixture::scene(fixture::five_class_model(), 4, 32);
  save_image(sc.image, dir / "a.plsr");
  save_image(load_image(dir / "a.plsr"), dir / "b.plsr");
  o.require(read_file(dir / "a.plsr") == read_file(dir / "b.plsr"), "image bytes differ");
  o.require(load_image(dir / "a.plsr").bands == sc.image.bands, "image values differ");

  auto [tr, te] = split(sc.labels, {0.2, 4});
  const auto model = fit(sc.image, tr, fixture::quick_config(4)).model;
  save_model(model, dir / "m.bin");
  const auto loaded = load_model(dir / "m.bin");
  save_model(loaded, dir / "m2.bin");
  o.require(read_file(dir / "m.bin") == read_file(dir / "m2.bin"), "model bytes differ");
  const auto p1 = predict(model, sc.image);
  const auto p2 = predict(loaded, sc.image);
  o.require(p1.classes == p2.classes, "predicted classes differ");
  o.require(p1.probabilities.cwiseEqual(p2.probabilities).all(), "probabilities differ");
  if (o.pass) o.detail = "image and model byte-exact, predictions bit-identical";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
      {1, gradients}, {2, decompositions}, {3, canonical},   {4, slic},       {5, end_to_end},
      {6, band_ablation}, {7, multiband}, {8, sparsity}, {9, persistence}};
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s criterion %d: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
