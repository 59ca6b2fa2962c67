#include <doctest.h>

#include <random>
#include <set>

#include "fixtures.hpp"
#include "polsar/io.hpp"
#include "polsar/pipeline.hpp"
#include "test_support.hpp"

using namespace polsar;

namespace {

SuperpixelMap single_segment(int w, int h, const HiddenField& f) {
  SuperpixelMap sp;
  sp.width = w;
  sp.height = h;
  sp.labels.assign(static_cast<std::size_t>(w * h), 0);
  sp.centers = segment_centroids(f, sp.labels);
  return sp;
}

double accuracy(const Prediction& p, const LabelMap& truth) {
  std::size_t n = 0, hit = 0;
  for (std::size_t i = 0; i < truth.ids.size(); ++i) {
    if (truth.ids[i] == 0) continue;
    ++n;
    hit += p.classes[i] == truth.ids[i];
  }
  return static_cast<double>(hit) / static_cast<double>(n);
}

}  // namespace

TEST_SUITE("robust features") {
  TEST_CASE("single pixel image") {
    Eigen::MatrixXd d(5, 1);
    d << 0.1, -0.2, 0.3, 0.4, -0.5;
    const HiddenField f(1, 1, d);
    const auto r = build_robust_features(f, single_segment(1, 1, f));
    CHECK(r.col(0).head(5) == d.col(0));
    CHECK(r.col(0).tail(5) == d.col(0));
  }

  TEST_CASE("constant field gives identical vectors") {
    const HiddenField f(6, 4, Eigen::MatrixXd::Constant(5, 24, 0.25));
    SlicParams p;
    p.k = 4;
    const auto r = build_robust_features(f, slic_segment(f, p));
    for (Eigen::Index i = 1; i < r.cols(); ++i) CHECK(r.col(i) == r.col(0));
  }

  TEST_CASE("second half is the brute-force segment mean") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    Eigen::MatrixXd d(5, 30 * 20);
    for (Eigen::Index i = 0; i < d.size(); ++i) d.data()[i] = u(rng);
    const HiddenField f(30, 20, d);
    SlicParams p;
    p.k = 6;
    const auto sp = slic_segment(f, p);
    const auto r = build_robust_features(f, sp);
    for (Eigen::Index i = 0; i < r.cols(); ++i) {
      Eigen::VectorXd sum = Eigen::VectorXd::Zero(5);
      int n = 0;
      for (Eigen::Index j = 0; j < r.cols(); ++j)
        if (sp.labels[static_cast<std::size_t>(j)] == sp.labels[static_cast<std::size_t>(i)]) sum += d.col(j), ++n;
      CHECK(r.col(i).head(5) == d.col(i));
      CHECK((r.col(i).tail(5) - sum / n).cwiseAbs().maxCoeff() < 1e-12);
    }
  }

  TEST_CASE("size mismatch") {
    const HiddenField f(4, 4, Eigen::MatrixXd::Zero(5, 16));
    const HiddenField g(4, 3, Eigen::MatrixXd::Zero(5, 12));
    CHECK_THROWS_AS(build_robust_features(f, single_segment(4, 3, g)), Error);
  }
}

TEST_SUITE("split") {
  TEST_CASE("half of ten pixels") {
    LabelMap l(5, 4, {"a", "b"});
    for (int i = 0; i < 10; ++i) l.ids[static_cast<std::size_t>(i)] = 1;
    for (int i = 10; i < 14; ++i) l.ids[static_cast<std::size_t>(i)] = 2;
    const auto [train, test] = split(l, {0.5, 3});
    CHECK(train.class_counts()[1] == 5);
    CHECK(test.class_counts()[1] == 5);
    CHECK(train.class_counts()[2] == 2);
  }

  TEST_CASE("deterministic, disjoint, covering, every class on both sides") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
      const int c = 2 + static_cast<int>(rng() % 5);
      std::vector<std::string> names;
      for (int k = 0; k < c; ++k) names.push_back("c" + std::to_string(k));
      LabelMap l(12, 9, names);
      for (auto& id : l.ids) id = static_cast<std::uint16_t>(rng() % static_cast<unsigned>(c + 1));
      for (int k = 1; k <= c; ++k) l.ids[static_cast<std::size_t>(2 * k)] = l.ids[static_cast<std::size_t>(2 * k + 1)] =
          static_cast<std::uint16_t>(k);
      std::uniform_real_distribution<double> fr(0.05, 0.95);
      const SplitSpec spec{fr(rng), rng()};
      const auto [train, test] = split(l, spec);
      const auto again = split(l, spec);
      CHECK(again.first == train);
      CHECK(again.second == test);
      for (std::size_t i = 0; i < l.ids.size(); ++i) {
        CHECK((train.ids[i] == 0 || test.ids[i] == 0));
        CHECK(std::max(train.ids[i], test.ids[i]) == l.ids[i]);
      }
      for (int k = 1; k <= c; ++k) {
        CHECK(train.class_counts()[static_cast<std::size_t>(k)] >= 1);
        CHECK(test.class_counts()[static_cast<std::size_t>(k)] >= 1);
      }
    }
  }

  TEST_CASE("class with one pixel") {
    LabelMap l(3, 3, {"a", "b"});
    l.ids = {1, 1, 1, 1, 2, 0, 0, 0, 0};
    try {
      split(l, {0.5, 1});
      FAIL("expected ClassTooSmall");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ClassTooSmall);
    }
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("two-class fixture end to end") {
    const auto sc = fixture::scene(fixture::two_class_model(), 11);
    const auto [train, test] = split(sc.labels, {0.1, 11});
    PipelineConfig cfg;
    cfg.seed = 11;
    const auto r = fit(sc.image, train, cfg);
    CHECK(r.train_accuracy >= 0.99);
    CHECK(r.ae1_history.size() == 200);
    const auto p = predict(r.model, sc.image);
    CHECK(accuracy(p, test) >= 0.99);
    for (Eigen::Index i = 0; i < p.probabilities.cols(); ++i)
      CHECK(std::abs(p.probabilities.col(i).sum() - 1.0) < 1e-9);

    // dimension chain 33 B -> U1 -> 2 U1 -> U2 -> C
    CHECK(r.model.input_dim() == 33);
    CHECK(r.model.encoder1.out_dim() == 5);
    CHECK(r.model.encoder2.in_dim() == 10);
    CHECK(r.model.encoder2.out_dim() == 10);
    CHECK(r.model.classifier.class_count() == 2);
  }

  TEST_CASE("pixels sharing a superpixel differ only in the first half") {
    const auto sc = fixture::scene(fixture::two_class_model(), 2, 32);
    const auto [train, test] = split(sc.labels, {0.2, 2});
    const auto r = fit(sc.image, train, fixture::quick_config());
    const auto& im = r.intermediates;
    for (Eigen::Index i = 0; i < im.robust.cols(); ++i) {
      const auto j = static_cast<Eigen::Index>(
          std::find(im.superpixels.labels.begin(), im.superpixels.labels.end(), im.superpixels.labels[i]) -
          im.superpixels.labels.begin());
      CHECK(im.robust.col(i).tail(5) == im.robust.col(j).tail(5));
    }
  }

  TEST_CASE("determinism") {
    const auto sc = fixture::scene(fixture::band2_model(), 5, 32);
    const auto [train, test] = split(sc.labels, {0.2, 5});
    const auto a = fit(sc.image, train, fixture::quick_config(5));
    const auto b = fit(sc.image, train, fixture::quick_config(5));
    CHECK(encode_model(a.model) == encode_model(b.model));
    CHECK(predict(a.model, sc.image).classes == predict(b.model, sc.image).classes);
  }

  TEST_CASE("band subsets set the input dimension") {
    const auto sc = fixture::scene(fixture::band2_model(), 6, 24);
    const auto [train, test] = split(sc.labels, {0.3, 6});
    auto cfg = fixture::quick_config();
    cfg.ae1_train.epochs = cfg.ae2_train.epochs = cfg.softmax_train.epochs = 1;
    for (const std::vector<std::string>& subset :
         {std::vector<std::string>{"L"}, {"P", "C"}, {"L", "P", "C"}}) {
      const auto r = fit(sc.image.select_bands(subset), train, cfg);
      CHECK(r.model.input_dim() == 33 * static_cast<int>(subset.size()));
    }
    cfg.families = {FeatureFamily::Freeman, FeatureFamily::Cloude};
    CHECK(fit(sc.image, train, cfg).model.input_dim() == 3 * 10);
  }

  TEST_CASE("uniform image predicts one class everywhere") {
    MultiBandImage img(12, 10, {"C"});
    for (auto& s : img.bands[0].pixels) s = {{0.8f, 0.1f}, {0.05f, 0.0f}, {0.3f, -0.2f}};
    LabelMap labels(12, 10, {"a", "b"});
    for (std::size_t i = 0; i < 60; ++i) labels.ids[i] = 1;
    for (std::size_t i = 60; i < 120; ++i) labels.ids[i] = 2;
    const auto r = fit(img, labels, fixture::quick_config());
    const auto p = predict(r.model, img);
    CHECK(std::set<std::uint16_t>(p.classes.begin(), p.classes.end()).size() == 1);
  }

  TEST_CASE("one labeled class") {
    const auto sc = fixture::scene(fixture::two_class_model(), 1, 16);
    LabelMap one = sc.labels;
    for (auto& id : one.ids)
      if (id == 2) id = 0;
    try {
      fit(sc.image, one, fixture::quick_config());
      FAIL("expected TooFewClasses");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TooFewClasses);
    }
  }

  TEST_CASE("permuted bands") {
    const auto sc = fixture::scene(fixture::band2_model(), 7, 16);
    const auto [train, test] = split(sc.labels, {0.3, 7});
    auto cfg = fixture::quick_config();
    cfg.ae1_train.epochs = cfg.ae2_train.epochs = cfg.softmax_train.epochs = 1;
    const auto r = fit(sc.image, train, cfg);
    try {
      predict(r.model, sc.image.select_bands({"P", "L", "C"}));
      FAIL("expected BandMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::BandMismatch);
    }
  }

  TEST_CASE("stage errors carry the stage name") {
    const auto sc = fixture::scene(fixture::two_class_model(), 1, 16);
    auto cfg = fixture::quick_config();
    cfg.ae1_train.step_size = 1e200;
    try {
      fit(sc.image, sc.labels, cfg);
      FAIL("expected DivergenceDetected");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DivergenceDetected);
      CHECK(e.message().rfind("autoencoder 1: ", 0) == 0);
      CHECK(std::string(e.what()).rfind("DivergenceDetected: autoencoder 1: ", 0) == 0);
    }
  }
}

TEST_SUITE("model persistence") {
  TEST_CASE("round trip, equivalence and corruption") {
    const auto dir = test::temp_dir("model");
    const auto sc = fixture::scene(fixture::band2_model(), 8, 24);
    const auto [train, test] = split(sc.labels, {0.3, 8});
    const auto r = fit(sc.image, train, fixture::quick_config(8));
    save_model(r.model, dir / "m.bin");
    const auto back = load_model(dir / "m.bin");
    CHECK(encode_model(back) == encode_model(r.model));
    CHECK(back.encoder1 == r.model.encoder1);
    CHECK(back.classifier == r.model.classifier);
    CHECK(back.normalizer.mean == r.model.normalizer.mean);

    const auto p1 = predict(r.model, sc.image);
    const auto p2 = predict(back, sc.image);
    CHECK(p1.classes == p2.classes);
    CHECK(p1.probabilities == p2.probabilities);

    auto bytes = read_file(dir / "m.bin");
    auto truncated = bytes;
    truncated.resize(truncated.size() - 8);
    try {
      decode_model(truncated);
      FAIL("expected MalformedModel");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedModel);
    }
    auto nan_payload = bytes;
    for (std::size_t i = nan_payload.size() - 8; i < nan_payload.size(); ++i) nan_payload[i] = 0xff;
    CHECK_THROWS_AS(decode_model(nan_payload), Error);

    std::string text(bytes.begin(), bytes.end());
    const auto pos = text.find("\"format_version\":1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 18, "\"format_version\":9");
    try {
      decode_model(std::vector<std::uint8_t>(text.begin(), text.end()));
      FAIL("expected VersionMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::VersionMismatch);
    }
    CHECK_THROWS_AS(decode_model(std::vector<std::uint8_t>{'x', '\n'}), Error);
  }

  TEST_CASE("intermediates dump") {
    const auto dir = test::temp_dir("dump");
    const auto sc = fixture::scene(fixture::two_class_model(), 9, 16);
    auto cfg = fixture::quick_config();
    cfg.ae1_train.epochs = cfg.ae2_train.epochs = cfg.softmax_train.epochs = 1;
    const auto r = fit(sc.image, sc.labels, cfg);
    dump_intermediates(r.intermediates, dir);
    for (const char* f : {"features.plsr", "hidden.plsr", "segments.plsr", "centers.csv", "robust.plsr"})
      CHECK(std::filesystem::exists(dir / f));
    CHECK(load_segments(dir / "segments.plsr").labels == r.intermediates.superpixels.labels);
  }
}

TEST_SUITE("pipeline config") {
  TEST_CASE("JSON round trip and overrides") {
    PipelineConfig c;
    c.slic_k = 12;
    c.families = {FeatureFamily::Huynen};
    c.ae2_weights.rho = 0.3;
    PipelineConfig d;
    d.merge_json(c.to_json());
    CHECK(d.to_json() == c.to_json());
    d.merge_json({{"seed", 42}, {"families", "freeman,cloude"}});
    CHECK(d.seed == 42);
    CHECK(d.families == FamilySet{FeatureFamily::Freeman, FeatureFamily::Cloude});
    CHECK(d.slic_k == 12);
    CHECK_THROWS_AS(d.merge_json({{"bogus", 1}}), Error);
    CHECK_THROWS_AS(d.merge_json({{"seed", "x"}}), Error);
  }

  TEST_CASE("validation") {
    PipelineConfig c;
    c.window = 4;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.train_fraction = 1.0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.slic_m = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    CHECK(PipelineConfig{}.slic_for(64, 64).k == 16);
  }
}
