#include "polsar/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "polsar/neural_io.hpp"

namespace polsar {

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    fail(e.code(), std::string(name) + ": " + e.message());
  }
}

nlohmann::json families_json(const FamilySet& families) {
  nlohmann::json out = nlohmann::json::array();
  for (auto f : families) out.push_back(family_name(f));
  return out;
}

FamilySet families_from_json(const nlohmann::json& j) {
  FamilySet out;
  if (j.is_string()) {
    // comma-separated list, as typed on the command line
    std::string s = j.get<std::string>();
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto comma = s.find(',', start);
      const auto item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      if (!item.empty()) out.push_back(family_from_name(item));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
  } else {
    for (const auto& n : j) out.push_back(family_from_name(n.get<std::string>()));
  }
  return out;
}

std::vector<Eigen::Index> labeled_pixels(const LabelMap& labels) {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < labels.ids.size(); ++i)
    if (labels.ids[i] != 0) idx.push_back(static_cast<Eigen::Index>(i));
  return idx;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& data, const std::vector<Eigen::Index>& idx) {
  return nn::detail::gather<double>(data, idx);
}

void check_finite_stage(const Eigen::MatrixXd& m, const char* what) {
  if (!m.allFinite()) fail(ErrorCode::DivergenceDetected, std::string(what) + " produced non-finite values");
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void PipelineConfig::validate() const {
  if (window < 1 || window % 2 == 0) fail(ErrorCode::InvalidArgument, "window must be a positive odd integer");
  if (families.empty()) fail(ErrorCode::InvalidArgument, "at least one feature family is required");
  for (int h : ae1_hidden)
    if (h < 1) fail(ErrorCode::InvalidArgument, "hidden layer sizes must be >= 1");
  if (u1 < 1 || u2 < 1) fail(ErrorCode::InvalidArgument, "code sizes must be >= 1");
  for (const auto* w : {&ae1_weights, &ae2_weights}) {
    if (!(w->rho > 0 && w->rho < 1)) fail(ErrorCode::InvalidArgument, "rho must lie in (0,1)");
    if (w->reconstruction < 0 || w->l2 < 0 || w->sparsity < 0) {
      fail(ErrorCode::InvalidArgument, "loss coefficients must be >= 0");
    }
  }
  ae1_train.validate();
  ae2_train.validate();
  softmax_train.validate();
  if (softmax_l2 < 0) fail(ErrorCode::InvalidArgument, "softmax l2 must be >= 0");
  if (slic_k < 0) fail(ErrorCode::InvalidArgument, "slic-k must be >= 0 (0 = automatic)");
  SlicParams p{std::max(1, slic_k), slic_m, slic_iters, slic_min_frac};
  p.validate();
  if (!(train_fraction > 0 && train_fraction < 1)) fail(ErrorCode::InvalidArgument, "train fraction must lie in (0,1)");
}

SlicParams PipelineConfig::slic_for(int width, int height) const {
  SlicParams p = SlicParams::defaults_for(width, height);
  if (slic_k > 0) p.k = slic_k;
  p.m = slic_m;
  p.max_iters = slic_iters;
  p.min_segment_frac = slic_min_frac;
  return p;
}

nlohmann::json PipelineConfig::to_json() const {
  return {
      {"window", window},
      {"families", families_json(families)},
      {"ae1-hidden", ae1_hidden},
      {"u1", u1},
      {"u2", u2},
      {"ae1-reconstruction", ae1_weights.reconstruction},
      {"ae1-l2", ae1_weights.l2},
      {"ae1-sparsity", ae1_weights.sparsity},
      {"ae1-rho", ae1_weights.rho},
      {"ae2-reconstruction", ae2_weights.reconstruction},
      {"ae2-l2", ae2_weights.l2},
      {"ae2-sparsity", ae2_weights.sparsity},
      {"ae2-rho", ae2_weights.rho},
      {"ae1-step", ae1_train.step_size},
      {"ae1-batch", ae1_train.batch_size},
      {"ae1-epochs", ae1_train.epochs},
      {"ae2-step", ae2_train.step_size},
      {"ae2-batch", ae2_train.batch_size},
      {"ae2-epochs", ae2_train.epochs},
      {"softmax-step", softmax_train.step_size},
      {"softmax-batch", softmax_train.batch_size},
      {"softmax-epochs", softmax_train.epochs},
      {"softmax-l2", softmax_l2},
      {"init-scale", ae1_train.init_scale},
      {"slic-k", slic_k},
      {"slic-m", slic_m},
      {"slic-iters", slic_iters},
      {"slic-min-frac", slic_min_frac},
      {"train-fraction", train_fraction},
      {"seed", seed},
  };
}

void PipelineConfig::merge_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, "config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "window") window = v.get<int>();
      else if (key == "families") families = families_from_json(v);
      else if (key == "ae1-hidden") ae1_hidden = v.get<std::vector<int>>();
      else if (key == "u1") u1 = v.get<int>();
      else if (key == "u2") u2 = v.get<int>();
      else if (key == "ae1-reconstruction") ae1_weights.reconstruction = v.get<double>();
      else if (key == "ae1-l2") ae1_weights.l2 = v.get<double>();
      else if (key == "ae1-sparsity") ae1_weights.sparsity = v.get<double>();
      else if (key == "ae1-rho") ae1_weights.rho = v.get<double>();
      else if (key == "ae2-reconstruction") ae2_weights.reconstruction = v.get<double>();
      else if (key == "ae2-l2") ae2_weights.l2 = v.get<double>();
      else if (key == "ae2-sparsity") ae2_weights.sparsity = v.get<double>();
      else if (key == "ae2-rho") ae2_weights.rho = v.get<double>();
      else if (key == "ae1-step") ae1_train.step_size = v.get<double>();
      else if (key == "ae1-batch") ae1_train.batch_size = v.get<int>();
      else if (key == "ae1-epochs") ae1_train.epochs = v.get<int>();
      else if (key == "ae2-step") ae2_train.step_size = v.get<double>();
      else if (key == "ae2-batch") ae2_train.batch_size = v.get<int>();
      else if (key == "ae2-epochs") ae2_train.epochs = v.get<int>();
      else if (key == "softmax-step") softmax_train.step_size = v.get<double>();
      else if (key == "softmax-batch") softmax_train.batch_size = v.get<int>();
      else if (key == "softmax-epochs") softmax_train.epochs = v.get<int>();
      else if (key == "softmax-l2") softmax_l2 = v.get<double>();
      else if (key == "init-scale") ae1_train.init_scale = ae2_train.init_scale = softmax_train.init_scale = v.get<double>();
      else if (key == "slic-k") slic_k = v.get<int>();
      else if (key == "slic-m") slic_m = v.get<double>();
      else if (key == "slic-iters") slic_iters = v.get<int>();
      else if (key == "slic-min-frac") slic_min_frac = v.get<double>();
      else if (key == "train-fraction") train_fraction = v.get<double>();
      else if (key == "seed") seed = v.get<std::uint64_t>();
      else fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("config value has the wrong type: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Model

SlicParams PipelineModel::slic_for(int width, int height) const {
  SlicParams p = SlicParams::defaults_for(width, height);
  if (slic_k > 0) p.k = slic_k;
  p.m = slic_m;
  p.max_iters = slic_iters;
  p.min_segment_frac = slic_min_frac;
  return p;
}

void PipelineModel::validate() const {
  if (version != kModelFormatVersion) fail(ErrorCode::VersionMismatch, "unsupported model version");
  if (bands.empty()) fail(ErrorCode::MalformedModel, "model has no bands");
  if (families.empty()) fail(ErrorCode::MalformedModel, "model has no feature families");
  const int in = static_cast<int>(bands.size()) * features_per_band(families);
  if (encoder1.layers.empty() || encoder2.layers.empty()) fail(ErrorCode::MalformedModel, "missing encoder");
  if (normalizer.mean.size() != in || normalizer.std.size() != in) {
    fail(ErrorCode::MalformedModel, "normalizer dimension does not match the feature count");
  }
  auto chained = [](const nn::FeedForward<double>& net) {
    for (std::size_t i = 1; i < net.layers.size(); ++i)
      if (net.layers[i].in_dim() != net.layers[i - 1].out_dim()) return false;
    return true;
  };
  if (!chained(encoder1) || !chained(encoder2) || encoder1.in_dim() != in ||
      encoder2.in_dim() != 2 * encoder1.out_dim() || classifier.layer.in_dim() != encoder2.out_dim() ||
      classifier.class_count() != static_cast<int>(class_names.size())) {
    fail(ErrorCode::MalformedModel, "stage dimensions do not chain");
  }
}

Eigen::MatrixXd build_robust_features(const HiddenField& hidden, const SuperpixelMap& sp) {
  if (sp.width != hidden.width || sp.height != hidden.height || sp.labels.size() != hidden.pixel_count()) {
    fail(ErrorCode::DimensionMismatch, "superpixel map and hidden field sizes differ");
  }
  const Eigen::Index u = hidden.dims();
  Eigen::MatrixXd out(2 * u, hidden.data.cols());
  out.topRows(u) = hidden.data;
  for (Eigen::Index i = 0; i < out.cols(); ++i) {
    const auto label = sp.labels[static_cast<std::size_t>(i)];
    if (label >= sp.centers.size() || sp.centers[label].c.size() != u) {
      fail(ErrorCode::DimensionMismatch, "superpixel map has no centroid for segment " + std::to_string(label));
    }
    out.col(i).tail(u) = sp.centers[label].c;
  }
  return out;
}

namespace {

/// Stages shared by fit and predict once the first encoder is known.
void forward_after_encoder1(const nn::FeedForward<double>& encoder1, const SlicParams& slic, Intermediates& im) {
  const Eigen::MatrixXd h = stage("encoder1", [&] { return encoder1(im.features.data); });
  check_finite_stage(h, "encoder1");
  im.hidden = HiddenField(im.features.width, im.features.height, h);
  im.superpixels = stage("superpixels", [&] { return slic_segment(im.hidden, slic); });
  im.robust = stage("robust features", [&] { return build_robust_features(im.hidden, im.superpixels); });
}

}  // namespace

FitResult fit(const MultiBandImage& image, const LabelMap& train_labels, const PipelineConfig& config) {
  config.validate();
  image.validate();
  train_labels.validate();
  if (train_labels.width != image.width || train_labels.height != image.height) {
    fail(ErrorCode::DimensionMismatch, "label map and image sizes differ");
  }
  const auto counts = train_labels.class_counts();
  if (std::count_if(counts.begin() + 1, counts.end(), [](std::size_t c) { return c > 0; }) < 2) {
    fail(ErrorCode::TooFewClasses, "training labels must contain at least two classes");
  }
  const auto train_idx = labeled_pixels(train_labels);
  std::vector<int> y;
  for (auto i : train_idx) y.push_back(train_labels.ids[static_cast<std::size_t>(i)]);

  FitResult r;
  auto& m = r.model;
  m.bands = image.band_names();
  m.class_names = train_labels.class_names;
  m.window = config.window;
  m.families = config.families;
  m.slic_k = config.slic_k;
  m.slic_m = config.slic_m;
  m.slic_iters = config.slic_iters;
  m.slic_min_frac = config.slic_min_frac;
  m.config = config.to_json();

  auto& im = r.intermediates;
  const auto raw = stage("features", [&] { return extract_features(image, config.window, config.families); });
  m.normalizer = stage("normalizer", [&] { return fit_normalizer(raw, train_labels); });
  im.features = normalize(raw, m.normalizer);

  // stage seeds derived from the run seed
  std::vector<int> sizes{static_cast<int>(im.features.data.rows())};
  sizes.insert(sizes.end(), config.ae1_hidden.begin(), config.ae1_hidden.end());
  sizes.push_back(config.u1);
  auto ae1 = nn::make_autoencoder<double>(sizes, config.ae1_weights, config.seed, config.ae1_train.init_scale);
  auto cfg1 = config.ae1_train;
  cfg1.seed = config.seed;
  r.ae1_history = stage("autoencoder 1", [&] { return nn::train(ae1, gather(im.features.data, train_idx), cfg1).history; });
  m.encoder1 = ae1.encoder;

  forward_after_encoder1(m.encoder1, config.slic_for(image.width, image.height), im);

  auto ae2 = nn::make_autoencoder<double>({2 * config.u1, config.u2}, config.ae2_weights, config.seed + 1,
                                          config.ae2_train.init_scale);
  auto cfg2 = config.ae2_train;
  cfg2.seed = config.seed + 1;
  r.ae2_history = stage("autoencoder 2", [&] { return nn::train(ae2, gather(im.robust, train_idx), cfg2).history; });
  m.encoder2 = ae2.encoder;
  im.code2 = m.encoder2(im.robust);
  check_finite_stage(im.code2, "encoder2");

  m.classifier = nn::make_softmax<double>(config.u2, train_labels.class_count(), config.softmax_l2, config.seed + 2,
                                          config.softmax_train.init_scale);
  auto cfg3 = config.softmax_train;
  cfg3.seed = config.seed + 2;
  const Eigen::MatrixXd code_train = gather(im.code2, train_idx);
  r.softmax_history = stage("softmax", [&] { return nn::softmax_train(m.classifier, code_train, y, cfg3).history; });

  const auto pred = nn::argmax_classes(nn::softmax_predict(m.classifier, code_train));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i];
  r.train_accuracy = static_cast<double>(correct) / static_cast<double>(y.size());
  m.validate();
  return r;
}

Prediction predict(const PipelineModel& model, const MultiBandImage& image) {
  model.validate();
  image.validate();
  if (image.band_names() != model.bands) {
    std::string want, got;
    for (const auto& b : model.bands) want += (want.empty() ? "" : ",") + b;
    for (const auto& b : image.band_names()) got += (got.empty() ? "" : ",") + b;
    fail(ErrorCode::BandMismatch, "model expects bands [" + want + "], image has [" + got + "]");
  }
  Prediction p;
  p.width = image.width;
  p.height = image.height;
  auto& im = p.intermediates;
  const auto raw = stage("features", [&] { return extract_features(image, model.window, model.families); });
  im.features = normalize(raw, model.normalizer);
  forward_after_encoder1(model.encoder1, model.slic_for(image.width, image.height), im);
  im.code2 = model.encoder2(im.robust);
  p.probabilities = nn::softmax_predict(model.classifier, im.code2);
  const auto cls = nn::argmax_classes(p.probabilities);
  p.classes.assign(cls.begin(), cls.end());
  return p;
}

LabelMap Prediction::as_label_map(const std::vector<std::string>& class_names) const {
  LabelMap out(width, height, class_names);
  out.ids = classes;
  return out;
}

std::pair<LabelMap, LabelMap> split(const LabelMap& labels, const SplitSpec& spec) {
  labels.validate();
  if (!(spec.train_fraction > 0 && spec.train_fraction < 1)) {
    fail(ErrorCode::InvalidArgument, "train fraction must lie in (0,1)");
  }
  LabelMap train(labels.width, labels.height, labels.class_names);
  LabelMap test = train;
  std::vector<std::vector<std::size_t>> members(labels.class_names.size() + 1);
  for (std::size_t i = 0; i < labels.ids.size(); ++i)
    if (labels.ids[i] != 0) members[labels.ids[i]].push_back(i);

  std::mt19937_64 rng(spec.seed);
  for (std::size_t c = 1; c < members.size(); ++c) {
    auto& px = members[c];
    if (px.empty()) continue;
    if (px.size() < 2) {
      fail(ErrorCode::ClassTooSmall, "class '" + labels.class_names[c - 1] + "' has a single labeled pixel");
    }
    std::shuffle(px.begin(), px.end(), rng);
    const auto n = static_cast<double>(px.size());
    const auto n_train = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(spec.train_fraction * n)), 1,
                                                 px.size() - 1);
    for (std::size_t k = 0; k < px.size(); ++k) (k < n_train ? train : test).ids[px[k]] = static_cast<std::uint16_t>(c);
  }
  return {train, test};
}

// ---------------------------------------------------------------------------
// Persistence

std::vector<std::uint8_t> encode_model(const PipelineModel& model) {
  model.validate();
  std::vector<std::uint8_t> payload;
  for (Eigen::Index i = 0; i < model.normalizer.mean.size(); ++i) append_f64(payload, model.normalizer.mean(i));
  for (Eigen::Index i = 0; i < model.normalizer.std.size(); ++i) append_f64(payload, model.normalizer.std(i));
  nn::append_parameters(payload, model.encoder1);
  nn::append_parameters(payload, model.encoder2);
  nn::FeedForward<double> head{{model.classifier.layer}};
  nn::append_parameters(payload, head);

  const nlohmann::json manifest = {
      {"format_version", model.version},
      {"stages", {"features", "normalizer", "encoder1", "superpixels", "robust", "encoder2", "softmax"}},
      {"bands", model.bands},
      {"class_names", model.class_names},
      {"window", model.window},
      {"families", families_json(model.families)},
      {"dims",
       {{"input", model.input_dim()},
        {"u1", model.encoder1.out_dim()},
        {"robust", model.encoder2.in_dim()},
        {"u2", model.encoder2.out_dim()},
        {"classes", model.classifier.class_count()}}},
      {"encoder1", nn::describe(model.encoder1)},
      {"encoder2", nn::describe(model.encoder2)},
      {"classifier", nn::describe(head)},
      {"softmax_l2", model.classifier.l2},
      {"slic", {{"k", model.slic_k}, {"m", model.slic_m}, {"iters", model.slic_iters}, {"min_frac", model.slic_min_frac}}},
      {"config", model.config},
      {"dtype", "f64"},
      {"payload_bytes", payload.size()},
  };
  return encode_envelope(kModelMagic, manifest, payload);
}

PipelineModel decode_model(std::span<const std::uint8_t> bytes) {
  const auto env = parse_envelope(bytes, kModelMagic, ErrorCode::MalformedModel);
  const auto& h = env.header;
  PipelineModel m;
  try {
    m.version = h.at("format_version").get<int>();
    if (m.version != kModelFormatVersion) {
      fail(ErrorCode::VersionMismatch, "model format version " + std::to_string(m.version) + ", expected " +
                                           std::to_string(kModelFormatVersion));
    }
    if (h.at("payload_bytes").get<std::size_t>() != env.payload.size()) {
      fail(ErrorCode::MalformedModel, "payload size does not match the manifest");
    }
    m.bands = h.at("bands").get<std::vector<std::string>>();
    m.class_names = h.at("class_names").get<std::vector<std::string>>();
    m.window = h.at("window").get<int>();
    m.families = families_from_json(h.at("families"));
    const auto& slic = h.at("slic");
    m.slic_k = slic.at("k").get<int>();
    m.slic_m = slic.at("m").get<double>();
    m.slic_iters = slic.at("iters").get<int>();
    m.slic_min_frac = slic.at("min_frac").get<double>();
    m.config = h.at("config");

    const auto in = static_cast<std::size_t>(h.at("dims").at("input").get<int>());
    std::size_t offset = 0;
    if (in * 2 * sizeof(double) > env.payload.size()) fail(ErrorCode::MalformedModel, "payload is truncated");
    m.normalizer.mean.resize(static_cast<Eigen::Index>(in));
    m.normalizer.std.resize(static_cast<Eigen::Index>(in));
    for (std::size_t i = 0; i < in; ++i, offset += 8) m.normalizer.mean(static_cast<Eigen::Index>(i)) = read_f64(env.payload, offset);
    for (std::size_t i = 0; i < in; ++i, offset += 8) m.normalizer.std(static_cast<Eigen::Index>(i)) = read_f64(env.payload, offset);
    if (!m.normalizer.mean.allFinite() || !m.normalizer.std.allFinite()) {
      fail(ErrorCode::MalformedModel, "non-finite normalizer statistics");
    }
    m.encoder1 = nn::read_parameters(h.at("encoder1"), env.payload, offset);
    m.encoder2 = nn::read_parameters(h.at("encoder2"), env.payload, offset);
    const auto head = nn::read_parameters(h.at("classifier"), env.payload, offset);
    if (head.layers.size() != 1) fail(ErrorCode::MalformedModel, "classifier must be a single layer");
    m.classifier.layer = head.layers[0];
    m.classifier.l2 = h.at("softmax_l2").get<double>();
    if (offset != env.payload.size()) fail(ErrorCode::MalformedModel, "trailing bytes in model payload");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::MalformedModel, std::string("model manifest: ") + e.what());
  }
  try {
    m.validate();
  } catch (const Error& e) {
    fail(e.code() == ErrorCode::VersionMismatch ? e.code() : ErrorCode::MalformedModel, e.message());
  }
  return m;
}

void save_model(const PipelineModel& model, const fs::path& path) { write_file(path, encode_model(model)); }

PipelineModel load_model(const fs::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_model(bytes);
  } catch (const Error& e) {
    fail(e.code(), "'" + path.string() + "': " + e.message());
  }
}

namespace {

void save_matrix(const fs::path& path, const std::string& kind, int width, int height, const Eigen::MatrixXd& data) {
  std::vector<std::uint8_t> payload;
  payload.reserve(static_cast<std::size_t>(data.size()) * 8);
  for (Eigen::Index i = 0; i < data.size(); ++i) append_f64(payload, data.data()[i]);
  write_plsr(path, {{"kind", kind}, {"width", width}, {"height", height}, {"dims", data.rows()}, {"dtype", "f64"}},
             payload);
}

}  // namespace

void dump_intermediates(const Intermediates& im, const fs::path& dir) {
  fs::create_directories(dir);
  save_feature_cube(im.features, dir / "features.plsr");
  save_matrix(dir / "hidden.plsr", "hidden", im.hidden.width, im.hidden.height, im.hidden.data);
  save_segments(im.superpixels, dir / "segments.plsr");
  write_text(dir / "centers.csv", centers_csv(im.superpixels));
  save_matrix(dir / "robust.plsr", "robust", im.hidden.width, im.hidden.height, im.robust);
}

}  // namespace polsar
