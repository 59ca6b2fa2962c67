// polsar: command-line front end for synthesis, training, prediction and evaluation.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>

#include "polsar/eval.hpp"
#include "polsar/io.hpp"
#include "polsar/neural_io.hpp"
#include "polsar/pipeline.hpp"
#include "polsar/synth.hpp"

using namespace polsar;

namespace {

enum Exit { kOk = 0, kFailure = 1, kBadFlags = 2, kIo = 3, kDiverged = 4, kBands = 5 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::MissingClassModel:
    case ErrorCode::KTooLarge:
    case ErrorCode::ClassTooSmall:
    case ErrorCode::TooFewClasses:
      return kBadFlags;
    case ErrorCode::IoFailure:
    case ErrorCode::MalformedHeader:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::NonFiniteValue:
    case ErrorCode::MalformedModel:
    case ErrorCode::VersionMismatch:
      return kIo;
    case ErrorCode::DivergenceDetected:
      return kDiverged;
    case ErrorCode::BandMismatch:
      return kBands;
    default:
      return kFailure;
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    auto item = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Registers one string flag per PipelineConfig key; values are converted
/// using the type of the default.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;

  void attach(CLI::App& app) {
    app.add_option("--config", config_path, "JSON file with flat keys named like the flags below");
    const auto defaults = PipelineConfig{}.to_json();
    for (const auto& [key, v] : defaults.items()) {
      app.add_option("--" + key, values[key], "default " + v.dump());
    }
  }

  PipelineConfig resolve(const CLI::App& app) const {
    PipelineConfig config;
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) fail(ErrorCode::InvalidArgument, "config file '" + config_path + "' not found");
      const auto bytes = read_file(config_path);
      try {
        config.merge_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidArgument, "config file is not valid JSON: " + std::string(e.what()));
      }
    }
    const auto defaults = PipelineConfig{}.to_json();
    nlohmann::json overrides = nlohmann::json::object();
    for (const auto& [key, text] : values) {
      if (app.count("--" + key) == 0) continue;
      const auto& d = defaults.at(key);
      try {
        if (d.is_array()) {
          nlohmann::json list = nlohmann::json::array();
          for (const auto& item : split_list(text)) {
            if (d.empty() || d.front().is_string()) list.push_back(item);
            else list.push_back(std::stoi(item));
          }
          overrides[key] = list;
        } else if (d.is_number_unsigned()) {
          overrides[key] = std::stoull(text);
        } else if (d.is_number_integer()) {
          overrides[key] = std::stoi(text);
        } else if (d.is_number()) {
          overrides[key] = std::stod(text);
        } else {
          overrides[key] = text;
        }
      } catch (const std::logic_error&) {
        fail(ErrorCode::InvalidArgument, "--" + key + ": cannot parse '" + text + "'");
      }
    }
    config.merge_json(overrides);
    config.validate();
    return config;
  }
};

void require_file(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) fail(ErrorCode::IoFailure, what + " '" + path + "' not found");
}

void echo_config(const fs::path& output, const nlohmann::json& config) {
  write_text(fs::path(output.string() + ".config.json"), config.dump(2) + "\n");
}

double accuracy_on(const Prediction& p, const LabelMap& truth) {
  return score(p.as_label_map(truth.class_names), truth).overall_accuracy;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multifrequency PolSAR classification: features, sparse autoencoders, superpixels, softmax"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic speckled scene and its label map");
  std::string scene_path, synth_out, synth_labels, layout = "block";
  int size = 64, width = 0, height = 0;
  std::uint64_t synth_seed = 1;
  synth->add_option("--scene-model", scene_path, "Scene model JSON (bands, looks, class covariances)")->required();
  synth->add_option("--out", synth_out, "Output PLSR1 image")->required();
  synth->add_option("--labels", synth_labels, "Output label PGM")->required();
  synth->add_option("--size", size, "Square scene size in pixels");
  synth->add_option("--width", width, "Scene width (overrides --size)");
  synth->add_option("--height", height, "Scene height (overrides --size)");
  synth->add_option("--layout", layout, "Class layout")->check(CLI::IsMember({"block", "stripe"}));
  synth->add_option("--seed", synth_seed, "Random seed");

  // fit
  auto* fitc = app.add_subcommand("fit", "Train the full pipeline");
  std::string fit_image, fit_labels, fit_model, fit_dump;
  bool use_all = false;
  fitc->add_option("--image", fit_image, "PLSR1 image")->required();
  fitc->add_option("--labels", fit_labels, "Label PGM")->required();
  fitc->add_option("--model", fit_model, "Output model file")->required();
  fitc->add_flag("--use-all-labels", use_all, "Train on every labeled pixel instead of a per-class split");
  fitc->add_option("--dump-dir", fit_dump, "Write stage intermediates here");
  ConfigFlags fit_flags;
  fit_flags.attach(*fitc);

  // predict
  auto* pred = app.add_subcommand("predict", "Classify an image with a trained model");
  std::string pred_model, pred_image, pred_out, pred_map, pred_bounds, pred_dump;
  pred->add_option("--model", pred_model, "Model file")->required();
  pred->add_option("--image", pred_image, "PLSR1 image")->required();
  pred->add_option("--out", pred_out, "Output class-id PGM")->required();
  pred->add_option("--map", pred_map, "Rendered classification map (PPM)");
  pred->add_option("--boundaries", pred_bounds, "Superpixel boundaries over the Pauli composite of band 0 (PPM)");
  pred->add_option("--dump-dir", pred_dump, "Write stage intermediates here");

  // eval
  auto* evalc = app.add_subcommand("eval", "Score a prediction against ground truth");
  std::string eval_pred, eval_truth, eval_out, eval_conf;
  evalc->add_option("--pred", eval_pred, "Predicted label PGM")->required();
  evalc->add_option("--truth", eval_truth, "Ground-truth label PGM (0 = unlabeled)")->required();
  evalc->add_option("--out", eval_out, "Score CSV")->required();
  evalc->add_option("--confusion", eval_conf, "Confusion matrix CSV");

  // ablations
  auto* abl_b = app.add_subcommand("ablate-bands", "Fit and score every band subset");
  auto* abl_f = app.add_subcommand("ablate-features", "Fit and score each decomposition family");
  std::string abl_image, abl_labels, abl_out;
  std::vector<std::string> abl_subsets;
  ConfigFlags abl_flags;
  for (auto* c : {abl_b, abl_f}) {
    c->add_option("--image", abl_image, "PLSR1 image")->required();
    c->add_option("--labels", abl_labels, "Label PGM")->required();
    c->add_option("--out", abl_out, "Result table CSV")->required();
    abl_flags.attach(*c);
  }
  abl_b->add_option("--subset", abl_subsets, "Band subset such as L,P (repeatable; default all non-empty subsets)");
  abl_f->add_option("--subset", abl_subsets, "Family subset such as freeman,cloude (repeatable; default each family)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadFlags;
  }

  try {
    if (synth->parsed()) {
      if (!fs::exists(scene_path)) fail(ErrorCode::InvalidArgument, "scene model '" + scene_path + "' not found");
      const auto bytes = read_file(scene_path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidArgument, "scene model is not valid JSON: " + std::string(e.what()));
      }
      const auto model = scene_model_from_json(j);
      const int w = width > 0 ? width : size, h = height > 0 ? height : size;
      if (w <= 0 || h <= 0) fail(ErrorCode::InvalidArgument, "scene size must be positive");
      std::vector<std::string> names;
      for (const auto& c : model.classes) names.push_back(c.name);
      const auto grid = layout == "block" ? block_layout(w, h, names) : stripe_layout(w, h, names);
      const auto scene = synth_scene(model, grid, synth_seed);
      save_image(scene.image, synth_out);
      save_label_map(scene.labels, synth_labels);
      echo_config(synth_out, {{"scene-model", scene_path}, {"width", w}, {"height", h}, {"layout", layout},
                              {"seed", synth_seed}, {"looks", model.looks}});
      std::cerr << "synth: " << w << "x" << h << ", bands " << nlohmann::json(model.bands).dump() << ", "
                << names.size() << " classes, looks " << model.looks << "\n";
    } else if (fitc->parsed()) {
      const auto config = fit_flags.resolve(*fitc);
      require_file(fit_image, "image");
      require_file(fit_labels, "label map");
      const auto image = load_image(fit_image);
      const auto labels = load_label_map(fit_labels);
      LabelMap train = labels;
      if (!use_all) {
        auto parts = split(labels, {config.train_fraction, config.seed});
        train = parts.first;
        save_label_map(parts.first, fit_model + ".train.pgm");
        save_label_map(parts.second, fit_model + ".test.pgm");
      }
      const auto result = fit(image, train, config);
      save_model(result.model, fit_model);
      write_text(fit_model + ".ae1_loss.csv", nn::loss_history_csv(result.ae1_history));
      write_text(fit_model + ".ae2_loss.csv", nn::loss_history_csv(result.ae2_history));
      write_text(fit_model + ".softmax_loss.csv", nn::loss_history_csv(result.softmax_history, true));
      if (!fit_dump.empty()) dump_intermediates(result.intermediates, fit_dump);
      echo_config(fit_model, config.to_json());
      auto last = [](const auto& h) { return h.empty() ? 0.0 : h.back().total; };
      std::cerr << "fit: ae1 loss " << last(result.ae1_history) << ", ae2 loss " << last(result.ae2_history)
                << ", softmax loss " << last(result.softmax_history) << ", train accuracy " << result.train_accuracy
                << "\n";
    } else if (pred->parsed()) {
      require_file(pred_model, "model");
      require_file(pred_image, "image");
      const auto model = load_model(pred_model);
      const auto image = load_image(pred_image);
      const auto p = predict(model, image);
      const auto labels = p.as_label_map(model.class_names);
      save_label_map(labels, pred_out);
      if (!pred_map.empty()) write_ppm(render_map(labels), pred_map);
      if (!pred_bounds.empty()) write_ppm(render_boundaries(p.intermediates.superpixels, image), pred_bounds);
      if (!pred_dump.empty()) dump_intermediates(p.intermediates, pred_dump);
      echo_config(pred_out, {{"model", pred_model}, {"image", pred_image}, {"model-config", model.config}});
      std::cerr << "predict: " << p.width << "x" << p.height << ", " << p.intermediates.superpixels.segment_count()
                << " superpixels\n";
    } else if (evalc->parsed()) {
      require_file(eval_pred, "prediction");
      require_file(eval_truth, "truth");
      const auto s = score(load_label_map(eval_pred), load_label_map(eval_truth));
      write_text(eval_out, score_csv(s));
      if (!eval_conf.empty()) write_text(eval_conf, confusion_csv(s.confusion));
      std::cerr << "eval: overall accuracy " << s.overall_accuracy << ", macro precision " << s.macro_precision
                << "\n";
    } else {
      const bool bands = abl_b->parsed();
      const auto* cmd = bands ? abl_b : abl_f;
      const auto config = abl_flags.resolve(*cmd);
      require_file(abl_image, "image");
      require_file(abl_labels, "label map");
      const auto image = load_image(abl_image);
      const auto labels = load_label_map(abl_labels);
      std::vector<AblationRow> rows;
      if (bands) {
        std::vector<std::vector<std::string>> subsets;
        for (const auto& s : abl_subsets) subsets.push_back(split_list(s));
        if (subsets.empty()) subsets = all_band_subsets(image.band_names());
        rows = run_band_ablation(image, labels, subsets, config);
      } else {
        std::vector<FamilySet> subsets;
        for (const auto& s : abl_subsets) {
          FamilySet f;
          for (const auto& name : split_list(s)) f.push_back(family_from_name(name));
          subsets.push_back(f);
        }
        if (subsets.empty())
          for (auto f : kAllFamilies) subsets.push_back({f});
        rows = run_feature_ablation(image, labels, subsets, config);
      }
      write_text(abl_out, ablation_csv(rows));
      echo_config(abl_out, config.to_json());
      for (const auto& r : rows) std::cerr << r.subset << ": oa " << r.score.overall_accuracy << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "polsar: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "polsar: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
