// oad: synthesize rotated datasets, train and evaluate orientation estimators,
// and counter-rotate images by their predicted angle.
//
//   oad synthesize --kind stripes --n 500 --level pm45 --seed 7 --out data
//   oad train --manifest data/manifest.jsonl --epochs 20 --out model
//   oad evaluate --method oad --checkpoint model/checkpoint.oad --manifest data/manifest.jsonl --out eval
//   oad evaluate --method hough-pow --manifest data/manifest.jsonl --out eval
//   oad compare eval/report_*.jsonl --out eval
//   oad correct --checkpoint model/checkpoint.oad --input tilted.png --output fixed.png

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "oad/classical.hpp"
#include "oad/dataset.hpp"
#include "oad/errors.hpp"
#include "oad/evaluation.hpp"
#include "oad/image_io.hpp"
#include "oad/regressor.hpp"
#include "oad/rotation.hpp"
#include "settings.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using oad::cli::Settings;

namespace {

using Overrides = std::map<std::string, std::string>;

void flag(CLI::App* app, const std::string& name, const std::string& key, Overrides& ov,
          const std::string& help) {
  app->add_option_function<std::string>(
      name, [&ov, key](const std::string& v) { ov[key] = v; }, help);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

fs::path out_dir(Settings& s) {
  s.default_to("out", ".");
  const fs::path p = s.get("out", ".");
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw oad::IoError("cannot write '" + path.string() + "'");
}

// Upright sources from a synthesize output directory, loaded on first use.
class ImageStore {
 public:
  explicit ImageStore(fs::path dir) : dir_(std::move(dir)) {}
  const oad::SourceImage& operator()(const std::string& id) {
    auto it = cache_.find(id);
    if (it == cache_.end()) {
      oad::SourceImage src{id, oad::read_image(dir_ / (id + ".png")), true};
      oad::validate_source(src);
      it = cache_.emplace(id, std::move(src)).first;
    }
    return it->second;
  }

 private:
  fs::path dir_;
  std::map<std::string, oad::SourceImage> cache_;
};

struct Dataset {
  oad::SplitManifest manifest;
  ImageStore images;
};

Dataset open_dataset(Settings& s) {
  const fs::path manifest = s.require("manifest");
  s.default_to("images", (manifest.parent_path() / "images").string());
  Dataset d{oad::read_manifest(manifest), ImageStore(s.get("images", ""))};
  if (s.has("level") && oad::parse_level(s.get("level", "")) != d.manifest.level)
    throw oad::InvalidArgument("--level " + s.get("level", "") + " disagrees with manifest level " +
                               to_string(d.manifest.level));
  s.default_to("level", to_string(d.manifest.level));
  return d;
}

std::vector<oad::RotatedSample> materialize(Dataset& d, oad::Split split, oad::FillPolicy fill) {
  std::vector<oad::RotatedSample> out;
  for (const auto& e : d.manifest.select(split))
    out.push_back(oad::make_rotated_sample(d.images(e.source_id), e.signed_angle, e.level, fill));
  if (out.empty()) throw oad::InvalidArgument("manifest has no " + to_string(split) + " entries");
  return out;
}

oad::TrainConfig train_config(Settings& s, oad::DifficultyLevel level) {
  s.default_to("loss", "circular");
  s.default_to("epochs", "10");
  s.default_to("batch_size", "32");
  s.default_to("lr", "0.1");
  s.default_to("fill", "fill_black");
  s.default_to("seed", "0");
  oad::TrainConfig cfg;
  cfg.level = level;
  cfg.loss = oad::parse_loss(s.get("loss", ""));
  cfg.epochs = s.get_int("epochs", 10);
  cfg.batch_size = s.get_int("batch_size", 32);
  cfg.optimizer.learning_rate = static_cast<float>(s.get_double("lr", 0.1));
  cfg.fill = oad::parse_fill_policy(s.get("fill", ""));
  cfg.seed = s.get_u64("seed", 0);
  return cfg;
}

oad::BackboneSpec backbone_for(const std::string& name, int input_size) {
  const oad::BackboneKind kind = oad::parse_backbone(name);
  if (kind == oad::BackboneKind::pretrained_large)
    throw oad::InvalidArgument(
        "backbone pretrained_large needs an external feature extractor; use the library API");
  return oad::desk_backbone(kind, input_size, input_size);
}

oad::EstimatorConfig estimator_config(Settings& s) {
  oad::EstimatorConfig cfg;
  cfg.search_lo = s.get_double("search_lo", cfg.search_lo);
  cfg.search_hi = s.get_double("search_hi", cfg.search_hi);
  cfg.angle_step = s.get_double("angle_step", cfg.angle_step);
  cfg.validate();
  return cfg;
}

std::string report_name(const oad::EvalReport& r) {
  return "report_" + r.method + "_" + to_string(r.level) + ".jsonl";
}

int cmd_synthesize(Settings& s) {
  s.default_to("kind", "stripes");
  s.default_to("n", "100");
  s.default_to("size", "128");
  s.default_to("level", "pm45");
  s.default_to("seed", "0");
  const int n = s.get_int("n", 100);
  s.default_to("val", std::to_string(n / 10));
  s.default_to("test", std::to_string(n / 10));
  const int val = s.get_int("val", 0), test = s.get_int("test", 0);
  s.default_to("train", std::to_string(n - val - test));
  const auto kind = oad::parse_corpus_kind(s.get("kind", ""));
  const auto level = oad::parse_level(s.get("level", ""));
  const auto seed = s.get_u64("seed", 0);
  const int size = s.get_int("size", 128);
  std::vector<std::string> discards;
  if (s.has("discard")) discards = oad::read_discard_list(s.get("discard", ""));

  const fs::path out = out_dir(s);
  const auto corpus = oad::synthesize_oriented_corpus(n, kind, seed, size, size);
  fs::create_directories(out / "images");
  for (const auto& src : corpus) oad::write_png(out / "images" / (src.id + ".png"), src.pixels);
  oad::SplitManifest m =
      oad::build_split(corpus, level, seed, {s.get_int("train", 0), val, test}, discards);
  m.config_json = s.to_json().dump();
  oad::write_manifest(out / "manifest.jsonl", m);
  std::cout << "wrote " << corpus.size() << " images and " << (out / "manifest.jsonl").string()
            << " (" << m.counts.train << "/" << m.counts.val << "/" << m.counts.test << ")\n";
  return 0;
}

int cmd_train(Settings& s) {
  Dataset d = open_dataset(s);
  s.default_to("backbone", "tiny_desk");
  s.default_to("input_size", "64");
  const oad::TrainConfig cfg = train_config(s, d.manifest.level);
  const oad::BackboneSpec backbone = backbone_for(s.get("backbone", ""), s.get_int("input_size", 64));
  const fs::path out = out_dir(s);

  std::ofstream log(out / "train_log.jsonl", std::ios::binary);
  if (!log) throw oad::IoError("cannot write '" + (out / "train_log.jsonl").string() + "'");
  log << Json{{"config", s.to_json()}}.dump() << '\n';
  auto progress = [&](const oad::EpochRecord& r) {
    log << Json{{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_mae", r.val_mae}}.dump() << '\n';
    std::cerr << "epoch " << r.epoch << "  loss " << fmt(r.train_loss) << "  val MAE "
              << fmt(r.val_mae) << '\n';
  };

  oad::Regressor model =
      oad::build_model(backbone, oad::HeadSpec::for_level(cfg.level), cfg.seed);
  oad::ModelCheckpoint ckpt = oad::train(
      model, d.manifest, [&d](const std::string& id) -> const oad::SourceImage& { return d.images(id); },
      cfg, progress);
  ckpt.config_json =
      Json{{"settings", s.to_json()}, {"manifest", Json::parse(d.manifest.config_json)}}.dump();
  oad::save_checkpoint(out / "checkpoint.oad", ckpt);
  if (!log.flush()) throw oad::IoError("cannot write train log");
  std::cout << "best epoch " << ckpt.best_epoch << ", wrote " << (out / "checkpoint.oad").string()
            << '\n';
  return 0;
}

std::unique_ptr<oad::AngleMethod> method_from(Settings& s) {
  const std::string name = s.require("method");
  if (name == "oad")
    return oad::make_regressor_method(oad::load_checkpoint(fs::path(s.require("checkpoint"))));
  return oad::make_classical_method(oad::parse_classical_method(name), estimator_config(s));
}

int cmd_evaluate(Settings& s) {
  auto method = method_from(s);
  // Refuse before touching any data.
  if (s.has("level") && !method->applicable(oad::parse_level(s.get("level", ""))))
    throw oad::MethodNotApplicable("method not applicable: " + method->name() + " at level " +
                                   s.get("level", ""));
  Dataset d = open_dataset(s);
  s.default_to("split", "test");
  s.default_to("fill", "fill_black");
  const auto samples =
      materialize(d, oad::parse_split(s.get("split", "")), oad::parse_fill_policy(s.get("fill", "")));
  oad::EvalReport r = oad::evaluate(*method, samples);
  r.config_json = s.to_json().dump();
  const fs::path out = out_dir(s);
  oad::write_report(out / report_name(r), r);
  oad::plot_error_histogram(r, out / ("errors_" + r.method + "_" + to_string(r.level) + ".png"));
  std::cout << r.method << " " << to_string(r.level) << " MAE " << fmt(r.mae) << " over "
            << r.per_sample.size() << " samples, " << r.failures << " failures\n";
  return 0;
}

int cmd_estimate(Settings& s) {
  const auto method = oad::parse_classical_method(s.require("method"));
  if (s.has("level") && oad::parse_level(s.get("level", "")) == oad::DifficultyLevel::full360)
    throw oad::MethodNotApplicable("method not applicable: " + to_string(method) + " at level full360");
  const oad::EstimatorConfig cfg = estimator_config(s);
  const oad::ImageU8 img = oad::read_image(s.require("input"));
  if (method == oad::ClassicalMethod::fourier) {
    const auto e = oad::estimate_fourier_detailed(img, cfg);
    std::cout << fmt(e.degrees) << (e.low_confidence ? " (low confidence)" : "") << '\n';
  } else {
    std::cout << fmt(oad::estimate_classical(method, img, cfg)) << '\n';
  }
  return 0;
}

int cmd_compare(Settings& s) {
  const auto paths = split_list(s.require("reports"));
  std::vector<oad::EvalReport> reports;
  for (const auto& p : paths) reports.push_back(oad::read_report(fs::path(p)));
  const oad::ComparisonTable t = oad::compare(reports);
  const fs::path out = out_dir(s);
  const std::string header = "# config: " + s.to_json().dump() + "\n";
  write_text(out / "comparison.csv", header + t.to_csv());
  write_text(out / "comparison.txt", header + t.to_text());
  std::cout << t.to_text();
  return 0;
}

int cmd_ablate(Settings& s) {
  Dataset d = open_dataset(s);
  s.default_to("backbones", "tiny_desk,tiny_desk_small");
  s.default_to("losses", "circular,l1");
  s.default_to("input_size", "64");
  oad::AblationConfig cfg;
  cfg.train = train_config(s, d.manifest.level);
  cfg.input_size = s.get_int("input_size", 64);
  cfg.model_seed = cfg.train.seed;
  std::vector<oad::AblationCell> grid;
  for (const auto& b : split_list(s.get("backbones", "")))
    for (const auto& l : split_list(s.get("losses", "")))
      grid.push_back({oad::parse_backbone(b), oad::parse_loss(l)});

  const auto train = materialize(d, oad::Split::train, cfg.train.fill);
  const auto val = materialize(d, oad::Split::val, cfg.train.fill);
  const auto test = materialize(d, oad::Split::test, cfg.train.fill);
  std::vector<oad::EvalReport> reports;
  const oad::ComparisonTable t =
      oad::run_ablation(grid, d.manifest.level, {train, val, test}, cfg, &reports);
  const fs::path out = out_dir(s);
  for (auto& r : reports) {
    r.config_json = s.to_json().dump();
    oad::write_report(out / report_name(r), r);
  }
  const std::string header = "# config: " + s.to_json().dump() + "\n";
  write_text(out / "ablation.csv", header + t.to_csv());
  write_text(out / "ablation.txt", header + t.to_text());
  std::cout << t.to_text();
  for (std::size_t j = 0; j < t.columns.size(); ++j)
    if (t.cells[0][j].failed) std::cerr << t.columns[j] << " failed: " << t.cells[0][j].error << '\n';
  return 0;
}

struct Prediction {
  oad::Angle wrapped;
  double signed_deg;
};

Prediction predict(Settings& s, const oad::ImageU8& img) {
  oad::Predictor p(oad::load_checkpoint(fs::path(s.require("checkpoint"))));
  const oad::Angle a = p.predict(img);
  const double signed_deg = oad::signed_shortest_delta(a, oad::Angle(0.0)).degrees();
  std::cout << "angle " << fmt(a.degrees()) << "\nsigned " << fmt(signed_deg) << '\n';
  return {a, signed_deg};
}

int cmd_predict(Settings& s) {
  predict(s, oad::read_image(s.require("input")));
  return 0;
}

int cmd_correct(Settings& s) {
  s.default_to("fill", "fill_black");
  const fs::path output = s.require("output");
  const oad::FillPolicy fill = oad::parse_fill_policy(s.get("fill", ""));
  const oad::ImageU8 img = oad::read_image(s.require("input"));
  const Prediction p = predict(s, img);
  oad::write_image(output, oad::rotate_image(img, -p.signed_deg, fill));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image orientation angle detection"};
  app.require_subcommand(1);
  Overrides ov;
  std::string config_path;
  app.add_option("--config", config_path, "key = value settings file; flags override it");
  flag(&app, "--seed", "seed", ov, "seed for every random choice");
  flag(&app, "--out", "out", ov, "output directory");
  flag(&app, "--level", "level", ov, "pm30 | pm45 | full360");

  using Handler = int (*)(Settings&);
  std::vector<std::pair<CLI::App*, Handler>> commands;
  auto add = [&](const char* name, const char* help, Handler h) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    commands.emplace_back(sub, h);
    return sub;
  };

  auto* synth = add("synthesize", "procedural upright corpus and split manifest", cmd_synthesize);
  flag(synth, "--kind", "kind", ov, "stripes | text_blocks | gradient_scene | mixed");
  flag(synth, "--n", "n", ov, "number of source images");
  flag(synth, "--size", "size", ov, "image side in pixels");
  flag(synth, "--train", "train", ov, "train count");
  flag(synth, "--val", "val", ov, "validation count");
  flag(synth, "--test", "test", ov, "test count");
  flag(synth, "--discard", "discard", ov, "file of source ids to exclude");

  auto add_data = [&](CLI::App* sub) {
    flag(sub, "--manifest", "manifest", ov, "split manifest");
    flag(sub, "--images", "images", ov, "source image directory (default: next to the manifest)");
    flag(sub, "--fill", "fill", ov, "fill_black | center_crop");
  };
  auto add_training = [&](CLI::App* sub) {
    flag(sub, "--loss", "loss", ov, "circular | l1");
    flag(sub, "--epochs", "epochs", ov, "training epochs");
    flag(sub, "--batch-size", "batch_size", ov, "minibatch size");
    flag(sub, "--lr", "lr", ov, "Adadelta learning rate");
    flag(sub, "--input-size", "input_size", ov, "model input side in pixels");
  };
  auto add_estimator = [&](CLI::App* sub) {
    flag(sub, "--method", "method", ov, "hough-var | hough-pow | fourier");
    flag(sub, "--search-lo", "search_lo", ov, "lower end of the angle search");
    flag(sub, "--search-hi", "search_hi", ov, "upper end of the angle search");
    flag(sub, "--angle-step", "angle_step", ov, "angle search step");
  };

  auto* train = add("train", "train a regressor on a manifest", cmd_train);
  add_data(train);
  add_training(train);
  flag(train, "--backbone", "backbone", ov, "tiny_desk | tiny_desk_small");

  auto* evaluate = add("evaluate", "score a method on a manifest split", cmd_evaluate);
  add_data(evaluate);
  add_estimator(evaluate);
  flag(evaluate, "--checkpoint", "checkpoint", ov, "model for --method oad");
  flag(evaluate, "--split", "split", ov, "train | val | test");

  auto* estimate = add("estimate", "classical estimate for one image", cmd_estimate);
  add_estimator(estimate);
  flag(estimate, "--input", "input", ov, "image file");

  auto* compare = add("compare", "level x method table from report files", cmd_compare);
  std::vector<std::string> report_paths;
  compare->add_option("reports", report_paths, "report files")->required();

  auto* ablate = add("ablate", "backbone x loss grid on one manifest", cmd_ablate);
  add_data(ablate);
  add_training(ablate);
  flag(ablate, "--backbones", "backbones", ov, "comma-separated backbones");
  flag(ablate, "--losses", "losses", ov, "comma-separated losses");

  auto* predict_cmd = add("predict", "predicted angle of one image", cmd_predict);
  flag(predict_cmd, "--checkpoint", "checkpoint", ov, "model checkpoint");
  flag(predict_cmd, "--input", "input", ov, "image file");

  auto* correct = add("correct", "counter-rotate one image by its predicted angle", cmd_correct);
  flag(correct, "--checkpoint", "checkpoint", ov, "model checkpoint");
  flag(correct, "--input", "input", ov, "image file");
  flag(correct, "--output", "output", ov, "corrected image file");
  flag(correct, "--fill", "fill", ov, "fill_black | center_crop");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    Settings s = config_path.empty() ? Settings{} : Settings::load(config_path);
    for (const auto& [k, v] : ov) s.set(k, v);
    if (!report_paths.empty()) {
      std::string joined;
      for (const auto& p : report_paths) joined += (joined.empty() ? "" : ",") + p;
      s.set("reports", joined);
    }
    for (const auto& [sub, handler] : commands)
      if (sub->parsed()) return handler(s);
  } catch (const std::exception& e) {
    std::cerr << "oad: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
