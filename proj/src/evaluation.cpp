#include "oad/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "oad/errors.hpp"

namespace oad {
namespace {

using Json = nlohmann::ordered_json;

class ClassicalAngleMethod : public AngleMethod {
 public:
  ClassicalAngleMethod(ClassicalMethod method, const EstimatorConfig& cfg)
      : method_(method), cfg_(cfg) {
    cfg_.validate();
  }
  std::string name() const override { return to_string(method_); }
  bool applicable(DifficultyLevel level) const override { return level != DifficultyLevel::full360; }
  double estimate(const ImageU8& img) override { return estimate_classical(method_, img, cfg_); }

 private:
  ClassicalMethod method_;
  EstimatorConfig cfg_;
};

class RegressorAngleMethod : public AngleMethod {
 public:
  RegressorAngleMethod(const ModelCheckpoint& ckpt, std::string name,
                       std::unique_ptr<FeatureExtractor> external)
      : name_(std::move(name)), predictor_(ckpt, std::move(external)) {}
  std::string name() const override { return name_; }
  bool applicable(DifficultyLevel) const override { return true; }
  double estimate(const ImageU8& img) override { return predictor_.predict_raw(img); }

 private:
  std::string name_;
  Predictor predictor_;
};

class FunctionAngleMethod : public AngleMethod {
 public:
  FunctionAngleMethod(std::string name, std::function<double(const ImageU8&)> fn)
      : name_(std::move(name)), fn_(std::move(fn)) {}
  std::string name() const override { return name_; }
  bool applicable(DifficultyLevel) const override { return true; }
  double estimate(const ImageU8& img) override { return fn_(img); }

 private:
  std::string name_;
  std::function<double(const ImageU8&)> fn_;
};

std::string oad_name(DifficultyLevel level) {
  switch (level) {
    case DifficultyLevel::pm30: return "OAD-30";
    case DifficultyLevel::pm45: return "OAD-45";
    case DifficultyLevel::full360: return "OAD-360";
  }
  return "OAD";
}

DifficultyLevel common_level(std::span<const RotatedSample> testset) {
  if (testset.empty()) throw InvalidArgument("evaluate: empty testset");
  const DifficultyLevel level = testset.front().level;
  for (const auto& s : testset)
    if (s.level != level) throw InvalidArgument("evaluate: testset mixes difficulty levels");
  return level;
}

std::string format_mae(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string cell_text(const TableCell& c) {
  if (c.failed) return "failed";
  return c.mae ? format_mae(*c.mae) : "-";
}

int level_rank(DifficultyLevel level) { return static_cast<int>(level); }

}  // namespace

std::unique_ptr<AngleMethod> make_classical_method(ClassicalMethod method, const EstimatorConfig& cfg) {
  return std::make_unique<ClassicalAngleMethod>(method, cfg);
}

std::unique_ptr<AngleMethod> make_regressor_method(const ModelCheckpoint& ckpt, std::string name,
                                                   std::unique_ptr<FeatureExtractor> external) {
  if (name.empty()) name = oad_name(ckpt.train_config.level);
  return std::make_unique<RegressorAngleMethod>(ckpt, std::move(name), std::move(external));
}

std::unique_ptr<AngleMethod> make_function_method(std::string name,
                                                  std::function<double(const ImageU8&)> fn) {
  if (!fn) throw InvalidArgument("make_function_method: empty callback");
  return std::make_unique<FunctionAngleMethod>(std::move(name), std::move(fn));
}

EvalReport score_predictions(const std::string& method, DifficultyLevel level,
                             std::span<const RotatedSample> testset,
                             std::span<const std::optional<double>> predictions) {
  if (testset.empty()) throw InvalidArgument("score_predictions: empty testset");
  if (testset.size() != predictions.size())
    throw InvalidArgument("score_predictions: " + std::to_string(predictions.size()) +
                          " predictions for " + std::to_string(testset.size()) + " samples");
  EvalReport r;
  r.method = method;
  r.level = level;
  double sum = 0;
  for (std::size_t i = 0; i < testset.size(); ++i) {
    const auto& p = predictions[i];
    if (!p || !std::isfinite(*p)) {
      ++r.failures;
      r.failed_ids.push_back(testset[i].source_id);
      continue;
    }
    const Angle predicted = wrap_degrees(*p);
    const AngularError e = circular_distance(testset[i].true_angle, predicted);
    r.per_sample.push_back({testset[i].source_id, testset[i].true_angle, predicted, e});
    sum += e.degrees();
  }
  if (!r.per_sample.empty()) r.mae = sum / static_cast<double>(r.per_sample.size());
  return r;
}

EvalReport evaluate(AngleMethod& method, std::span<const RotatedSample> testset) {
  const DifficultyLevel level = common_level(testset);
  if (!method.applicable(level))
    throw MethodNotApplicable("method not applicable: " + method.name() + " at level " +
                              to_string(level));
  std::vector<std::optional<double>> predictions;
  predictions.reserve(testset.size());
  for (const auto& s : testset) {
    try {
      predictions.emplace_back(method.estimate(s.image));
    } catch (const NoStructure&) {
      predictions.emplace_back();
    }
  }
  return score_predictions(method.name(), level, testset, predictions);
}

void write_report(std::ostream& out, const EvalReport& report) {
  for (const auto& s : report.per_sample) {
    Json rec;
    rec["type"] = "sample";
    rec["source_id"] = s.source_id;
    rec["true_angle"] = s.true_angle.degrees();
    rec["predicted_angle"] = s.predicted.degrees();
    rec["error"] = s.error.degrees();
    out << rec.dump() << '\n';
  }
  for (const auto& id : report.failed_ids) {
    Json rec;
    rec["type"] = "failure";
    rec["source_id"] = id;
    out << rec.dump() << '\n';
  }
  Json summary;
  summary["type"] = "summary";
  summary["method"] = report.method;
  summary["level"] = to_string(report.level);
  summary["n"] = report.per_sample.size();
  summary["mae"] = report.mae;
  summary["failures"] = report.failures;
  summary["config"] = Json::parse(report.config_json);
  out << summary.dump() << '\n';
  if (!out) throw IoError("write_report: stream error");
}

void write_report(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_report(out, report);
}

EvalReport read_report(std::istream& in) {
  EvalReport r;
  bool have_summary = false;
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const Json rec = Json::parse(line);
      const std::string type = rec.at("type");
      if (type == "sample") {
        r.per_sample.push_back({rec.at("source_id"), Angle(rec.at("true_angle").get<double>()),
                                Angle(rec.at("predicted_angle").get<double>()),
                                AngularError(rec.at("error").get<double>())});
      } else if (type == "failure") {
        r.failed_ids.push_back(rec.at("source_id"));
      } else if (type == "summary") {
        r.method = rec.at("method");
        r.level = parse_level(rec.at("level"));
        r.mae = rec.at("mae");
        r.failures = rec.at("failures");
        r.config_json = rec.at("config").dump();
        have_summary = true;
      } else {
        throw LoadError("read_report: unknown record type '" + type + "'");
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw LoadError(std::string("read_report: ") + ex.what());
  } catch (const InvalidArgument& ex) {
    throw LoadError(std::string("read_report: ") + ex.what());
  }
  if (!have_summary) throw LoadError("read_report: missing summary record");
  return r;
}

EvalReport read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return read_report(in);
}

const TableCell& ComparisonTable::cell(DifficultyLevel level, const std::string& method) const {
  const auto r = std::find(rows.begin(), rows.end(), level);
  const auto c = std::find(columns.begin(), columns.end(), method);
  if (r == rows.end() || c == columns.end())
    throw InvalidArgument("ComparisonTable: no cell (" + to_string(level) + ", " + method + ")");
  return cells[r - rows.begin()][c - columns.begin()];
}

std::string ComparisonTable::to_text() const {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({"level"});
  for (const auto& c : columns) grid.back().push_back(c);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    grid.push_back({to_string(rows[i])});
    for (const auto& c : cells[i]) grid.back().push_back(cell_text(c));
  }
  std::vector<std::size_t> width(columns.size() + 1, 0);
  for (const auto& row : grid)
    for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
  std::ostringstream out;
  for (const auto& row : grid) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j == 0)
        out << std::left << std::setw(static_cast<int>(width[j])) << row[j];
      else
        out << "  " << std::right << std::setw(static_cast<int>(width[j])) << row[j];
    }
    out << '\n';
  }
  return out.str();
}

std::string ComparisonTable::to_csv() const {
  std::ostringstream out;
  out << "level";
  for (const auto& c : columns) out << ',' << c;
  out << '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out << to_string(rows[i]);
    for (const auto& c : cells[i]) {
      out << ',';
      if (c.failed)
        out << "failed";
      else if (c.mae)
        out << format_mae(*c.mae);
    }
    out << '\n';
  }
  return out.str();
}

ComparisonTable compare(std::span<const EvalReport> reports) {
  if (reports.empty()) throw InvalidArgument("compare: no reports");
  ComparisonTable t;
  for (const auto& r : reports) {
    if (std::find(t.rows.begin(), t.rows.end(), r.level) == t.rows.end()) t.rows.push_back(r.level);
    if (std::find(t.columns.begin(), t.columns.end(), r.method) == t.columns.end())
      t.columns.push_back(r.method);
  }
  std::sort(t.rows.begin(), t.rows.end(),
            [](DifficultyLevel a, DifficultyLevel b) { return level_rank(a) < level_rank(b); });
  t.cells.assign(t.rows.size(), std::vector<TableCell>(t.columns.size()));
  for (const auto& r : reports) {
    const auto i = std::find(t.rows.begin(), t.rows.end(), r.level) - t.rows.begin();
    const auto j = std::find(t.columns.begin(), t.columns.end(), r.method) - t.columns.begin();
    TableCell& c = t.cells[i][j];
    if (c.mae)
      throw InvalidArgument("compare: duplicate report for (" + r.method + ", " +
                            to_string(r.level) + ")");
    c.mae = r.mae;
  }
  return t;
}

std::string AblationCell::label() const { return to_string(backbone) + "+" + to_string(loss); }

ComparisonTable run_ablation(std::span<const AblationCell> grid, DifficultyLevel level,
                             const AblationData& data, const AblationConfig& cfg,
                             std::vector<EvalReport>* reports) {
  if (grid.empty()) throw InvalidArgument("run_ablation: empty grid");
  ComparisonTable t;
  t.rows = {level};
  t.cells.resize(1);
  for (const auto& g : grid) {
    const std::string label = g.label();
    if (std::find(t.columns.begin(), t.columns.end(), label) != t.columns.end())
      throw InvalidArgument("run_ablation: duplicate cell " + label);
    t.columns.push_back(label);
    TableCell cell;
    try {
      TrainConfig tc = cfg.train;
      tc.level = level;
      tc.loss = g.loss;
      Regressor model = build_model(desk_backbone(g.backbone, cfg.input_size, cfg.input_size),
                                    HeadSpec::for_level(level), cfg.model_seed);
      const ModelCheckpoint ckpt = train(model, data.train, data.val, tc);
      auto method = make_regressor_method(ckpt, label);
      EvalReport r = evaluate(*method, data.test);
      cell.mae = r.mae;
      if (reports) reports->push_back(std::move(r));
    } catch (const Error& ex) {
      cell.failed = true;
      cell.error = ex.what();
    }
    t.cells[0].push_back(std::move(cell));
  }
  return t;
}

}  // namespace oad
