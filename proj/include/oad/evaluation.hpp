#pragma once

// Scoring of angle estimators with the circular metric: per-sample reports,
// level x method comparison tables, loss/backbone ablations and error plots.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oad/angle.hpp"
#include "oad/classical.hpp"
#include "oad/dataset.hpp"
#include "oad/regressor.hpp"

namespace oad {

/// Anything that maps an image to an applied-rotation estimate in degrees.
class AngleMethod {
 public:
  virtual ~AngleMethod() = default;
  virtual std::string name() const = 0;
  virtual bool applicable(DifficultyLevel level) const = 0;
  /// Raw estimate; evaluation wraps it.
  virtual double estimate(const ImageU8& img) = 0;
};

/// Hough and Fourier baselines; not applicable at full360.
std::unique_ptr<AngleMethod> make_classical_method(ClassicalMethod method,
                                                   const EstimatorConfig& cfg = {});

/// Loaded regressor. Empty name gives "OAD-30", "OAD-45" or "OAD-360" from
/// the level it was trained on.
std::unique_ptr<AngleMethod> make_regressor_method(const ModelCheckpoint& ckpt,
                                                   std::string name = {},
                                                   std::unique_ptr<FeatureExtractor> external = nullptr);

/// Wraps a callback, applicable at every level.
std::unique_ptr<AngleMethod> make_function_method(std::string name,
                                                  std::function<double(const ImageU8&)> fn);

struct SampleResult {
  std::string source_id;
  Angle true_angle;
  Angle predicted;
  AngularError error;
};

struct EvalReport {
  std::string method;
  DifficultyLevel level = DifficultyLevel::pm30;
  std::vector<SampleResult> per_sample;
  /// Mean of per_sample errors; 0 when every sample failed.
  double mae = 0;
  /// Samples the estimator could not score (e.g. no structure); excluded
  /// from `mae`.
  int failures = 0;
  std::vector<std::string> failed_ids;
  std::string config_json = "{}";
};

/// Builds a report from already computed predictions; nullopt marks an
/// estimator failure. Throws InvalidArgument on size mismatch or empty input.
EvalReport score_predictions(const std::string& method, DifficultyLevel level,
                             std::span<const RotatedSample> testset,
                             std::span<const std::optional<double>> predictions);

/// Runs the method on every sample. Throws InvalidArgument for an empty or
/// mixed-level testset and MethodNotApplicable when the method does not cover
/// the testset's level. NoStructure from the estimator counts as a failure.
EvalReport evaluate(AngleMethod& method, std::span<const RotatedSample> testset);

void write_report(std::ostream& out, const EvalReport& report);
void write_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport read_report(std::istream& in);
EvalReport read_report(const std::filesystem::path& path);

struct TableCell {
  std::optional<double> mae;
  /// Set when the cell's run raised; `error` holds the message.
  bool failed = false;
  std::string error;
};

struct ComparisonTable {
  std::vector<DifficultyLevel> rows;
  std::vector<std::string> columns;
  /// rows x columns; a cell with neither value nor failure is absent.
  std::vector<std::vector<TableCell>> cells;

  const TableCell& cell(DifficultyLevel level, const std::string& method) const;
  std::string to_text() const;
  std::string to_csv() const;
};

/// Levels ordered pm30, pm45, full360; methods in first-seen order. Throws
/// InvalidArgument on an empty list or a repeated (method, level) pair.
ComparisonTable compare(std::span<const EvalReport> reports);

struct AblationCell {
  BackboneKind backbone = BackboneKind::tiny_desk;
  LossKind loss = LossKind::circular;
  std::string label() const;
};

struct AblationData {
  std::span<const RotatedSample> train;
  std::span<const RotatedSample> val;
  std::span<const RotatedSample> test;
};

struct AblationConfig {
  TrainConfig train;
  int input_size = 64;
  std::uint64_t model_seed = 0;
};

/// Trains every grid cell on the same data and seeds and tabulates test MAE
/// in one row. A cell whose training or evaluation throws is marked failed.
/// `reports`, when given, receives the successful cells' reports.
ComparisonTable run_ablation(std::span<const AblationCell> grid, DifficultyLevel level,
                             const AblationData& data, const AblationConfig& cfg,
                             std::vector<EvalReport>* reports = nullptr);

/// Fraction of per-sample errors in each 1-degree bin over [0, 180]; an
/// error of exactly 180 lands in the last bin.
std::array<double, 180> error_histogram(const EvalReport& report);

/// Renders error_histogram as a PNG bar chart. Throws InvalidArgument for an
/// empty report and IoError when the file cannot be written.
void plot_error_histogram(const EvalReport& report, const std::filesystem::path& path);

}  // namespace oad
