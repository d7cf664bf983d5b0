#pragma once

// Learned orientation regressor: an injectable convolutional feature extractor
// followed by a 512/256/64 ReLU head and one linear output in degrees.

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
#include "oad/dataset.hpp"
#include "oad/nn.hpp"

namespace oad {

enum class BackboneKind { pretrained_large, tiny_desk, tiny_desk_small };
enum class WeightsOrigin { pretrained, random };
enum class LossKind { circular, l1 };

std::string to_string(BackboneKind kind);
BackboneKind parse_backbone(const std::string& text);
std::string to_string(LossKind kind);
LossKind parse_loss(const std::string& text);

struct BackboneSpec {
  BackboneKind name = BackboneKind::tiny_desk;
  int feature_dim = 0;
  WeightsOrigin weights_origin = WeightsOrigin::random;
  int input_height = 299;
  int input_width = 299;
  int input_channels = 3;
  /// Frozen backbones receive no updates; default is frozen only for
  /// pretrained_large.
  bool frozen = false;
};

/// Spec for one of the built-in convolutional backbones at the given input
/// resolution, with feature_dim filled in.
BackboneSpec desk_backbone(BackboneKind kind, int input_height, int input_width);

/// Attaches an externally supplied (e.g. Xception-class) extractor.
BackboneSpec pretrained_backbone(int feature_dim, int input_height = 299, int input_width = 299);

struct HeadSpec {
  std::vector<int> fc_sizes{512, 256, 64};
  /// Fixed affine map from the linear unit to degrees:
  /// raw = output_offset + output_scale * unit.
  double output_offset = 0.0;
  double output_scale = 1.0;

  /// Centres the output on the level's target range.
  static HeadSpec for_level(DifficultyLevel level);
};

/// Image tensor -> feature vector. Implementations own their parameters.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual int feature_dim() const = 0;
  virtual bool trainable() const = 0;
  /// Returns (feature_dim x batch).
  virtual nn::Matrix forward(const nn::FeatureBatch& input) = 0;
  virtual void backward(const nn::Matrix& grad_features) = 0;
  virtual std::vector<nn::Parameter*> parameters() = 0;
};

using ExternalFeatureFn = std::function<Eigen::VectorXf(const Tensor3&)>;

/// Frozen extractor wrapping a callback, for pretrained backbones that live
/// outside this project.
std::unique_ptr<FeatureExtractor> make_external_backbone(int feature_dim, ExternalFeatureFn fn);

class Regressor {
 public:
  Regressor(BackboneSpec backbone, HeadSpec head, std::unique_ptr<FeatureExtractor> extractor,
            std::uint64_t seed);

  const BackboneSpec& backbone_spec() const { return backbone_; }
  const HeadSpec& head_spec() const { return head_; }

  /// Raw (unwrapped) degrees, one per sample.
  Eigen::VectorXf forward(const nn::FeatureBatch& input);
  /// Backpropagates d(loss)/d(raw degrees).
  void backward(const Eigen::VectorXf& grad_raw);

  /// (N x 1) raw outputs for a batch of preprocessed tensors.
  Eigen::MatrixXf predict_raw(std::span<const Tensor3> inputs);

  /// Parameters that the optimizer should update.
  std::vector<nn::Parameter*> trainable_parameters();
  /// Every parameter owned by the model (frozen backbone included).
  std::vector<nn::Parameter*> all_parameters();

  std::vector<nn::Matrix> weights();
  void set_weights(const std::vector<nn::Matrix>& weights);

 private:
  BackboneSpec backbone_;
  HeadSpec head_;
  std::unique_ptr<FeatureExtractor> extractor_;
  std::vector<nn::Dense> dense_;
  std::vector<nn::Relu> relu_;
};

nn::FeatureBatch make_batch(std::span<const Tensor3> inputs);
nn::FeatureBatch make_batch(std::span<const Tensor3> inputs, std::span<const int> indices);

/// Builds a model with seeded initial weights. Throws InvalidArgument when the
/// backbone's feature_dim disagrees with what it produces or the head does not
/// have the 512/256/64 layout.
Regressor build_model(const BackboneSpec& backbone, const HeadSpec& head, std::uint64_t seed,
                      std::unique_ptr<FeatureExtractor> external = nullptr);

struct TrainConfig {
  DifficultyLevel level = DifficultyLevel::pm45;
  LossKind loss = LossKind::circular;
  nn::AdadeltaConfig optimizer{};
  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
  FillPolicy fill = FillPolicy::fill_black;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double val_mae = 0;
};

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct ModelCheckpoint {
  BackboneSpec backbone;
  HeadSpec head;
  TrainConfig train_config;
  std::vector<EpochRecord> history;
  std::vector<nn::Matrix> weights;
  std::uint32_t format_version = kCheckpointFormatVersion;
  /// Epoch whose weights were kept (0 = initial weights).
  int best_epoch = 0;
  std::uint64_t model_seed = 0;
  std::string config_json = "{}";
};

/// Loss on signed targets and raw outputs, with its gradient w.r.t. the raw
/// outputs (already divided by the batch size).
class LossFunction {
 public:
  explicit LossFunction(LossKind kind) : kind_(kind) {}
  LossKind kind() const { return kind_; }
  double value(std::span<const double> targets, std::span<const double> raw) const;
  std::vector<double> gradient(std::span<const double> targets, std::span<const double> raw) const;

 private:
  LossKind kind_;
};

LossFunction loss_for_config(const TrainConfig& cfg);

/// Looks up upright source images by id.
using SourceLookup = std::function<const SourceImage&(const std::string&)>;
SourceLookup corpus_lookup(std::span<const SourceImage> corpus);

using ProgressFn = std::function<void(const EpochRecord&)>;

/// Minibatch training on the manifest's train split; keeps the weights with
/// the best validation circular MAE.
ModelCheckpoint train(Regressor& model, const SplitManifest& manifest, const SourceLookup& images,
                      const TrainConfig& cfg, const ProgressFn& progress = {});

/// Same, on already materialised samples.
ModelCheckpoint train(Regressor& model, std::span<const RotatedSample> train_set,
                      std::span<const RotatedSample> val_set, const TrainConfig& cfg,
                      const ProgressFn& progress = {});

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& ckpt);
void save_checkpoint(std::ostream& out, const ModelCheckpoint& ckpt);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(std::istream& in);

/// Rebuilds the model stored in a checkpoint. pretrained_large checkpoints
/// need the external extractor supplied again.
Regressor restore_model(const ModelCheckpoint& ckpt,
                        std::unique_ptr<FeatureExtractor> external = nullptr);

/// Loaded model ready for inference.
class Predictor {
 public:
  explicit Predictor(const ModelCheckpoint& ckpt,
                     std::unique_ptr<FeatureExtractor> external = nullptr);
  double predict_raw(const ImageU8& img);
  Angle predict(const ImageU8& img) { return wrap_degrees(predict_raw(img)); }

 private:
  Regressor model_;
};

Angle predict_angle(const ModelCheckpoint& ckpt, const ImageU8& img);

}  // namespace oad
