#include "oad/regressor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

namespace oad {

using Json = nlohmann::ordered_json;

std::string to_string(BackboneKind kind) {
  switch (kind) {
    case BackboneKind::pretrained_large: return "pretrained_large";
    case BackboneKind::tiny_desk: return "tiny_desk";
    case BackboneKind::tiny_desk_small: return "tiny_desk_small";
  }
  return "?";
}

BackboneKind parse_backbone(const std::string& text) {
  if (text == "pretrained_large") return BackboneKind::pretrained_large;
  if (text == "tiny_desk") return BackboneKind::tiny_desk;
  if (text == "tiny_desk_small") return BackboneKind::tiny_desk_small;
  throw InvalidArgument("unknown backbone '" + text +
                        "' (expected tiny_desk|tiny_desk_small|pretrained_large)");
}

std::string to_string(LossKind kind) { return kind == LossKind::circular ? "circular" : "l1"; }

LossKind parse_loss(const std::string& text) {
  if (text == "circular") return LossKind::circular;
  if (text == "l1") return LossKind::l1;
  throw InvalidArgument("unknown loss '" + text + "' (expected circular|l1)");
}

// ---------------------------------------------------------------------------
// Backbones

namespace {

struct ConvBlock {
  int out_channels, kernel, stride, padding;
};

std::vector<ConvBlock> layout_for(BackboneKind kind) {
  switch (kind) {
    case BackboneKind::tiny_desk: return {{16, 5, 2, 2}, {32, 3, 2, 1}, {32, 3, 2, 1}, {32, 3, 2, 1}};
    case BackboneKind::tiny_desk_small: return {{8, 5, 2, 2}, {8, 3, 2, 1}, {16, 3, 2, 1}, {16, 3, 2, 1}};
    case BackboneKind::pretrained_large: break;
  }
  throw InvalidArgument("no built-in layout for backbone " + to_string(kind));
}

class ConvBackbone final : public FeatureExtractor {
 public:
  ConvBackbone(BackboneKind kind, int channels, int height, int width, bool frozen, Rng& rng)
      : frozen_(frozen) {
    int c = channels, h = height, w = width;
    for (const ConvBlock& b : layout_for(kind)) {
      convs_.emplace_back(c, b.out_channels, b.kernel, b.stride, b.padding, rng);
      h = convs_.back().out_height(h);
      w = convs_.back().out_width(w);
      if (h < 1 || w < 1) throw InvalidArgument("backbone: input too small for " + to_string(kind));
      c = b.out_channels;
    }
    relus_.resize(convs_.size());
    out_c_ = c;
    out_h_ = h;
    out_w_ = w;
  }

  int feature_dim() const override { return out_c_ * out_h_ * out_w_; }
  bool trainable() const override { return !frozen_; }

  nn::Matrix forward(const nn::FeatureBatch& input) override {
    nn::FeatureBatch x = input;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      x = convs_[i].forward(x);
      relus_[i].forward(x.values);
    }
    return nn::flatten(x);
  }

  void backward(const nn::Matrix& grad_features) override {
    nn::FeatureBatch g = nn::unflatten(grad_features, out_c_, out_h_, out_w_);
    for (std::size_t i = convs_.size(); i-- > 0;) {
      relus_[i].backward(g.values);
      g = convs_[i].backward(g, i > 0);
    }
  }

  std::vector<nn::Parameter*> parameters() override {
    std::vector<nn::Parameter*> out;
    for (auto& c : convs_)
      for (auto* p : c.parameters()) out.push_back(p);
    return out;
  }

 private:
  bool frozen_;
  std::vector<nn::Conv2d> convs_;
  std::vector<nn::Relu> relus_;
  int out_c_ = 0, out_h_ = 0, out_w_ = 0;
};

class ExternalBackbone final : public FeatureExtractor {
 public:
  ExternalBackbone(int feature_dim, ExternalFeatureFn fn) : dim_(feature_dim), fn_(std::move(fn)) {
    if (feature_dim < 1) throw InvalidArgument("external backbone: feature_dim must be positive");
  }
  int feature_dim() const override { return dim_; }
  bool trainable() const override { return false; }

  nn::Matrix forward(const nn::FeatureBatch& input) override {
    const Eigen::Index plane = static_cast<Eigen::Index>(input.height) * input.width;
    nn::Matrix out(dim_, input.batch);
    for (int n = 0; n < input.batch; ++n) {
      Tensor3 t{input.channels, input.height, input.width,
                input.values.middleCols(n * plane, plane)};
      Eigen::VectorXf f = fn_(t);
      if (f.size() != dim_)
        throw InvalidArgument("external backbone returned " + std::to_string(f.size()) +
                              " features, expected " + std::to_string(dim_));
      out.col(n) = f;
    }
    return out;
  }
  void backward(const nn::Matrix&) override {}
  std::vector<nn::Parameter*> parameters() override { return {}; }

 private:
  int dim_;
  ExternalFeatureFn fn_;
};

}  // namespace

std::unique_ptr<FeatureExtractor> make_external_backbone(int feature_dim, ExternalFeatureFn fn) {
  return std::make_unique<ExternalBackbone>(feature_dim, std::move(fn));
}

BackboneSpec desk_backbone(BackboneKind kind, int input_height, int input_width) {
  BackboneSpec spec;
  spec.name = kind;
  spec.input_height = input_height;
  spec.input_width = input_width;
  spec.weights_origin = WeightsOrigin::random;
  Rng rng(0);
  spec.feature_dim = ConvBackbone(kind, spec.input_channels, input_height, input_width, false, rng)
                         .feature_dim();
  return spec;
}

BackboneSpec pretrained_backbone(int feature_dim, int input_height, int input_width) {
  BackboneSpec spec;
  spec.name = BackboneKind::pretrained_large;
  spec.feature_dim = feature_dim;
  spec.weights_origin = WeightsOrigin::pretrained;
  spec.input_height = input_height;
  spec.input_width = input_width;
  spec.frozen = true;
  return spec;
}

HeadSpec HeadSpec::for_level(DifficultyLevel level) {
  HeadSpec h;
  const auto [lo, hi] = sampling_range(level);
  h.output_offset = (lo + hi) / 2;
  h.output_scale = (hi - lo) / 2;
  return h;
}

// ---------------------------------------------------------------------------
// Regressor

Regressor::Regressor(BackboneSpec backbone, HeadSpec head,
                     std::unique_ptr<FeatureExtractor> extractor, std::uint64_t seed)
    : backbone_(std::move(backbone)), head_(std::move(head)), extractor_(std::move(extractor)) {
  if (!extractor_) throw InvalidArgument("Regressor: missing feature extractor");
  if (extractor_->feature_dim() != backbone_.feature_dim)
    throw InvalidArgument("Regressor: backbone produces " +
                          std::to_string(extractor_->feature_dim()) + " features but spec says " +
                          std::to_string(backbone_.feature_dim));
  Rng rng = rng_stream(seed, 0x4ead);
  int in = backbone_.feature_dim;
  for (int width : head_.fc_sizes) {
    dense_.emplace_back(in, width, rng);
    in = width;
  }
  dense_.emplace_back(in, 1, rng, 1.0f);
  relu_.resize(head_.fc_sizes.size());
}

Eigen::VectorXf Regressor::forward(const nn::FeatureBatch& input) {
  if (input.channels != backbone_.input_channels || input.height != backbone_.input_height ||
      input.width != backbone_.input_width)
    throw InvalidArgument("Regressor: input tensor shape does not match the backbone");
  nn::Matrix h = extractor_->forward(input);
  for (std::size_t i = 0; i < relu_.size(); ++i) {
    h = dense_[i].forward(h);
    relu_[i].forward(h);
  }
  const nn::Matrix unit = dense_.back().forward(h);
  Eigen::VectorXf raw = unit.row(0).transpose();
  raw = raw.array() * static_cast<float>(head_.output_scale) + static_cast<float>(head_.output_offset);
  return raw;
}

void Regressor::backward(const Eigen::VectorXf& grad_raw) {
  nn::Matrix g = (grad_raw * static_cast<float>(head_.output_scale)).transpose();
  const bool into_backbone = extractor_->trainable() && !backbone_.frozen;
  for (std::size_t i = dense_.size(); i-- > 0;) {
    const bool need_input = i > 0 || into_backbone;
    g = dense_[i].backward(g, need_input);
    if (i > 0) relu_[i - 1].backward(g);
  }
  if (into_backbone) extractor_->backward(g);
}

Eigen::MatrixXf Regressor::predict_raw(std::span<const Tensor3> inputs) {
  if (inputs.empty()) return Eigen::MatrixXf(0, 1);
  return forward(make_batch(inputs));
}

std::vector<nn::Parameter*> Regressor::trainable_parameters() {
  std::vector<nn::Parameter*> out;
  if (extractor_->trainable() && !backbone_.frozen) out = extractor_->parameters();
  for (auto& d : dense_)
    for (auto* p : d.parameters()) out.push_back(p);
  return out;
}

std::vector<nn::Parameter*> Regressor::all_parameters() {
  std::vector<nn::Parameter*> out = extractor_->parameters();
  for (auto& d : dense_)
    for (auto* p : d.parameters()) out.push_back(p);
  return out;
}

std::vector<nn::Matrix> Regressor::weights() {
  std::vector<nn::Matrix> out;
  for (auto* p : all_parameters()) out.push_back(p->value);
  return out;
}

void Regressor::set_weights(const std::vector<nn::Matrix>& weights) {
  auto params = all_parameters();
  if (params.size() != weights.size())
    throw LoadError("weights: expected " + std::to_string(params.size()) + " tensors, got " +
                    std::to_string(weights.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->value.rows() != weights[i].rows() || params[i]->value.cols() != weights[i].cols())
      throw LoadError("weights: tensor " + std::to_string(i) + " has the wrong shape");
    params[i]->value = weights[i];
  }
}

nn::FeatureBatch make_batch(std::span<const Tensor3> inputs) {
  std::vector<int> idx(inputs.size());
  std::iota(idx.begin(), idx.end(), 0);
  return make_batch(inputs, idx);
}

nn::FeatureBatch make_batch(std::span<const Tensor3> inputs, std::span<const int> indices) {
  if (indices.empty()) throw InvalidArgument("make_batch: empty batch");
  const Tensor3& first = inputs[indices[0]];
  const Eigen::Index plane = static_cast<Eigen::Index>(first.height) * first.width;
  nn::FeatureBatch b{static_cast<int>(indices.size()), first.channels, first.height, first.width, {}};
  b.values.resize(first.channels, plane * b.batch);
  for (int n = 0; n < b.batch; ++n) {
    const Tensor3& t = inputs[indices[n]];
    if (t.channels != first.channels || t.height != first.height || t.width != first.width)
      throw InvalidArgument("make_batch: tensors differ in shape");
    b.values.middleCols(n * plane, plane) = t.values;
  }
  return b;
}

Regressor build_model(const BackboneSpec& backbone, const HeadSpec& head, std::uint64_t seed,
                      std::unique_ptr<FeatureExtractor> external) {
  if (head.fc_sizes != std::vector<int>{512, 256, 64})
    throw InvalidArgument("build_model: head must have hidden layers 512/256/64");
  if (!(head.output_scale > 0) || !std::isfinite(head.output_offset))
    throw InvalidArgument("build_model: bad output scaling");
  std::unique_ptr<FeatureExtractor> extractor;
  if (backbone.name == BackboneKind::pretrained_large) {
    if (!external) throw InvalidArgument("build_model: pretrained_large needs an external extractor");
    extractor = std::move(external);
  } else {
    Rng rng = rng_stream(seed, 0xbacb);
    extractor = std::make_unique<ConvBackbone>(backbone.name, backbone.input_channels,
                                               backbone.input_height, backbone.input_width,
                                               backbone.frozen, rng);
  }
  return Regressor(backbone, head, std::move(extractor), seed);
}

// ---------------------------------------------------------------------------
// Losses

double LossFunction::value(std::span<const double> targets, std::span<const double> raw) const {
  if (targets.empty()) throw InvalidArgument("loss: empty batch");
  if (targets.size() != raw.size()) throw InvalidArgument("loss: length mismatch");
  double sum = 0;
  for (std::size_t i = 0; i < targets.size(); ++i)
    sum += kind_ == LossKind::circular ? circular_distance_raw(targets[i], raw[i])
                                       : std::abs(targets[i] - raw[i]);
  return sum / static_cast<double>(targets.size());
}

std::vector<double> LossFunction::gradient(std::span<const double> targets,
                                           std::span<const double> raw) const {
  if (targets.size() != raw.size() || targets.empty())
    throw InvalidArgument("loss gradient: bad batch");
  const double inv_n = 1.0 / static_cast<double>(targets.size());
  std::vector<double> g(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (kind_ == LossKind::circular) {
      g[i] = circular_loss_subgradient(Angle(targets[i]), raw[i]) * inv_n;
    } else {
      const double d = raw[i] - targets[i];
      g[i] = (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)) * inv_n;
    }
  }
  return g;
}

LossFunction loss_for_config(const TrainConfig& cfg) { return LossFunction(cfg.loss); }

// ---------------------------------------------------------------------------
// Training

SourceLookup corpus_lookup(std::span<const SourceImage> corpus) {
  auto index = std::make_shared<std::unordered_map<std::string, const SourceImage*>>();
  for (const auto& s : corpus) (*index)[s.id] = &s;
  return [index](const std::string& id) -> const SourceImage& {
    auto it = index->find(id);
    if (it == index->end()) throw InvalidArgument("unknown source id '" + id + "'");
    return *it->second;
  };
}

namespace {

struct PreparedSet {
  std::vector<Tensor3> inputs;
  std::vector<double> targets;
};

PreparedSet prepare(std::span<const RotatedSample> samples, const BackboneSpec& spec) {
  PreparedSet out;
  out.inputs.reserve(samples.size());
  for (const auto& s : samples) {
    out.inputs.push_back(preprocess_for_model(s.image, spec.input_height, spec.input_width));
    out.targets.push_back(s.signed_angle);
  }
  return out;
}

PreparedSet prepare(const SplitManifest& manifest, Split split, const SourceLookup& images,
                    const BackboneSpec& spec, FillPolicy fill) {
  PreparedSet out;
  for (const auto& e : manifest.entries) {
    if (e.split != split) continue;
    const RotatedSample s = make_rotated_sample(images(e.source_id), e.signed_angle, e.level, fill);
    out.inputs.push_back(preprocess_for_model(s.image, spec.input_height, spec.input_width));
    out.targets.push_back(e.signed_angle);
  }
  return out;
}

double validation_mae(Regressor& model, const PreparedSet& val, int batch_size) {
  double sum = 0;
  std::vector<int> idx;
  for (std::size_t start = 0; start < val.inputs.size(); start += batch_size) {
    idx.clear();
    for (std::size_t i = start; i < std::min(val.inputs.size(), start + batch_size); ++i)
      idx.push_back(static_cast<int>(i));
    const Eigen::VectorXf raw = model.forward(make_batch(val.inputs, idx));
    for (std::size_t k = 0; k < idx.size(); ++k)
      sum += circular_distance(Angle(val.targets[idx[k]]), wrap_degrees(static_cast<double>(raw[k])))
                 .degrees();
  }
  return sum / static_cast<double>(val.inputs.size());
}

ModelCheckpoint run_training(Regressor& model, const PreparedSet& train_set,
                             const PreparedSet& val_set, const TrainConfig& cfg,
                             const ProgressFn& progress, std::uint64_t model_seed) {
  if (cfg.batch_size < 1) throw InvalidArgument("train: batch_size must be >= 1");
  if (!(cfg.optimizer.learning_rate > 0)) throw InvalidArgument("train: learning_rate must be > 0");
  if (cfg.epochs < 0) throw InvalidArgument("train: epochs must be >= 0");
  if (train_set.inputs.empty()) throw InvalidArgument("train: empty train split");
  if (val_set.inputs.empty()) throw InvalidArgument("train: empty validation split");

  ModelCheckpoint ckpt;
  ckpt.backbone = model.backbone_spec();
  ckpt.head = model.head_spec();
  ckpt.train_config = cfg;
  ckpt.model_seed = model_seed;
  ckpt.weights = model.weights();
  ckpt.best_epoch = 0;

  const LossFunction loss = loss_for_config(cfg);
  const auto params = model.trainable_parameters();
  const auto n = static_cast<int>(train_set.inputs.size());
  std::vector<int> order(n);
  double best_mae = std::numeric_limits<double>::infinity();
  std::vector<double> targets, raw;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = rng_stream(cfg.seed, 0x5eed0000ULL + static_cast<std::uint64_t>(epoch));
    shuffle(std::span<int>(order), rng);
    double loss_sum = 0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, n - start);
      const std::span<const int> idx(order.data() + start, count);
      const Eigen::VectorXf out = model.forward(make_batch(train_set.inputs, idx));
      targets.assign(count, 0.0);
      raw.assign(count, 0.0);
      for (int k = 0; k < count; ++k) {
        targets[k] = train_set.targets[idx[k]];
        raw[k] = out[k];
        if (!std::isfinite(raw[k]))
          throw TrainingDiverged(epoch, "training diverged in epoch " + std::to_string(epoch) +
                                            ": non-finite model output");
      }
      const double value = loss.value(targets, raw);
      if (!std::isfinite(value))
        throw TrainingDiverged(epoch, "training diverged in epoch " + std::to_string(epoch) +
                                          ": non-finite loss");
      loss_sum += value * count;
      const std::vector<double> g = loss.gradient(targets, raw);
      Eigen::VectorXf grad(count);
      for (int k = 0; k < count; ++k) grad[k] = static_cast<float>(g[k]);
      nn::zero_grad(params);
      model.backward(grad);
      nn::adadelta_step(params, cfg.optimizer);
    }
    EpochRecord rec{epoch, loss_sum / n, validation_mae(model, val_set, std::max(cfg.batch_size, 64))};
    if (!std::isfinite(rec.train_loss))
      throw TrainingDiverged(epoch, "training diverged in epoch " + std::to_string(epoch));
    ckpt.history.push_back(rec);
    if (progress) progress(rec);
    if (rec.val_mae < best_mae) {
      best_mae = rec.val_mae;
      ckpt.weights = model.weights();
      ckpt.best_epoch = epoch;
    }
  }
  return ckpt;
}

}  // namespace

ModelCheckpoint train(Regressor& model, const SplitManifest& manifest, const SourceLookup& images,
                      const TrainConfig& cfg, const ProgressFn& progress) {
  const PreparedSet train_set = prepare(manifest, Split::train, images, model.backbone_spec(), cfg.fill);
  const PreparedSet val_set = prepare(manifest, Split::val, images, model.backbone_spec(), cfg.fill);
  ModelCheckpoint ckpt = run_training(model, train_set, val_set, cfg, progress, cfg.seed);
  ckpt.config_json = manifest.config_json;
  return ckpt;
}

ModelCheckpoint train(Regressor& model, std::span<const RotatedSample> train_samples,
                      std::span<const RotatedSample> val_samples, const TrainConfig& cfg,
                      const ProgressFn& progress) {
  return run_training(model, prepare(train_samples, model.backbone_spec()),
                      prepare(val_samples, model.backbone_spec()), cfg, progress, cfg.seed);
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[8] = {'O', 'A', 'D', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw LoadError("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(std::ostream& out, const ModelCheckpoint& c) {
  Json h;
  h["backbone"] = {{"name", to_string(c.backbone.name)},
                   {"feature_dim", c.backbone.feature_dim},
                   {"weights_origin", c.backbone.weights_origin == WeightsOrigin::pretrained ? "pretrained" : "random"},
                   {"input_height", c.backbone.input_height},
                   {"input_width", c.backbone.input_width},
                   {"input_channels", c.backbone.input_channels},
                   {"frozen", c.backbone.frozen}};
  h["head"] = {{"fc_sizes", c.head.fc_sizes},
               {"output_offset", c.head.output_offset},
               {"output_scale", c.head.output_scale}};
  const TrainConfig& t = c.train_config;
  h["train_config"] = {{"level", to_string(t.level)},
                       {"loss", to_string(t.loss)},
                       {"learning_rate", t.optimizer.learning_rate},
                       {"rho", t.optimizer.rho},
                       {"epsilon", t.optimizer.epsilon},
                       {"batch_size", t.batch_size},
                       {"epochs", t.epochs},
                       {"seed", t.seed},
                       {"fill", to_string(t.fill)}};
  Json hist = Json::array();
  for (const auto& r : c.history)
    hist.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_mae", r.val_mae}});
  h["history"] = hist;
  h["best_epoch"] = c.best_epoch;
  h["model_seed"] = c.model_seed;
  h["config"] = Json::parse(c.config_json);
  Json shapes = Json::array();
  for (const auto& w : c.weights) shapes.push_back({w.rows(), w.cols()});
  h["tensors"] = shapes;
  const std::string header = h.dump();

  out.write(kMagic, sizeof kMagic);
  write_pod<std::uint32_t>(out, c.format_version);
  write_pod<std::uint64_t>(out, header.size());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& w : c.weights)
    out.write(reinterpret_cast<const char*>(w.data()),
              static_cast<std::streamsize>(w.size() * sizeof(float)));
}

void save_checkpoint(const std::filesystem::path& path, const ModelCheckpoint& c) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint '" + path.string() + "'");
  save_checkpoint(out, c);
  if (!out) throw IoError("failed writing checkpoint '" + path.string() + "'");
}

ModelCheckpoint load_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw LoadError("checkpoint: bad magic, not an orientation checkpoint");
  ModelCheckpoint c;
  c.format_version = read_pod<std::uint32_t>(in);
  if (c.format_version != kCheckpointFormatVersion)
    throw LoadError("checkpoint: unsupported format version " + std::to_string(c.format_version));
  const auto len = read_pod<std::uint64_t>(in);
  if (len > (1ULL << 30)) throw LoadError("checkpoint: implausible header length");
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw LoadError("checkpoint: truncated header");
  try {
    const Json h = Json::parse(header);
    const Json& b = h.at("backbone");
    c.backbone.name = parse_backbone(b.at("name").get<std::string>());
    c.backbone.feature_dim = b.at("feature_dim").get<int>();
    c.backbone.weights_origin =
        b.at("weights_origin").get<std::string>() == "pretrained" ? WeightsOrigin::pretrained : WeightsOrigin::random;
    c.backbone.input_height = b.at("input_height").get<int>();
    c.backbone.input_width = b.at("input_width").get<int>();
    c.backbone.input_channels = b.at("input_channels").get<int>();
    c.backbone.frozen = b.at("frozen").get<bool>();
    const Json& hd = h.at("head");
    c.head.fc_sizes = hd.at("fc_sizes").get<std::vector<int>>();
    c.head.output_offset = hd.at("output_offset").get<double>();
    c.head.output_scale = hd.at("output_scale").get<double>();
    const Json& t = h.at("train_config");
    c.train_config.level = parse_level(t.at("level").get<std::string>());
    c.train_config.loss = parse_loss(t.at("loss").get<std::string>());
    c.train_config.optimizer.learning_rate = t.at("learning_rate").get<float>();
    c.train_config.optimizer.rho = t.at("rho").get<float>();
    c.train_config.optimizer.epsilon = t.at("epsilon").get<float>();
    c.train_config.batch_size = t.at("batch_size").get<int>();
    c.train_config.epochs = t.at("epochs").get<int>();
    c.train_config.seed = t.at("seed").get<std::uint64_t>();
    c.train_config.fill = parse_fill_policy(t.at("fill").get<std::string>());
    for (const auto& r : h.at("history"))
      c.history.push_back({r.at("epoch").get<int>(), r.at("train_loss").get<double>(),
                           r.at("val_mae").get<double>()});
    c.best_epoch = h.at("best_epoch").get<int>();
    c.model_seed = h.at("model_seed").get<std::uint64_t>();
    c.config_json = h.at("config").dump();
    for (const auto& s : h.at("tensors")) {
      const auto rows = s.at(0).get<Eigen::Index>();
      const auto cols = s.at(1).get<Eigen::Index>();
      if (rows < 0 || cols < 0 || rows * cols > (1LL << 28)) throw LoadError("checkpoint: bad tensor shape");
      nn::Matrix w(rows, cols);
      in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(float)));
      if (!in) throw LoadError("checkpoint: truncated weights");
      c.weights.push_back(std::move(w));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw LoadError(std::string("checkpoint: ") + ex.what());
  } catch (const InvalidArgument& ex) {
    throw LoadError(std::string("checkpoint: ") + ex.what());
  }
  for (const auto& r : c.history)
    if (!(r.val_mae >= 0 && r.val_mae <= 180)) throw LoadError("checkpoint: val MAE out of range");
  return c;
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  return load_checkpoint(in);
}

Regressor restore_model(const ModelCheckpoint& ckpt, std::unique_ptr<FeatureExtractor> external) {
  Regressor model = build_model(ckpt.backbone, ckpt.head, ckpt.model_seed, std::move(external));
  model.set_weights(ckpt.weights);
  return model;
}

Predictor::Predictor(const ModelCheckpoint& ckpt, std::unique_ptr<FeatureExtractor> external)
    : model_(restore_model(ckpt, std::move(external))) {}

double Predictor::predict_raw(const ImageU8& img) {
  const BackboneSpec& spec = model_.backbone_spec();
  const Tensor3 t = preprocess_for_model(img, spec.input_height, spec.input_width);
  return model_.predict_raw(std::span<const Tensor3>(&t, 1))(0, 0);
}

Angle predict_angle(const ModelCheckpoint& ckpt, const ImageU8& img) {
  Predictor p(ckpt);
  return p.predict(img);
}

}  // namespace oad
