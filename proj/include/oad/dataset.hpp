#pragma once

// Rotation-labelled datasets built from an upright corpus: difficulty levels,
// procedural corpora, split manifests and model input preprocessing.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "oad/angle.hpp"
#include "oad/image.hpp"
#include "oad/random.hpp"
#include "oad/rotation.hpp"

namespace oad {

enum class DifficultyLevel { pm30, pm45, full360 };

std::string to_string(DifficultyLevel level);
DifficultyLevel parse_level(const std::string& text);

/// Closed-open sampling range [lo, hi) of signed rotations for a level.
struct AngleRange {
  double lo;
  double hi;
};
AngleRange sampling_range(DifficultyLevel level);

/// Uniform draw from the level's range.
double sample_angle(DifficultyLevel level, Rng& rng);

inline constexpr int kMinSourceSide = 64;

struct SourceImage {
  std::string id;
  ImageU8 pixels;
  bool assumed_upright = true;
};

/// Rejects images smaller than 64x64 or without three channels.
void validate_source(const SourceImage& img);

struct RotatedSample {
  std::string source_id;
  ImageU8 image;
  Angle true_angle;
  double signed_angle = 0;
  DifficultyLevel level = DifficultyLevel::pm30;
};

RotatedSample make_rotated_sample(const SourceImage& src, double signed_angle,
                                  DifficultyLevel level, FillPolicy policy);

enum class CorpusKind { stripes, text_blocks, gradient_scene, mixed };
std::string to_string(CorpusKind kind);
CorpusKind parse_corpus_kind(const std::string& text);

/// Procedural upright images with an unambiguous "up". Image i depends only on
/// (seed, i, kind, size), so generation order does not matter.
std::vector<SourceImage> synthesize_oriented_corpus(int n, CorpusKind kind, std::uint64_t seed,
                                                    int height = 128, int width = 128);
SourceImage synthesize_one(CorpusKind kind, std::uint64_t seed, int index, int height = 128,
                           int width = 128);

/// Two orthogonal line families; used for the classical-estimator checks.
ImageU8 make_checkerboard(int height, int width, double cell, Rng& rng);

enum class Split { train, val, test };
std::string to_string(Split split);
Split parse_split(const std::string& text);

struct SplitCounts {
  int train = 0;
  int val = 0;
  int test = 0;
  int total() const { return train + val + test; }
};

struct ManifestEntry {
  std::string source_id;
  Split split = Split::train;
  double signed_angle = 0;
  DifficultyLevel level = DifficultyLevel::pm30;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct SplitManifest {
  std::uint64_t seed = 0;
  DifficultyLevel level = DifficultyLevel::pm30;
  SplitCounts counts;
  std::vector<ManifestEntry> entries;
  std::vector<std::string> discard_ids;
  /// Free-form provenance (effective CLI config) echoed into the header.
  std::string config_json = "{}";

  std::vector<ManifestEntry> select(Split split) const;
};

SplitManifest build_split(std::span<const std::string> corpus_ids, DifficultyLevel level,
                          std::uint64_t seed, SplitCounts counts,
                          std::span<const std::string> discard_ids = {});
SplitManifest build_split(std::span<const SourceImage> corpus, DifficultyLevel level,
                          std::uint64_t seed, SplitCounts counts,
                          std::span<const std::string> discard_ids = {});

void write_manifest(std::ostream& out, const SplitManifest& manifest);
void write_manifest(const std::filesystem::path& path, const SplitManifest& manifest);
SplitManifest read_manifest(std::istream& in);
SplitManifest read_manifest(const std::filesystem::path& path);

std::vector<std::string> read_discard_list(const std::filesystem::path& path);
void write_discard_list(const std::filesystem::path& path, std::span<const std::string> ids);

/// Channel-planar float tensor: `values` is channels x (height * width) with
/// column index y * width + x.
struct Tensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  Eigen::MatrixXf values;
};

/// Bilinear resize to (height, width), then (v - 128) / 128 so mid-gray maps
/// to 0 and values lie in [-1, 1).
Tensor3 preprocess_for_model(const ImageU8& img, int height, int width);

}  // namespace oad
