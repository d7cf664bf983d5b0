#include "oad/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace oad {

using Json = nlohmann::ordered_json;

std::string to_string(DifficultyLevel level) {
  switch (level) {
    case DifficultyLevel::pm30: return "pm30";
    case DifficultyLevel::pm45: return "pm45";
    case DifficultyLevel::full360: return "full360";
  }
  return "?";
}

DifficultyLevel parse_level(const std::string& text) {
  if (text == "pm30") return DifficultyLevel::pm30;
  if (text == "pm45") return DifficultyLevel::pm45;
  if (text == "full360") return DifficultyLevel::full360;
  throw InvalidArgument("unknown difficulty level '" + text + "' (expected pm30|pm45|full360)");
}

AngleRange sampling_range(DifficultyLevel level) {
  switch (level) {
    case DifficultyLevel::pm30: return {-30.0, 30.0};
    case DifficultyLevel::pm45: return {-45.0, 45.0};
    case DifficultyLevel::full360: return {0.0, 360.0};
  }
  return {0.0, 0.0};
}

double sample_angle(DifficultyLevel level, Rng& rng) {
  const auto [lo, hi] = sampling_range(level);
  return uniform(rng, lo, hi);
}

void validate_source(const SourceImage& img) {
  if (img.pixels.height() < kMinSourceSide || img.pixels.width() < kMinSourceSide)
    throw InvalidArgument("source image '" + img.id + "' is smaller than 64x64");
  if (img.pixels.channels() != 3)
    throw InvalidArgument("source image '" + img.id + "' is not 3-channel");
}

RotatedSample make_rotated_sample(const SourceImage& src, double signed_angle,
                                  DifficultyLevel level, FillPolicy policy) {
  RotatedSample s;
  s.source_id = src.id;
  s.image = rotate_image(src.pixels, signed_angle, policy);
  s.true_angle = Angle(signed_angle);
  s.signed_angle = signed_angle;
  s.level = level;
  return s;
}

// ---------------------------------------------------------------------------
// Procedural corpora

namespace {

using Rgb = std::array<double, 3>;

// Floating canvas that shapes are alpha-composited onto.
class Canvas {
 public:
  Canvas(int h, int w) : h_(h), w_(w), planes_(3, Plane<double>::Zero(h, w)) {}

  int height() const { return h_; }
  int width() const { return w_; }

  template <typename Coverage>
  void paint(const Rgb& color, double opacity, Coverage&& coverage) {
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x) {
        const double a = opacity * coverage(x + 0.5, y + 0.5);
        if (a <= 0) continue;
        for (int c = 0; c < 3; ++c) planes_[c](y, x) = (1 - a) * planes_[c](y, x) + a * color[c];
      }
  }

  template <typename Shader>
  void shade(Shader&& shader) {
    for (int y = 0; y < h_; ++y)
      for (int x = 0; x < w_; ++x) {
        const Rgb v = shader(x + 0.5, y + 0.5);
        for (int c = 0; c < 3; ++c) planes_[c](y, x) = v[c];
      }
  }

  ImageU8 to_image() const {
    std::vector<Plane<double>> p = planes_;
    return to_u8(Image<double>(std::move(p)));
  }

 private:
  int h_, w_;
  std::vector<Plane<double>> planes_;
};

// Anti-aliased coverage of a signed distance (negative inside), ~1.5px ramp.
double soft(double signed_distance, double ramp = 1.5) {
  return std::clamp(0.5 - signed_distance / ramp, 0.0, 1.0);
}

double rect_distance(double x, double y, double x0, double y0, double x1, double y1) {
  const double cx = (x0 + x1) / 2, cy = (y0 + y1) / 2;
  return std::max(std::abs(x - cx) - (x1 - x0) / 2, std::abs(y - cy) - (y1 - y0) / 2);
}

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

Rgb random_color(Rng& rng, double lo, double hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

ImageU8 render_stripes(int h, int w, Rng& rng) {
  Canvas canvas(h, w);
  const Rgb light = random_color(rng, 150, 240);
  const Rgb dark = random_color(rng, 30, 110);
  const double period = uniform(rng, 10, 22);
  const double phase = uniform(rng, 0, period);
  canvas.shade([&](double, double y) {
    const double t = std::clamp(0.5 + 2.0 * std::cos(2 * M_PI * (y - phase) / period), 0.0, 1.0);
    return mix(dark, light, t);
  });
  // Darker band along the bottom fixes which way is up.
  const double band_top = h * uniform(rng, 0.72, 0.82);
  const Rgb band = {uniform(rng, 10, 40), uniform(rng, 10, 40), uniform(rng, 40, 90)};
  canvas.paint(band, 0.9, [&](double, double y) { return soft(band_top - y); });
  return canvas.to_image();
}

ImageU8 render_text_blocks(int h, int w, Rng& rng) {
  Canvas canvas(h, w);
  const Rgb paper = random_color(rng, 215, 250);
  canvas.shade([&](double, double) { return paper; });
  const Rgb ink = random_color(rng, 15, 70);
  const double left = uniform(rng, 6, 12);
  const double right = w - uniform(rng, 6, 12);
  const double bottom = h - uniform(rng, 16, 28);
  double y = uniform(rng, 6, 12);

  // Title: one thick bar at the top.
  const double title_h = uniform(rng, 7, 10);
  const double title_w = (right - left) * uniform(rng, 0.4, 0.7);
  canvas.paint(ink, 1.0, [&, y](double px, double py) {
    return soft(rect_distance(px, py, left, y, left + title_w, y + title_h));
  });
  y += title_h + uniform(rng, 6, 9);

  const double pitch = uniform(rng, 9, 13);
  const double xh = uniform(rng, 3.5, 5.0);
  while (y + pitch < bottom) {
    if (uniform01(rng) < 0.12) {  // paragraph break
      y += pitch;
      continue;
    }
    const double line_end = right - uniform(rng, 0, (right - left) * 0.35);
    double x = left + (uniform01(rng) < 0.2 ? uniform(rng, 6, 12) : 0.0);
    while (x < line_end - 6) {
      const double word_w = std::min(uniform(rng, 6, 20), line_end - x);
      const double top = y + pitch - xh;
      canvas.paint(ink, 1.0, [&](double px, double py) {
        return soft(rect_distance(px, py, x, top, x + word_w, y + pitch));
      });
      // Ascenders rise above the x-height only.
      const int ascenders = uniform_int(rng, 0, 2);
      for (int a = 0; a < ascenders; ++a) {
        const double ax = x + uniform(rng, 0, std::max(0.0, word_w - 2));
        const double rise = uniform(rng, 2.5, 4.0);
        canvas.paint(ink, 1.0, [&](double px, double py) {
          return soft(rect_distance(px, py, ax, top - rise, ax + 1.6, top));
        });
      }
      x += word_w + uniform(rng, 3, 5);
    }
    y += pitch;
  }
  return canvas.to_image();
}

ImageU8 render_gradient_scene(int h, int w, Rng& rng) {
  Canvas canvas(h, w);
  const double horizon = h * uniform(rng, 0.45, 0.65);
  const Rgb sky_top = {uniform(rng, 50, 110), uniform(rng, 100, 160), uniform(rng, 200, 250)};
  const Rgb sky_low = {uniform(rng, 180, 230), uniform(rng, 200, 235), uniform(rng, 225, 255)};
  const Rgb ground_top = {uniform(rng, 60, 120), uniform(rng, 110, 160), uniform(rng, 30, 80)};
  const Rgb ground_low = {uniform(rng, 25, 60), uniform(rng, 40, 80), uniform(rng, 10, 40)};
  canvas.shade([&](double, double y) {
    if (y < horizon) return mix(sky_top, sky_low, y / horizon);
    return mix(ground_top, ground_low, (y - horizon) / (h - horizon));
  });
  // Soften the horizon seam.
  canvas.paint(ground_top, 1.0, [&](double, double y) { return soft(horizon - y) * (y < horizon); });

  const double sun_r = uniform(rng, 6, 12);
  const double sun_x = uniform(rng, sun_r + 4, w - sun_r - 4);
  const double sun_y = uniform(rng, sun_r + 3, std::max(sun_r + 4, horizon * 0.5));
  canvas.paint({250, 240, 180}, 1.0, [&](double x, double y) {
    return soft(std::hypot(x - sun_x, y - sun_y) - sun_r);
  });

  const int trees = uniform_int(rng, 2, 5);
  for (int i = 0; i < trees; ++i) {
    const double tx = uniform(rng, 8, w - 8);
    const double base = horizon + uniform(rng, 2, 12);
    const double trunk_h = uniform(rng, 8, 16);
    const double trunk_w = uniform(rng, 3, 5);
    const double crown_r = uniform(rng, 5, 10);
    const Rgb trunk = {uniform(rng, 70, 110), uniform(rng, 45, 70), uniform(rng, 20, 40)};
    const Rgb crown = {uniform(rng, 20, 50), uniform(rng, 70, 120), uniform(rng, 20, 50)};
    canvas.paint(trunk, 1.0, [&](double x, double y) {
      return soft(rect_distance(x, y, tx - trunk_w / 2, base - trunk_h, tx + trunk_w / 2, base));
    });
    canvas.paint(crown, 1.0, [&](double x, double y) {
      return soft(std::hypot(x - tx, y - (base - trunk_h - crown_r * 0.6)) - crown_r);
    });
  }
  return canvas.to_image();
}

const char* kind_prefix(CorpusKind kind) {
  switch (kind) {
    case CorpusKind::stripes: return "stripes";
    case CorpusKind::text_blocks: return "text";
    case CorpusKind::gradient_scene: return "scene";
    case CorpusKind::mixed: return "mixed";
  }
  return "img";
}

}  // namespace

std::string to_string(CorpusKind kind) {
  switch (kind) {
    case CorpusKind::stripes: return "stripes";
    case CorpusKind::text_blocks: return "text_blocks";
    case CorpusKind::gradient_scene: return "gradient_scene";
    case CorpusKind::mixed: return "mixed";
  }
  return "?";
}

CorpusKind parse_corpus_kind(const std::string& text) {
  if (text == "stripes") return CorpusKind::stripes;
  if (text == "text_blocks") return CorpusKind::text_blocks;
  if (text == "gradient_scene") return CorpusKind::gradient_scene;
  if (text == "mixed") return CorpusKind::mixed;
  throw InvalidArgument("unknown corpus kind '" + text +
                        "' (expected stripes|text_blocks|gradient_scene|mixed)");
}

SourceImage synthesize_one(CorpusKind kind, std::uint64_t seed, int index, int height, int width) {
  if (height < kMinSourceSide || width < kMinSourceSide)
    throw InvalidArgument("synthesize: images must be at least 64x64");
  Rng rng = rng_stream(seed, static_cast<std::uint64_t>(index));
  CorpusKind actual = kind;
  if (kind == CorpusKind::mixed) {
    static constexpr CorpusKind kCycle[] = {CorpusKind::stripes, CorpusKind::text_blocks,
                                            CorpusKind::gradient_scene};
    actual = kCycle[index % 3];
  }
  SourceImage out;
  char id[64];
  std::snprintf(id, sizeof id, "%s_%06d", kind_prefix(kind), index);
  out.id = id;
  switch (actual) {
    case CorpusKind::stripes: out.pixels = render_stripes(height, width, rng); break;
    case CorpusKind::text_blocks: out.pixels = render_text_blocks(height, width, rng); break;
    case CorpusKind::gradient_scene: out.pixels = render_gradient_scene(height, width, rng); break;
    case CorpusKind::mixed: break;
  }
  return out;
}

std::vector<SourceImage> synthesize_oriented_corpus(int n, CorpusKind kind, std::uint64_t seed,
                                                    int height, int width) {
  if (n < 1) throw InvalidArgument("synthesize_oriented_corpus: n must be >= 1");
  std::vector<SourceImage> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) out.push_back(synthesize_one(kind, seed, i, height, width));
  return out;
}

ImageU8 make_checkerboard(int height, int width, double cell, Rng& rng) {
  Canvas canvas(height, width);
  const Rgb a = random_color(rng, 170, 240);
  const Rgb b = random_color(rng, 20, 90);
  const double ox = uniform(rng, 0, 2 * cell);
  const double oy = uniform(rng, 0, 2 * cell);
  canvas.shade([&](double x, double y) {
    const double v = std::sin(M_PI * (x + ox) / cell) * std::sin(M_PI * (y + oy) / cell);
    return mix(b, a, std::clamp(0.5 + 3.0 * v, 0.0, 1.0));
  });
  return canvas.to_image();
}

// ---------------------------------------------------------------------------
// Splits and manifests

std::string to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

Split parse_split(const std::string& text) {
  if (text == "train") return Split::train;
  if (text == "val") return Split::val;
  if (text == "test") return Split::test;
  throw InvalidArgument("unknown split '" + text + "'");
}

std::vector<ManifestEntry> SplitManifest::select(Split split) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == split) out.push_back(e);
  return out;
}

SplitManifest build_split(std::span<const std::string> corpus_ids, DifficultyLevel level,
                          std::uint64_t seed, SplitCounts counts,
                          std::span<const std::string> discard_ids) {
  if (counts.train < 0 || counts.val < 0 || counts.test < 0)
    throw InvalidArgument("build_split: negative split count");
  const std::unordered_set<std::string> discard(discard_ids.begin(), discard_ids.end());
  std::unordered_set<std::string> seen;
  std::vector<std::string> pool;
  for (const auto& id : corpus_ids) {
    if (!seen.insert(id).second) throw InvalidArgument("build_split: duplicate source id '" + id + "'");
    if (!discard.contains(id)) pool.push_back(id);
  }
  if (static_cast<std::size_t>(counts.total()) > pool.size())
    throw InvalidArgument("build_split: requested " + std::to_string(counts.total()) +
                          " entries but only " + std::to_string(pool.size()) +
                          " usable images remain after discards");

  Rng order = rng_stream(seed, 0);
  shuffle(std::span<std::string>(pool), order);

  SplitManifest m;
  m.seed = seed;
  m.level = level;
  m.counts = counts;
  m.discard_ids.assign(discard_ids.begin(), discard_ids.end());
  const int bounds[] = {counts.train, counts.train + counts.val, counts.total()};
  for (int i = 0; i < counts.total(); ++i) {
    Rng rng = rng_stream(seed, static_cast<std::uint64_t>(i) + 1);
    ManifestEntry e;
    e.source_id = pool[i];
    e.split = i < bounds[0] ? Split::train : (i < bounds[1] ? Split::val : Split::test);
    e.signed_angle = sample_angle(level, rng);
    e.level = level;
    m.entries.push_back(std::move(e));
  }
  return m;
}

SplitManifest build_split(std::span<const SourceImage> corpus, DifficultyLevel level,
                          std::uint64_t seed, SplitCounts counts,
                          std::span<const std::string> discard_ids) {
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& s : corpus) ids.push_back(s.id);
  return build_split(std::span<const std::string>(ids), level, seed, counts, discard_ids);
}

void write_manifest(std::ostream& out, const SplitManifest& m) {
  Json header;
  header["type"] = "header";
  header["seed"] = m.seed;
  header["level"] = to_string(m.level);
  header["counts"] = {{"train", m.counts.train}, {"val", m.counts.val}, {"test", m.counts.test}};
  header["discard_count"] = m.discard_ids.size();
  header["discard_ids"] = m.discard_ids;
  header["config"] = Json::parse(m.config_json);
  out << header.dump() << '\n';
  for (const auto& e : m.entries) {
    Json rec;
    rec["source_id"] = e.source_id;
    rec["split"] = to_string(e.split);
    rec["signed_angle"] = e.signed_angle;
    rec["level"] = to_string(e.level);
    out << rec.dump() << '\n';
  }
}

void write_manifest(const std::filesystem::path& path, const SplitManifest& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  write_manifest(out, m);
  if (!out) throw IoError("failed writing manifest '" + path.string() + "'");
}

SplitManifest read_manifest(std::istream& in) {
  SplitManifest m;
  std::string line;
  if (!std::getline(in, line)) throw LoadError("manifest: missing header record");
  try {
    const Json header = Json::parse(line);
    if (header.value("type", "") != "header") throw LoadError("manifest: first record is not a header");
    m.seed = header.at("seed").get<std::uint64_t>();
    m.level = parse_level(header.at("level").get<std::string>());
    m.counts.train = header.at("counts").at("train").get<int>();
    m.counts.val = header.at("counts").at("val").get<int>();
    m.counts.test = header.at("counts").at("test").get<int>();
    m.discard_ids = header.value("discard_ids", std::vector<std::string>{});
    m.config_json = header.contains("config") ? header["config"].dump() : "{}";
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const Json rec = Json::parse(line);
      ManifestEntry e;
      e.source_id = rec.at("source_id").get<std::string>();
      e.split = parse_split(rec.at("split").get<std::string>());
      e.signed_angle = rec.at("signed_angle").get<double>();
      e.level = parse_level(rec.at("level").get<std::string>());
      m.entries.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& ex) {
    throw LoadError(std::string("manifest: ") + ex.what());
  } catch (const InvalidArgument& ex) {
    throw LoadError(std::string("manifest: ") + ex.what());
  }
  const std::set<std::string> discard(m.discard_ids.begin(), m.discard_ids.end());
  std::set<std::string> ids;
  for (const auto& e : m.entries) {
    if (!ids.insert(e.source_id).second)
      throw LoadError("manifest: source id '" + e.source_id + "' appears more than once");
    if (discard.contains(e.source_id))
      throw LoadError("manifest: discarded id '" + e.source_id + "' has an entry");
  }
  return m;
}

SplitManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  return read_manifest(in);
}

std::vector<std::string> read_discard_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open discard list '" + path.string() + "'");
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (!line.empty()) ids.push_back(line);
  }
  return ids;
}

void write_discard_list(const std::filesystem::path& path, std::span<const std::string> ids) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write discard list '" + path.string() + "'");
  for (const auto& id : ids) out << id << '\n';
}

Tensor3 preprocess_for_model(const ImageU8& img, int height, int width) {
  if (img.empty()) throw InvalidArgument("preprocess_for_model: empty image");
  if (height < 1 || width < 1) throw InvalidArgument("preprocess_for_model: bad target size");
  Tensor3 t;
  t.channels = img.channels();
  t.height = height;
  t.width = width;
  t.values.resize(t.channels, static_cast<Eigen::Index>(height) * width);
  for (int c = 0; c < t.channels; ++c) {
    const Plane<float> src = img.plane(c).cast<float>();
    const Plane<float> resized = (src.rows() == height && src.cols() == width)
                                     ? src
                                     : resize_bilinear(src, height, width);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        t.values(c, static_cast<Eigen::Index>(y) * width + x) = (resized(y, x) - 128.0f) / 128.0f;
  }
  return t;
}

}  // namespace oad
