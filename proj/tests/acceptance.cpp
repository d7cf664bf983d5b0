// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oad/evaluation.hpp"
#include "oad/image_io.hpp"
#include "oad/regressor.hpp"
#include "test_oracles.hpp"

namespace fs = std::filesystem;
using namespace oad;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string format(const char* fmt, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

Outcome loss_example() {
  const LossFunction circ(LossKind::circular), l1(LossKind::l1);
  const double t[] = {1.0}, p[] = {359.0};
  const Angle truth[] = {Angle(1.0)};
  const double c = circ.value(t, p), c_angle = circular_loss<double>(truth, p), l = l1.value(t, p);
  return {c == 2.0 && c_angle == 2.0 && l == 358.0,
          format("circular %.17g, circular(Angle) %.17g, L1 %.17g", c, c_angle, l)};
}

Outcome oracle_equivalence() {
  Rng rng(101);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const double t = uniform(rng, 0, 360), p = uniform(rng, 0, 360);
    const double d = circular_distance(Angle(t), Angle(p)).degrees();
    worst = std::max(worst, std::abs(d - testing_oracle::brute_distance(t, p)));
  }
  return {worst <= 1e-9, format("max |distance - oracle| = %.3g over 1e4 pairs", worst)};
}

Outcome l1_degeneracy() {
  Rng rng(102);
  const LossFunction circ(LossKind::circular), l1(LossKind::l1);
  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    const double t[] = {uniform(rng, -45, 45)}, p[] = {uniform(rng, -45, 45)};
    const double expect = std::abs(t[0] - p[0]);
    if (circ.value(t, p) != expect || l1.value(t, p) != expect) ++mismatches;
  }
  return {mismatches == 0, format("%d of 1e4 pairs differ from |t - p|", mismatches)};
}

Outcome gradient_check() {
  Rng rng(103);
  const double h = 1e-4;
  double worst = 0;
  int checked = 0;
  while (checked < 1000) {
    const double t = uniform(rng, 0, 360), p = uniform(rng, -360, 720);
    // Kinks where t - p is a multiple of 180.
    const double r = std::fmod(std::abs(t - p), 180.0);
    if (std::min(r, 180.0 - r) <= 0.01) continue;
    const double fd = (circular_distance_raw(t, p + h) - circular_distance_raw(t, p - h)) / (2 * h);
    worst = std::max(worst, std::abs(circular_loss_subgradient(Angle(t), p) - fd));
    ++checked;
  }
  return {worst <= 1e-3, format("max |subgradient - central difference| = %.3g over 1e3 points", worst)};
}

double mean_abs_diff(const ImageU8& a, const ImageU8& b) {
  double sum = 0;
  for (int c = 0; c < a.channels(); ++c)
    sum += (a.plane(c).cast<double>() - b.plane(c).cast<double>()).abs().sum();
  return sum / (static_cast<double>(a.height()) * a.width() * a.channels());
}

Outcome rotation_round_trip() {
  const CorpusKind kinds[] = {CorpusKind::stripes, CorpusKind::text_blocks, CorpusKind::gradient_scene};
  double worst[3] = {0, 0, 0};
  for (int i = 0; i < 20; ++i) {
    const ImageU8 img = synthesize_one(kinds[i % 3], 104, i).pixels;
    for (double a : {10.0, -10.0, 30.0, -30.0, 90.0, -90.0, 150.0}) {
      const ImageU8 back =
          rotate_image(rotate_image(img, a, FillPolicy::fill_black), -a, FillPolicy::fill_black);
      const CropRect r = fill_free_rect(img.height(), img.width(), a);
      worst[i % 3] = std::max(worst[i % 3], mean_abs_diff(crop(back, r), crop(img, r)));
    }
  }
  const double all = std::max({worst[0], worst[1], worst[2]});
  return {all <= 3.0, format("worst crop MAD over 20 images x 7 angles: stripes %.3f, text_blocks %.3f, "
                             "gradient_scene %.3f",
                             worst[0], worst[1], worst[2])};
}

Outcome classical_estimators() {
  Rng rng(105);
  std::vector<RotatedSample> set;
  for (int i = 0; i < 200; ++i) {
    SourceImage src;
    src.id = format("shape_%03d", i);
    src.pixels = i % 2 == 0 ? synthesize_one(CorpusKind::stripes, 105, i).pixels
                            : make_checkerboard(128, 128, uniform(rng, 8, 16), rng);
    set.push_back(make_rotated_sample(src, uniform(rng, -45, 45), DifficultyLevel::pm45,
                                      FillPolicy::fill_black));
  }
  bool pass = true;
  std::string detail;
  for (auto m : {ClassicalMethod::hough_pow, ClassicalMethod::hough_var, ClassicalMethod::fourier}) {
    auto method = make_classical_method(m);
    const EvalReport r = evaluate(*method, set);
    pass = pass && r.failures == 0 && r.mae <= 3.0;
    detail += format("%s %.3f (%d failed)  ", r.method.c_str(), r.mae, r.failures);
  }
  return {pass, detail};
}

// Stripe samples at 64x64; disjoint seeds keep the three splits apart.
std::vector<RotatedSample> stripe_samples(DifficultyLevel level, int n, std::uint64_t seed) {
  std::vector<RotatedSample> out;
  Rng rng = rng_stream(seed, 7);
  for (int i = 0; i < n; ++i) {
    const SourceImage src = synthesize_one(CorpusKind::stripes, seed, i, 64, 64);
    out.push_back(make_rotated_sample(src, sample_angle(level, rng), level, FillPolicy::fill_black));
  }
  return out;
}

constexpr int kEpochs = 30;

double train_and_test(DifficultyLevel level, LossKind loss) {
  const auto tr = stripe_samples(level, 2000, 201), va = stripe_samples(level, 200, 202),
             te = stripe_samples(level, 200, 203);
  Regressor model = build_model(desk_backbone(BackboneKind::tiny_desk, 64, 64),
                                HeadSpec::for_level(level), 7);
  TrainConfig cfg;
  cfg.level = level;
  cfg.loss = loss;
  cfg.epochs = kEpochs;
  cfg.batch_size = 32;
  cfg.seed = 7;
  const ModelCheckpoint ckpt = train(model, tr, va, cfg);
  auto method = make_regressor_method(ckpt);
  return evaluate(*method, te).mae;
}

Outcome restricted_learning() {
  const double mae = train_and_test(DifficultyLevel::pm45, LossKind::circular);
  return {mae < 5.0, format("pm45 test MAE %.3f after %d epochs on 2000 samples", mae, kEpochs)};
}

Outcome full_rotation_learning() {
  const double circ = train_and_test(DifficultyLevel::full360, LossKind::circular);
  const double l1 = train_and_test(DifficultyLevel::full360, LossKind::l1);
  return {circ < 20.0 && l1 >= circ + 5.0,
          format("full360 test MAE circular %.3f, L1 %.3f (gap %.3f, need >= 5)", circ, l1, l1 - circ)};
}

Outcome constant_predictor() {
  Rng rng(106);
  const SourceImage src = synthesize_one(CorpusKind::gradient_scene, 106, 0, 64, 64);
  std::vector<RotatedSample> set;
  set.reserve(10000);
  for (int i = 0; i < 10000; ++i)
    set.push_back(make_rotated_sample(src, sample_angle(DifficultyLevel::full360, rng),
                                      DifficultyLevel::full360, FillPolicy::fill_black));
  auto zero = make_function_method("constant-0", [](const ImageU8&) { return 0.0; });
  const double mae = evaluate(*zero, set).mae;
  return {std::abs(mae - testing_oracle::kUniformCircularMae) <= 2.0,
          format("MAE %.3f on 1e4 samples (expect 90 +- 2)", mae)};
}

Outcome applicability() {
  const SourceImage src = synthesize_one(CorpusKind::stripes, 107, 0, 64, 64);
  const std::vector<RotatedSample> set = {
      make_rotated_sample(src, 200.0, DifficultyLevel::full360, FillPolicy::fill_black)};
  int refused = 0;
  for (auto m : {ClassicalMethod::hough_pow, ClassicalMethod::hough_var, ClassicalMethod::fourier}) {
    auto method = make_classical_method(m);
    try {
      evaluate(*method, set);
    } catch (const MethodNotApplicable&) {
      ++refused;
    }
  }
  return {refused == 3, format("%d of 3 classical methods refused full360", refused)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

bool run_pipeline(const fs::path& dir) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::vector<std::string> steps = {
      "synthesize --kind mixed --n 300 --size 64 --level pm30 --seed 11 --out data",
      "train --manifest data/manifest.jsonl --epochs 2 --out model",
      "evaluate --method oad --checkpoint model/checkpoint.oad --manifest data/manifest.jsonl --out eval",
      "evaluate --method hough-var --manifest data/manifest.jsonl --out eval",
      "evaluate --method fourier --manifest data/manifest.jsonl --out eval",
      "compare eval/report_OAD-30_pm30.jsonl eval/report_hough-var_pm30.jsonl "
      "eval/report_fourier_pm30.jsonl --out eval",
  };
  for (const auto& args : steps) {
    const std::string cmd =
        "cd '" + dir.string() + "' && '" OAD_CLI_PATH "' " + args + " > /dev/null 2>> log.txt";
    if (std::system(cmd.c_str()) != 0) return false;
  }
  return true;
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "oad_acceptance_determinism";
  // Same relative paths inside both roots, so the echoed configs match too.
  const fs::path a = root / "first" / "run", b = root / "second" / "run";
  if (!run_pipeline(a) || !run_pipeline(b)) return {false, "pipeline command failed"};
  const char* artifacts[] = {"data/manifest.jsonl",           "model/checkpoint.oad",
                             "model/train_log.jsonl",         "eval/report_OAD-30_pm30.jsonl",
                             "eval/report_hough-var_pm30.jsonl", "eval/report_fourier_pm30.jsonl",
                             "eval/comparison.csv",           "eval/comparison.txt"};
  int same = 0, total = 0;
  std::string differing;
  for (const char* f : artifacts) {
    ++total;
    const std::string x = slurp(a / f), y = slurp(b / f);
    if (!x.empty() && x == y)
      ++same;
    else
      differing += std::string(" ") + f;
  }
  fs::remove_all(root);
  return {same == total, format("%d of %d artifacts byte-identical", same, total) +
                             (differing.empty() ? "" : ";" + differing + " differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"loss example (1, 359)", loss_example},
      {"oracle equivalence", oracle_equivalence},
      {"L1 degeneracy within +-45", l1_degeneracy},
      {"subgradient vs finite difference", gradient_check},
      {"rotation round trip", rotation_round_trip},
      {"classical estimators at pm45", classical_estimators},
      {"desk-scale learning at pm45", restricted_learning},
      {"desk-scale learning at full360, circular vs L1", full_rotation_learning},
      {"constant-0 predictor", constant_predictor},
      {"applicability enforcement", applicability},
      {"CLI pipeline determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("%s criterion %zu: %s | %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
