// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and time limits are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "instances.hpp"
#include "oracles.hpp"
#include "roi_oracle.hpp"
#include "toy.hpp"
#include "ugciqa/config.hpp"
#include "ugciqa/error.hpp"
#include "ugciqa/nss.hpp"
#include "ugciqa/patcher.hpp"
#include "ugciqa/psych.hpp"
#include "ugciqa/qmap.hpp"
#include "ugciqa/rng.hpp"
#include "ugciqa/sampler.hpp"
#include "ugciqa/train.hpp"

using namespace ugciqa;
using namespace ugciqa::nn;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Outcome roi_pool_oracle() {
  Stopwatch sw;
  Rng rng(2024);
  int mismatched = 0;
  for (int t = 0; t < 100; ++t) {
    const auto rc = oracle::random_roi_case(rng);
    const Tensor pooled = roi_pool(rc.feat, rc.roi, rc.image_w, rc.image_h);
    const auto got = pooled.values();
    const auto want = oracle::roi_pool(rc);
    if (got.size() != want.size() || !std::equal(want.begin(), want.end(), got.begin()))
      ++mismatched;
  }
  const double s = sw.seconds();
  return {mismatched == 0 && s < 5.0, fmt("%d/100 cases differ from the oracle, %.3f s (limit 5 s)",
                                          mismatched, s)};
}

// Small inputs keep every ReLU and max-pool switch farther than eps from its
// kink; on larger inputs a 1e-4 step can cross one and the central difference
// then measures a different linear piece.
Outcome gradient_check() {
  Stopwatch sw;
  QualityModel m(fixtures::toy_config(ModelKind::kFeedback), 12);
  const std::size_t params = m.parameter_count();
  double err = 0.0;
  for (std::uint64_t seed = 8; seed < 12; ++seed)
    err = std::max(err, grad_check(m, fixtures::ramp_dataset(1, 16, seed)[0], 1e-4));
  const double s = sw.seconds();
  return {params <= 5000 && err < 1e-3 && s < 30.0,
          fmt("%zu parameters, max relative error %.3g over 4 inputs (limit 1e-3), eps 1e-4, "
              "%.1f s (limit 30 s)",
              params, err, s)};
}

// Wider than the toy model so 32 pictures can be memorized in 500 steps;
// full-batch steps make every loss entry the exact training-set MSE.
Outcome overfit() {
  Stopwatch sw;
  const auto data = fixtures::ramp_dataset(32, 64, 1);
  ModelConfig mc = fixtures::toy_config(ModelKind::kFeedback);
  mc.backbone.widths = {8, 16};
  mc.backbone.out_channels = 16;
  mc.head.hidden = 32;
  QualityModel m(mc, 3);
  TrainConfig cfg;
  cfg.pad_side = 64;
  cfg.batch_size = 32;
  cfg.epochs = 500;
  cfg.max_steps = 500;
  cfg.lr_backbone = 1e-3;
  cfg.lr_head = 1e-2;
  const auto r = train(m, data, cfg);
  const double s = sw.seconds();
  const auto first = std::find_if(r.loss_curve.begin(), r.loss_curve.end(),
                                  [](double l) { return l < 1.0; });
  const double best = *std::min_element(r.loss_curve.begin(), r.loss_curve.end());
  const bool reached = first != r.loss_curve.end();
  return {reached && s < 300.0,
          fmt("training MSE first below 1.0 at step %ld (best %.3f over %d steps, limit 500), "
              "%.1f s (limit 300 s)",
              reached ? static_cast<long>(first - r.loss_curve.begin()) : -1L, best, r.steps, s)};
}

Outcome weight_sharing() {
  int mismatched = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const QualityModel m(fixtures::toy_config(ModelKind::kRoIPool), 1000 + seed);
    const Tensor x = Tensor::from_image(fixtures::noise_image(32, 32, 3, seed));
    const Rect whole{0, 0, 32, 32};
    const ModelOutput out = m.forward(x, std::span<const Rect>(&whole, 1));
    if (out.patches.at(0).item() != out.picture.item()) ++mismatched;
  }
  return {mismatched == 0, fmt("%d/20 initializations with a differing whole-image roi score",
                               mismatched)};
}

Outcome correlation_oracles() {
  Rng rng(77);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const int n = static_cast<int>(rng.uniform_int(3, 60));
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = rng.normal();
      y[i] = rng.uniform(-1.0, 1.0) * x[i] + rng.normal();
      if (t % 3 == 1) x[i] = std::round(2.0 * x[i]);
      if (t % 3 == 2) y[i] = std::round(y[i]);
    }
    if (*std::min_element(x.begin(), x.end()) == *std::max_element(x.begin(), x.end())) continue;
    if (*std::min_element(y.begin(), y.end()) == *std::max_element(y.begin(), y.end())) continue;
    worst = std::max(worst, std::abs(lcc(x, y) - oracle::pearson(x, y)));
    worst = std::max(worst, std::abs(srcc(x, y) - oracle::spearman(x, y)));
  }
  int tie_mismatch = 0;
  for (int code = 0; code < 256; ++code) {
    const std::vector<double> v{double(code & 3), double((code >> 2) & 3),
                                double((code >> 4) & 3), double((code >> 6) & 3)};
    const auto got = average_ranks(v);
    const auto want = oracle::enumerated_ranks(v);
    if (!std::equal(got.begin(), got.end(), want.begin())) ++tie_mismatch;
  }
  return {worst <= 1e-12 && tie_mismatch == 0,
          fmt("max |metric - oracle| %.3g over 1000 pairs (limit 1e-12), %d/256 tie patterns "
              "differ from enumeration",
              worst, tie_mismatch)};
}

Outcome patch_constraints() {
  const int sizes[5][2] = {{640, 640}, {1920, 1080}, {1080, 1920}, {500, 333}, {97, 61}};
  const double scales[3] = {0.4, 0.3, 0.2};
  long violations = 0, wrong_size = 0;
  double worst_area = 0.0;
  for (const auto& sz : sizes) {
    const int w = sz[0], h = sz[1];
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
      const auto p = propose_patches(w, h, seed);
      violations += static_cast<long>(validate_patchset(w, h, p).size());
      for (int i = 0; i < 3; ++i) {
        const int ew = static_cast<int>(std::floor(scales[i] * w + 0.5));
        const int eh = static_cast<int>(std::floor(scales[i] * h + 0.5));
        if (p[i].rect.width() != ew || p[i].rect.height() != eh) ++wrong_size;
        // Rounding each side by at most half a pixel bounds the area error.
        const double bound = (0.5 * w + 0.5 * h + 0.25) * scales[i] / (static_cast<double>(w) * h) +
                             0.25 / (static_cast<double>(w) * h);
        const double frac = static_cast<double>(p[i].rect.area()) / (static_cast<double>(w) * h);
        worst_area = std::max(worst_area, std::abs(frac - scales[i] * scales[i]) / bound);
      }
    }
  }
  return {violations == 0 && wrong_size == 0 && worst_area <= 1.0,
          fmt("%ld validator violations and %ld mis-sized patches over 5 sizes x 10000 seeds; "
              "area error at most %.2f of the rounding bound around 16%%/9%%/4%%",
              violations, wrong_size, worst_area)};
}

MosTable uniform_truth(int n, double lo, double hi, std::uint64_t seed) {
  Rng rng(seed);
  MosTable t;
  for (int i = 0; i < n; ++i) t[fmt("c%03d", i)].mos = rng.uniform(lo, hi);
  return t;
}

double ranking_srcc(const MosTable& truth, const MosTable& mos) {
  std::vector<double> a, b;
  for (const auto& [id, e] : truth) {
    a.push_back(e.mos);
    b.push_back(mos.at(id).mos);
  }
  return srcc(a, b);
}

Outcome study_recovery() {
  double worst_srcc = 1.0;
  int spam_kept = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const MosTable truth = uniform_truth(50, 10.0, 90.0, derive_seed(seed, 1));
    Rng rng(derive_seed(seed, 2));
    std::vector<RaterModel> raters;
    for (int r = 0; r < 35; ++r) {
      RaterModel m;
      m.gain = rng.uniform(0.5, 2.0);
      m.bias = rng.uniform(-20.0, 20.0);
      m.noise_sigma = 5.0;
      raters.push_back(m);
    }
    for (int r = 0; r < 5; ++r) {
      RaterModel m;
      m.spam_mode = SpamMode::kConstant;
      m.spam_constant = 20.0 + 15.0 * r;
      raters.push_back(m);
    }
    const auto sessions = simulate_raters(truth, raters, kHitSizeInitial, derive_seed(seed, 3));
    const auto accepted = reject_subjects(sessions, RejectionPolicy{});
    for (std::size_t r = 35; r < raters.size(); ++r)
      spam_kept += static_cast<int>(accepted.count(sessions[r].subject_id));
    worst_srcc = std::min(worst_srcc, ranking_srcc(truth, compute_mos(flatten(sessions), accepted)));
  }

  // Noise-free raters keep every gain/bias combination inside the raw range,
  // so no rating is clamped.
  const MosTable truth = uniform_truth(50, 20.0, 45.0, 9);
  Rng rng(10);
  std::vector<RaterModel> clean;
  for (int r = 0; r < 35; ++r) {
    RaterModel m;
    m.gain = rng.uniform(0.5, 2.0);
    m.bias = rng.uniform(-9.0, 10.0);
    clean.push_back(m);
  }
  const auto sessions = simulate_raters(truth, clean, kHitSizeInitial, 11);
  const auto accepted = reject_subjects(sessions, RejectionPolicy{});
  const double consistency =
      inter_subject_consistency(flatten(sessions), accepted, kConsistencySplits, 12);
  return {worst_srcc >= 0.95 && spam_kept == 0 && std::abs(consistency - 1.0) <= 1e-9,
          fmt("min recovery SRCC %.4f over 5 seeds (limit 0.95), %d/25 constant spammers "
              "accepted, noise-free split LCC %.12f over 25 splits (%zu/35 accepted)",
              worst_srcc, spam_kept, consistency, accepted.size())};
}

Outcome znormalize_affine() {
  Rng rng(5);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = static_cast<int>(rng.uniform_int(3, 60));
    const double a = rng.uniform(0.05, 20.0), b = rng.uniform(-100.0, 100.0);
    std::vector<double> x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x[i] = rng.uniform(1.0, 100.0);
      y[i] = a * x[i] + b;
    }
    const auto zx = znormalize(x), zy = znormalize(y);
    for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(zx[i] - zy[i]));
  }
  return {worst <= 1e-12, fmt("max |z(a x + b) - z(x)| %.3g over 100 cases (limit 1e-12)", worst)};
}

Outcome sampler_quality() {
  Stopwatch sw;
  double worst_ratio = 0.0;
  int above_random = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto p = fixtures::random_sampling_problem(500 + s, 15, 5);
    const double j = sampling_objective(p, greedy_sample(p, s));
    const double opt = fixtures::brute_force_optimum(p);
    worst_ratio = std::max(worst_ratio, opt > 0.0 ? j / opt : (j > 0.0 ? INFINITY : 1.0));
    above_random += j > fixtures::random_subset_mean(p, 100, derive_seed(s, 9));
  }
  const double secs = sw.seconds();
  return {worst_ratio <= 1.10 && above_random == 0 && secs < 60.0,
          fmt("worst greedy/optimum %.4f (limit 1.10), %d/20 instances worse than the random "
              "mean, %.1f s (limit 60 s)",
              worst_ratio, above_random, secs)};
}

Outcome nss_sanity() {
  Rng rng(31);
  std::vector<double> gauss(1000000), lap(1000000);
  for (auto& v : gauss) v = rng.normal();
  for (auto& v : lap) {
    const double u = rng.uniform(-0.5, 0.5);
    v = (u < 0 ? 1.0 : -1.0) * std::log(1.0 - 2.0 * std::abs(u));
  }
  const double ag = ggd_fit(gauss).alpha, al = ggd_fit(lap).alpha;

  std::vector<ImageBuf> corpus;
  for (int i = 0; i < 20; ++i) corpus.push_back(fixtures::natural_image(192, 192, 100 + i));
  const NiqeModel model = niqe_fit(corpus);
  int ranked = 0;
  for (int i = 0; i < 50; ++i) {
    const ImageBuf clean = fixtures::natural_image(192, 192, 1000 + i);
    const ImageBuf noisy = fixtures::add_noise(clean, 0.1, 2000 + i);
    ranked += niqe_score(noisy, model) > niqe_score(clean, model);
  }
  return {std::abs(ag - 2.0) <= 0.05 && std::abs(al - 1.0) <= 0.05 && ranked >= 45,
          fmt("ggd alpha %.4f on gaussian, %.4f on laplacian (each +-0.05); noisy scored worse "
              "in %d/50 pairs (limit 45)",
              ag, al, ranked)};
}

Outcome quality_map_direction() {
  int sharp_higher = 0;
  bool identical = true;
  const fixtures::TempDir dir;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto data = fixtures::sharpness_dataset(16, 32, derive_seed(seed, 1));
    QualityModel m(fixtures::toy_config(ModelKind::kFeedback), derive_seed(seed, 2));
    TrainConfig cfg;
    cfg.pad_side = 32;
    cfg.batch_size = 16;
    cfg.epochs = 100;
    cfg.lr_backbone = 1e-3;
    cfg.lr_head = 1e-2;
    cfg.seed = seed;
    train(m, data, cfg);
    const ImageBuf composite = fixtures::sharp_blur_composite(64, derive_seed(seed, 3));
    const QualityMap map = predict_map(m, composite, 8, 64);
    double left = 0.0, right = 0.0;
    for (int gy = 0; gy < 8; ++gy)
      for (int gx = 0; gx < 8; ++gx) (gx < 4 ? left : right) += map.score(gx, gy);
    sharp_higher += left > right;

    if (seed == 0) {
      save_png(composite, dir / "in.png");
      const ImageBuf decoded = load_image(dir / "in.png");
      save_png(render_map(decoded, predict_map(m, decoded, kDefaultMapGrid, 64), 0.0),
               dir / "out.png");
      const ImageBuf back = load_image(dir / "out.png");
      identical = back.width() == decoded.width() && back.height() == decoded.height() &&
                  back.channels() == decoded.channels() &&
                  std::equal(back.samples().begin(), back.samples().end(),
                             decoded.samples().begin());
    }
  }
  return {sharp_higher >= 19 && identical,
          fmt("sharp half scored higher in %d/20 seeds (limit 19); alpha=0 render %s the input "
              "after decode",
              sharp_higher, identical ? "reproduces" : "does not reproduce")};
}

Outcome config_echoes() {
  const std::string path = std::string(UGCIQA_SOURCE_DIR) + "/config/default.conf";
  const auto file = KeyValueConfig::load(path);
  Settings s;
  apply_config(file, s);
  const auto& v = file.values();
  auto num = [&](const std::string& key) {
    const auto it = v.find(key);
    return it == v.end() ? NAN : std::stod(it->second);
  };
  struct Echo {
    const char* key;
    double want;
    double loaded;
  };
  const Echo echoes[] = {
      {"train.pad_side", 640, double(s.train.pad_side)},
      {"model.roi_grid", 2, num("model.roi_grid")},
      {"map.grid", 32, double(s.map_grid)},
      {"map.alpha", 0.8, s.map_alpha},
      {"train.beta1", 0.9, s.train.beta1},
      {"train.beta2", 0.99, s.train.beta2},
      {"train.weight_decay", 0.01, s.train.weight_decay},
      {"train.lr_backbone", 3e-4, s.train.lr_backbone},
      {"train.lr_head", 3e-3, s.train.lr_head},
      {"train.batch_size", 120, double(s.train.batch_size)},
      {"train.epochs", 10, double(s.train.epochs)},
      {"study.hit_size_initial", 60, num("study.hit_size_initial")},
      {"study.hit_size_extended", 210, num("study.hit_size_extended")},
      {"study.repeats_per_hit", 5, num("study.repeats_per_hit")},
      {"study.golds_per_hit", 5, num("study.golds_per_hit")},
      {"study.min_acceptance_rate", 0.75, s.policy.min_acceptance_rate},
      {"study.consistency_splits", 25, double(s.consistency_splits)},
  };
  std::string bad;
  for (const auto& e : echoes)
    if (!(num(e.key) == e.want && e.loaded == e.want)) bad += std::string(" ") + e.key;
  return {bad.empty(),
          bad.empty() ? fmt("%zu constants echoed by %s", std::size(echoes), "config/default.conf")
                      : "wrong or missing:" + bad};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"roi_pool_oracle", roi_pool_oracle},
      {"gradient_check", gradient_check},
      {"overfit", overfit},
      {"weight_sharing", weight_sharing},
      {"correlation_oracles", correlation_oracles},
      {"patch_constraints", patch_constraints},
      {"study_recovery", study_recovery},
      {"znormalize_affine", znormalize_affine},
      {"sampler_quality", sampler_quality},
      {"nss_sanity", nss_sanity},
      {"quality_map_direction", quality_map_direction},
      {"config_echoes", config_echoes},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
