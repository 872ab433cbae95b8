#include "ugciqa/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "text_util.hpp"
#include "ugciqa/error.hpp"
#include "ugciqa/psych.hpp"
#include "ugciqa/rng.hpp"

namespace ugciqa::nn {

TrainConfig TrainConfig::desk_scale() {
  TrainConfig cfg;
  cfg.pad_side = 160;
  cfg.batch_size = 16;
  return cfg;
}

void TrainConfig::validate() const {
  if (batch_size < 1) fail(ErrorCode::kConfig, "batch_size must be >= 1");
  if (epochs < 1) fail(ErrorCode::kConfig, "epochs must be >= 1");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    fail(ErrorCode::kConfig, "adam betas must lie in (0, 1)");
  if (!(adam_eps > 0.0)) fail(ErrorCode::kConfig, "adam_eps must be positive");
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay))
    fail(ErrorCode::kConfig, "weight_decay must be a finite value >= 0");
  // Zero learning rates are accepted (frozen parameters); negative ones are not.
  if (!(lr_backbone >= 0.0) || !(lr_head >= 0.0) || !std::isfinite(lr_backbone) ||
      !std::isfinite(lr_head))
    fail(ErrorCode::kConfig, "learning rates must be finite and >= 0");
  if (pad_side < 1) fail(ErrorCode::kConfig, "pad_side must be positive");
  if (max_steps < 0) fail(ErrorCode::kConfig, "max_steps must be >= 0");
}

TrainSample prepare_sample(const ImageBuf& img, std::span<const Rect> patches, double mos,
                           std::span<const double> patch_mos, int pad_side) {
  if (patches.size() != patch_mos.size())
    fail(ErrorCode::kConfig, "one patch MOS is needed per patch");
  TrainSample s;
  s.image = white_pad(img, pad_side);
  const auto [dx, dy] = white_pad_offset(img.width(), img.height(), pad_side);
  for (const auto& r : patches) {
    if (!r.inside(img.width(), img.height())) fail(ErrorCode::kBounds, "patch outside the image");
    s.patches.push_back(r.translated(dx, dy));
  }
  s.mos = mos;
  s.patch_mos.assign(patch_mos.begin(), patch_mos.end());
  return s;
}

AdamW::AdamW(double beta1, double beta2, double eps, double weight_decay)
    : beta1_(beta1), beta2_(beta2), eps_(eps), weight_decay_(weight_decay) {}

void AdamW::step(std::vector<Parameter>& params, double lr_backbone, double lr_head) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.tensor.numel(), 0.0);
      v_.emplace_back(p.tensor.numel(), 0.0);
    }
  }
  if (m_.size() != params.size()) fail(ErrorCode::kInternal, "optimizer state mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double lr = params[i].head ? lr_head : lr_backbone;
    auto theta = params[i].tensor.mutable_values();
    const auto g = params[i].tensor.grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = beta1_ * m[k] + (1.0 - beta1_) * g[k];
      v[k] = beta2_ * v[k] + (1.0 - beta2_) * g[k] * g[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      theta[k] -= lr * (mhat / (std::sqrt(vhat) + eps_) + weight_decay_ * theta[k]);
    }
  }
}

Tensor sample_loss(const QualityModel& model, const TrainSample& sample) {
  const bool with_patches = model.config().kind != ModelKind::kBaseline;
  const std::span<const Rect> rois =
      with_patches ? std::span<const Rect>(sample.patches) : std::span<const Rect>{};
  const ModelOutput out = model.forward(Tensor::from_image(sample.image), rois);
  std::vector<Tensor> preds{out.picture};
  std::vector<double> targets{sample.mos};
  if (with_patches) {
    if (sample.patch_mos.size() != out.patches.size())
      fail(ErrorCode::kConfig, "one patch MOS is needed per patch");
    preds.insert(preds.end(), out.patches.begin(), out.patches.end());
    targets.insert(targets.end(), sample.patch_mos.begin(), sample.patch_mos.end());
  }
  return mse(concat(preds), targets);
}

namespace {

void check_dataset(const QualityModel& model, std::span<const TrainSample> data,
                   const TrainConfig& cfg) {
  if (data.empty()) fail(ErrorCode::kConfig, "training set is empty");
  auto in_range = [](double v) { return std::isfinite(v) && v >= 0.0 && v <= 100.0; };
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& s = data[i];
    const std::string where = "training item " + std::to_string(i);
    if (s.image.width() != cfg.pad_side || s.image.height() != cfg.pad_side)
      fail(ErrorCode::kShape, where + " is not padded to " + std::to_string(cfg.pad_side));
    if (!in_range(s.mos)) fail(ErrorCode::kConfig, where + ": MOS outside [0, 100]");
    for (double m : s.patch_mos)
      if (!in_range(m)) fail(ErrorCode::kConfig, where + ": patch MOS outside [0, 100]");
    if (model.config().kind != ModelKind::kBaseline && s.patch_mos.size() != s.patches.size())
      fail(ErrorCode::kConfig, where + ": one patch MOS is needed per patch");
  }
}

}  // namespace

TrainResult train(QualityModel& model, std::span<const TrainSample> data, const TrainConfig& cfg) {
  cfg.validate();
  check_dataset(model, data, cfg);
  AdamW opt(cfg.beta1, cfg.beta2, cfg.adam_eps, cfg.weight_decay);
  TrainResult result;
  std::vector<std::size_t> order(data.size());
  const std::size_t batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      if (cfg.max_steps > 0 && result.steps >= cfg.max_steps) return result;
      const std::size_t end = std::min(order.size(), start + batch);
      const double inv = 1.0 / static_cast<double>(end - start);
      model.zero_grad();
      double total = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        const Tensor loss = sample_loss(model, data[order[i]]);
        total += loss.item();
        affine(loss, inv, 0.0).backward();
      }
      for (const auto& p : model.parameters())
        for (double g : p.tensor.grad())
          if (!std::isfinite(g)) fail(ErrorCode::kNumeric, "non-finite gradient in " + p.name);
      opt.step(model.parameters(), cfg.lr_backbone, cfg.lr_head);
      result.loss_curve.push_back(total * inv);
      ++result.steps;
    }
  }
  return result;
}

EvalResult evaluate(const QualityModel& model, std::span<const ImageBuf> images,
                    std::span<const double> mos, int pad_side,
                    std::span<const std::vector<Rect>> patches) {
  if (images.size() != mos.size()) fail(ErrorCode::kMetric, "one MOS is needed per image");
  if (!patches.empty() && patches.size() != images.size())
    fail(ErrorCode::kMetric, "patch lists must match the image list");
  if (images.size() < 3) fail(ErrorCode::kMetric, "at least 3 items are needed for correlation");
  EvalResult r;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::span<const Rect> p =
        patches.empty() ? std::span<const Rect>{} : std::span<const Rect>(patches[i]);
    r.predictions.push_back(model.predict(images[i], pad_side, p));
  }
  try {
    r.srcc = srcc(r.predictions, mos);
    r.lcc = lcc(r.predictions, mos);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kMetric) throw;
    r.srcc.reset();
    r.lcc.reset();
    r.metric_error = e.what();
  }
  return r;
}

double grad_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> params, double eps) {
  if (!(eps > 0.0)) fail(ErrorCode::kConfig, "grad_check eps must be positive");
  for (auto& p : params) p.zero_grad();
  loss_fn().backward();
  std::vector<std::vector<double>> analytic;
  for (const auto& p : params) {
    analytic.emplace_back(p.grad().begin(), p.grad().end());
    for (double g : analytic.back())
      if (!std::isfinite(g)) fail(ErrorCode::kNumeric, "non-finite analytic gradient");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].mutable_values();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + eps;
      const double up = loss_fn().item();
      values[k] = saved - eps;
      const double down = loss_fn().item();
      values[k] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      if (!std::isfinite(numeric)) fail(ErrorCode::kNumeric, "non-finite numeric gradient");
      const double a = analytic[i][k];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

double grad_check(QualityModel& model, const TrainSample& sample, double eps) {
  std::vector<Tensor> params;
  for (const auto& p : model.parameters()) params.push_back(p.tensor);
  return grad_check([&] { return sample_loss(model, sample); }, params, eps);
}

void write_loss_csv(const std::string& path, std::span<const double> loss_curve,
                    std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << "# ugciqa schema_version=1 seed=" << seed << "\n";
  out << "step,loss\n";
  for (std::size_t i = 0; i < loss_curve.size(); ++i)
    out << i << ',' << ugciqa::detail::format_double(loss_curve[i]) << '\n';
  if (!out) fail(ErrorCode::kIo, "failed writing " + path);
}

}  // namespace ugciqa::nn
