#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ugciqa/image.hpp"
#include "ugciqa/model.hpp"

namespace ugciqa::nn {

/// Optimizer and schedule settings. The defaults are the full-scale values;
/// desk_scale() gives a preset that trains in minutes on a CPU.
struct TrainConfig {
  int batch_size = 120;
  int epochs = 10;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double adam_eps = 1e-8;
  double weight_decay = 0.01;
  double lr_backbone = 3e-4;
  double lr_head = 3e-3;
  int pad_side = 640;
  std::uint64_t seed = 0;
  int max_steps = 0;  // 0: no cap beyond epochs

  static TrainConfig desk_scale();
  void validate() const;
};

/// One training item, already padded to the training side.
struct TrainSample {
  ImageBuf image;
  std::vector<Rect> patches;      // in padded coordinates
  double mos = 0.0;
  std::vector<double> patch_mos;  // one per patch
};

/// White-pads img to pad_side and shifts the patch rects with it.
TrainSample prepare_sample(const ImageBuf& img, std::span<const Rect> patches, double mos,
                           std::span<const double> patch_mos, int pad_side);

/// Adam with decoupled weight decay:
///   theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
class AdamW {
 public:
  AdamW(double beta1, double beta2, double eps, double weight_decay);
  /// One update of every parameter from its accumulated gradient.
  void step(std::vector<Parameter>& params, double lr_backbone, double lr_head);
  long long steps() const noexcept { return t_; }

 private:
  double beta1_, beta2_, eps_, weight_decay_;
  long long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

/// Squared-error loss of one sample in MOS^2 units: the picture error for
/// Baseline, the mean over picture and patch errors otherwise.
Tensor sample_loss(const QualityModel& model, const TrainSample& sample);

struct TrainResult {
  std::vector<double> loss_curve;  // mean batch loss per step
  int steps = 0;
};

/// Minibatch training; batches are drawn from a per-epoch shuffle seeded by
/// cfg.seed. Deterministic given the model, data and seed.
TrainResult train(QualityModel& model, std::span<const TrainSample> data, const TrainConfig& cfg);

struct EvalResult {
  std::vector<double> predictions;
  std::optional<double> srcc;  // empty when the metric is undefined
  std::optional<double> lcc;
  std::string metric_error;
};

/// Predicts every image (padded as QualityModel::predict does) and correlates
/// against mos. Fewer than 3 items throws kMetric; a constant prediction or
/// target vector leaves the metrics empty with metric_error set.
EvalResult evaluate(const QualityModel& model, std::span<const ImageBuf> images,
                    std::span<const double> mos, int pad_side,
                    std::span<const std::vector<Rect>> patches = {});

/// Max over all parameter elements of |a - n| / max(|a|, |n|, 1e-8), with a
/// the analytic gradient of loss_fn() and n the central difference
/// (f(x+eps) - f(x-eps)) / 2eps. Throws kNumeric on non-finite gradients.
double grad_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> params, double eps);

/// grad_check on sample_loss for every model parameter.
double grad_check(QualityModel& model, const TrainSample& sample, double eps);

/// Loss curve as "step,loss" CSV with a leading schema comment.
void write_loss_csv(const std::string& path, std::span<const double> loss_curve,
                    std::uint64_t seed);

}  // namespace ugciqa::nn
