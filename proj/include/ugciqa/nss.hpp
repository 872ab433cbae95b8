#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "ugciqa/image.hpp"

namespace ugciqa {

/// Mean-subtracted contrast-normalized coefficients of a luma plane.
struct MscnField {
  int width = 0;
  int height = 0;
  std::vector<double> coeffs;       // row-major
  std::vector<double> local_sigma;  // local std in 0..255 units, row-major
};

inline constexpr int kMscnRadius = 3;          // 7x7 window
inline constexpr double kMscnGaussSigma = 7.0 / 6.0;
inline constexpr double kMscnStabilizer = 1.0;  // added to the local std
inline constexpr int kNiqePatchSize = 96;

/// The separable 7-tap Gaussian, normalized so the 7x7 outer product sums to 1.
std::array<double, 2 * kMscnRadius + 1> mscn_window_1d();

/// coeff = (255*I - mu) / (sigma + 1) with mu, sigma from the Gaussian window
/// under half-sample symmetric extension. Input must be 1-channel, >= 16x16.
MscnField mscn(const ImageBuf& luma);

struct GgdFit {
  double alpha = 0.0;
  double sigma_sq = 0.0;
};

struct AggdFit {
  double alpha = 0.0;
  double mean = 0.0;
  double sigma_l_sq = 0.0;
  double sigma_r_sq = 0.0;
};

/// Grid resolution used by both shape fits: alpha in [0.2, 10], step 0.001.
inline constexpr double kShapeGridMin = 0.2;
inline constexpr double kShapeGridMax = 10.0;
inline constexpr double kShapeGridStep = 0.001;

/// Gamma(2/a)^2 / (Gamma(1/a) Gamma(3/a)): (E|x|)^2 / E[x^2] of a GGD with shape a.
double ggd_moment_ratio(double alpha);

/// Moment matching of (E|x|)^2/E[x^2] against the grid; sigma_sq is the
/// sample variance. Needs >= 100 samples with nonzero variance.
GgdFit ggd_fit(std::span<const double> samples);

/// Asymmetric fit from the one-sided second moments. Needs samples on both
/// sides of zero.
AggdFit aggd_fit(std::span<const double> samples);

/// 36 values: for the full-resolution luma and its 2x box downsample,
/// [ggd alpha, ggd sigma_sq] then (alpha, mean, sigma_l_sq, sigma_r_sq) for
/// horizontal, vertical, main-diagonal and anti-diagonal neighbour products.
using NssFeatures = std::array<double, 36>;

NssFeatures nss_features(const ImageBuf& img);

/// 2x2 box average with floor dimensions.
ImageBuf downsample2(const ImageBuf& luma);

struct NiqeModel {
  std::vector<double> mean;        // 36
  std::vector<double> covariance;  // 36x36 row-major

  void validate() const;
  std::string to_json() const;
  static NiqeModel from_json(const std::string& text);
};

/// Patch features of non-overlapping P x P tiles; the sharpness of a tile is
/// the mean local sigma of the full-image MSCN window inside it.
struct PatchFeatures {
  std::vector<NssFeatures> features;
  std::vector<double> sharpness;
};

PatchFeatures niqe_patch_features(const ImageBuf& img, int patch = kNiqePatchSize);

/// Mean and sample covariance over corpus tiles whose sharpness is at or
/// above the corpus quantile (linear interpolation).
NiqeModel niqe_fit(std::span<const ImageBuf> corpus, int patch = kNiqePatchSize,
                   double sharpness_quantile = 0.75);

/// sqrt(d^T pinv((S1+S2)/2) d) between the image's tile Gaussian and the model.
double niqe_score(const ImageBuf& img, const NiqeModel& model, int patch = kNiqePatchSize);

/// Ridge regression on standardized features (population std; constant
/// columns keep scale 1).
struct RidgeModel {
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  std::vector<double> weights;
  double intercept = 0.0;
};

RidgeModel train_regressor(std::span<const std::vector<double>> features,
                           std::span<const double> targets, double ridge_lambda);
double predict_regressor(const RidgeModel& model, std::span<const double> features);

}  // namespace ugciqa
