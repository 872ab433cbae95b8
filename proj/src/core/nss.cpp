#include "ugciqa/nss.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "ugciqa/error.hpp"

namespace ugciqa {
namespace {

constexpr int kWindow = 2 * kMscnRadius + 1;
constexpr std::size_t kFeatureDim = std::tuple_size_v<NssFeatures>;

int reflect(int i, int n) {
  if (i < 0) return -i - 1;
  if (i >= n) return 2 * n - i - 1;
  return i;
}

// Shape grid and its moment ratios, built once.
struct ShapeGrid {
  std::vector<double> alpha;
  std::vector<double> ratio;

  ShapeGrid() {
    const int steps =
        static_cast<int>(std::lround((kShapeGridMax - kShapeGridMin) / kShapeGridStep));
    for (int i = 0; i <= steps; ++i) {
      const double a = kShapeGridMin + i * kShapeGridStep;
      alpha.push_back(a);
      ratio.push_back(ggd_moment_ratio(a));
    }
  }

  double solve(double target) const {
    std::size_t best = 0;
    double best_diff = std::abs(ratio[0] - target);
    for (std::size_t i = 1; i < ratio.size(); ++i) {
      const double d = std::abs(ratio[i] - target);
      if (d < best_diff) {
        best_diff = d;
        best = i;
      }
    }
    return alpha[best];
  }
};

const ShapeGrid& shape_grid() {
  static const ShapeGrid grid;
  return grid;
}

}  // namespace

std::array<double, 2 * kMscnRadius + 1> mscn_window_1d() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int k = -kMscnRadius; k <= kMscnRadius; ++k) {
    w[k + kMscnRadius] = std::exp(-(k * k) / (2.0 * kMscnGaussSigma * kMscnGaussSigma));
    sum += w[k + kMscnRadius];
  }
  for (double& v : w) v /= sum;
  return w;
}

MscnField mscn(const ImageBuf& luma) {
  if (luma.channels() != 1) fail(ErrorCode::kChannel, "mscn expects a luma image");
  const int w = luma.width();
  const int h = luma.height();
  if (w < 16 || h < 16) fail(ErrorCode::kSize, "mscn needs at least 16x16 pixels");
  const auto win = mscn_window_1d();
  const auto src = luma.plane(0);
  const std::size_t n = luma.pixel_count();

  // Separable passes over I and I^2 (in 0..255 units).
  std::vector<double> hx(n), hx2(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double s = 0.0, s2 = 0.0;
      for (int k = -kMscnRadius; k <= kMscnRadius; ++k) {
        const double v = 255.0 * src[static_cast<std::size_t>(y) * w + reflect(x + k, w)];
        s += win[k + kMscnRadius] * v;
        s2 += win[k + kMscnRadius] * v * v;
      }
      hx[static_cast<std::size_t>(y) * w + x] = s;
      hx2[static_cast<std::size_t>(y) * w + x] = s2;
    }
  }
  MscnField out;
  out.width = w;
  out.height = h;
  out.coeffs.resize(n);
  out.local_sigma.resize(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double mu = 0.0, e2 = 0.0;
      for (int k = -kMscnRadius; k <= kMscnRadius; ++k) {
        const std::size_t idx = static_cast<std::size_t>(reflect(y + k, h)) * w + x;
        mu += win[k + kMscnRadius] * hx[idx];
        e2 += win[k + kMscnRadius] * hx2[idx];
      }
      const double sigma = std::sqrt(std::max(0.0, e2 - mu * mu));
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      out.local_sigma[i] = sigma;
      out.coeffs[i] = (255.0 * src[i] - mu) / (sigma + kMscnStabilizer);
    }
  }
  return out;
}

double ggd_moment_ratio(double alpha) {
  return std::exp(2.0 * std::lgamma(2.0 / alpha) - std::lgamma(1.0 / alpha) -
                  std::lgamma(3.0 / alpha));
}

GgdFit ggd_fit(std::span<const double> samples) {
  if (samples.size() < 100) fail(ErrorCode::kSize, "ggd_fit needs at least 100 samples");
  const double n = static_cast<double>(samples.size());
  double sum = 0.0, abs_sum = 0.0, sq_sum = 0.0;
  for (double x : samples) {
    sum += x;
    abs_sum += std::abs(x);
    sq_sum += x * x;
  }
  const double mean = sum / n;
  double var = 0.0;
  for (double x : samples) var += (x - mean) * (x - mean);
  var /= (n - 1.0);
  if (!(var > 0.0) || !(sq_sum > 0.0))
    fail(ErrorCode::kDegenerate, "ggd_fit: samples have zero variance");
  const double e_abs = abs_sum / n;
  const double ratio = e_abs * e_abs / (sq_sum / n);
  return GgdFit{shape_grid().solve(ratio), var};
}

AggdFit aggd_fit(std::span<const double> samples) {
  double left_sq = 0.0, right_sq = 0.0, abs_sum = 0.0;
  std::size_t left_n = 0, right_n = 0;
  for (double x : samples) {
    if (x < 0.0) {
      left_sq += x * x;
      abs_sum -= x;
      ++left_n;
    } else if (x > 0.0) {
      right_sq += x * x;
      abs_sum += x;
      ++right_n;
    }
  }
  if (left_n == 0 || right_n == 0)
    fail(ErrorCode::kDegenerate, "aggd_fit needs samples on both sides of zero");
  const double n = static_cast<double>(samples.size());
  const double sl2 = left_sq / static_cast<double>(left_n);
  const double sr2 = right_sq / static_cast<double>(right_n);
  const double sl = std::sqrt(sl2);
  const double sr = std::sqrt(sr2);
  const double e_abs = abs_sum / n;
  const double r_hat = e_abs * e_abs / ((left_sq + right_sq) / n);
  // Written symmetric in (sl, sr) so mirrored inputs give identical shapes.
  const double r_norm = r_hat * (sl * sl * sl + sr * sr * sr) * (sl + sr) /
                        ((sl2 + sr2) * (sl2 + sr2));
  const double alpha = shape_grid().solve(r_norm);
  const double g1 = std::tgamma(1.0 / alpha);
  const double g2 = std::tgamma(2.0 / alpha);
  const double g3 = std::tgamma(3.0 / alpha);
  const double scale = std::sqrt(g1 / g3);
  const double mean = (sr * scale - sl * scale) * g2 / g1;
  return AggdFit{alpha, mean, sl2, sr2};
}

ImageBuf downsample2(const ImageBuf& luma) {
  const int w = luma.width() / 2;
  const int h = luma.height() / 2;
  if (w < 1 || h < 1) fail(ErrorCode::kSize, "image too small to downsample");
  ImageBuf out(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(0, y, x) = 0.25 * (luma.at(0, 2 * y, 2 * x) + luma.at(0, 2 * y, 2 * x + 1) +
                                luma.at(0, 2 * y + 1, 2 * x) + luma.at(0, 2 * y + 1, 2 * x + 1));
    }
  }
  return out;
}

namespace {

void append_scale_features(const ImageBuf& luma, NssFeatures& out, std::size_t offset) {
  const MscnField field = mscn(luma);
  const GgdFit g = ggd_fit(field.coeffs);
  out[offset + 0] = g.alpha;
  out[offset + 1] = g.sigma_sq;

  static constexpr int kShifts[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};  // (dy, dx)
  const int w = field.width;
  const int h = field.height;
  std::vector<double> products;
  products.reserve(field.coeffs.size());
  for (int s = 0; s < 4; ++s) {
    const int dy = kShifts[s][0];
    const int dx = kShifts[s][1];
    products.clear();
    for (int y = 0; y + dy < h; ++y) {
      for (int x = std::max(0, -dx); x < w && x + dx < w; ++x) {
        products.push_back(field.coeffs[static_cast<std::size_t>(y) * w + x] *
                           field.coeffs[static_cast<std::size_t>(y + dy) * w + x + dx]);
      }
    }
    const AggdFit a = aggd_fit(products);
    const std::size_t base = offset + 2 + 4 * static_cast<std::size_t>(s);
    out[base + 0] = a.alpha;
    out[base + 1] = a.mean;
    out[base + 2] = a.sigma_l_sq;
    out[base + 3] = a.sigma_r_sq;
  }
}

}  // namespace

NssFeatures nss_features(const ImageBuf& img) {
  const ImageBuf luma = to_luma(img);
  if (luma.width() < 32 || luma.height() < 32)
    fail(ErrorCode::kSize, "nss_features needs at least 32x32 pixels");
  NssFeatures f{};
  append_scale_features(luma, f, 0);
  append_scale_features(downsample2(luma), f, 18);
  return f;
}

void NiqeModel::validate() const {
  if (mean.size() != kFeatureDim || covariance.size() != kFeatureDim * kFeatureDim)
    fail(ErrorCode::kShape, "NIQE model must hold a 36-vector and a 36x36 covariance");
  for (std::size_t i = 0; i < kFeatureDim; ++i) {
    for (std::size_t j = 0; j < kFeatureDim; ++j) {
      if (std::abs(covariance[i * kFeatureDim + j] - covariance[j * kFeatureDim + i]) > 1e-9)
        fail(ErrorCode::kValidation, "NIQE covariance is not symmetric");
    }
  }
}

std::string NiqeModel::to_json() const {
  nlohmann::json doc;
  doc["format"] = "ugciqa-niqe";
  doc["schema_version"] = 1;
  doc["dim"] = kFeatureDim;
  doc["mean"] = mean;
  doc["covariance"] = covariance;
  return doc.dump(2);
}

NiqeModel NiqeModel::from_json(const std::string& text) {
  NiqeModel m;
  try {
    const auto doc = nlohmann::json::parse(text);
    m.mean = doc.at("mean").get<std::vector<double>>();
    m.covariance = doc.at("covariance").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kValidation, std::string("NIQE model JSON: ") + e.what());
  }
  m.validate();
  return m;
}

PatchFeatures niqe_patch_features(const ImageBuf& img, int patch) {
  const ImageBuf luma = to_luma(img);
  if (luma.width() < patch || luma.height() < patch)
    fail(ErrorCode::kSize, "image smaller than one " + std::to_string(patch) + "px NIQE patch");
  const MscnField field = mscn(luma);
  PatchFeatures out;
  for (int ty = 0; ty + patch <= luma.height(); ty += patch) {
    for (int tx = 0; tx + patch <= luma.width(); tx += patch) {
      double sharp = 0.0;
      for (int y = ty; y < ty + patch; ++y)
        for (int x = tx; x < tx + patch; ++x)
          sharp += field.local_sigma[static_cast<std::size_t>(y) * field.width + x];
      out.sharpness.push_back(sharp / (static_cast<double>(patch) * patch));
      out.features.push_back(nss_features(crop(luma, Rect{tx, ty, tx + patch, ty + patch})));
    }
  }
  return out;
}

namespace {

void gaussian_stats(const std::vector<const NssFeatures*>& rows, std::vector<double>& mean,
                    std::vector<double>& cov) {
  const std::size_t d = kFeatureDim;
  const std::size_t n = rows.size();
  mean.assign(d, 0.0);
  cov.assign(d * d, 0.0);
  for (const auto* r : rows)
    for (std::size_t i = 0; i < d; ++i) mean[i] += (*r)[i];
  for (double& m : mean) m /= static_cast<double>(n);
  if (n < 2) return;
  for (const auto* r : rows) {
    for (std::size_t i = 0; i < d; ++i) {
      const double di = (*r)[i] - mean[i];
      for (std::size_t j = 0; j < d; ++j) cov[i * d + j] += di * ((*r)[j] - mean[j]);
    }
  }
  for (double& c : cov) c /= static_cast<double>(n - 1);
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

NiqeModel niqe_fit(std::span<const ImageBuf> corpus, int patch, double sharpness_quantile) {
  if (corpus.size() < 10) fail(ErrorCode::kCorpus, "NIQE fitting needs at least 10 images");
  std::vector<PatchFeatures> per_image;
  std::vector<double> all_sharpness;
  for (const auto& img : corpus) {
    per_image.push_back(niqe_patch_features(img, patch));
    const auto& s = per_image.back().sharpness;
    all_sharpness.insert(all_sharpness.end(), s.begin(), s.end());
  }
  const double threshold = quantile(all_sharpness, sharpness_quantile);
  std::vector<const NssFeatures*> kept;
  for (const auto& pf : per_image) {
    for (std::size_t i = 0; i < pf.features.size(); ++i) {
      if (pf.sharpness[i] >= threshold && pf.sharpness[i] > 0.0) kept.push_back(&pf.features[i]);
    }
  }
  if (kept.empty()) fail(ErrorCode::kCorpus, "no corpus patch passed sharpness selection");
  NiqeModel model;
  gaussian_stats(kept, model.mean, model.covariance);
  return model;
}

double niqe_score(const ImageBuf& img, const NiqeModel& model, int patch) {
  model.validate();
  const PatchFeatures pf = niqe_patch_features(img, patch);
  std::vector<const NssFeatures*> rows;
  for (const auto& f : pf.features) rows.push_back(&f);
  std::vector<double> mean, cov;
  gaussian_stats(rows, mean, cov);

  const auto d = static_cast<Eigen::Index>(kFeatureDim);
  Eigen::MatrixXd pooled(d, d);
  Eigen::VectorXd delta(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    delta(i) = mean[i] - model.mean[i];
    for (Eigen::Index j = 0; j < d; ++j)
      pooled(i, j) = 0.5 * (cov[i * d + j] + model.covariance[i * d + j]);
  }
  pooled = 0.5 * (pooled + pooled.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(pooled);
  if (eig.info() != Eigen::Success) fail(ErrorCode::kNumeric, "NIQE eigen-decomposition failed");
  const Eigen::VectorXd values = eig.eigenvalues();
  // Relative cut plus an absolute floor on the feature scale, so round-off
  // covariance (e.g. from identical tiles) is not inverted.
  double scale_sq = 1.0;
  for (double m : model.mean) scale_sq = std::max(scale_sq, m * m);
  const double tol = std::max(values.cwiseAbs().maxCoeff() * d * 1e-12, scale_sq * 1e-12);
  const Eigen::VectorXd proj = eig.eigenvectors().transpose() * delta;
  double dist_sq = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (values(i) > tol) dist_sq += proj(i) * proj(i) / values(i);
  }
  const double dist = std::sqrt(std::max(0.0, dist_sq));
  if (!std::isfinite(dist)) fail(ErrorCode::kNumeric, "NIQE distance is not finite");
  return dist;
}

RidgeModel train_regressor(std::span<const std::vector<double>> features,
                           std::span<const double> targets, double ridge_lambda) {
  if (features.empty()) fail(ErrorCode::kSize, "train_regressor needs training rows");
  if (features.size() != targets.size())
    fail(ErrorCode::kShape, "feature rows and targets differ in length");
  if (ridge_lambda < 0.0) fail(ErrorCode::kValidation, "ridge_lambda must be >= 0");
  const std::size_t d = features.front().size();
  const std::size_t n = features.size();
  if (n < d + 1)
    fail(ErrorCode::kSize, "train_regressor needs at least " + std::to_string(d + 1) + " rows");
  for (const auto& row : features)
    if (row.size() != d) fail(ErrorCode::kShape, "feature rows differ in width");

  RidgeModel m;
  m.feature_mean.assign(d, 0.0);
  m.feature_scale.assign(d, 0.0);
  for (const auto& row : features)
    for (std::size_t j = 0; j < d; ++j) m.feature_mean[j] += row[j];
  for (double& v : m.feature_mean) v /= static_cast<double>(n);
  for (const auto& row : features)
    for (std::size_t j = 0; j < d; ++j) {
      const double dv = row[j] - m.feature_mean[j];
      m.feature_scale[j] += dv * dv;
    }
  for (double& v : m.feature_scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 0.0)) v = 1.0;
  }

  double y_mean = 0.0;
  for (double t : targets) y_mean += t;
  y_mean /= static_cast<double>(n);

  Eigen::MatrixXd z(n, d);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j)
      z(i, j) = (features[i][j] - m.feature_mean[j]) / m.feature_scale[j];
    y(i) = targets[i] - y_mean;
  }
  Eigen::MatrixXd normal = z.transpose() * z;
  normal.diagonal().array() += ridge_lambda;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  const Eigen::VectorXd pivots = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || !(pivots.minCoeff() > 1e-12 * pivots.maxCoeff()))
    fail(ErrorCode::kSolver, "ridge system is singular; use ridge_lambda > 0");
  const Eigen::VectorXd w = ldlt.solve(z.transpose() * y);
  m.weights.assign(w.data(), w.data() + w.size());
  m.intercept = y_mean;
  return m;
}

double predict_regressor(const RidgeModel& model, std::span<const double> features) {
  if (features.size() != model.weights.size())
    fail(ErrorCode::kShape, "feature width does not match the regressor");
  double y = model.intercept;
  for (std::size_t j = 0; j < features.size(); ++j)
    y += model.weights[j] * (features[j] - model.feature_mean[j]) / model.feature_scale[j];
  return y;
}

}  // namespace ugciqa
