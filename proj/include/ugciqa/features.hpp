#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ugciqa/image.hpp"

namespace ugciqa {

/// Objective per-picture statistics used to steer dataset sampling.
struct FeatureVector {
  double brightness = 0.0;           // mean of R+G+B, in [0,3]
  double colorfulness = 0.0;
  double rms_contrast = 0.0;
  double spatial_information = 0.0;
  long long pixel_count = 0;
  int face_count = 0;

  static constexpr std::size_t kCount = 6;

  /// Values in column order: brightness, colorfulness, rms_contrast, si,
  /// pixel_count, face_count.
  std::array<double, kCount> as_array() const;
};

/// CSV column names after the id column.
inline constexpr std::array<std::string_view, FeatureVector::kCount> kFeatureNames = {
    "brightness", "colorfulness", "rms_contrast", "si", "pixel_count", "face_count"};

double brightness(const ImageBuf& img);

/// Opponent-channel colorfulness: sqrt(var(rg)+var(yb)) + 0.3*sqrt(mean(rg)^2+mean(yb)^2)
/// with rg = R-G, yb = (R+G)/2 - B and population variances.
double colorfulness(const ImageBuf& img);

/// Population std / mean of the luma. Throws kDegenerate when the mean is 0.
double rms_contrast(const ImageBuf& img);

/// Population std of the 3x3 Sobel gradient magnitude over the valid
/// (unpadded) interior of the luma.
double spatial_information(const ImageBuf& img);

FeatureVector feature_vector(const ImageBuf& img, int face_count);

struct FeatureRow {
  std::string id;
  FeatureVector features;
};

/// Writes "id,brightness,colorfulness,rms_contrast,si,pixel_count,face_count"
/// rows; doubles use 17 significant digits so the table round-trips.
void write_feature_csv(std::ostream& out, const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> read_feature_csv(std::istream& in);

}  // namespace ugciqa
