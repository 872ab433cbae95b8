#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "ugciqa/image.hpp"
#include "ugciqa/model.hpp"

namespace ugciqa {

inline constexpr int kDefaultMapGrid = 32;
inline constexpr double kDefaultMapAlpha = 0.8;

/// matplotlib's "magma" colormap, 256 RGB triples in [0, 1].
extern const std::array<std::array<double, 3>, 256> kMagma;

struct QualityMap {
  int grid_w = 0;
  int grid_h = 0;
  std::vector<double> scores;  // row-major, in [0, 100]
  std::vector<Rect> rects;     // matching block rects in image coordinates

  double score(int gx, int gy) const { return scores.at(static_cast<std::size_t>(gy) * grid_w + gx); }
  const Rect& rect(int gx, int gy) const { return rects.at(static_cast<std::size_t>(gy) * grid_w + gx); }
};

/// n x n row-major blocks with boundaries at floor(k * dim / n).
std::vector<Rect> grid_blocks(int width, int height, int n);

/// Shared-head score of every grid block, clamped to [0, 100]. The image is
/// padded as for QualityModel::predict and the backbone runs once.
QualityMap predict_map(const nn::QualityModel& model, const ImageBuf& img, int n, int pad_side);

/// Bilinear interpolation of the block scores at continuous image position
/// (x, y); block centers are the sample points and positions beyond the
/// outer centers take the edge value. Pixel (i, j) is centered at (i+0.5, j+0.5).
double sample_map(const QualityMap& map, double x, double y);

/// sample_map at every pixel center, row-major width x height.
std::vector<double> upsample_map(const QualityMap& map, int width, int height);

/// Magma entry round(score / 100 * 255) of the clamped score.
std::array<double, 3> magma_color(double score);

/// alpha * colormap + (1 - alpha) * img per pixel; single-channel images are
/// expanded to RGB first. alpha must lie in [0, 1].
ImageBuf render_map(const ImageBuf& img, const QualityMap& map, double alpha = kDefaultMapAlpha);

/// Grid as CSV (one row per grid row) with a leading schema comment line.
void write_map_csv(const std::string& path, const QualityMap& map, std::uint64_t seed);

}  // namespace ugciqa
