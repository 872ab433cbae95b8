#include "ugciqa/qmap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "text_util.hpp"
#include "ugciqa/error.hpp"

namespace ugciqa {

std::vector<Rect> grid_blocks(int width, int height, int n) {
  if (n < 1) fail(ErrorCode::kSize, "grid size must be >= 1");
  if (width < n || height < n)
    fail(ErrorCode::kSize, "image " + std::to_string(width) + "x" + std::to_string(height) +
                               " is smaller than a " + std::to_string(n) + "x" +
                               std::to_string(n) + " grid");
  auto edge = [n](int k, int dim) {
    return static_cast<int>(static_cast<long long>(k) * dim / n);
  };
  std::vector<Rect> rects;
  rects.reserve(static_cast<std::size_t>(n) * n);
  for (int gy = 0; gy < n; ++gy)
    for (int gx = 0; gx < n; ++gx)
      rects.push_back({edge(gx, width), edge(gy, height), edge(gx + 1, width), edge(gy + 1, height)});
  return rects;
}

QualityMap predict_map(const nn::QualityModel& model, const ImageBuf& img, int n, int pad_side) {
  if (model.config().kind == nn::ModelKind::kBaseline)
    fail(ErrorCode::kCapability, "quality maps need a roipool or feedback model");
  QualityMap map;
  map.grid_w = n;
  map.grid_h = n;
  map.rects = grid_blocks(img.width(), img.height(), n);

  ImageBuf input = img;
  if (img.channels() == 1 && model.config().backbone.in_channels == 3) {
    std::vector<double> s;
    for (int c = 0; c < 3; ++c) s.insert(s.end(), img.samples().begin(), img.samples().end());
    input = ImageBuf(img.width(), img.height(), 3, std::move(s));
  }
  const auto padded = nn::pad_for_inference(input, pad_side, model.config().backbone.downsampling());
  const nn::Tensor feat = model.backbone(nn::Tensor::from_image(padded.image));
  std::vector<Rect> shifted;
  shifted.reserve(map.rects.size());
  for (const auto& r : map.rects) shifted.push_back(r.translated(padded.offset_x, padded.offset_y));
  map.scores = model.roi_scores(feat, padded.image.width(), padded.image.height(), shifted);
  for (auto& s : map.scores) s = std::clamp(s, 0.0, 100.0);
  return map;
}

namespace {

// Index i and weight t such that pos lies between centers[i] and centers[i+1].
std::pair<int, double> locate(const std::vector<double>& centers, double pos) {
  const int n = static_cast<int>(centers.size());
  if (n == 1 || pos <= centers.front()) return {0, 0.0};
  if (pos >= centers.back()) return {n - 2, 1.0};
  const auto it = std::upper_bound(centers.begin(), centers.end(), pos);
  const int i = static_cast<int>(it - centers.begin()) - 1;
  return {i, (pos - centers[i]) / (centers[i + 1] - centers[i])};
}

void validate_map(const QualityMap& map) {
  const auto cells = static_cast<std::size_t>(map.grid_w) * static_cast<std::size_t>(map.grid_h);
  if (map.grid_w < 1 || map.grid_h < 1 || map.scores.size() != cells || map.rects.size() != cells)
    fail(ErrorCode::kShape, "quality map grid is inconsistent");
}

std::vector<double> column_centers(const QualityMap& map) {
  std::vector<double> c(map.grid_w);
  for (int gx = 0; gx < map.grid_w; ++gx) {
    const Rect& r = map.rect(gx, 0);
    c[gx] = 0.5 * (r.left + r.right);
  }
  return c;
}

std::vector<double> row_centers(const QualityMap& map) {
  std::vector<double> c(map.grid_h);
  for (int gy = 0; gy < map.grid_h; ++gy) {
    const Rect& r = map.rect(0, gy);
    c[gy] = 0.5 * (r.top + r.bottom);
  }
  return c;
}

double interpolate(const QualityMap& map, std::pair<int, double> lx, std::pair<int, double> ly) {
  const auto [ix, tx] = lx;
  const auto [iy, ty] = ly;
  const int ix1 = std::min(ix + 1, map.grid_w - 1);
  const int iy1 = std::min(iy + 1, map.grid_h - 1);
  const double top = (1.0 - tx) * map.score(ix, iy) + tx * map.score(ix1, iy);
  const double bottom = (1.0 - tx) * map.score(ix, iy1) + tx * map.score(ix1, iy1);
  return (1.0 - ty) * top + ty * bottom;
}

}  // namespace

double sample_map(const QualityMap& map, double x, double y) {
  validate_map(map);
  return interpolate(map, locate(column_centers(map), x), locate(row_centers(map), y));
}

std::vector<double> upsample_map(const QualityMap& map, int width, int height) {
  validate_map(map);
  const auto cx = column_centers(map);
  const auto cy = row_centers(map);
  std::vector<std::pair<int, double>> lx(width);
  for (int x = 0; x < width; ++x) lx[x] = locate(cx, x + 0.5);
  std::vector<double> out(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    const auto ly = locate(cy, y + 0.5);
    for (int x = 0; x < width; ++x)
      out[static_cast<std::size_t>(y) * width + x] = interpolate(map, lx[x], ly);
  }
  return out;
}

std::array<double, 3> magma_color(double score) {
  const double s = std::clamp(score, 0.0, 100.0);
  return kMagma[static_cast<std::size_t>(std::lround(s / 100.0 * 255.0))];
}

ImageBuf render_map(const ImageBuf& img, const QualityMap& map, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) fail(ErrorCode::kRange, "alpha must lie in [0, 1]");
  if (img.channels() != 1 && img.channels() != 3)
    fail(ErrorCode::kChannel, "render needs a 1- or 3-channel image");
  const auto values = upsample_map(map, img.width(), img.height());
  ImageBuf out(img.width(), img.height(), 3);
  const std::size_t n = img.pixel_count();
  for (int c = 0; c < 3; ++c) {
    const auto src = img.plane(img.channels() == 3 ? c : 0);
    auto dst = out.plane(c);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = alpha * magma_color(values[i])[c] + (1.0 - alpha) * src[i];
      dst[i] = std::clamp(v, 0.0, 1.0);
    }
  }
  return out;
}

void write_map_csv(const std::string& path, const QualityMap& map, std::uint64_t seed) {
  validate_map(map);
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << "# ugciqa schema_version=1 seed=" << seed << "\n";
  for (int gy = 0; gy < map.grid_h; ++gy) {
    for (int gx = 0; gx < map.grid_w; ++gx) {
      if (gx) out << ',';
      out << detail::format_double(map.score(gx, gy));
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "failed writing " + path);
}

}  // namespace ugciqa
