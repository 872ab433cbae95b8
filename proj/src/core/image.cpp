#include "ugciqa/image.hpp"

#include <algorithm>

#include "ugciqa/error.hpp"

namespace ugciqa {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kPartial: return "partial";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kDecode: return "decode error";
    case ErrorCode::kDimension: return "dimension error";
    case ErrorCode::kBounds: return "bounds error";
    case ErrorCode::kChannel: return "channel error";
    case ErrorCode::kSize: return "size error";
    case ErrorCode::kDegenerate: return "degenerate input";
    case ErrorCode::kValidation: return "validation error";
    case ErrorCode::kRange: return "range error";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kStructure: return "structure error";
    case ErrorCode::kCoverage: return "coverage error";
    case ErrorCode::kMetric: return "metric error";
    case ErrorCode::kSolver: return "solver error";
    case ErrorCode::kCorpus: return "corpus error";
    case ErrorCode::kNumeric: return "numeric error";
    case ErrorCode::kPlacement: return "placement error";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kCapability: return "capability error";
    case ErrorCode::kVersion: return "version error";
    case ErrorCode::kIo: return "io error";
    case ErrorCode::kSplit: return "split error";
    case ErrorCode::kInternal: return "internal error";
  }
  return "unknown error";
}

namespace {

void check_geometry(int width, int height, int channels) {
  if (width <= 0 || height <= 0)
    fail(ErrorCode::kDimension, "image dimensions must be positive");
  if (channels != 1 && channels != 3)
    fail(ErrorCode::kChannel, "image must have 1 or 3 channels");
}

}  // namespace

ImageBuf::ImageBuf(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  check_geometry(width, height, channels);
  samples_.assign(pixel_count() * channels, fill);
}

ImageBuf::ImageBuf(int width, int height, int channels, std::vector<double> samples)
    : width_(width), height_(height), channels_(channels), samples_(std::move(samples)) {
  check_geometry(width, height, channels);
  if (samples_.size() != pixel_count() * channels)
    fail(ErrorCode::kShape, "sample count does not match width*height*channels");
  for (double s : samples_) {
    if (!(s >= 0.0 && s <= 1.0))
      fail(ErrorCode::kRange, "image samples must lie in [0,1]");
  }
}

std::pair<int, int> white_pad_offset(int width, int height, int side) {
  return {(side - width) / 2, (side - height) / 2};
}

ImageBuf white_pad(const ImageBuf& img, int width, int height) {
  if (img.width() > width || img.height() > height) {
    fail(ErrorCode::kDimension,
         "image " + std::to_string(img.width()) + "x" + std::to_string(img.height()) +
             " does not fit a " + std::to_string(width) + "x" +
             std::to_string(height) + " canvas");
  }
  ImageBuf out(width, height, img.channels(), 1.0);
  const int ox = (width - img.width()) / 2;
  const int oy = (height - img.height()) / 2;
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < img.height(); ++y) {
      const auto src = img.plane(c).subspan(static_cast<std::size_t>(y) * img.width(),
                                            img.width());
      std::copy(src.begin(), src.end(), &out.at(c, y + oy, ox));
    }
  }
  return out;
}

ImageBuf white_pad(const ImageBuf& img, int side) { return white_pad(img, side, side); }

ImageBuf crop(const ImageBuf& img, const Rect& r) {
  if (!r.inside(img.width(), img.height()))
    fail(ErrorCode::kBounds, "crop rectangle exceeds image bounds");
  ImageBuf out(r.width(), r.height(), img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < r.height(); ++y) {
      const auto row = img.plane(c).subspan(
          static_cast<std::size_t>(r.top + y) * img.width() + r.left, r.width());
      std::copy(row.begin(), row.end(), &out.at(c, y, 0));
    }
  }
  return out;
}

ImageBuf to_luma(const ImageBuf& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) fail(ErrorCode::kChannel, "to_luma expects 1 or 3 channels");
  ImageBuf out(img.width(), img.height(), 1);
  const auto r = img.plane(0);
  const auto g = img.plane(1);
  const auto b = img.plane(2);
  auto dst = out.plane(0);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    // Clamp guards against 1.0000000000000002 from rounding.
    dst[i] = std::clamp(0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i], 0.0, 1.0);
  }
  return out;
}

}  // namespace ugciqa
