#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ugciqa {

/// Half-open integer pixel rectangle: [left, right) x [top, bottom).
struct Rect {
  int left = 0;
  int top = 0;
  int right = 0;
  int bottom = 0;

  constexpr int width() const noexcept { return right - left; }
  constexpr int height() const noexcept { return bottom - top; }
  constexpr long long area() const noexcept {
    return static_cast<long long>(width()) * height();
  }
  constexpr bool valid() const noexcept {
    return left >= 0 && top >= 0 && left < right && top < bottom;
  }
  constexpr bool inside(int w, int h) const noexcept {
    return valid() && right <= w && bottom <= h;
  }
  constexpr Rect translated(int dx, int dy) const noexcept {
    return {left + dx, top + dy, right + dx, bottom + dy};
  }

  friend constexpr bool operator==(const Rect&, const Rect&) = default;
};

/// Planar floating-point raster. Channel c occupies samples
/// [c*w*h, (c+1)*w*h), each plane row-major. Samples live in [0, 1].
class ImageBuf {
 public:
  ImageBuf() = default;
  ImageBuf(int width, int height, int channels, double fill = 0.0);
  ImageBuf(int width, int height, int channels, std::vector<double> samples);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  int channels() const noexcept { return channels_; }
  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  bool empty() const noexcept { return samples_.empty(); }

  double& at(int c, int y, int x) noexcept {
    return samples_[index(c, y, x)];
  }
  double at(int c, int y, int x) const noexcept {
    return samples_[index(c, y, x)];
  }

  std::span<double> plane(int c) noexcept {
    return std::span<double>(samples_).subspan(c * pixel_count(), pixel_count());
  }
  std::span<const double> plane(int c) const noexcept {
    return std::span<const double>(samples_).subspan(c * pixel_count(),
                                                     pixel_count());
  }

  std::span<double> samples() noexcept { return samples_; }
  std::span<const double> samples() const noexcept { return samples_; }

  friend bool operator==(const ImageBuf&, const ImageBuf&) = default;

 private:
  std::size_t index(int c, int y, int x) const noexcept {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> samples_;
};

/// Decodes an 8-bit PNG or JPEG; byte v becomes v/255. Alpha is dropped and
/// palette images are expanded to RGB.
ImageBuf load_image(const std::filesystem::path& path);
ImageBuf decode_image(std::span<const std::uint8_t> bytes);

/// Encodes as 8-bit PNG, each sample written as round(s * 255). Optional
/// tEXt key/value pairs are embedded after the header.
void save_png(const ImageBuf& img, const std::filesystem::path& path,
              const std::vector<std::pair<std::string, std::string>>& text = {});

/// Offset of the content inside a side x side white canvas.
std::pair<int, int> white_pad_offset(int width, int height, int side);

/// Centers img on a side x side canvas filled with 1.0.
ImageBuf white_pad(const ImageBuf& img, int side);

/// Centers img on a width x height white canvas.
ImageBuf white_pad(const ImageBuf& img, int width, int height);

ImageBuf crop(const ImageBuf& img, const Rect& r);

/// Rec.601 luma for RGB input; single-channel input is returned unchanged.
ImageBuf to_luma(const ImageBuf& img);

}  // namespace ugciqa
