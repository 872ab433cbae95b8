#pragma once

// Shared fixtures for the test binaries: synthetic images, scratch
// directories and a small JPEG writer.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ugciqa/image.hpp"

namespace fixtures {

/// Uniform noise in [lo, hi].
ugciqa::ImageBuf noise_image(int width, int height, int channels, std::uint64_t seed,
                             double lo = 0.0, double hi = 1.0);

/// Smooth sinusoid-plus-ramp pattern that looks like low-frequency content.
ugciqa::ImageBuf smooth_image(int width, int height, int channels, std::uint64_t seed);

/// Values i / (w*h) in row-major order (single channel).
ugciqa::ImageBuf ramp_image(int width, int height);

/// Piecewise-smooth "natural" fixture: blobs, edges and mild texture.
ugciqa::ImageBuf natural_image(int width, int height, std::uint64_t seed);

/// Adds N(0, sigma) noise and clamps to [0, 1].
ugciqa::ImageBuf add_noise(const ugciqa::ImageBuf& img, double sigma, std::uint64_t seed);

/// Separable Gaussian blur with edge clamping.
ugciqa::ImageBuf gaussian_blur(const ugciqa::ImageBuf& img, double sigma);

/// Writes an 8-bit JPEG (quantizing samples with round(v*255)).
void write_jpeg(const ugciqa::ImageBuf& img, const std::filesystem::path& path, int quality = 95);

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
std::string read_file(const std::filesystem::path& path);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
