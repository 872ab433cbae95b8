#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <jpeglib.h>
#include <unistd.h>

#include "ugciqa/rng.hpp"

namespace fixtures {

using ugciqa::ImageBuf;

ImageBuf noise_image(int width, int height, int channels, std::uint64_t seed, double lo, double hi) {
  ImageBuf img(width, height, channels);
  ugciqa::Rng rng(seed);
  for (auto& s : img.samples()) s = rng.uniform(lo, hi);
  return img;
}

ImageBuf smooth_image(int width, int height, int channels, std::uint64_t seed) {
  ImageBuf img(width, height, channels);
  ugciqa::Rng rng(seed);
  for (int c = 0; c < channels; ++c) {
    const double fx = rng.uniform(0.5, 3.0), fy = rng.uniform(0.5, 3.0), ph = rng.uniform(0, 6.28);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) {
        const double u = static_cast<double>(x) / width, v = static_cast<double>(y) / height;
        const double val = 0.5 + 0.3 * std::sin(2 * std::numbers::pi * (fx * u + fy * v) + ph) +
                           0.15 * (u - 0.5);
        img.at(c, y, x) = std::clamp(val, 0.0, 1.0);
      }
  }
  return img;
}

ImageBuf ramp_image(int width, int height) {
  ImageBuf img(width, height, 1);
  const double n = static_cast<double>(width) * height;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) img.at(0, y, x) = (y * width + x) / n;
  return img;
}

ImageBuf natural_image(int width, int height, std::uint64_t seed) {
  ugciqa::Rng rng(seed);
  ImageBuf img = smooth_image(width, height, 1, seed ^ 0x55);
  for (int b = 0; b < 6; ++b) {
    const double cx = rng.uniform(0, width), cy = rng.uniform(0, height);
    const double r = rng.uniform(0.08, 0.25) * std::min(width, height);
    const double level = rng.uniform(0.1, 0.9);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) < r * r) img.at(0, y, x) = level;
  }
  // Mild texture keeps local variance away from zero.
  for (auto& s : img.samples()) s = std::clamp(s + rng.normal(0.0, 0.01), 0.0, 1.0);
  return img;
}

ImageBuf add_noise(const ImageBuf& img, double sigma, std::uint64_t seed) {
  ImageBuf out = img;
  ugciqa::Rng rng(seed);
  for (auto& s : out.samples()) s = std::clamp(s + rng.normal(0.0, sigma), 0.0, 1.0);
  return out;
}

ImageBuf gaussian_blur(const ImageBuf& img, double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0;
  for (int i = -radius; i <= radius; ++i) sum += k[i + radius] = std::exp(-i * i / (2 * sigma * sigma));
  for (auto& v : k) v /= sum;
  const int w = img.width(), h = img.height();
  ImageBuf tmp(w, h, img.channels()), out(w, h, img.channels());
  for (int c = 0; c < img.channels(); ++c) {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0;
        for (int i = -radius; i <= radius; ++i) s += k[i + radius] * img.at(c, y, std::clamp(x + i, 0, w - 1));
        tmp.at(c, y, x) = s;
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double s = 0;
        for (int i = -radius; i <= radius; ++i) s += k[i + radius] * tmp.at(c, std::clamp(y + i, 0, h - 1), x);
        out.at(c, y, x) = std::clamp(s, 0.0, 1.0);
      }
  }
  return out;
}

void write_jpeg(const ImageBuf& img, const std::filesystem::path& path, int quality) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open " + path.string());
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, fp);
  cinfo.image_width = static_cast<JDIMENSION>(img.width());
  cinfo.image_height = static_cast<JDIMENSION>(img.height());
  cinfo.input_components = img.channels();
  cinfo.in_color_space = img.channels() == 3 ? JCS_RGB : JCS_GRAYSCALE;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  std::vector<JSAMPLE> row(static_cast<std::size_t>(img.width()) * img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c)
        row[static_cast<std::size_t>(x) * img.channels() + c] =
            static_cast<JSAMPLE>(std::lround(img.at(c, y, x) * 255.0));
    JSAMPROW ptr = row.data();
    jpeg_write_scanlines(&cinfo, &ptr, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::fclose(fp);
}

void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("ugciqa-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace fixtures
