#include <doctest.h>

#include <cmath>
#include <sstream>

#include "check.hpp"
#include "fixtures.hpp"
#include "ugciqa/features.hpp"
#include "ugciqa/rng.hpp"

using namespace ugciqa;

namespace {

double colorfulness_oracle(const ImageBuf& img) {
  const std::size_t n = img.pixel_count();
  std::vector<double> rg(n), yb(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = img.plane(0)[i], g = img.plane(1)[i], b = img.plane(2)[i];
    rg[i] = r - g;
    yb[i] = 0.5 * (r + g) - b;
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / v.size();
  };
  auto var = [&](const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / v.size();
  };
  return std::sqrt(var(rg) + var(yb)) + 0.3 * std::sqrt(mean(rg) * mean(rg) + mean(yb) * mean(yb));
}

double sobel_oracle(const ImageBuf& img) {
  const ImageBuf l = to_luma(img);
  const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  const int ky[3][3] = {{-1, -2, -1}, {0, 0, 0}, {1, 2, 1}};
  std::vector<double> mags;
  for (int y = 1; y + 1 < l.height(); ++y)
    for (int x = 1; x + 1 < l.width(); ++x) {
      double gx = 0, gy = 0;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i) {
          gx += kx[j + 1][i + 1] * l.at(0, y + j, x + i);
          gy += ky[j + 1][i + 1] * l.at(0, y + j, x + i);
        }
      mags.push_back(std::sqrt(gx * gx + gy * gy));
    }
  double m = 0;
  for (double v : mags) m += v;
  m /= mags.size();
  double s = 0;
  for (double v : mags) s += (v - m) * (v - m);
  return std::sqrt(s / mags.size());
}

ImageBuf halves(int w, int h, double left, double right, int channels) {
  ImageBuf img(w, h, channels);
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) img.at(c, y, x) = x < w / 2 ? left : right;
  return img;
}

}  // namespace

TEST_SUITE("ugcfeat") {

TEST_CASE("brightness") {
  CHECK(brightness(ImageBuf(8, 8, 3, 1.0)) == 3.0);
  CHECK(brightness(ImageBuf(8, 8, 3, 0.0)) == 0.0);
  CHECK(brightness(halves(8, 8, 1.0, 0.0, 3)) == doctest::Approx(1.5).epsilon(1e-15));
  CHECK_ERROR_CODE(brightness(ImageBuf(8, 8, 1, 0.5)), ErrorCode::kChannel);
  const ImageBuf img = fixtures::noise_image(16, 16, 3, 3);
  ImageBuf scaled = img;
  for (auto& s : scaled.samples()) s *= 0.4;
  CHECK(brightness(scaled) == doctest::Approx(0.4 * brightness(img)).epsilon(1e-12));
}

TEST_CASE("colorfulness") {
  const ImageBuf gray = fixtures::noise_image(10, 10, 1, 4);
  ImageBuf rgb(10, 10, 3);
  for (int c = 0; c < 3; ++c)
    std::copy(gray.samples().begin(), gray.samples().end(), rgb.plane(c).begin());
  CHECK(colorfulness(rgb) == 0.0);

  ImageBuf red(6, 6, 3, 0.0);
  for (auto& s : red.plane(0)) s = 1.0;
  CHECK(colorfulness(red) == doctest::Approx(0.3 * std::sqrt(1.25)).epsilon(1e-12));
  CHECK(colorfulness(red) == doctest::Approx(0.33541).epsilon(1e-5));

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ImageBuf img = fixtures::noise_image(17, 13, 3, seed);
    CHECK(std::abs(colorfulness(img) - colorfulness_oracle(img)) < 1e-12);
  }
  CHECK_ERROR_CODE(colorfulness(ImageBuf(1, 1, 3, 0.5)), ErrorCode::kSize);
}

TEST_CASE("colorfulness ignores pixel order") {
  const ImageBuf img = fixtures::noise_image(12, 12, 3, 8);
  std::vector<std::size_t> perm(img.pixel_count());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  Rng rng(2);
  rng.shuffle(perm);
  ImageBuf shuffled(12, 12, 3);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < perm.size(); ++i) shuffled.plane(c)[i] = img.plane(c)[perm[i]];
  CHECK(colorfulness(shuffled) == doctest::Approx(colorfulness(img)).epsilon(1e-12));
}

TEST_CASE("rms_contrast") {
  CHECK(rms_contrast(ImageBuf(5, 5, 3, 0.7)) == doctest::Approx(0.0));
  CHECK(rms_contrast(halves(8, 8, 0.2, 0.6, 1)) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_ERROR_CODE(rms_contrast(ImageBuf(5, 5, 3, 0.0)), ErrorCode::kDegenerate);
}

TEST_CASE("spatial_information") {
  CHECK(spatial_information(ImageBuf(9, 9, 3, 0.4)) == 0.0);
  const ImageBuf edge = halves(8, 8, 0.0, 1.0, 1);
  CHECK(spatial_information(edge) == doctest::Approx(sobel_oracle(edge)).epsilon(1e-12));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ImageBuf img = fixtures::noise_image(15, 11, 3, seed);
    CHECK(spatial_information(img) == doctest::Approx(sobel_oracle(img)).epsilon(1e-12));
  }
  CHECK_ERROR_CODE(spatial_information(ImageBuf(2, 2, 1, 0.1)), ErrorCode::kSize);

  // Adding a constant to the luma leaves the gradients unchanged.
  const ImageBuf base = fixtures::noise_image(12, 12, 1, 11, 0.0, 0.5);
  ImageBuf shifted = base;
  for (auto& s : shifted.samples()) s += 0.25;
  CHECK(spatial_information(shifted) == doctest::Approx(spatial_information(base)).epsilon(1e-9));
}

TEST_CASE("feature_vector") {
  const FeatureVector f = feature_vector(ImageBuf(10, 10, 3, 1.0), 0);
  CHECK(f.brightness == 3.0);
  CHECK(f.colorfulness == 0.0);
  CHECK(f.rms_contrast == doctest::Approx(0.0));
  CHECK(f.spatial_information == 0.0);
  CHECK(f.pixel_count == 100);
  CHECK(f.face_count == 0);
  CHECK_ERROR_CODE(feature_vector(ImageBuf(10, 10, 3, 0.0), 0), ErrorCode::kDegenerate);
  CHECK_ERROR_CODE(feature_vector(ImageBuf(10, 10, 3, 1.0), -1), ErrorCode::kValidation);
}

TEST_CASE("feature CSV round-trips byte for byte") {
  std::vector<FeatureRow> rows;
  for (int i = 0; i < 5; ++i)
    rows.push_back({"img" + std::to_string(i) + ".png",
                    feature_vector(fixtures::noise_image(20, 16, 3, i), i % 3)});
  std::ostringstream first;
  first << "# comment line\n";
  write_feature_csv(first, rows);
  std::istringstream in(first.str());
  const auto back = read_feature_csv(in);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].id == rows[i].id);
    CHECK(back[i].features.as_array() == rows[i].features.as_array());
  }
  std::ostringstream second;
  second << "# comment line\n";
  write_feature_csv(second, back);
  CHECK(first.str() == second.str());
  const std::string header = first.str().substr(first.str().find('\n') + 1);
  CHECK(header.rfind("id,brightness,colorfulness,rms_contrast,si,pixel_count,face_count\n", 0) == 0);
}

}  // TEST_SUITE
