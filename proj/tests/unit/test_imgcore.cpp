#include <doctest.h>

#include <algorithm>

#include "check.hpp"
#include "fixtures.hpp"
#include "ugciqa/image.hpp"

using namespace ugciqa;

TEST_SUITE("imgcore") {

TEST_CASE("ImageBuf enforces its invariants") {
  CHECK_ERROR_CODE(ImageBuf(0, 4, 1), ErrorCode::kDimension);
  CHECK_ERROR_CODE(ImageBuf(4, 4, 2), ErrorCode::kChannel);
  CHECK_ERROR_CODE(ImageBuf(2, 1, 1, std::vector<double>{0.5}), ErrorCode::kShape);
  CHECK_ERROR_CODE(ImageBuf(2, 1, 1, std::vector<double>{0.5, 1.5}), ErrorCode::kRange);
  const ImageBuf img(3, 2, 3, 0.25);
  CHECK(img.samples().size() == 18);
  CHECK(img.pixel_count() == 6);
}

TEST_CASE("PNG decode scales bytes and stores planes") {
  fixtures::TempDir dir;
  ImageBuf img(2, 1, 3, std::vector<double>{1, 0, 1, 0, 1, 0});
  save_png(img, dir / "a.png");
  const ImageBuf back = load_image(dir / "a.png");
  CHECK(back == img);

  // Interleaved source (255,255,255),(0,0,0) decodes to planar {1,0,1,0,1,0}.
  ImageBuf wb(2, 1, 3, std::vector<double>{1, 0, 1, 0, 1, 0});
  save_png(wb, dir / "wb.png");
  const ImageBuf d = load_image(dir / "wb.png");
  CHECK(std::vector<double>(d.samples().begin(), d.samples().end()) ==
        std::vector<double>{1, 0, 1, 0, 1, 0});
}

TEST_CASE("every 8-bit value round-trips through PNG as v/255") {
  fixtures::TempDir dir;
  std::vector<double> s(256);
  for (int v = 0; v < 256; ++v) s[v] = v / 255.0;
  const ImageBuf img(256, 1, 1, s);
  save_png(img, dir / "ramp.png");
  const ImageBuf back = load_image(dir / "ramp.png");
  for (int v = 0; v < 256; ++v) CHECK(back.at(0, 0, v) == v / 255.0);
}

TEST_CASE("JPEG decode keeps dimensions and approximate values") {
  fixtures::TempDir dir;
  const ImageBuf img = fixtures::smooth_image(100, 80, 3, 4);
  fixtures::write_jpeg(img, dir / "x.jpg", 95);
  const ImageBuf d = load_image(dir / "x.jpg");
  CHECK(d.width() == 100);
  CHECK(d.height() == 80);
  CHECK(d.channels() == 3);
  double err = 0;
  for (std::size_t i = 0; i < d.samples().size(); ++i)
    err = std::max(err, std::abs(d.samples()[i] - img.samples()[i]));
  CHECK(err < 0.1);
}

TEST_CASE("corrupt and truncated files are decode errors") {
  fixtures::TempDir dir;
  save_png(fixtures::noise_image(32, 32, 3, 1), dir / "ok.png");
  auto bytes = fixtures::read_bytes(dir / "ok.png");
  bytes.resize(bytes.size() / 2);
  fixtures::write_bytes(dir / "trunc.png", bytes);
  CHECK_ERROR_CODE(load_image(dir / "trunc.png"), ErrorCode::kDecode);

  fixtures::write_jpeg(fixtures::noise_image(64, 64, 3, 2), dir / "ok.jpg");
  auto jb = fixtures::read_bytes(dir / "ok.jpg");
  jb.resize(jb.size() / 3);
  fixtures::write_bytes(dir / "trunc.jpg", jb);
  CHECK_ERROR_CODE(load_image(dir / "trunc.jpg"), ErrorCode::kDecode);

  fixtures::write_bytes(dir / "junk.png", {'n', 'o', 't', ' ', 'a', 'n', ' ', 'i', 'm', 'g'});
  CHECK_ERROR_CODE(load_image(dir / "junk.png"), ErrorCode::kDecode);
  CHECK_ERROR_CODE(load_image(dir / "missing.png"), ErrorCode::kDecode);
}

TEST_CASE("white_pad centers with floor offsets") {
  const ImageBuf img = fixtures::noise_image(300, 200, 3, 5);
  const auto [ox, oy] = white_pad_offset(300, 200, 640);
  CHECK(ox == 170);
  CHECK(oy == 220);
  const ImageBuf padded = white_pad(img, 640);
  CHECK(padded.width() == 640);
  CHECK(padded.height() == 640);
  std::size_t white = 0;
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 640; ++y)
      for (int x = 0; x < 640; ++x) {
        const bool inside = x >= 170 && x < 470 && y >= 220 && y < 420;
        if (inside) {
          CHECK_EQ(padded.at(c, y, x), img.at(c, y - 220, x - 170));
        } else {
          white += padded.at(c, y, x) == 1.0;
        }
      }
  CHECK(white == 3u * (640u * 640u - 300u * 200u));
  CHECK(crop(padded, {170, 220, 470, 420}) == img);

  const auto [ox2, oy2] = white_pad_offset(5, 4, 8);
  CHECK(ox2 == 1);
  CHECK(oy2 == 2);
}

TEST_CASE("white_pad identity and dimension error") {
  const ImageBuf img = fixtures::noise_image(64, 64, 1, 6);
  CHECK(white_pad(img, 64) == img);
  CHECK_ERROR_CODE(white_pad(fixtures::noise_image(641, 480, 1, 1), 640), ErrorCode::kDimension);
}

TEST_CASE("crop copies exactly and checks bounds") {
  const ImageBuf ramp = fixtures::ramp_image(4, 4);
  const ImageBuf c = crop(ramp, {0, 0, 2, 2});
  CHECK(c.width() == 2);
  CHECK(c.at(0, 0, 0) == ramp.at(0, 0, 0));
  CHECK(c.at(0, 0, 1) == ramp.at(0, 0, 1));
  CHECK(c.at(0, 1, 0) == ramp.at(0, 1, 0));
  CHECK(c.at(0, 1, 1) == ramp.at(0, 1, 1));
  const ImageBuf mid = crop(ramp, {1, 2, 4, 4});
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) CHECK(mid.at(0, y, x) == ramp.at(0, y + 2, x + 1));
  CHECK(crop(ramp, {0, 0, 4, 4}) == ramp);
  CHECK_ERROR_CODE(crop(ramp, {0, 0, 5, 5}), ErrorCode::kBounds);
}

TEST_CASE("to_luma uses Rec.601 weights") {
  CHECK(to_luma(ImageBuf(4, 4, 3, 1.0)).at(0, 2, 2) == doctest::Approx(1.0).epsilon(1e-15));
  ImageBuf red(3, 3, 3, 0.0);
  for (auto& s : red.plane(0)) s = 1.0;
  const ImageBuf l = to_luma(red);
  CHECK(l.channels() == 1);
  for (double s : l.samples()) CHECK(s == doctest::Approx(0.299).epsilon(1e-15));
  const ImageBuf gray = fixtures::noise_image(5, 5, 1, 3);
  CHECK(to_luma(gray) == gray);
  const ImageBuf rnd = to_luma(fixtures::noise_image(20, 20, 3, 9));
  for (double s : rnd.samples()) CHECK((s >= 0.0 && s <= 1.0));
}

}  // TEST_SUITE
