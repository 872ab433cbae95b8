#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include <jpeglib.h>
#include <png.h>

#include "ugciqa/error.hpp"
#include "ugciqa/image.hpp"

namespace ugciqa {
namespace {

struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;  // as stored in `bytes`, before alpha removal
  std::vector<std::uint8_t> bytes;  // interleaved
};

// ---- PNG ---------------------------------------------------------------

struct PngReadCursor {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<PngReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + n > cur->size) png_error(png, "truncated PNG stream");
  std::memcpy(out, cur->data + cur->pos, n);
  cur->pos += n;
}

void png_error_to_longjmp(png_structp png, png_const_charp) {
  png_longjmp(png, 1);
}

void png_silent_warning(png_structp, png_const_charp) {}

// Returns false on any libpng error. Only POD state crosses setjmp.
bool decode_png(std::span<const std::uint8_t> bytes, RawImage& out) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                           png_error_to_longjmp, png_silent_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  PngReadCursor cursor{bytes.data(), bytes.size(), 0};
  png_bytep* volatile rows = nullptr;
  if (setjmp(png_jmpbuf(png))) {
    delete[] rows;
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &cursor, png_read_from_memory);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_error(png, "16-bit PNG is not supported");
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int ch = png_get_channels(png, info);
  if (w <= 0 || h <= 0) png_error(png, "zero-dimension image");
  out.width = w;
  out.height = h;
  out.channels = ch;
  out.bytes.resize(static_cast<std::size_t>(w) * h * ch);
  rows = new png_bytep[h];
  for (int y = 0; y < h; ++y) rows[y] = out.bytes.data() + static_cast<std::size_t>(y) * w * ch;
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  delete[] rows;
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

// ---- JPEG --------------------------------------------------------------

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  std::longjmp(err->jump, 1);
}

void jpeg_silent_message(j_common_ptr) {}

bool decode_jpeg(std::span<const std::uint8_t> bytes, RawImage& out) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager jerr;
  cinfo.err = jpeg_std_error(&jerr.base);
  jerr.base.error_exit = jpeg_error_exit;
  jerr.base.output_message = jpeg_silent_message;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  if (jpeg_read_header(&cinfo, TRUE) != JPEG_HEADER_OK) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  const int w = static_cast<int>(cinfo.output_width);
  const int h = static_cast<int>(cinfo.output_height);
  const int ch = cinfo.output_components;
  if (w <= 0 || h <= 0) {
    jpeg_destroy_decompress(&cinfo);
    return false;
  }
  out.width = w;
  out.height = h;
  out.channels = ch;
  out.bytes.resize(static_cast<std::size_t>(w) * h * ch);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.bytes.data() +
                   static_cast<std::size_t>(cinfo.output_scanline) * w * ch;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  // libjpeg pads truncated streams with gray and only warns; treat as corrupt.
  const bool truncated = jerr.base.num_warnings > 0;
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return !truncated;
}

ImageBuf to_planar(const RawImage& raw) {
  // Gray+alpha -> 1 channel, RGB(A) -> 3 channels.
  const int out_channels = raw.channels <= 2 ? 1 : 3;
  std::vector<double> samples(static_cast<std::size_t>(raw.width) * raw.height *
                              out_channels);
  const std::size_t plane = static_cast<std::size_t>(raw.width) * raw.height;
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < out_channels; ++c) {
      samples[c * plane + i] = raw.bytes[i * raw.channels + c] / 255.0;
    }
  }
  return ImageBuf(raw.width, raw.height, out_channels, std::move(samples));
}

}  // namespace

ImageBuf decode_image(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  RawImage raw;
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngMagic, 8) == 0) {
    if (!decode_png(bytes, raw)) fail(ErrorCode::kDecode, "corrupt or unsupported PNG");
  } else if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    if (!decode_jpeg(bytes, raw)) fail(ErrorCode::kDecode, "corrupt or unsupported JPEG");
  } else {
    fail(ErrorCode::kDecode, "unsupported image format (expected PNG or JPEG)");
  }
  return to_planar(raw);
}

ImageBuf load_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kDecode, "cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    fail(e.code(), path.string() + ": " + e.what());
  }
}

namespace {

bool encode_png(FILE* fp, int w, int h, int color_type,
                const std::vector<std::uint8_t>& interleaved, int channels,
                const std::vector<std::pair<std::string, std::string>>& text) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            png_error_to_longjmp, png_silent_warning);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  png_bytep* volatile rows = nullptr;
  png_text* volatile chunks = nullptr;
  if (setjmp(png_jmpbuf(png))) {
    delete[] rows;
    delete[] chunks;
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  if (!text.empty()) {
    chunks = new png_text[text.size()];
    for (std::size_t i = 0; i < text.size(); ++i) {
      chunks[i] = png_text{};
      chunks[i].compression = PNG_TEXT_COMPRESSION_NONE;
      chunks[i].key = const_cast<char*>(text[i].first.c_str());
      chunks[i].text = const_cast<char*>(text[i].second.c_str());
    }
    png_set_text(png, info, chunks, static_cast<int>(text.size()));
  }
  png_write_info(png, info);
  rows = new png_bytep[h];
  for (int y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(interleaved.data()) +
              static_cast<std::size_t>(y) * w * channels;
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  delete[] rows;
  delete[] chunks;
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

void save_png(const ImageBuf& img, const std::filesystem::path& path,
              const std::vector<std::pair<std::string, std::string>>& text) {
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  const std::size_t plane = img.pixel_count();
  std::vector<std::uint8_t> interleaved(plane * ch);
  for (std::size_t i = 0; i < plane; ++i) {
    for (int c = 0; c < ch; ++c) {
      const double v = std::clamp(img.samples()[c * plane + i], 0.0, 1.0);
      interleaved[i * ch + c] = static_cast<std::uint8_t>(v * 255.0 + 0.5);
    }
  }
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (fp == nullptr) fail(ErrorCode::kIo, "cannot write " + path.string());
  const bool ok = encode_png(fp, w, h, ch == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                             interleaved, ch, text);
  std::fclose(fp);
  if (!ok) fail(ErrorCode::kIo, "PNG encode failed for " + path.string());
}

}  // namespace ugciqa
