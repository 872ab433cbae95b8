#include "ugciqa/features.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "text_util.hpp"
#include "ugciqa/error.hpp"

namespace ugciqa {

std::array<double, FeatureVector::kCount> FeatureVector::as_array() const {
  return {brightness, colorfulness, rms_contrast, spatial_information,
          static_cast<double>(pixel_count), static_cast<double>(face_count)};
}

namespace {

void require_rgb(const ImageBuf& img, const char* op) {
  if (img.channels() != 3)
    fail(ErrorCode::kChannel, std::string(op) + " requires a 3-channel image");
}

}  // namespace

double brightness(const ImageBuf& img) {
  require_rgb(img, "brightness");
  const auto r = img.plane(0);
  const auto g = img.plane(1);
  const auto b = img.plane(2);
  double sum = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) sum += r[i] + g[i] + b[i];
  return sum / static_cast<double>(r.size());
}

double colorfulness(const ImageBuf& img) {
  require_rgb(img, "colorfulness");
  if (img.pixel_count() < 2) fail(ErrorCode::kSize, "colorfulness needs at least 2 pixels");
  const auto r = img.plane(0);
  const auto g = img.plane(1);
  const auto b = img.plane(2);
  const double n = static_cast<double>(r.size());

  double mean_rg = 0.0, mean_yb = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    mean_rg += r[i] - g[i];
    mean_yb += 0.5 * (r[i] + g[i]) - b[i];
  }
  mean_rg /= n;
  mean_yb /= n;

  double var_rg = 0.0, var_yb = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double drg = (r[i] - g[i]) - mean_rg;
    const double dyb = (0.5 * (r[i] + g[i]) - b[i]) - mean_yb;
    var_rg += drg * drg;
    var_yb += dyb * dyb;
  }
  var_rg /= n;
  var_yb /= n;
  return std::sqrt(var_rg + var_yb) + 0.3 * std::sqrt(mean_rg * mean_rg + mean_yb * mean_yb);
}

double rms_contrast(const ImageBuf& img) {
  const ImageBuf luma = to_luma(img);
  const auto v = luma.plane(0);
  const double n = static_cast<double>(v.size());
  double mean = 0.0;
  for (double s : v) mean += s;
  mean /= n;
  if (mean <= 0.0) fail(ErrorCode::kDegenerate, "rms_contrast undefined for a black image");
  double var = 0.0;
  for (double s : v) var += (s - mean) * (s - mean);
  return std::sqrt(var / n) / mean;
}

double spatial_information(const ImageBuf& img) {
  const ImageBuf luma = to_luma(img);
  const int w = luma.width();
  const int h = luma.height();
  if (w < 3 || h < 3) fail(ErrorCode::kSize, "spatial_information needs at least 3x3 pixels");

  std::vector<double> mag;
  mag.reserve(static_cast<std::size_t>(w - 2) * (h - 2));
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      auto p = [&](int dy, int dx) { return luma.at(0, y + dy, x + dx); };
      const double gx = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) -
                        (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
      const double gy = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) -
                        (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
      mag.push_back(std::sqrt(gx * gx + gy * gy));
    }
  }
  const double n = static_cast<double>(mag.size());
  double mean = 0.0;
  for (double m : mag) mean += m;
  mean /= n;
  double var = 0.0;
  for (double m : mag) var += (m - mean) * (m - mean);
  return std::sqrt(var / n);
}

FeatureVector feature_vector(const ImageBuf& img, int face_count) {
  if (face_count < 0) fail(ErrorCode::kValidation, "face_count must be nonnegative");
  FeatureVector f;
  f.brightness = brightness(img);
  f.colorfulness = colorfulness(img);
  f.rms_contrast = rms_contrast(img);
  f.spatial_information = spatial_information(img);
  f.pixel_count = static_cast<long long>(img.pixel_count());
  f.face_count = face_count;
  return f;
}

void write_feature_csv(std::ostream& out, const std::vector<FeatureRow>& rows) {
  out << "id";
  for (auto name : kFeatureNames) out << ',' << name;
  out << '\n';
  for (const auto& row : rows) {
    if (row.id.find_first_of(",\n") != std::string::npos)
      fail(ErrorCode::kValidation, "feature id may not contain ',' or newline: " + row.id);
    const auto& f = row.features;
    out << row.id << ',' << detail::format_double(f.brightness) << ','
        << detail::format_double(f.colorfulness) << ','
        << detail::format_double(f.rms_contrast) << ','
        << detail::format_double(f.spatial_information) << ',' << f.pixel_count << ','
        << f.face_count << '\n';
  }
}

std::vector<FeatureRow> read_feature_csv(std::istream& in) {
  std::vector<FeatureRow> rows;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto cells = detail::split(text, ',');
    if (!header_seen) {
      if (cells.size() != 7 || detail::trim(cells[0]) != "id")
        fail(ErrorCode::kValidation, "feature CSV header must be id," +
                                         std::string("brightness,...,face_count"));
      for (std::size_t i = 0; i < kFeatureNames.size(); ++i) {
        if (detail::trim(cells[i + 1]) != kFeatureNames[i])
          fail(ErrorCode::kValidation, "unexpected feature CSV column " +
                                           std::string(cells[i + 1]));
      }
      header_seen = true;
      continue;
    }
    if (cells.size() != 7)
      fail(ErrorCode::kValidation, "feature CSV row must have 7 cells: " + line);
    FeatureRow row;
    row.id = std::string(detail::trim(cells[0]));
    row.features.brightness = detail::parse_double(cells[1], "brightness");
    row.features.colorfulness = detail::parse_double(cells[2], "colorfulness");
    row.features.rms_contrast = detail::parse_double(cells[3], "rms_contrast");
    row.features.spatial_information = detail::parse_double(cells[4], "si");
    row.features.pixel_count = detail::parse_int(cells[5], "pixel_count");
    row.features.face_count = static_cast<int>(detail::parse_int(cells[6], "face_count"));
    if (row.features.face_count < 0 || row.features.pixel_count < 1)
      fail(ErrorCode::kValidation, "invalid feature row for " + row.id);
    rows.push_back(std::move(row));
  }
  if (!header_seen) fail(ErrorCode::kValidation, "feature CSV is empty");
  return rows;
}

}  // namespace ugciqa
