#include "ugciqa/ugciqa.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "ugciqa/config.hpp"
#include "ugciqa/error.hpp"
#include "ugciqa/features.hpp"
#include "ugciqa/image.hpp"
#include "ugciqa/model.hpp"
#include "ugciqa/patcher.hpp"
#include "ugciqa/pipeline.hpp"
#include "ugciqa/psych.hpp"

struct ugciqa_config {
  ugciqa::KeyValueConfig values;
};

struct ugciqa_image {
  ugciqa::ImageBuf image;
};

struct ugciqa_model {
  ugciqa::nn::QualityModel model;
};

namespace {

thread_local std::string g_last_error;

int set_error(int code, const std::string& message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const ugciqa::Error& e) {
    return set_error(static_cast<int>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(UGCIQA_E_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(UGCIQA_E_INTERNAL, e.what());
  } catch (...) {
    return set_error(UGCIQA_E_INTERNAL, "unknown failure");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) ugciqa::fail(ugciqa::ErrorCode::kInvalidArgument, what);
}

}  // namespace

extern "C" {

const char* ugciqa_version(void) { return "1.0.0"; }

const char* ugciqa_last_error(void) { return g_last_error.c_str(); }

const char* ugciqa_status_name(int status) {
  return ugciqa::error_code_name(static_cast<ugciqa::ErrorCode>(status));
}

void ugciqa_string_free(char* s) { std::free(s); }

int ugciqa_config_create(ugciqa_config_t** out) {
  return guarded([&] {
    require(out != nullptr, "null output pointer");
    *out = new ugciqa_config{};
    return UGCIQA_OK;
  });
}

int ugciqa_config_set(ugciqa_config_t* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg && key && value, "null argument");
    require(*key != '\0', "empty key");
    cfg->values.set(key, value);
    return UGCIQA_OK;
  });
}

int ugciqa_config_load(ugciqa_config_t* cfg, const char* path) {
  return guarded([&] {
    require(cfg && path, "null argument");
    const auto file = ugciqa::KeyValueConfig::load(path);
    for (const auto& [k, v] : file.values()) cfg->values.set(k, v);
    return UGCIQA_OK;
  });
}

void ugciqa_config_free(ugciqa_config_t* cfg) { delete cfg; }

int ugciqa_default_settings(char** text) {
  return guarded([&] {
    require(text != nullptr, "null output pointer");
    *text = dup_string(ugciqa::settings_to_text(ugciqa::Settings{}));
    return UGCIQA_OK;
  });
}

int ugciqa_image_load(const char* path, ugciqa_image_t** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new ugciqa_image{ugciqa::load_image(path)};
    return UGCIQA_OK;
  });
}

int ugciqa_image_create(int width, int height, int channels, const double* samples,
                        ugciqa_image_t** out) {
  return guarded([&] {
    require(samples && out, "null argument");
    require(width > 0 && height > 0 && (channels == 1 || channels == 3), "bad image geometry");
    const std::size_t n = static_cast<std::size_t>(width) * height * channels;
    *out = new ugciqa_image{
        ugciqa::ImageBuf(width, height, channels, std::vector<double>(samples, samples + n))};
    return UGCIQA_OK;
  });
}

int ugciqa_image_info(const ugciqa_image_t* img, int* width, int* height, int* channels) {
  return guarded([&] {
    require(img != nullptr, "null image");
    if (width) *width = img->image.width();
    if (height) *height = img->image.height();
    if (channels) *channels = img->image.channels();
    return UGCIQA_OK;
  });
}

int ugciqa_image_samples(const ugciqa_image_t* img, double* out, size_t count) {
  return guarded([&] {
    require(img && out, "null argument");
    const auto s = img->image.samples();
    require(count == s.size(), "sample count does not match the image");
    std::copy(s.begin(), s.end(), out);
    return UGCIQA_OK;
  });
}

int ugciqa_image_save_png(const ugciqa_image_t* img, const char* path) {
  return guarded([&] {
    require(img && path, "null argument");
    ugciqa::save_png(img->image, path);
    return UGCIQA_OK;
  });
}

void ugciqa_image_free(ugciqa_image_t* img) { delete img; }

int ugciqa_features(const ugciqa_image_t* img, int face_count, double out[UGCIQA_FEATURE_COUNT]) {
  return guarded([&] {
    require(img && out, "null argument");
    const auto arr = ugciqa::feature_vector(img->image, face_count).as_array();
    std::copy(arr.begin(), arr.end(), out);
    return UGCIQA_OK;
  });
}

int ugciqa_srcc(const double* x, const double* y, size_t n, double* out) {
  return guarded([&] {
    require(x && y && out, "null argument");
    *out = ugciqa::srcc({x, n}, {y, n});
    return UGCIQA_OK;
  });
}

int ugciqa_lcc(const double* x, const double* y, size_t n, double* out) {
  return guarded([&] {
    require(x && y && out, "null argument");
    *out = ugciqa::lcc({x, n}, {y, n});
    return UGCIQA_OK;
  });
}

int ugciqa_propose_patches(int width, int height, uint64_t seed, int rects_out[12]) {
  return guarded([&] {
    require(rects_out != nullptr, "null output");
    const auto patches = ugciqa::propose_patches(width, height, seed);
    for (std::size_t i = 0; i < patches.size(); ++i) {
      rects_out[4 * i + 0] = patches[i].rect.left;
      rects_out[4 * i + 1] = patches[i].rect.top;
      rects_out[4 * i + 2] = patches[i].rect.right;
      rects_out[4 * i + 3] = patches[i].rect.bottom;
    }
    return UGCIQA_OK;
  });
}

int ugciqa_model_load(const char* path, ugciqa_model_t** out) {
  return guarded([&] {
    require(path && out, "null argument");
    *out = new ugciqa_model{ugciqa::nn::QualityModel::load(path)};
    return UGCIQA_OK;
  });
}

int ugciqa_model_predict(const ugciqa_model_t* model, const ugciqa_image_t* img, int pad_side,
                         double* score) {
  return guarded([&] {
    require(model && img && score, "null argument");
    int side = pad_side > 0 ? pad_side : model->model.pad_side();
    require(side > 0, "no pad side given and none stored in the checkpoint");
    *score = model->model.predict(img->image, side);
    return UGCIQA_OK;
  });
}

void ugciqa_model_free(ugciqa_model_t* model) { delete model; }

int ugciqa_run_command(const char* command, const ugciqa_config_t* options, char** report_json,
                       char** summary) {
  return guarded([&] {
    require(command != nullptr, "null command");
    const ugciqa::KeyValueConfig empty;
    const auto result = ugciqa::run_command(command, options ? options->values : empty);
    if (report_json) *report_json = dup_string(result.report_json);
    if (summary) *summary = dup_string(result.summary);
    return result.exit_code;
  });
}

}  // extern "C"
