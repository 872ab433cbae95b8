/* C interface of the ugciqa library.
 *
 * Every function that can fail returns a status code (UGCIQA_OK on success)
 * and leaves a message for ugciqa_last_error() on the calling thread.
 * Handles are opaque; release them with the matching *_free function.
 */
#ifndef UGCIQA_UGCIQA_H
#define UGCIQA_UGCIQA_H

#include <stddef.h>
#include <stdint.h>

#if defined(UGCIQA_BUILDING_LIBRARY)
#define UGCIQA_API __attribute__((visibility("default")))
#else
#define UGCIQA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; values match ugciqa::ErrorCode. */
enum {
  UGCIQA_OK = 0,
  UGCIQA_PARTIAL = 1,
  UGCIQA_E_INVALID_ARGUMENT = 2,
  UGCIQA_E_DECODE = 3,
  UGCIQA_E_DIMENSION = 4,
  UGCIQA_E_BOUNDS = 5,
  UGCIQA_E_CHANNEL = 6,
  UGCIQA_E_SIZE = 7,
  UGCIQA_E_DEGENERATE = 8,
  UGCIQA_E_VALIDATION = 9,
  UGCIQA_E_RANGE = 10,
  UGCIQA_E_SHAPE = 11,
  UGCIQA_E_STRUCTURE = 12,
  UGCIQA_E_COVERAGE = 13,
  UGCIQA_E_METRIC = 14,
  UGCIQA_E_SOLVER = 15,
  UGCIQA_E_CORPUS = 16,
  UGCIQA_E_NUMERIC = 17,
  UGCIQA_E_PLACEMENT = 18,
  UGCIQA_E_CONFIG = 19,
  UGCIQA_E_CAPABILITY = 20,
  UGCIQA_E_VERSION = 21,
  UGCIQA_E_IO = 22,
  UGCIQA_E_SPLIT = 23,
  UGCIQA_E_INTERNAL = 99
};

#define UGCIQA_FEATURE_COUNT 6

typedef struct ugciqa_config ugciqa_config_t;
typedef struct ugciqa_image ugciqa_image_t;
typedef struct ugciqa_model ugciqa_model_t;

UGCIQA_API const char* ugciqa_version(void);
/* Message of the last failure on this thread ("" if none). */
UGCIQA_API const char* ugciqa_last_error(void);
/* Readable name of a status code, e.g. "bounds error". */
UGCIQA_API const char* ugciqa_status_name(int status);
UGCIQA_API void ugciqa_string_free(char* s);

/* Key-value options for commands; see ugciqa_run_command. */
UGCIQA_API int ugciqa_config_create(ugciqa_config_t** out);
UGCIQA_API int ugciqa_config_set(ugciqa_config_t* cfg, const char* key, const char* value);
/* Merges a flat "key = value" file into cfg. */
UGCIQA_API int ugciqa_config_load(ugciqa_config_t* cfg, const char* path);
UGCIQA_API void ugciqa_config_free(ugciqa_config_t* cfg);
/* Every settings key with its default value, as "key = value" lines. */
UGCIQA_API int ugciqa_default_settings(char** text);

UGCIQA_API int ugciqa_image_load(const char* path, ugciqa_image_t** out);
/* samples: planar, channel-major, row-major planes, values in [0, 1]. */
UGCIQA_API int ugciqa_image_create(int width, int height, int channels, const double* samples,
                                   ugciqa_image_t** out);
UGCIQA_API int ugciqa_image_info(const ugciqa_image_t* img, int* width, int* height,
                                 int* channels);
/* Copies width*height*channels samples into out (count must match). */
UGCIQA_API int ugciqa_image_samples(const ugciqa_image_t* img, double* out, size_t count);
UGCIQA_API int ugciqa_image_save_png(const ugciqa_image_t* img, const char* path);
UGCIQA_API void ugciqa_image_free(ugciqa_image_t* img);

/* brightness, colorfulness, rms_contrast, si, pixel_count, face_count. */
UGCIQA_API int ugciqa_features(const ugciqa_image_t* img, int face_count,
                               double out[UGCIQA_FEATURE_COUNT]);
UGCIQA_API int ugciqa_srcc(const double* x, const double* y, size_t n, double* out);
UGCIQA_API int ugciqa_lcc(const double* x, const double* y, size_t n, double* out);
/* Three patches (scales 0.4, 0.3, 0.2) as left, top, right, bottom each. */
UGCIQA_API int ugciqa_propose_patches(int width, int height, uint64_t seed, int rects_out[12]);

UGCIQA_API int ugciqa_model_load(const char* path, ugciqa_model_t** out);
/* pad_side <= 0 uses the side stored in the checkpoint. */
UGCIQA_API int ugciqa_model_predict(const ugciqa_model_t* model, const ugciqa_image_t* img,
                                    int pad_side, double* score);
UGCIQA_API void ugciqa_model_free(ugciqa_model_t* model);

/* Runs a pipeline command: features, sample, crop, study, train, eval, map.
 * Returns UGCIQA_OK, UGCIQA_PARTIAL (some items failed) or an error code.
 * On OK/PARTIAL, *report_json and *summary (either may be NULL) receive
 * strings to release with ugciqa_string_free. */
UGCIQA_API int ugciqa_run_command(const char* command, const ugciqa_config_t* options,
                                  char** report_json, char** summary);

#ifdef __cplusplus
}
#endif

#endif /* UGCIQA_UGCIQA_H */
