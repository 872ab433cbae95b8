#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ugciqa/image.hpp"
#include "ugciqa/tensor.hpp"

namespace ugciqa::nn {

enum class ModelKind { kBaseline, kRoIPool, kFeedback };

std::string model_kind_name(ModelKind kind);
/// Accepts "baseline", "roipool", "feedback" (case-insensitive).
ModelKind parse_model_kind(const std::string& name);

/// Small residual CNN: 3x3 stem, then one stage per width whose first block
/// carries the stage stride, then a 1x1 projection to out_channels with no
/// activation.
struct BackboneConfig {
  int in_channels = 3;
  std::vector<int> widths{16, 32, 64};
  std::vector<int> strides{2, 2, 2};
  int blocks_per_stage = 1;
  int out_channels = 64;

  /// Product of the strides.
  int downsampling() const;
  void validate() const;
};

/// Two fully connected layers with a ReLU between them. Scores come out as
/// score_offset + score_scale * raw so that a raw output near 0 sits mid-scale.
struct HeadConfig {
  int hidden = 32;
  double score_offset = 50.0;
  double score_scale = 50.0;

  void validate() const;
};

struct ModelConfig {
  ModelKind kind = ModelKind::kFeedback;
  BackboneConfig backbone;
  HeadConfig head;

  void validate() const;
};

/// Number of patch rois the Feedback global head consumes.
inline constexpr int kFeedbackPatches = 3;

struct Parameter {
  std::string name;
  Tensor tensor;
  bool head = false;  // trained with the head learning rate
};

struct ModelOutput {
  Tensor picture;                // final picture score, shape [1]
  std::vector<Tensor> patches;   // one [1] score per roi (empty for Baseline)
  Tensor head0_picture;          // Feedback only: Head0's picture score
};

class QualityModel {
 public:
  /// He-normal weights and zero biases drawn from the seed.
  QualityModel(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  std::uint64_t seed() const noexcept { return seed_; }

  /// Side length the model was trained at (0 when unknown); stored in
  /// checkpoints so inference pads the same way.
  int pad_side() const noexcept { return pad_side_; }
  void set_pad_side(int side) noexcept { pad_side_ = side; }

  /// Construction order; checkpoints store parameters in this order.
  std::vector<Parameter>& parameters() noexcept { return params_; }
  const std::vector<Parameter>& parameters() const noexcept { return params_; }
  Tensor& parameter(const std::string& name);
  std::size_t parameter_count() const;
  void zero_grad();

  /// x: [C,H,W] with H, W divisible by D -> [out_channels, H/D, W/D].
  Tensor backbone(const Tensor& x) const;

  /// Shared head on a 4C roi feature vector -> score [1] in MOS units.
  Tensor shared_head(const Tensor& roi_features) const;

  /// Picture score plus one score per roi. The picture roi is the full extent
  /// of x. Feedback requires exactly kFeedbackPatches rois.
  ModelOutput forward(const Tensor& x, std::span<const Rect> rois) const;

  /// Shared-head scores for arbitrary rects of an already-computed feature map
  /// (image_w x image_h input). Baseline models have no roi head.
  std::vector<double> roi_scores(const Tensor& feat, int image_w, int image_h,
                                 std::span<const Rect> rects) const;

  /// Picture score for an unpadded image. The image is white-padded to
  /// pad_side when it fits, otherwise centered on the next multiple of D.
  /// Feedback models propose their own patches when none are supplied.
  double predict(const ImageBuf& img, int pad_side, std::span<const Rect> patches = {}) const;

  std::string to_json() const;
  static QualityModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static QualityModel load(const std::string& path);

 private:
  Tensor head_block(const std::string& prefix, const Tensor& in) const;
  const Tensor& param(const std::string& name) const;
  void add_param(const std::string& name, Shape shape, double fan_in, bool head,
                 std::uint64_t stream);

  ModelConfig config_;
  std::uint64_t seed_ = 0;
  int pad_side_ = 0;
  std::vector<Parameter> params_;
};

inline constexpr int kCheckpointSchemaVersion = 1;

/// Pads img for inference as predict() does; returns the padded image and the
/// offset of the original content.
struct PaddedInput {
  ImageBuf image;
  int offset_x = 0;
  int offset_y = 0;
};
PaddedInput pad_for_inference(const ImageBuf& img, int pad_side, int downsampling);

}  // namespace ugciqa::nn
