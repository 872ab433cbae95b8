#include "ugciqa/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ugciqa/error.hpp"
#include "ugciqa/patcher.hpp"
#include "ugciqa/rng.hpp"

namespace ugciqa::nn {

using nlohmann::json;

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kBaseline: return "baseline";
    case ModelKind::kRoIPool: return "roipool";
    case ModelKind::kFeedback: return "feedback";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "baseline") return ModelKind::kBaseline;
  if (lower == "roipool") return ModelKind::kRoIPool;
  if (lower == "feedback") return ModelKind::kFeedback;
  fail(ErrorCode::kConfig, "unknown model kind '" + name + "'");
}

int BackboneConfig::downsampling() const {
  int d = 1;
  for (int s : strides) d *= s;
  return d;
}

void BackboneConfig::validate() const {
  if (in_channels != 1 && in_channels != 3)
    fail(ErrorCode::kConfig, "backbone in_channels must be 1 or 3");
  if (widths.empty() || widths.size() != strides.size())
    fail(ErrorCode::kConfig, "backbone needs one stride per stage width");
  for (int w : widths)
    if (w < 1) fail(ErrorCode::kConfig, "backbone widths must be positive");
  for (int s : strides)
    if (s != 1 && s != 2) fail(ErrorCode::kConfig, "backbone strides must be 1 or 2");
  if (blocks_per_stage < 1) fail(ErrorCode::kConfig, "blocks_per_stage must be >= 1");
  if (out_channels < 1) fail(ErrorCode::kConfig, "out_channels must be positive");
}

void HeadConfig::validate() const {
  if (hidden < 1) fail(ErrorCode::kConfig, "head hidden width must be positive");
  if (!std::isfinite(score_offset) || !std::isfinite(score_scale) || score_scale == 0.0)
    fail(ErrorCode::kConfig, "head score scale must be finite and nonzero");
}

void ModelConfig::validate() const {
  backbone.validate();
  head.validate();
}

QualityModel::QualityModel(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed) {
  config_.validate();
  const auto& bb = config_.backbone;
  std::uint64_t stream = 0;
  auto conv = [&](const std::string& name, int cout, int cin, int k) {
    add_param(name + ".weight", {cout, cin, k, k}, static_cast<double>(cin) * k * k, false,
              stream++);
    add_param(name + ".bias", {cout}, 0.0, false, stream++);
  };
  auto fc = [&](const std::string& name, int out, int in) {
    add_param(name + ".weight", {out, in}, in, true, stream++);
    add_param(name + ".bias", {out}, 0.0, true, stream++);
  };

  conv("stem", bb.widths[0], bb.in_channels, 3);
  int cin = bb.widths[0];
  for (std::size_t s = 0; s < bb.widths.size(); ++s) {
    for (int b = 0; b < bb.blocks_per_stage; ++b) {
      const std::string prefix = "stage" + std::to_string(s) + ".block" + std::to_string(b);
      const int stride = b == 0 ? bb.strides[s] : 1;
      const int cout = bb.widths[s];
      conv(prefix + ".conv1", cout, cin, 3);
      conv(prefix + ".conv2", cout, cout, 3);
      if (stride != 1 || cin != cout) conv(prefix + ".shortcut", cout, cin, 1);
      cin = cout;
    }
  }
  conv("proj", bb.out_channels, cin, 1);

  const int c = bb.out_channels;
  const int head_in = config_.kind == ModelKind::kBaseline ? 2 * c : kRoiGrid * kRoiGrid * c;
  fc("head.fc1", config_.head.hidden, head_in);
  fc("head.fc2", 1, config_.head.hidden);
  if (config_.kind == ModelKind::kFeedback) fc("head1", 1, 1 + kFeedbackPatches + 2 * c);
}

void QualityModel::add_param(const std::string& name, Shape shape, double fan_in, bool head,
                             std::uint64_t stream) {
  const std::size_t n = shape_numel(shape);
  std::vector<double> values(n, 0.0);
  if (fan_in > 0.0) {
    Rng rng(derive_seed(seed_, stream));
    const double sigma = std::sqrt(2.0 / fan_in);
    for (auto& v : values) v = rng.normal(0.0, sigma);
  }
  params_.push_back({name, Tensor::from_values(std::move(shape), std::move(values), true), head});
}

Tensor& QualityModel::parameter(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p.tensor;
  fail(ErrorCode::kInvalidArgument, "no parameter named '" + name + "'");
}

const Tensor& QualityModel::param(const std::string& name) const {
  return const_cast<QualityModel*>(this)->parameter(name);
}

std::size_t QualityModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

void QualityModel::zero_grad() {
  for (auto& p : params_) p.tensor.zero_grad();
}

Tensor QualityModel::backbone(const Tensor& x) const {
  const auto& bb = config_.backbone;
  const int d = bb.downsampling();
  if (x.rank() != 3 || x.dim(0) != bb.in_channels)
    fail(ErrorCode::kShape, "backbone input must be [" + std::to_string(bb.in_channels) +
                                ",H,W]");
  if (x.dim(1) % d != 0 || x.dim(2) % d != 0)
    fail(ErrorCode::kShape, "input dimensions " + std::to_string(x.dim(2)) + "x" +
                                std::to_string(x.dim(1)) + " are not divisible by " +
                                std::to_string(d));
  auto conv = [&](const std::string& name, const Tensor& in, int stride, int pad) {
    return conv2d(in, param(name + ".weight"), param(name + ".bias"), stride, pad);
  };
  Tensor h = relu(conv("stem", x, 1, 1));
  int cin = bb.widths[0];
  for (std::size_t s = 0; s < bb.widths.size(); ++s) {
    for (int b = 0; b < bb.blocks_per_stage; ++b) {
      const std::string prefix = "stage" + std::to_string(s) + ".block" + std::to_string(b);
      const int stride = b == 0 ? bb.strides[s] : 1;
      const int cout = bb.widths[s];
      Tensor y = relu(conv(prefix + ".conv1", h, stride, 1));
      y = conv(prefix + ".conv2", y, 1, 1);
      const Tensor shortcut =
          (stride != 1 || cin != cout) ? conv(prefix + ".shortcut", h, stride, 0) : h;
      h = relu(add(y, shortcut));
      cin = cout;
    }
  }
  return conv("proj", h, 1, 0);
}

Tensor QualityModel::head_block(const std::string& prefix, const Tensor& in) const {
  const Tensor hidden = relu(linear(in, param(prefix + ".fc1.weight"), param(prefix + ".fc1.bias")));
  return linear(hidden, param(prefix + ".fc2.weight"), param(prefix + ".fc2.bias"));
}

Tensor QualityModel::shared_head(const Tensor& roi_features) const {
  return affine(head_block("head", roi_features), config_.head.score_scale,
                config_.head.score_offset);
}

ModelOutput QualityModel::forward(const Tensor& x, std::span<const Rect> rois) const {
  const Tensor feat = backbone(x);
  const int h = x.dim(1), w = x.dim(2);
  const double scale = config_.head.score_scale, offset = config_.head.score_offset;
  ModelOutput out;
  if (config_.kind == ModelKind::kBaseline) {
    out.picture = affine(head_block("head", pool_global(feat)), scale, offset);
    return out;
  }
  for (const auto& r : rois)
    if (!r.inside(w, h)) fail(ErrorCode::kBounds, "roi outside the image");
  if (config_.kind == ModelKind::kFeedback && rois.size() != kFeedbackPatches)
    fail(ErrorCode::kShape, "feedback model needs exactly " + std::to_string(kFeedbackPatches) +
                                " patch rois");

  const Rect whole{0, 0, w, h};
  const Tensor picture_raw = head_block("head", roi_pool(feat, whole, w, h));
  std::vector<Tensor> patch_raw;
  for (const auto& r : rois) patch_raw.push_back(head_block("head", roi_pool(feat, r, w, h)));
  for (const auto& p : patch_raw) out.patches.push_back(affine(p, scale, offset));

  if (config_.kind == ModelKind::kRoIPool) {
    out.picture = affine(picture_raw, scale, offset);
    return out;
  }
  std::vector<Tensor> parts{picture_raw};
  parts.insert(parts.end(), patch_raw.begin(), patch_raw.end());
  parts.push_back(pool_global(feat));
  const Tensor global = linear(concat(parts), param("head1.weight"), param("head1.bias"));
  out.head0_picture = affine(picture_raw, scale, offset);
  out.picture = affine(global, scale, offset);
  return out;
}

std::vector<double> QualityModel::roi_scores(const Tensor& feat, int image_w, int image_h,
                                             std::span<const Rect> rects) const {
  if (config_.kind == ModelKind::kBaseline)
    fail(ErrorCode::kCapability, "baseline models have no region head");
  std::vector<double> scores;
  scores.reserve(rects.size());
  for (const auto& r : rects)
    scores.push_back(shared_head(roi_pool(feat, r, image_w, image_h)).item());
  return scores;
}

namespace {

ImageBuf match_channels(const ImageBuf& img, int channels) {
  if (img.channels() == channels) return img;
  if (img.channels() == 1 && channels == 3) {
    std::vector<double> s;
    s.reserve(img.pixel_count() * 3);
    for (int c = 0; c < 3; ++c) s.insert(s.end(), img.samples().begin(), img.samples().end());
    return ImageBuf(img.width(), img.height(), 3, std::move(s));
  }
  fail(ErrorCode::kChannel, "model expects " + std::to_string(channels) +
                                "-channel input, got " + std::to_string(img.channels()));
}

}  // namespace

PaddedInput pad_for_inference(const ImageBuf& img, int pad_side, int downsampling) {
  PaddedInput out;
  int w = pad_side, h = pad_side;
  if (img.width() > pad_side || img.height() > pad_side || pad_side % downsampling != 0) {
    w = (img.width() + downsampling - 1) / downsampling * downsampling;
    h = (img.height() + downsampling - 1) / downsampling * downsampling;
  }
  out.image = white_pad(img, w, h);
  out.offset_x = (w - img.width()) / 2;
  out.offset_y = (h - img.height()) / 2;
  return out;
}

double QualityModel::predict(const ImageBuf& img, int pad_side,
                             std::span<const Rect> patches) const {
  const ImageBuf input = match_channels(img, config_.backbone.in_channels);
  const PaddedInput padded = pad_for_inference(input, pad_side, config_.backbone.downsampling());
  std::vector<Rect> rois;
  if (config_.kind != ModelKind::kBaseline) {
    if (patches.empty() && config_.kind == ModelKind::kFeedback) {
      for (const auto& p : propose_patches(img.width(), img.height(), seed_))
        rois.push_back(p.rect);
    } else {
      rois.assign(patches.begin(), patches.end());
    }
    for (auto& r : rois) {
      if (!r.inside(img.width(), img.height()))
        fail(ErrorCode::kBounds, "patch outside the image");
      r = r.translated(padded.offset_x, padded.offset_y);
    }
  }
  return forward(Tensor::from_image(padded.image), rois).picture.item();
}

// ---- checkpoints --------------------------------------------------------

namespace {

constexpr const char* kCheckpointFormat = "ugciqa-checkpoint";

json config_to_json(const ModelConfig& c) {
  return json{{"kind", model_kind_name(c.kind)},
              {"backbone",
               {{"in_channels", c.backbone.in_channels},
                {"widths", c.backbone.widths},
                {"strides", c.backbone.strides},
                {"blocks_per_stage", c.backbone.blocks_per_stage},
                {"out_channels", c.backbone.out_channels}}},
              {"head",
               {{"hidden", c.head.hidden},
                {"score_offset", c.head.score_offset},
                {"score_scale", c.head.score_scale}}}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.kind = parse_model_kind(j.at("kind").get<std::string>());
  const auto& bb = j.at("backbone");
  c.backbone.in_channels = bb.at("in_channels").get<int>();
  c.backbone.widths = bb.at("widths").get<std::vector<int>>();
  c.backbone.strides = bb.at("strides").get<std::vector<int>>();
  c.backbone.blocks_per_stage = bb.at("blocks_per_stage").get<int>();
  c.backbone.out_channels = bb.at("out_channels").get<int>();
  const auto& hd = j.at("head");
  c.head.hidden = hd.at("hidden").get<int>();
  c.head.score_offset = hd.at("score_offset").get<double>();
  c.head.score_scale = hd.at("score_scale").get<double>();
  return c;
}

}  // namespace

std::string QualityModel::to_json() const {
  json params = json::array();
  for (const auto& p : params_) {
    params.push_back({{"name", p.name},
                      {"shape", p.tensor.shape()},
                      {"values", std::vector<double>(p.tensor.values().begin(),
                                                     p.tensor.values().end())}});
  }
  json j{{"format", kCheckpointFormat},
         {"schema_version", kCheckpointSchemaVersion},
         {"seed", seed_},
         {"pad_side", pad_side_},
         {"model", config_to_json(config_)},
         {"parameters", std::move(params)}};
  return j.dump();
}

QualityModel QualityModel::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kVersion, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.value("format", std::string{}) != kCheckpointFormat)
      fail(ErrorCode::kVersion, "not a ugciqa checkpoint");
    const int version = j.at("schema_version").get<int>();
    if (version != kCheckpointSchemaVersion)
      fail(ErrorCode::kVersion, "checkpoint schema_version " + std::to_string(version) +
                                    " is not supported (expected " +
                                    std::to_string(kCheckpointSchemaVersion) + ")");
    QualityModel model(config_from_json(j.at("model")), j.at("seed").get<std::uint64_t>());
    model.pad_side_ = j.value("pad_side", 0);
    const auto& params = j.at("parameters");
    if (params.size() != model.params_.size())
      fail(ErrorCode::kVersion, "checkpoint parameter list does not match its model config");
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto& p = model.params_[i];
      if (params[i].at("name").get<std::string>() != p.name ||
          params[i].at("shape").get<Shape>() != p.tensor.shape())
        fail(ErrorCode::kVersion, "checkpoint parameter '" + p.name +
                                      "' does not match its model config");
      const auto values = params[i].at("values").get<std::vector<double>>();
      if (values.size() != p.tensor.numel())
        fail(ErrorCode::kVersion, "checkpoint parameter '" + p.name + "' has wrong length");
      std::copy(values.begin(), values.end(), p.tensor.mutable_values().begin());
    }
    return model;
  } catch (const json::exception& e) {
    fail(ErrorCode::kVersion, std::string("malformed checkpoint: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kVersion) throw;
    fail(ErrorCode::kVersion, std::string("checkpoint config mismatch: ") + e.what());
  }
}

void QualityModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path);
  out << to_json() << '\n';
  if (!out) fail(ErrorCode::kIo, "failed writing " + path);
}

QualityModel QualityModel::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace ugciqa::nn
