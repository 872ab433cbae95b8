#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ugciqa/image.hpp"

namespace ugciqa::nn {

using Shape = std::vector<int>;

std::size_t shape_numel(const Shape& shape);

class Tensor;

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated iff requires_grad
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Receives this node's gradient and accumulates into the parents.
  std::function<void(std::span<const double>)> backward;
};

}  // namespace detail

/// Dense float64 array with an optional gradient buffer. Copies share the
/// underlying storage; operations build a graph that backward() walks in
/// reverse topological order.
class Tensor {
 public:
  using BackwardFn = std::function<void(std::span<const double> out_grad)>;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values,
                            bool requires_grad = false);
  /// CHW view of a planar image (copied).
  static Tensor from_image(const ImageBuf& img);

  /// Result of an operation. The graph edge is kept only when some parent
  /// requires a gradient.
  static Tensor make_op(Shape shape, std::vector<double> values,
                        std::vector<Tensor> parents, BackwardFn backward);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const double> values() const { return node_->value; }
  std::span<double> mutable_values() { return node_->value; }
  std::span<const double> grad() const { return node_->grad; }
  std::span<double> mutable_grad() { return node_->grad; }

  /// Adds g into the gradient buffer; no-op when the tensor has none.
  void accumulate_grad(std::span<const double> g) const;

  double item() const;
  void zero_grad();

  /// Seeds d(self)/d(self) = 1 for a one-element tensor and back-propagates.
  void backward() const;

  /// Value copy without graph or gradient.
  Tensor detach() const;

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;
};

// ---- operations ---------------------------------------------------------

/// x: [C,H,W], weight: [O,C,k,k], bias: [O] -> [O,Ho,Wo] with
/// Ho = (H + 2*pad - k) / stride + 1.
Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride,
              int pad);
Tensor relu(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
/// x: [n], weight: [m,n], bias: [m] -> [m].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);
/// Concatenates 1-d tensors.
Tensor concat(const std::vector<Tensor>& parts);
/// Element of a 1-d tensor as a [1] tensor.
Tensor select(const Tensor& x, std::size_t index);
/// a * x + b elementwise with constants a, b.
Tensor affine(const Tensor& x, double scale, double offset);
/// Mean of (x_i - t_i)^2 over all elements.
Tensor mse(const Tensor& prediction, std::span<const double> target);
/// Mean of one-element tensors.
Tensor mean_of(const std::vector<Tensor>& scalars);

/// Channelwise mean followed by channelwise max of a [C,H,W] map -> [2C].
Tensor pool_global(const Tensor& feat);

inline constexpr int kRoiGrid = 2;

/// Feature-space window of an image-space roi: left/top floored, right/bottom
/// ceiled after dividing by the downsampling factor, at least one cell wide
/// and clamped to the map.
Rect roi_to_feature_window(const Rect& roi, int downsampling, int feat_w, int feat_h);

/// 2x2 max pooling of feat [C,H,W] over the roi window; cell k spans
/// [floor(k*e/2), floor((k+1)*e/2)) of the window extent e, widened to one
/// cell when empty. Output [4C] ordered channel, cell row, cell column.
Tensor roi_pool(const Tensor& feat, const Rect& roi, int image_w, int image_h);

}  // namespace ugciqa::nn
