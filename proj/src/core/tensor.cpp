#include "ugciqa/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "ugciqa/error.hpp"

namespace ugciqa::nn {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) fail(ErrorCode::kShape, "tensor dimensions must be positive");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return from_values(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size())
    fail(ErrorCode::kShape, "value count does not match tensor shape");
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->value.size(), 0.0);
  return Tensor(std::move(node));
}

Tensor Tensor::from_image(const ImageBuf& img) {
  return from_values({img.channels(), img.height(), img.width()},
                     std::vector<double>(img.samples().begin(), img.samples().end()));
}

Tensor Tensor::make_op(Shape shape, std::vector<double> values, std::vector<Tensor> parents,
                       BackwardFn backward) {
  Tensor out = from_values(std::move(shape), std::move(values), false);
  const bool needs_grad = std::any_of(parents.begin(), parents.end(),
                                      [](const Tensor& p) { return p.requires_grad(); });
  if (needs_grad) {
    out.node_->requires_grad = true;
    out.node_->grad.assign(out.node_->value.size(), 0.0);
    for (const auto& p : parents) out.node_->parents.push_back(p.node_);
    out.node_->backward = std::move(backward);
  }
  return out;
}

void Tensor::accumulate_grad(std::span<const double> g) const {
  if (!node_->requires_grad) return;
  auto& dst = node_->grad;
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[i];
}

double Tensor::item() const {
  if (numel() != 1) fail(ErrorCode::kShape, "item() needs a one-element tensor");
  return node_->value[0];
}

void Tensor::zero_grad() {
  if (node_->requires_grad) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

void Tensor::backward() const {
  if (numel() != 1) fail(ErrorCode::kShape, "backward() needs a one-element tensor");
  if (!node_->requires_grad) return;

  // Iterative post-order DFS -> topological order.
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward((*it)->grad);
  }
}

Tensor Tensor::detach() const { return from_values(shape(), node_->value, false); }

// ---- operations ---------------------------------------------------------

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (!t.defined() || t.rank() != rank)
    fail(ErrorCode::kShape, std::string(op) + ": expected a rank-" + std::to_string(rank) +
                                " tensor");
}

// Output columns ox for which ix = ox*stride + k - pad lies in [0, in).
std::pair<int, int> valid_range(int out, int in, int stride, int k, int pad) {
  int lo = 0;
  while (lo < out && lo * stride + k - pad < 0) ++lo;
  int hi = out;
  while (hi > lo && (hi - 1) * stride + k - pad >= in) --hi;
  return {lo, hi};
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad) {
  require_rank(x, 3, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  require_rank(bias, 1, "conv2d bias");
  const int cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int cout = weight.dim(0), k = weight.dim(2);
  if (weight.dim(1) != cin || weight.dim(3) != k || bias.dim(0) != cout)
    fail(ErrorCode::kShape, "conv2d: weight/bias shape mismatch");
  if (stride < 1 || pad < 0) fail(ErrorCode::kShape, "conv2d: bad stride or padding");
  const int ho = (h + 2 * pad - k) / stride + 1;
  const int wo = (w + 2 * pad - k) / stride + 1;
  if (ho < 1 || wo < 1) fail(ErrorCode::kShape, "conv2d: input smaller than kernel");

  const auto xv = x.values();
  const auto wv = weight.values();
  const auto bv = bias.values();
  std::vector<double> out(static_cast<std::size_t>(cout) * ho * wo);
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;

  for (int o = 0; o < cout; ++o) {
    double* dst = out.data() + o * out_plane;
    std::fill(dst, dst + out_plane, bv[o]);
    for (int c = 0; c < cin; ++c) {
      const double* src = xv.data() + c * in_plane;
      for (int ky = 0; ky < k; ++ky) {
        const auto [oy0, oy1] = valid_range(ho, h, stride, ky, pad);
        for (int kx = 0; kx < k; ++kx) {
          const double wk = wv[((static_cast<std::size_t>(o) * cin + c) * k + ky) * k + kx];
          const auto [ox0, ox1] = valid_range(wo, w, stride, kx, pad);
          for (int oy = oy0; oy < oy1; ++oy) {
            const double* srow = src + static_cast<std::size_t>(oy * stride + ky - pad) * w;
            double* drow = dst + static_cast<std::size_t>(oy) * wo;
            if (stride == 1) {
              const double* s = srow + (kx - pad);
              for (int ox = ox0; ox < ox1; ++ox) drow[ox] += wk * s[ox];
            } else {
              for (int ox = ox0; ox < ox1; ++ox) drow[ox] += wk * srow[ox * stride + kx - pad];
            }
          }
        }
      }
    }
  }

  return Tensor::make_op(
      {cout, ho, wo}, std::move(out), {x, weight, bias},
      [x, weight, bias, stride, pad, cin, h, w, cout, k, ho, wo, in_plane,
       out_plane](std::span<const double> g) {
        const auto xv = x.values();
        const auto wv = weight.values();
        std::vector<double> gx(x.requires_grad() ? xv.size() : 0, 0.0);
        std::vector<double> gw(weight.requires_grad() ? wv.size() : 0, 0.0);
        if (bias.requires_grad()) {
          std::vector<double> gb(cout, 0.0);
          for (int o = 0; o < cout; ++o) {
            double s = 0.0;
            for (std::size_t i = 0; i < out_plane; ++i) s += g[o * out_plane + i];
            gb[o] = s;
          }
          bias.accumulate_grad(gb);
        }
        for (int o = 0; o < cout; ++o) {
          const double* go = g.data() + o * out_plane;
          for (int c = 0; c < cin; ++c) {
            const double* src = xv.data() + c * in_plane;
            for (int ky = 0; ky < k; ++ky) {
              const auto [oy0, oy1] = valid_range(ho, h, stride, ky, pad);
              for (int kx = 0; kx < k; ++kx) {
                const std::size_t widx = ((static_cast<std::size_t>(o) * cin + c) * k + ky) * k + kx;
                const double wk = wv[widx];
                const auto [ox0, ox1] = valid_range(wo, w, stride, kx, pad);
                double acc = 0.0;
                for (int oy = oy0; oy < oy1; ++oy) {
                  const std::size_t irow = static_cast<std::size_t>(oy * stride + ky - pad) * w +
                                           kx - pad;
                  const double* grow = go + static_cast<std::size_t>(oy) * wo;
                  if (!gw.empty())
                    for (int ox = ox0; ox < ox1; ++ox) acc += grow[ox] * src[irow + ox * stride];
                  if (!gx.empty()) {
                    double* gxr = gx.data() + c * in_plane + irow;
                    for (int ox = ox0; ox < ox1; ++ox) gxr[ox * stride] += wk * grow[ox];
                  }
                }
                if (!gw.empty()) gw[widx] += acc;
              }
            }
          }
        }
        if (!gx.empty()) x.accumulate_grad(gx);
        if (!gw.empty()) weight.accumulate_grad(gw);
      });
}

Tensor relu(const Tensor& x) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return Tensor::make_op(x.shape(), std::move(out), {x}, [x](std::span<const double> g) {
    const auto xv = x.values();
    std::vector<double> gx(xv.size());
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] = xv[i] > 0.0 ? g[i] : 0.0;
    x.accumulate_grad(gx);
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) fail(ErrorCode::kShape, "add: shape mismatch");
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  return Tensor::make_op(a.shape(), std::move(out), {a, b}, [a, b](std::span<const double> g) {
    a.accumulate_grad(g);
    b.accumulate_grad(g);
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_rank(x, 1, "linear input");
  require_rank(weight, 2, "linear weight");
  require_rank(bias, 1, "linear bias");
  const int n = x.dim(0);
  const int m = weight.dim(0);
  if (weight.dim(1) != n || bias.dim(0) != m)
    fail(ErrorCode::kShape, "linear: expected weight [" + std::to_string(bias.dim(0)) + "," +
                                std::to_string(n) + "]");
  const auto xv = x.values();
  const auto wv = weight.values();
  const auto bv = bias.values();
  std::vector<double> out(m);
  for (int i = 0; i < m; ++i) {
    double s = bv[i];
    for (int j = 0; j < n; ++j) s += wv[static_cast<std::size_t>(i) * n + j] * xv[j];
    out[i] = s;
  }
  return Tensor::make_op({m}, std::move(out), {x, weight, bias},
                         [x, weight, bias, n, m](std::span<const double> g) {
                           const auto xv = x.values();
                           const auto wv = weight.values();
                           if (x.requires_grad()) {
                             std::vector<double> gx(n, 0.0);
                             for (int i = 0; i < m; ++i)
                               for (int j = 0; j < n; ++j)
                                 gx[j] += wv[static_cast<std::size_t>(i) * n + j] * g[i];
                             x.accumulate_grad(gx);
                           }
                           if (weight.requires_grad()) {
                             std::vector<double> gw(wv.size());
                             for (int i = 0; i < m; ++i)
                               for (int j = 0; j < n; ++j)
                                 gw[static_cast<std::size_t>(i) * n + j] = g[i] * xv[j];
                             weight.accumulate_grad(gw);
                           }
                           bias.accumulate_grad(g);
                         });
}

Tensor concat(const std::vector<Tensor>& parts) {
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    require_rank(p, 1, "concat");
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  const int total = static_cast<int>(out.size());
  return Tensor::make_op({total}, std::move(out), parts,
                         [parts, offsets](std::span<const double> g) {
                           for (std::size_t i = 0; i < parts.size(); ++i)
                             parts[i].accumulate_grad(g.subspan(offsets[i], parts[i].numel()));
                         });
}

Tensor select(const Tensor& x, std::size_t index) {
  require_rank(x, 1, "select");
  if (index >= x.numel()) fail(ErrorCode::kShape, "select: index out of range");
  return Tensor::make_op({1}, {x.values()[index]}, {x}, [x, index](std::span<const double> g) {
    std::vector<double> gx(x.numel(), 0.0);
    gx[index] = g[0];
    x.accumulate_grad(gx);
  });
}

Tensor affine(const Tensor& x, double scale, double offset) {
  const auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = scale * xv[i] + offset;
  return Tensor::make_op(x.shape(), std::move(out), {x}, [x, scale](std::span<const double> g) {
    std::vector<double> gx(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] = scale * g[i];
    x.accumulate_grad(gx);
  });
}

Tensor mse(const Tensor& prediction, std::span<const double> target) {
  if (prediction.numel() != target.size()) fail(ErrorCode::kShape, "mse: size mismatch");
  const auto pv = prediction.values();
  const double n = static_cast<double>(pv.size());
  double s = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) s += (pv[i] - target[i]) * (pv[i] - target[i]);
  std::vector<double> t(target.begin(), target.end());
  return Tensor::make_op({1}, {s / n}, {prediction},
                         [prediction, t, n](std::span<const double> g) {
                           const auto pv = prediction.values();
                           std::vector<double> gp(pv.size());
                           for (std::size_t i = 0; i < pv.size(); ++i)
                             gp[i] = g[0] * 2.0 * (pv[i] - t[i]) / n;
                           prediction.accumulate_grad(gp);
                         });
}

Tensor mean_of(const std::vector<Tensor>& scalars) {
  if (scalars.empty()) fail(ErrorCode::kShape, "mean_of: no inputs");
  double s = 0.0;
  for (const auto& t : scalars) s += t.item();
  const double n = static_cast<double>(scalars.size());
  return Tensor::make_op({1}, {s / n}, scalars, [scalars, n](std::span<const double> g) {
    const double gi = g[0] / n;
    for (const auto& t : scalars) t.accumulate_grad(std::span<const double>(&gi, 1));
  });
}

Tensor pool_global(const Tensor& feat) {
  require_rank(feat, 3, "pool_global");
  const int c = feat.dim(0);
  const std::size_t plane = static_cast<std::size_t>(feat.dim(1)) * feat.dim(2);
  const auto fv = feat.values();
  std::vector<double> out(2 * static_cast<std::size_t>(c));
  std::vector<std::size_t> argmax(c);
  for (int ch = 0; ch < c; ++ch) {
    const double* p = fv.data() + ch * plane;
    double s = 0.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < plane; ++i) {
      s += p[i];
      if (p[i] > p[best]) best = i;
    }
    out[ch] = s / static_cast<double>(plane);
    out[c + ch] = p[best];
    argmax[ch] = ch * plane + best;
  }
  return Tensor::make_op({2 * c}, std::move(out), {feat},
                         [feat, c, plane, argmax](std::span<const double> g) {
                           std::vector<double> gf(feat.numel(), 0.0);
                           for (int ch = 0; ch < c; ++ch) {
                             const double gm = g[ch] / static_cast<double>(plane);
                             for (std::size_t i = 0; i < plane; ++i) gf[ch * plane + i] = gm;
                             gf[argmax[ch]] += g[c + ch];
                           }
                           feat.accumulate_grad(gf);
                         });
}

Rect roi_to_feature_window(const Rect& roi, int downsampling, int feat_w, int feat_h) {
  auto floor_div = [](int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
  auto ceil_div = [&](int a, int b) { return -floor_div(-a, b); };
  Rect win;
  win.left = std::clamp(floor_div(roi.left, downsampling), 0, feat_w - 1);
  win.top = std::clamp(floor_div(roi.top, downsampling), 0, feat_h - 1);
  win.right = std::clamp(ceil_div(roi.right, downsampling), win.left + 1, feat_w);
  win.bottom = std::clamp(ceil_div(roi.bottom, downsampling), win.top + 1, feat_h);
  return win;
}

Tensor roi_pool(const Tensor& feat, const Rect& roi, int image_w, int image_h) {
  require_rank(feat, 3, "roi_pool");
  const int c = feat.dim(0), fh = feat.dim(1), fw = feat.dim(2);
  if (image_w % fw != 0 || image_h % fh != 0 || image_w / fw != image_h / fh)
    fail(ErrorCode::kShape, "roi_pool: image size is not an integer multiple of the map");
  if (!roi.inside(image_w, image_h)) fail(ErrorCode::kBounds, "roi outside the image");
  const int ds = image_w / fw;
  const Rect win = roi_to_feature_window(roi, ds, fw, fh);

  auto cell_range = [](int start, int extent, int k) {
    const int lo = start + (k * extent) / kRoiGrid;
    int hi = start + ((k + 1) * extent) / kRoiGrid;
    if (hi <= lo) hi = lo + 1;
    return std::pair<int, int>{lo, hi};
  };

  const auto fv = feat.values();
  const std::size_t plane = static_cast<std::size_t>(fh) * fw;
  const std::size_t cells = kRoiGrid * kRoiGrid;
  std::vector<double> out(cells * c);
  std::vector<std::size_t> argmax(out.size());
  for (int ch = 0; ch < c; ++ch) {
    for (int cy = 0; cy < kRoiGrid; ++cy) {
      const auto [y0, y1] = cell_range(win.top, win.height(), cy);
      for (int cx = 0; cx < kRoiGrid; ++cx) {
        const auto [x0, x1] = cell_range(win.left, win.width(), cx);
        std::size_t best = ch * plane + static_cast<std::size_t>(y0) * fw + x0;
        for (int y = y0; y < y1; ++y)
          for (int x = x0; x < x1; ++x) {
            const std::size_t i = ch * plane + static_cast<std::size_t>(y) * fw + x;
            if (fv[i] > fv[best]) best = i;
          }
        const std::size_t o = ch * cells + cy * kRoiGrid + cx;
        out[o] = fv[best];
        argmax[o] = best;
      }
    }
  }
  const int n_out = static_cast<int>(out.size());
  return Tensor::make_op({n_out}, std::move(out), {feat},
                         [feat, argmax](std::span<const double> g) {
                           std::vector<double> gf(feat.numel(), 0.0);
                           for (std::size_t o = 0; o < argmax.size(); ++o) gf[argmax[o]] += g[o];
                           feat.accumulate_grad(gf);
                         });
}

}  // namespace ugciqa::nn
