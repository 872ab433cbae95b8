#include "ugciqa/patcher.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "ugciqa/error.hpp"
#include "ugciqa/rng.hpp"

namespace ugciqa {

double overlap_fraction(const Rect& a, const Rect& b) {
  const long long iw = std::max(0, std::min(a.right, b.right) - std::max(a.left, b.left));
  const long long ih = std::max(0, std::min(a.bottom, b.bottom) - std::max(a.top, b.top));
  const long long denom = std::min(a.area(), b.area());
  if (denom <= 0) return 0.0;
  return static_cast<double>(iw * ih) / static_cast<double>(denom);
}

int patch_extent(int dim, double scale) {
  const long long tenths = std::llround(scale * 10.0);
  // (dim * tenths / 10) rounded half up, in integers.
  return static_cast<int>((2LL * dim * tenths + 10) / 20);
}

std::vector<PatchSpec> propose_patches(int width, int height, std::uint64_t seed,
                                       const std::string& parent_id) {
  if (width < 10 || height < 10)
    fail(ErrorCode::kSize, "propose_patches needs a picture of at least 10x10");

  std::array<int, 3> pw{}, ph{};
  for (std::size_t i = 0; i < kPatchScales.size(); ++i) {
    pw[i] = patch_extent(width, kPatchScales[i]);
    ph[i] = patch_extent(height, kPatchScales[i]);
  }

  Rng rng(seed);
  for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
    std::array<Rect, 3> rects;
    for (std::size_t i = 0; i < rects.size(); ++i) {
      const int left = static_cast<int>(rng.uniform_int(0, width - pw[i]));
      const int top = static_cast<int>(rng.uniform_int(0, height - ph[i]));
      rects[i] = Rect{left, top, left + pw[i], top + ph[i]};
    }
    bool ok = true;
    for (std::size_t i = 0; i < rects.size() && ok; ++i)
      for (std::size_t j = i + 1; j < rects.size() && ok; ++j)
        ok = overlap_fraction(rects[i], rects[j]) <= kMaxPatchOverlap;
    if (!ok) continue;

    std::vector<PatchSpec> out;
    for (std::size_t i = 0; i < rects.size(); ++i)
      out.push_back(PatchSpec{parent_id, kPatchScales[i], rects[i]});
    return out;
  }
  fail(ErrorCode::kPlacement, "no valid patch layout after " +
                                  std::to_string(kPlacementAttempts) + " attempts");
}

std::vector<PatchViolation> validate_patchset(int width, int height,
                                              const std::vector<PatchSpec>& patches) {
  using Kind = PatchViolation::Kind;
  std::vector<PatchViolation> out;
  if (patches.size() != kPatchScales.size()) {
    out.push_back({Kind::kCount, 0, 0, static_cast<double>(patches.size()),
                   "expected 3 patches, got " + std::to_string(patches.size())});
  }
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const auto& p = patches[i];
    if (!p.rect.inside(width, height)) {
      out.push_back({Kind::kContainment, i, i, 0.0,
                     "patch " + std::to_string(i) + " is not inside the picture"});
    }
    const int ew = patch_extent(width, p.scale);
    const int eh = patch_extent(height, p.scale);
    if (std::abs(p.rect.width() - ew) > 1 || std::abs(p.rect.height() - eh) > 1) {
      out.push_back({Kind::kDimension, i, i, 0.0,
                     "patch " + std::to_string(i) + " is " + std::to_string(p.rect.width()) +
                         "x" + std::to_string(p.rect.height()) + ", expected " +
                         std::to_string(ew) + "x" + std::to_string(eh)});
    }
  }
  for (std::size_t i = 0; i < patches.size(); ++i) {
    for (std::size_t j = i + 1; j < patches.size(); ++j) {
      const double f = overlap_fraction(patches[i].rect, patches[j].rect);
      if (f > kMaxPatchOverlap) {
        out.push_back({Kind::kOverlap, i, j, f,
                       "patches " + std::to_string(i) + " and " + std::to_string(j) +
                           " overlap by " + std::to_string(f)});
      }
    }
  }
  return out;
}

}  // namespace ugciqa
