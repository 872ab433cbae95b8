#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ugciqa/image.hpp"

namespace ugciqa {

/// Patch linear scales relative to the parent picture, largest first.
inline constexpr std::array<double, 3> kPatchScales = {0.4, 0.3, 0.2};
inline constexpr double kMaxPatchOverlap = 0.25;
inline constexpr int kPlacementAttempts = 10000;

struct PatchSpec {
  std::string parent_id;
  double scale = 0.0;
  Rect rect;
};

/// |a ∩ b| / min(|a|, |b|).
double overlap_fraction(const Rect& a, const Rect& b);

/// round-half-up(scale * dim), with the scale given in tenths to stay exact.
int patch_extent(int dim, double scale);

/// Three patches at scales 0.4/0.3/0.2 with the parent's aspect ratio, fully
/// inside the picture, pairwise overlap_fraction <= 0.25. Each attempt draws
/// all three top-left corners uniformly; the first valid configuration wins.
/// Throws kPlacement after kPlacementAttempts failed attempts.
std::vector<PatchSpec> propose_patches(int width, int height, std::uint64_t seed,
                                       const std::string& parent_id = {});

struct PatchViolation {
  enum class Kind { kContainment, kDimension, kOverlap, kCount };
  Kind kind;
  std::size_t first = 0;   // patch index
  std::size_t second = 0;  // other patch for overlap violations
  double value = 0.0;      // overlap fraction for overlap violations
  std::string message;
};

/// Empty iff containment, the ±1 pixel dimension rule and pairwise overlap
/// all hold.
std::vector<PatchViolation> validate_patchset(int width, int height,
                                              const std::vector<PatchSpec>& patches);

}  // namespace ugciqa
