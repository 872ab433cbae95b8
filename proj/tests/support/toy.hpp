#pragma once

// Small model configurations and synthetic training sets for the neural
// tests.

#include <cstdint>
#include <vector>

#include "ugciqa/model.hpp"
#include "ugciqa/train.hpp"

namespace fixtures {

/// Two stages (widths 4, 8), D = 4, 8 output channels, hidden 8: under
/// 2,000 parameters for every kind.
ugciqa::nn::ModelConfig toy_config(ugciqa::nn::ModelKind kind);

/// RGB side x side pictures with a horizontal/vertical brightness ramp. The
/// picture and patch targets are 100 * the mean luma of their region, and
/// the three patches come from propose_patches.
std::vector<ugciqa::nn::TrainSample> ramp_dataset(int n, int side, std::uint64_t seed);

/// Pictures whose whole area is either sharp texture (target `high`) or the
/// same texture blurred (target `low`); patches share the picture target.
std::vector<ugciqa::nn::TrainSample> sharpness_dataset(int n, int side, std::uint64_t seed,
                                                       double high = 80.0, double low = 20.0);

/// Sharp texture on the left half, its blurred version on the right.
ugciqa::ImageBuf sharp_blur_composite(int side, std::uint64_t seed);

}  // namespace fixtures
