#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ugciqa/features.hpp"

namespace ugciqa {

/// Normalized histogram: B+1 strictly increasing edges, B masses summing to 1.
struct Histogram {
  std::vector<double> edges;
  std::vector<double> mass;

  std::size_t bins() const noexcept { return mass.size(); }
  /// Bin of v: interior boundaries belong to the right bin, the last bin is
  /// closed on the right. Throws kRange outside [edges.front(), edges.back()].
  std::size_t bin_of(double v) const;
  void validate() const;
};

Histogram build_histogram(std::span<const double> values, std::span<const double> edges);

/// L1 distance between masses; edges must match exactly.
double histogram_distance(const Histogram& a, const Histogram& b);

struct SamplingProblem {
  std::vector<FeatureVector> candidates;
  std::array<Histogram, FeatureVector::kCount> targets;  // kFeatureNames order
  std::size_t k = 0;
};

/// J(S): sum over features of histogram_distance(hist of S, target). The
/// histogram of the empty set has zero mass everywhere.
double sampling_objective(const SamplingProblem& problem,
                          std::span<const std::size_t> selection);

/// Per-feature distances for a selection (same order as kFeatureNames).
std::array<double, FeatureVector::kCount> sampling_distances(
    const SamplingProblem& problem, std::span<const std::size_t> selection);

/// Greedy forward selection (largest J decrease, lowest index on ties) followed
/// by best-improvement single-swap passes until no swap lowers J, then the same
/// swap descent from 8 random k-subsets drawn from `seed`; the lowest J wins
/// (the greedy start on ties). Returns the selected indices in ascending order.
/// Deterministic for a given problem and seed.
std::vector<std::size_t> greedy_sample(const SamplingProblem& problem, std::uint64_t seed);

/// Reads {"brightness": {"edges": [...], "mass": [...]}, ...} for all six
/// feature names.
std::array<Histogram, FeatureVector::kCount> parse_targets_json(const std::string& text);

}  // namespace ugciqa
