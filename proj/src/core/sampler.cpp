#include "ugciqa/sampler.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "ugciqa/error.hpp"
#include "ugciqa/rng.hpp"

namespace ugciqa {

void Histogram::validate() const {
  if (edges.size() < 2 || mass.size() + 1 != edges.size())
    fail(ErrorCode::kShape, "histogram needs B+1 edges for B masses (B >= 1)");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1]))
      fail(ErrorCode::kValidation, "histogram edges must be strictly increasing");
  }
  double total = 0.0;
  for (double m : mass) {
    if (!(m >= 0.0)) fail(ErrorCode::kValidation, "histogram mass must be nonnegative");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-9)
    fail(ErrorCode::kValidation, "histogram mass must sum to 1");
}

std::size_t Histogram::bin_of(double v) const {
  if (!(v >= edges.front() && v <= edges.back()))
    fail(ErrorCode::kRange, "value " + std::to_string(v) + " outside histogram range [" +
                                std::to_string(edges.front()) + ", " +
                                std::to_string(edges.back()) + "]");
  // First edge strictly greater than v; interior ties go right.
  const auto it = std::upper_bound(edges.begin(), edges.end(), v);
  const auto idx = static_cast<std::size_t>(it - edges.begin());
  return std::min(idx, edges.size() - 1) - 1;
}

Histogram build_histogram(std::span<const double> values, std::span<const double> edges) {
  if (values.empty()) fail(ErrorCode::kSize, "build_histogram needs at least one value");
  Histogram h;
  h.edges.assign(edges.begin(), edges.end());
  h.mass.assign(edges.size() >= 2 ? edges.size() - 1 : 0, 0.0);
  if (h.mass.empty()) fail(ErrorCode::kShape, "histogram needs at least two edges");
  for (std::size_t i = 1; i < h.edges.size(); ++i) {
    if (!(h.edges[i] > h.edges[i - 1]))
      fail(ErrorCode::kValidation, "histogram edges must be strictly increasing");
  }
  for (double v : values) h.mass[h.bin_of(v)] += 1.0;
  for (double& m : h.mass) m /= static_cast<double>(values.size());
  return h;
}

double histogram_distance(const Histogram& a, const Histogram& b) {
  if (a.edges != b.edges || a.mass.size() != b.mass.size())
    fail(ErrorCode::kShape, "histogram_distance requires identical edges");
  double d = 0.0;
  for (std::size_t i = 0; i < a.mass.size(); ++i) d += std::abs(a.mass[i] - b.mass[i]);
  return d;
}

namespace {

// Bin index of every candidate for every feature, plus running bin counts.
class SelectionState {
 public:
  explicit SelectionState(const SamplingProblem& p) : problem_(p) {
    const auto n = p.candidates.size();
    bins_.resize(n);
    for (std::size_t c = 0; c < n; ++c) {
      const auto values = p.candidates[c].as_array();
      for (std::size_t f = 0; f < FeatureVector::kCount; ++f)
        bins_[c][f] = p.targets[f].bin_of(values[f]);
    }
    for (std::size_t f = 0; f < FeatureVector::kCount; ++f)
      counts_[f].assign(p.targets[f].bins(), 0.0);
  }

  void add(std::size_t c) {
    for (std::size_t f = 0; f < FeatureVector::kCount; ++f) counts_[f][bins_[c][f]] += 1.0;
    size_ += 1;
  }
  void remove(std::size_t c) {
    for (std::size_t f = 0; f < FeatureVector::kCount; ++f) counts_[f][bins_[c][f]] -= 1.0;
    size_ -= 1;
  }

  double feature_distance(std::size_t f) const {
    const auto& target = problem_.targets[f].mass;
    double d = 0.0;
    for (std::size_t b = 0; b < target.size(); ++b) {
      const double frac = size_ == 0 ? 0.0 : counts_[f][b] / static_cast<double>(size_);
      d += std::abs(frac - target[b]);
    }
    return d;
  }

  double objective() const {
    double j = 0.0;
    for (std::size_t f = 0; f < FeatureVector::kCount; ++f) j += feature_distance(f);
    return j;
  }

 private:
  const SamplingProblem& problem_;
  std::vector<std::array<std::size_t, FeatureVector::kCount>> bins_;
  std::array<std::vector<double>, FeatureVector::kCount> counts_;
  std::size_t size_ = 0;
};

void validate_problem(const SamplingProblem& p) {
  for (const auto& t : p.targets) t.validate();
  if (p.k < 1 || p.k > p.candidates.size())
    fail(ErrorCode::kSize, "k must satisfy 1 <= k <= number of candidates");
}

constexpr double kImprovementTolerance = 1e-12;

}  // namespace

double sampling_objective(const SamplingProblem& problem,
                          std::span<const std::size_t> selection) {
  const auto d = sampling_distances(problem, selection);
  double j = 0.0;
  for (double v : d) j += v;
  return j;
}

std::array<double, FeatureVector::kCount> sampling_distances(
    const SamplingProblem& problem, std::span<const std::size_t> selection) {
  for (const auto& t : problem.targets) t.validate();
  SelectionState state(problem);
  for (auto c : selection) {
    if (c >= problem.candidates.size()) fail(ErrorCode::kRange, "selection index out of range");
    state.add(c);
  }
  std::array<double, FeatureVector::kCount> d{};
  for (std::size_t f = 0; f < FeatureVector::kCount; ++f) d[f] = state.feature_distance(f);
  return d;
}

namespace {

// Best-improvement single swaps until none lowers J. `state` must hold exactly
// the selection; returns the final J.
double swap_descent(SelectionState& state, std::vector<bool>& chosen,
                    std::vector<std::size_t>& selection) {
  const std::size_t n = chosen.size();
  double current = state.objective();
  while (true) {
    std::size_t best_out = n, best_in = n;
    double best_j = current;
    for (std::size_t s = 0; s < selection.size(); ++s) {
      const std::size_t out = selection[s];
      state.remove(out);
      for (std::size_t in = 0; in < n; ++in) {
        if (chosen[in]) continue;
        state.add(in);
        const double j = state.objective();
        state.remove(in);
        if (j < best_j - kImprovementTolerance) {
          best_j = j;
          best_out = s;
          best_in = in;
        }
      }
      state.add(out);
    }
    if (best_in == n) return current;
    chosen[selection[best_out]] = false;
    state.remove(selection[best_out]);
    chosen[best_in] = true;
    state.add(best_in);
    selection[best_out] = best_in;
    current = best_j;
  }
}

constexpr int kRandomRestarts = 8;

}  // namespace

std::vector<std::size_t> greedy_sample(const SamplingProblem& problem, std::uint64_t seed) {
  validate_problem(problem);
  const std::size_t n = problem.candidates.size();
  std::vector<bool> chosen(n, false);
  std::vector<std::size_t> selection;
  selection.reserve(problem.k);
  double best_j = 0.0;
  std::vector<std::size_t> best;
  {
    SelectionState state(problem);
    while (selection.size() < problem.k) {
      std::size_t pick = n;
      double pick_j = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        if (chosen[c]) continue;
        state.add(c);
        const double j = state.objective();
        state.remove(c);
        if (pick == n || j < pick_j - kImprovementTolerance) {
          pick = c;
          pick_j = j;
        }
      }
      chosen[pick] = true;
      state.add(pick);
      selection.push_back(pick);
    }
    best_j = swap_descent(state, chosen, selection);
    best = selection;
  }

  // Swap descent stalls in local optima; seeded random starts give it more
  // chances. A restart replaces the greedy result only if strictly better.
  if (problem.k < n) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    for (int r = 0; r < kRandomRestarts; ++r) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
      rng.shuffle(all);
      selection.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(problem.k));
      std::fill(chosen.begin(), chosen.end(), false);
      SelectionState state(problem);
      for (std::size_t c : selection) {
        chosen[c] = true;
        state.add(c);
      }
      const double j = swap_descent(state, chosen, selection);
      if (j < best_j - kImprovementTolerance) {
        best_j = j;
        best = selection;
      }
    }
  }
  std::sort(best.begin(), best.end());
  return best;
}

std::array<Histogram, FeatureVector::kCount> parse_targets_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kValidation, std::string("targets JSON: ") + e.what());
  }
  std::array<Histogram, FeatureVector::kCount> targets;
  for (std::size_t f = 0; f < FeatureVector::kCount; ++f) {
    const std::string name(kFeatureNames[f]);
    if (!doc.contains(name))
      fail(ErrorCode::kValidation, "targets JSON lacks feature '" + name + "'");
    try {
      targets[f].edges = doc.at(name).at("edges").get<std::vector<double>>();
      targets[f].mass = doc.at(name).at("mass").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kValidation, "targets JSON feature '" + name + "': " + e.what());
    }
    targets[f].validate();
  }
  return targets;
}

}  // namespace ugciqa
