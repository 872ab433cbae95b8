#include <doctest.h>

#include <set>

#include "check.hpp"
#include "instances.hpp"
#include "ugciqa/sampler.hpp"

using namespace ugciqa;

namespace {

Histogram make_hist(std::vector<double> edges, std::vector<double> mass) {
  Histogram h;
  h.edges = std::move(edges);
  h.mass = std::move(mass);
  return h;
}

SamplingProblem identical_problem(std::size_t n, std::size_t k) {
  SamplingProblem p;
  p.k = k;
  FeatureVector f;
  f.brightness = 1.0;
  f.colorfulness = 0.2;
  f.rms_contrast = 0.3;
  f.spatial_information = 0.4;
  f.pixel_count = 5000;
  f.face_count = 1;
  p.candidates.assign(n, f);
  p.targets[0] = make_hist({0.0, 3.0}, {1.0});
  p.targets[1] = make_hist({0.0, 1.0}, {1.0});
  p.targets[2] = make_hist({0.0, 1.0}, {1.0});
  p.targets[3] = make_hist({0.0, 1.0}, {1.0});
  p.targets[4] = make_hist({0.0, 1e6}, {1.0});
  p.targets[5] = make_hist({0.0, 5.0}, {1.0});
  return p;
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("build_histogram bins values") {
    const std::vector<double> one{0.5};
    const std::vector<double> e01{0.0, 1.0};
    CHECK(build_histogram(one, e01).mass == std::vector<double>{1.0});

    const std::vector<double> four{0, 1, 2, 3};
    const std::vector<double> e024{0, 2, 4};
    const Histogram h = build_histogram(four, e024);
    CHECK(h.mass[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(h.mass[1] == doctest::Approx(0.5).epsilon(1e-15));

    const std::vector<double> five{5.0};
    const std::vector<double> e04{0.0, 4.0};
    CHECK_ERROR_CODE(build_histogram(five, e04), ErrorCode::kRange);
  }

  TEST_CASE("boundary values go right and the last bin is closed") {
    const std::vector<double> v{2.0, 4.0};
    const std::vector<double> e{0, 2, 4};
    const Histogram h = build_histogram(v, e);
    CHECK(h.mass[0] == 0.0);
    CHECK(h.mass[1] == 1.0);
  }

  TEST_CASE("histogram_distance") {
    const Histogram a = make_hist({0, 1, 2}, {0.5, 0.5});
    const Histogram b = make_hist({0, 1, 2}, {0.25, 0.75});
    CHECK(histogram_distance(a, a) == 0.0);
    CHECK(histogram_distance(make_hist({0, 1, 2}, {1, 0}), make_hist({0, 1, 2}, {0, 1})) == 2.0);
    CHECK(histogram_distance(a, b) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_ERROR_CODE(histogram_distance(a, make_hist({0, 1, 3}, {0.5, 0.5})), ErrorCode::kShape);
  }

  TEST_CASE("identical candidates match a single-bin target exactly") {
    for (std::size_t k : {1u, 3u, 6u}) {
      const auto p = identical_problem(6, k);
      const auto sel = greedy_sample(p, 1);
      CHECK(sel.size() == k);
      CHECK(sampling_objective(p, sel) == doctest::Approx(0.0).epsilon(1e-12));
    }
  }

  TEST_CASE("k equal to the candidate count returns every index") {
    const auto p = fixtures::random_sampling_problem(3, 9, 9);
    const auto sel = greedy_sample(p, 0);
    REQUIRE(sel.size() == 9);
    for (std::size_t i = 0; i < 9; ++i) CHECK(sel[i] == i);
  }

  TEST_CASE("infeasible k") {
    auto p = fixtures::random_sampling_problem(3, 5, 0);
    CHECK_ERROR_CODE(greedy_sample(p, 0), ErrorCode::kSize);
    p.k = 6;
    CHECK_ERROR_CODE(greedy_sample(p, 0), ErrorCode::kSize);
  }

  TEST_CASE("greedy is near the exhaustive optimum and beats random subsets") {
    for (std::uint64_t s = 0; s < 4; ++s) {
      const auto p = fixtures::random_sampling_problem(100 + s, 15, 5);
      const auto sel = greedy_sample(p, s);
      const double j = sampling_objective(p, sel);
      CHECK(j <= 1.10 * fixtures::brute_force_optimum(p) + 1e-12);
      CHECK(j <= fixtures::random_subset_mean(p, 100, s));
    }
  }

  TEST_CASE("output is a deterministic set") {
    const auto p = fixtures::random_sampling_problem(42, 40, 12);
    const auto a = greedy_sample(p, 5);
    const auto b = greedy_sample(p, 5);
    CHECK(a == b);
    CHECK(std::set<std::size_t>(a.begin(), a.end()).size() == a.size());
  }

  TEST_CASE("empty selection has zero histogram mass") {
    const auto p = fixtures::random_sampling_problem(1, 5, 2);
    // Each target has unit mass and the empty histogram has none.
    CHECK(sampling_objective(p, {}) == doctest::Approx(6.0));
  }

  TEST_CASE("targets JSON") {
    const std::string text = R"({
      "brightness": {"edges": [0, 3], "mass": [1]},
      "colorfulness": {"edges": [0, 1], "mass": [1]},
      "rms_contrast": {"edges": [0, 1], "mass": [1]},
      "si": {"edges": [0, 1], "mass": [1]},
      "pixel_count": {"edges": [0, 1000000], "mass": [1]},
      "face_count": {"edges": [0, 5], "mass": [1]}
    })";
    const auto t = parse_targets_json(text);
    CHECK(t[4].edges.back() == 1e6);
    CHECK_ERROR_CODE(parse_targets_json(R"({"brightness": {"edges": [0, 3], "mass": [1]}})"),
                     ErrorCode::kValidation);
    CHECK_ERROR_CODE(parse_targets_json("not json"), ErrorCode::kValidation);
  }
}
