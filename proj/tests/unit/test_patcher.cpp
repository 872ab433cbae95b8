#include <doctest.h>

#include "check.hpp"
#include "ugciqa/patcher.hpp"

using namespace ugciqa;

TEST_SUITE("patcher") {
  TEST_CASE("overlap_fraction") {
    const Rect a{0, 0, 4, 4};
    CHECK(overlap_fraction(a, a) == 1.0);
    CHECK(overlap_fraction(a, Rect{4, 0, 8, 4}) == 0.0);
    CHECK(overlap_fraction(a, Rect{2, 0, 6, 4}) == doctest::Approx(0.5).epsilon(1e-15));
    // Normalized by the smaller rect.
    CHECK(overlap_fraction(Rect{0, 0, 10, 10}, Rect{1, 1, 3, 3}) == 1.0);
  }

  TEST_CASE("patch sizes on 1000x800") {
    const auto p = propose_patches(1000, 800, 7, "pic");
    REQUIRE(p.size() == 3);
    CHECK(p[0].rect.width() == 400);
    CHECK(p[0].rect.height() == 320);
    CHECK(p[1].rect.width() == 300);
    CHECK(p[1].rect.height() == 240);
    CHECK(p[2].rect.width() == 200);
    CHECK(p[2].rect.height() == 160);
    CHECK(p[0].scale == 0.4);
    CHECK(p[2].parent_id == "pic");
  }

  TEST_CASE("rounding is half-up") {
    CHECK(patch_extent(15, 0.3) == 5);   // 4.5
    CHECK(patch_extent(25, 0.2) == 5);
    CHECK(patch_extent(11, 0.2) == 2);   // 2.2
  }

  TEST_CASE("determinism") {
    const auto a = propose_patches(640, 480, 99);
    const auto b = propose_patches(640, 480, 99);
    for (int i = 0; i < 3; ++i) CHECK(a[i].rect == b[i].rect);
  }

  TEST_CASE("proposals validate across seeds") {
    int violations = 0;
    for (std::uint64_t s = 0; s < 500; ++s) {
      violations += static_cast<int>(validate_patchset(640, 480, propose_patches(640, 480, s)).size());
      violations += static_cast<int>(validate_patchset(10, 10, propose_patches(10, 10, s)).size());
    }
    CHECK(violations == 0);
  }

  TEST_CASE("too small") {
    CHECK_ERROR_CODE(propose_patches(9, 100, 0), ErrorCode::kSize);
  }

  TEST_CASE("validator reports constructed violations") {
    auto p = propose_patches(640, 480, 3);
    auto moved = p;
    moved[0].rect = moved[0].rect.translated(640, 0);
    auto v = validate_patchset(640, 480, moved);
    REQUIRE_FALSE(v.empty());
    CHECK(v[0].kind == PatchViolation::Kind::kContainment);

    auto coincident = p;
    coincident[2].rect = coincident[1].rect;
    coincident[2].scale = coincident[1].scale;
    v = validate_patchset(640, 480, coincident);
    bool found = false;
    for (const auto& x : v)
      if (x.kind == PatchViolation::Kind::kOverlap && x.value == 1.0) found = true;
    CHECK(found);

    auto wrong = p;
    wrong[1].rect.right += 3;
    if (wrong[1].rect.right > 640) wrong[1].rect = wrong[1].rect.translated(-3, 0);
    v = validate_patchset(640, 480, wrong);
    found = false;
    for (const auto& x : v)
      if (x.kind == PatchViolation::Kind::kDimension) found = true;
    CHECK(found);

    p.pop_back();
    v = validate_patchset(640, 480, p);
    REQUIRE(v.size() == 1);
    CHECK(v[0].kind == PatchViolation::Kind::kCount);
  }
}
