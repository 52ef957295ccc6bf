#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "detlab/geometry.hpp"
#include "detlab/rng.hpp"

using namespace detlab;

namespace {
BBox random_box(std::mt19937_64& rng) {
  const double x1 = uniform(rng, 0.0, 0.9);
  const double y1 = uniform(rng, 0.0, 0.9);
  return BBox{x1, y1, x1 + uniform(rng, 0.0, 1.0 - x1), y1 + uniform(rng, 0.0, 1.0 - y1)};
}
}  // namespace

TEST_CASE("area") {
  CHECK(area(BBox{0, 0, 1, 1}) == doctest::Approx(1.0));
  CHECK(area(BBox{0.2, 0.2, 0.2, 0.7}) == doctest::Approx(0.0));
  CHECK(area(BBox{0, 0, 2, 2}) == doctest::Approx(4.0));
}

TEST_CASE("make_bbox rejects negative extent") {
  CHECK_THROWS_AS(make_bbox(0.5, 0.0, 0.2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(make_bbox(0.0, 0.8, 1.0, 0.2), std::invalid_argument);
  CHECK_NOTHROW(make_bbox(0.3, 0.3, 0.3, 0.3));
}

TEST_CASE("iou") {
  const BBox b{0.1, 0.2, 0.6, 0.9};
  CHECK(iou(b, b) == doctest::Approx(1.0));
  CHECK(iou(BBox{0, 0, 0.2, 0.2}, BBox{0.5, 0.5, 0.9, 0.9}) == doctest::Approx(0.0));
  // intersection 1, union 7
  CHECK(iou(BBox{0, 0, 2, 2}, BBox{1, 1, 3, 3}) == doctest::Approx(1.0 / 7.0));
  // degenerate boxes never divide by zero
  CHECK(iou(BBox{0.2, 0.2, 0.2, 0.2}, BBox{0.2, 0.2, 0.2, 0.2}) == doctest::Approx(0.0));
}

TEST_CASE("giou") {
  const BBox b{0.1, 0.2, 0.6, 0.9};
  CHECK(giou(b, b) == doctest::Approx(1.0));
  // enclosing area 3, union 2, iou 0 -> -1/3
  CHECK(giou(BBox{0, 0, 1, 1}, BBox{2, 0, 3, 1}) == doctest::Approx(-1.0 / 3.0));
  // far separation drives giou toward -1
  CHECK(giou(BBox{0, 0, 0.01, 0.01}, BBox{10, 10, 10.01, 10.01}) < -0.9);
}

TEST_CASE("l1 distance") {
  const BBox b{0.3, 0.1, 0.8, 0.6};
  CHECK(l1_distance(b, b) == doctest::Approx(0.0));
  CHECK(l1_distance(BBox{0, 0, 1, 1}, BBox{0.1, 0, 1, 1}) == doctest::Approx(0.1));
  CHECK(l1_distance(BBox{0, 0, 1, 1}, BBox{0.1, 0.1, 0.9, 0.9}) == doctest::Approx(0.4));
}

TEST_CASE("point center distance") {
  CHECK(point_center_distance(GridPoint{0.5, 0.5}, BBox{0, 0, 1, 1}) ==
        doctest::Approx(0.0));
  CHECK(point_center_distance(GridPoint{0, 0}, BBox{0, 0, 2, 2}) ==
        doctest::Approx(std::sqrt(2.0)));
  CHECK(point_center_distance(GridPoint{0.5, 0.5}, BBox{0, 0, 1, 2}) ==
        doctest::Approx(0.5));
}

TEST_CASE("randomized range and symmetry properties") {
  std::mt19937_64 rng = make_stream(7, "geometry-prop");
  for (int trial = 0; trial < 10000; ++trial) {
    const BBox a = random_box(rng);
    const BBox b = random_box(rng);
    const double i = iou(a, b);
    const double g = giou(a, b);
    CHECK(i >= 0.0);
    CHECK(i <= 1.0);
    CHECK(g >= -1.0);
    CHECK(g <= 1.0);
    CHECK(g <= i + 1e-12);
    CHECK(i == doctest::Approx(iou(b, a)));
    CHECK(l1_distance(a, b) == doctest::Approx(l1_distance(b, a)));
  }
}

TEST_CASE("l1 triangle inequality") {
  std::mt19937_64 rng = make_stream(8, "geometry-triangle");
  for (int trial = 0; trial < 2000; ++trial) {
    const BBox a = random_box(rng), b = random_box(rng), c = random_box(rng);
    CHECK(l1_distance(a, c) <= l1_distance(a, b) + l1_distance(b, c) + 1e-12);
  }
}

TEST_CASE("iou is 1 only for identical nondegenerate boxes") {
  std::mt19937_64 rng = make_stream(9, "geometry-identity");
  for (int trial = 0; trial < 2000; ++trial) {
    const BBox a = random_box(rng);
    BBox b = a;
    b.x1 += 1e-3;
    if (b.x1 > b.x2) continue;
    if (area(a) > 1e-6) CHECK(iou(a, b) < 1.0);
  }
}
