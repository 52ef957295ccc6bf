#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "detlab/postprocess.hpp"
#include "detlab/rng.hpp"

using namespace detlab;

namespace {

std::vector<Detection> random_detections(std::mt19937_64& rng, int count,
                                         int categories = 2) {
  std::vector<Detection> dets;
  for (int i = 0; i < count; ++i) {
    const double x1 = uniform(rng, 0.0, 0.7), y1 = uniform(rng, 0.0, 0.7);
    dets.push_back({BBox{x1, y1, x1 + uniform(rng, 0.05, 0.3), y1 + uniform(rng, 0.05, 0.3)},
                    uniform_int(rng, 0, categories - 1), uniform01(rng)});
  }
  return dets;
}

bool same_detection(const Detection& a, const Detection& b) {
  return a.box.x1 == b.box.x1 && a.box.y1 == b.box.y1 && a.box.x2 == b.box.x2 &&
         a.box.y2 == b.box.y2 && a.category == b.category && a.score == b.score;
}

}  // namespace

TEST_CASE("score filter endpoints") {
  std::mt19937_64 rng = make_stream(41, "post-filter");
  const std::vector<Detection> dets = random_detections(rng, 20);
  CHECK(score_filter(dets, 0.0).size() <= dets.size());
  CHECK(score_filter(dets, 1.0).empty());

  const std::vector<Detection> scored = {{BBox{0, 0, 1, 1}, 0, 0.9},
                                         {BBox{0, 0, 1, 1}, 0, 0.3},
                                         {BBox{0, 0, 1, 1}, 0, 0.2}};
  const auto kept = score_filter(scored, 0.4);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == doctest::Approx(0.9));
}

TEST_CASE("nms basics") {
  const std::vector<Detection> one = {{BBox{0.1, 0.1, 0.4, 0.4}, 0, 0.7}};
  CHECK(nms(one, 0.5).size() == 1);

  const std::vector<Detection> duplicate = {{BBox{0.1, 0.1, 0.4, 0.4}, 0, 0.9},
                                            {BBox{0.1, 0.1, 0.4, 0.4}, 0, 0.8}};
  const auto kept = nms(duplicate, 0.5);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].score == doctest::Approx(0.9));

  const std::vector<Detection> disjoint = {{BBox{0.0, 0.0, 0.2, 0.2}, 0, 0.2},
                                           {BBox{0.5, 0.5, 0.7, 0.7}, 0, 0.9},
                                           {BBox{0.0, 0.5, 0.2, 0.7}, 0, 0.5}};
  CHECK(nms(disjoint, 0.5).size() == 3);
}

TEST_CASE("classwise nms keeps overlapping boxes of different classes") {
  const std::vector<Detection> mixed = {{BBox{0.1, 0.1, 0.4, 0.4}, 0, 0.9},
                                        {BBox{0.1, 0.1, 0.4, 0.4}, 1, 0.8}};
  CHECK(nms(mixed, 0.5, true).size() == 2);
  CHECK(nms(mixed, 0.5, false).size() == 1);
}

TEST_CASE("nms invariants on random sets") {
  std::mt19937_64 rng = make_stream(42, "post-nms-prop");
  for (int trial = 0; trial < 1000; ++trial) {
    const std::vector<Detection> dets = random_detections(rng, uniform_int(rng, 0, 25));
    const double thr = uniform(rng, 0.2, 0.9);
    const auto kept = nms(dets, thr);

    CHECK(kept.size() <= dets.size());
    // subset of the input
    for (const Detection& k : kept) {
      CHECK(std::any_of(dets.begin(), dets.end(),
                        [&](const Detection& d) { return same_detection(d, k); }));
    }
    // pairwise same-class iou below the threshold
    for (size_t a = 0; a < kept.size(); ++a) {
      for (size_t b = a + 1; b < kept.size(); ++b) {
        if (kept[a].category != kept[b].category) continue;
        CHECK(iou(kept[a].box, kept[b].box) < thr);
      }
    }
    // the global maximum survives
    if (!dets.empty()) {
      const auto top = std::max_element(
          dets.begin(), dets.end(),
          [](const Detection& x, const Detection& y) { return x.score < y.score; });
      CHECK(std::any_of(kept.begin(), kept.end(),
                        [&](const Detection& k) { return same_detection(k, *top); }));
    }
    // idempotence
    const auto again = nms(kept, thr);
    REQUIRE(again.size() == kept.size());
    for (size_t i = 0; i < kept.size(); ++i) CHECK(same_detection(again[i], kept[i]));
  }
}

TEST_CASE("filter and nms commute when tau is below every kept score") {
  std::mt19937_64 rng = make_stream(43, "post-commute");
  for (int trial = 0; trial < 300; ++trial) {
    const std::vector<Detection> dets = random_detections(rng, 15);
    const auto kept = nms(dets, 0.5);
    double min_kept = 1.0;
    for (const Detection& k : kept) min_kept = std::min(min_kept, k.score);
    const double tau = min_kept * uniform(rng, 0.0, 0.99);
    const auto a = nms(score_filter(dets, tau), 0.5);
    const auto b = score_filter(nms(dets, 0.5), tau);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) CHECK(same_detection(a[i], b[i]));
  }
}

TEST_CASE("score gap definition cases") {
  CHECK(score_gap({0.9, 0.3, 0.2}).gap == doctest::Approx(0.6));
  CHECK(score_gap({0.9, 0.3, 0.2}).top_index == 0);
  CHECK(score_gap({0.5, 0.5, 0.5}).gap == doctest::Approx(0.0));
  CHECK_THROWS_AS(score_gap({0.5}), std::invalid_argument);
}

TEST_CASE("score gap equals the sort oracle and ignores dominated additions") {
  std::mt19937_64 rng = make_stream(44, "post-gap");
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> scores;
    const int n = uniform_int(rng, 2, 30);
    for (int i = 0; i < n; ++i) scores.push_back(uniform01(rng));
    std::vector<double> sorted = scores;
    std::sort(sorted.rbegin(), sorted.rend());
    const double expected = sorted[0] - sorted[1];
    CHECK(score_gap(scores).gap == doctest::Approx(expected));

    // adding a sample at or below the second-highest leaves the gap alone
    scores.push_back(sorted[1] * uniform01(rng));
    CHECK(score_gap(scores).gap == doctest::Approx(expected));
  }
}

TEST_CASE("histogram counts sum to the sample count") {
  std::mt19937_64 rng = make_stream(45, "post-hist");
  std::vector<double> scores;
  for (int i = 0; i < 1234; ++i) scores.push_back(uniform01(rng));
  const Histogram h = histogram_scores(scores, 50);
  long total = 0;
  for (long c : h.counts) total += c;
  CHECK(total == 1234);
  CHECK(histogram_scores({1.0}, 50).counts[49] == 1);  // right edge lands inside
}

TEST_CASE("per-object gap reduces to the plain gap for one object") {
  const std::vector<Detection> dets = {{BBox{0.1, 0.1, 0.5, 0.5}, 0, 0.9},
                                       {BBox{0.12, 0.1, 0.5, 0.5}, 0, 0.3},
                                       {BBox{0.1, 0.12, 0.52, 0.5}, 0, 0.2}};
  const std::vector<GroundTruth> gts = {{BBox{0.1, 0.1, 0.5, 0.5}, 0}};
  const ScoreGapReport r = per_object_score_gap(dets, gts, 0.3);
  REQUIRE(r.per_object_gaps.size() == 1);
  REQUIRE(r.per_object_gaps[0].has_value());
  CHECK(*r.per_object_gaps[0] == doctest::Approx(0.6));
  CHECK(r.gap == doctest::Approx(0.6));
}

TEST_CASE("two far objects with dominant scores yield two large gaps") {
  const std::vector<Detection> dets = {{BBox{0.0, 0.0, 0.2, 0.2}, 0, 0.95},
                                       {BBox{0.01, 0.0, 0.21, 0.2}, 0, 0.1},
                                       {BBox{0.7, 0.7, 0.9, 0.9}, 0, 0.85},
                                       {BBox{0.71, 0.7, 0.91, 0.9}, 0, 0.15}};
  const std::vector<GroundTruth> gts = {{BBox{0.0, 0.0, 0.2, 0.2}, 0},
                                        {BBox{0.7, 0.7, 0.9, 0.9}, 0}};
  const ScoreGapReport r = per_object_score_gap(dets, gts, 0.3);
  REQUIRE(r.per_object_gaps.size() == 2);
  CHECK(*r.per_object_gaps[0] == doctest::Approx(0.85));
  CHECK(*r.per_object_gaps[1] == doctest::Approx(0.7));
  // pooled histogram is bimodal: scores split into low and high halves
  long low = 0, high = 0;
  for (int b = 0; b < 25; ++b) low += r.histogram.counts[b];
  for (int b = 25; b < 50; ++b) high += r.histogram.counts[b];
  CHECK(low == 2);
  CHECK(high == 2);
}

TEST_CASE("objects with no overlapping candidate are reported missing") {
  const std::vector<Detection> dets = {{BBox{0.0, 0.0, 0.2, 0.2}, 0, 0.9},
                                       {BBox{0.02, 0.0, 0.2, 0.2}, 0, 0.4}};
  const std::vector<GroundTruth> gts = {{BBox{0.7, 0.7, 0.9, 0.9}, 0}};
  const ScoreGapReport r = per_object_score_gap(dets, gts, 0.3);
  REQUIRE(r.per_object_gaps.size() == 1);
  CHECK_FALSE(r.per_object_gaps[0].has_value());
}
