#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "detlab/metrics.hpp"
#include "detlab/rng.hpp"
#include "detlab/toydet.hpp"
#include "oracles.hpp"

using namespace detlab;

namespace {

std::vector<Detection> random_dets(std::mt19937_64& rng, int count, int categories) {
  std::vector<Detection> dets;
  for (int i = 0; i < count; ++i) {
    const double x1 = uniform(rng, 0.0, 0.6), y1 = uniform(rng, 0.0, 0.6);
    dets.push_back({BBox{x1, y1, x1 + uniform(rng, 0.1, 0.4), y1 + uniform(rng, 0.1, 0.4)},
                    uniform_int(rng, 0, categories - 1), uniform01(rng)});
  }
  return dets;
}

std::vector<GroundTruth> random_gts(std::mt19937_64& rng, int count, int categories) {
  std::vector<GroundTruth> gts;
  for (int i = 0; i < count; ++i) {
    const double x1 = uniform(rng, 0.0, 0.6), y1 = uniform(rng, 0.0, 0.6);
    gts.push_back({BBox{x1, y1, x1 + uniform(rng, 0.1, 0.4), y1 + uniform(rng, 0.1, 0.4)},
                   uniform_int(rng, 0, categories - 1)});
  }
  return gts;
}

}  // namespace

TEST_CASE("perfect detections score ap 1, none score 0") {
  const GroundTruthSet gts = {{{BBox{0.1, 0.1, 0.4, 0.4}, 0}, {BBox{0.5, 0.5, 0.8, 0.8}, 1}}};
  DetectionSet perfect = {{}};
  for (const GroundTruth& g : gts[0]) perfect[0].push_back({g.box, g.category, 1.0});
  CHECK(evaluate_ap(perfect, gts, default_iou_thresholds()) == doctest::Approx(1.0));
  CHECK(evaluate_ap({{}}, gts, default_iou_thresholds()) == doctest::Approx(0.0));
  CHECK_THROWS_AS(evaluate_ap({{}}, {{}}, default_iou_thresholds()),
                  std::invalid_argument);
}

TEST_CASE("hand-enumerated 3-detection 2-gt instance") {
  const GroundTruthSet gts = {{{BBox{0.0, 0.0, 0.2, 0.2}, 0}, {BBox{0.5, 0.5, 0.7, 0.7}, 0}}};
  // TP 0.9, FP 0.85 (gt already taken), TP 0.8
  const DetectionSet dets = {{{BBox{0.0, 0.0, 0.2, 0.2}, 0, 0.9},
                              {BBox{0.0, 0.0, 0.2, 0.3}, 0, 0.85},
                              {BBox{0.5, 0.5, 0.7, 0.7}, 0, 0.8}}};
  const double expected = (51.0 * 1.0 + 50.0 * (2.0 / 3.0)) / 101.0;
  CHECK(evaluate_ap(dets, gts, {0.5}) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(oracles::ap_oracle(dets[0], gts[0], {0.5}) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("evaluate_ap equals the exhaustive oracle on small instances") {
  std::mt19937_64 rng = make_stream(51, "metrics-oracle");
  for (int trial = 0; trial < 500; ++trial) {
    const int n_dets = uniform_int(rng, 0, 4);
    const int n_gts = uniform_int(rng, 1, 3);
    const DetectionSet dets = {random_dets(rng, n_dets, 2)};
    const GroundTruthSet gts = {random_gts(rng, n_gts, 2)};
    const std::vector<double> thresholds = {0.5, 0.75};
    CHECK(evaluate_ap(dets, gts, thresholds) ==
          doctest::Approx(oracles::ap_oracle(dets[0], gts[0], thresholds)).epsilon(1e-12));
  }
}

TEST_CASE("ap is invariant under strictly monotone score transforms") {
  std::mt19937_64 rng = make_stream(52, "metrics-rank");
  for (int trial = 0; trial < 100; ++trial) {
    DetectionSet dets = {random_dets(rng, 8, 2)};
    const GroundTruthSet gts = {random_gts(rng, 3, 2)};
    const double before = evaluate_ap(dets, gts, default_iou_thresholds());
    for (Detection& d : dets[0]) d.score = d.score * d.score;  // order preserved
    CHECK(evaluate_ap(dets, gts, default_iou_thresholds()) == doctest::Approx(before));
  }
}

TEST_CASE("mmr endpoints") {
  const GroundTruthSet gts = {{{BBox{0.1, 0.1, 0.4, 0.4}, 0}}};
  DetectionSet perfect = {{{BBox{0.1, 0.1, 0.4, 0.4}, 0, 0.9}}};
  CHECK(evaluate_mmr(perfect, gts) == doctest::Approx(0.0));
  CHECK(evaluate_mmr({{}}, gts) == doctest::Approx(1.0));
}

TEST_CASE("hand-computed two-image mmr curve") {
  const GroundTruthSet gts = {{{BBox{0.0, 0.0, 0.2, 0.2}, 0}},
                              {{BBox{0.5, 0.5, 0.7, 0.7}, 0}}};
  const DetectionSet dets = {{{BBox{0.0, 0.0, 0.2, 0.2}, 0, 0.9}},
                             {{BBox{0.0, 0.5, 0.1, 0.6}, 0, 0.8}}};
  // one matched gt of two at every sampled fppi -> geometric mean 0.5
  CHECK(evaluate_mmr(dets, gts) == doctest::Approx(0.5));
}

TEST_CASE("recall endpoints and monotonicity in the iou threshold") {
  std::mt19937_64 rng = make_stream(53, "metrics-recall");
  const GroundTruthSet gts = {random_gts(rng, 4, 2)};
  DetectionSet covering = {{}};
  for (const GroundTruth& g : gts[0]) covering[0].push_back({g.box, g.category, 0.8});
  CHECK(recall_at(covering, gts, 0.5) == doctest::Approx(1.0));
  CHECK(recall_at({{}}, gts, 0.5) == doctest::Approx(0.0));

  const DetectionSet dets = {random_dets(rng, 10, 2)};
  double previous = -1.0;
  for (double thr : {0.9, 0.7, 0.5, 0.3, 0.1}) {
    const double r = recall_at(dets, gts, thr);
    CHECK(r >= previous);
    previous = r;
  }
}

TEST_CASE("redundancy counts above-threshold overlaps per gt") {
  const GroundTruthSet gts = {{{BBox{0.1, 0.1, 0.5, 0.5}, 0}}};
  DetectionSet one = {{{BBox{0.1, 0.1, 0.5, 0.5}, 0, 0.9}}};
  CHECK(redundancy(one, gts, 0.3, 0.5) == doctest::Approx(1.0));

  DetectionSet four = {{}};
  for (int i = 0; i < 4; ++i) four[0].push_back({BBox{0.1, 0.1, 0.5, 0.5}, 0, 0.9});
  CHECK(redundancy(four, gts, 0.3, 0.5) == doctest::Approx(4.0));
  CHECK(redundancy(four, gts, 0.95, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("nms on crowded annotations loses recall") {
  toy::SceneConfig cfg;
  cfg.crowded = true;
  cfg.categories = 1;
  cfg.min_objects = 4;
  cfg.max_objects = 6;
  cfg.crowd_min_iou = 0.55;
  cfg.min_size = 0.2;
  cfg.max_size = 0.4;

  DetectionSet raw, suppressed;
  GroundTruthSet gts;
  for (int s = 0; s < 10; ++s) {
    const toy::Scene scene = toy::generate_scene(cfg, 1000 + s);
    gts.push_back(scene.objects);
    std::vector<Detection> annotation;
    for (const GroundTruth& g : scene.objects) annotation.push_back({g.box, g.category, 1.0});
    raw.push_back(annotation);
    suppressed.push_back(nms(annotation, 0.5, true));
  }
  CHECK(recall_at(raw, gts, 0.5) == doctest::Approx(1.0));
  CHECK(recall_at(suppressed, gts, 0.5) < 1.0);
}
