#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "detlab/costs.hpp"
#include "detlab/rng.hpp"

using namespace detlab;

namespace {

Candidate box_candidate(const BBox& box, std::vector<double> scores) {
  Candidate c;
  c.predefined = box;
  c.predicted_box = box;
  c.class_scores = std::move(scores);
  return c;
}

Candidate point_candidate(const GridPoint& p, std::vector<double> scores) {
  Candidate c;
  c.predefined = p;
  c.class_scores = std::move(scores);
  return c;
}

}  // namespace

TEST_CASE("location cost vanishes on identical geometry") {
  CostWeights w;
  w.lambda_l1 = 1.0;
  w.lambda_iou = 1.0;
  const BBox box{0.1, 0.1, 0.6, 0.6};
  const Candidate c = box_candidate(box, {0.5});
  CHECK(location_cost(c, GroundTruth{box, 0}, w) == doctest::Approx(0.0));
}

TEST_CASE("point candidate at the object center") {
  CostWeights w;
  w.lambda_l1 = 1.0;
  w.lambda_iou = 0.0;
  const Candidate c = point_candidate(GridPoint{0.5, 0.5}, {0.5});
  CHECK(location_cost(c, GroundTruth{BBox{0, 0, 1, 1}, 0}, w) == doctest::Approx(0.0));
}

TEST_CASE("location cost combines l1 and iou terms") {
  CostWeights w;
  w.lambda_l1 = 1.0;
  w.lambda_iou = 1.0;
  w.location_mode = LocationMode::predicted;
  const Candidate c = box_candidate(BBox{0, 0, 1, 1}, {0.5});
  const GroundTruth g{BBox{0.1, 0.1, 0.9, 0.9}, 0};
  // l1 = 0.4, iou = 0.64
  CHECK(location_cost(c, g, w) == doctest::Approx(0.4 + (1.0 - 0.64)));
}

TEST_CASE("predicted mode requires a predicted box") {
  CostWeights w;
  w.location_mode = LocationMode::predicted;
  Candidate c = point_candidate(GridPoint{0.5, 0.5}, {0.5});
  CHECK_THROWS_AS(location_cost(c, GroundTruth{BBox{0, 0, 1, 1}, 0}, w),
                  std::invalid_argument);
}

TEST_CASE("classification cost closed forms") {
  CostWeights w;
  const GroundTruth g{BBox{0, 0, 1, 1}, 0};

  w.cls_cost_form = ClsCostForm::bce;
  CHECK(classification_cost(box_candidate(BBox{}, {1.0}), g, w) ==
        doctest::Approx(0.0).epsilon(1e-5));
  CHECK(classification_cost(box_candidate(BBox{}, {0.5}), g, w) ==
        doctest::Approx(std::log(2.0)));

  w.cls_cost_form = ClsCostForm::focal;
  w.focal_alpha = 0.25;
  w.focal_gamma = 2.0;
  CHECK(classification_cost(box_candidate(BBox{}, {0.5}), g, w) ==
        doctest::Approx(0.25 * 0.25 * std::log(2.0)));
}

TEST_CASE("cost matrix matches the scalar operations entry by entry") {
  std::mt19937_64 rng = make_stream(21, "costs-matrix");
  CostWeights w;
  w.location_mode = LocationMode::predicted;
  std::vector<Candidate> cands;
  for (int i = 0; i < 3; ++i) {
    const double x1 = uniform(rng, 0.0, 0.5), y1 = uniform(rng, 0.0, 0.5);
    cands.push_back(box_candidate(BBox{x1, y1, x1 + 0.3, y1 + 0.3},
                                  {uniform01(rng), uniform01(rng)}));
  }
  std::vector<GroundTruth> gts;
  for (int j = 0; j < 2; ++j) {
    const double x1 = uniform(rng, 0.0, 0.5), y1 = uniform(rng, 0.0, 0.5);
    gts.push_back(GroundTruth{BBox{x1, y1, x1 + 0.4, y1 + 0.4}, j});
  }

  const CostMatrix cm = build_cost_matrix(cands, gts, w);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double expected = w.lambda_cls * classification_cost(cands[i], gts[j], w) +
                              location_cost(cands[i], gts[j], w);
      CHECK(cm.at(i, j) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("lambda_cls = 0 reduces the total to the location part") {
  CostWeights w;
  w.lambda_cls = 0.0;
  const std::vector<Candidate> cands = {box_candidate(BBox{0, 0, 0.5, 0.5}, {0.2}),
                                        box_candidate(BBox{0.2, 0.2, 0.8, 0.8}, {0.9})};
  const std::vector<GroundTruth> gts = {GroundTruth{BBox{0.1, 0.1, 0.5, 0.6}, 0}};
  const CostMatrix cm = build_cost_matrix(cands, gts, w);
  for (int i = 0; i < cm.n_samples; ++i) {
    CHECK(cm.at(i, 0) == doctest::Approx(cm.loc_at(i, 0)));
  }
}

TEST_CASE("perfect candidate with perfect score costs about zero") {
  CostWeights w;
  const BBox box{0.2, 0.2, 0.7, 0.7};
  const CostMatrix cm = build_cost_matrix({box_candidate(box, {1.0 - 1e-9})},
                                          {GroundTruth{box, 0}}, w);
  CHECK(cm.at(0, 0) == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("decomposition invariant") {
  std::mt19937_64 rng = make_stream(22, "costs-decomp");
  CostWeights w;
  w.location_mode = LocationMode::predicted;
  std::vector<Candidate> cands;
  for (int i = 0; i < 8; ++i) {
    const double x1 = uniform(rng, 0.0, 0.4), y1 = uniform(rng, 0.0, 0.4);
    cands.push_back(box_candidate(BBox{x1, y1, x1 + 0.4, y1 + 0.4},
                                  {uniform01(rng), uniform01(rng), uniform01(rng)}));
  }
  std::vector<GroundTruth> gts = {GroundTruth{BBox{0.1, 0.1, 0.6, 0.6}, 1},
                                  GroundTruth{BBox{0.4, 0.3, 0.9, 0.8}, 2}};
  const CostMatrix cm = build_cost_matrix(cands, gts, w);
  for (int i = 0; i < cm.n_samples; ++i) {
    for (int j = 0; j < cm.n_objects; ++j) {
      const double residual =
          cm.at(i, j) - w.lambda_cls * cm.cls_at(i, j) - cm.loc_at(i, j);
      CHECK(std::abs(residual) < 1e-12);
    }
  }
}

TEST_CASE("raising the ground-truth class score lowers the total monotonically") {
  CostWeights w;
  const GroundTruth g{BBox{0.1, 0.1, 0.6, 0.6}, 0};
  double previous = 1e18;
  for (double p : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const Candidate c = box_candidate(BBox{0.1, 0.1, 0.6, 0.6}, {p});
    const CostMatrix cm = build_cost_matrix({c}, {g}, w);
    CHECK(cm.at(0, 0) < previous);
    previous = cm.at(0, 0);
  }
  // and with lambda_cls = 0 the total ignores the score
  w.lambda_cls = 0.0;
  const double t1 =
      build_cost_matrix({box_candidate(BBox{0.1, 0.1, 0.6, 0.6}, {0.1})}, {g}, w).at(0, 0);
  const double t2 =
      build_cost_matrix({box_candidate(BBox{0.1, 0.1, 0.6, 0.6}, {0.9})}, {g}, w).at(0, 0);
  CHECK(t1 == doctest::Approx(t2));
}

TEST_CASE("predicted mode ignores the predefined geometry") {
  CostWeights w;
  w.location_mode = LocationMode::predicted;
  const GroundTruth g{BBox{0.2, 0.2, 0.8, 0.8}, 0};
  Candidate a = box_candidate(BBox{0, 0, 0.1, 0.1}, {0.5});
  Candidate b = point_candidate(GridPoint{0.9, 0.9}, {0.5});
  b.predicted_box = a.predicted_box = BBox{0.25, 0.2, 0.8, 0.85};
  const CostMatrix ca = build_cost_matrix({a}, {g}, w);
  const CostMatrix cb = build_cost_matrix({b}, {g}, w);
  CHECK(ca.at(0, 0) == doctest::Approx(cb.at(0, 0)).epsilon(1e-15));
}

TEST_CASE("inconsistent class counts are rejected") {
  const std::vector<Candidate> cands = {box_candidate(BBox{0, 0, 1, 1}, {0.5}),
                                        box_candidate(BBox{0, 0, 1, 1}, {0.5, 0.5})};
  CHECK_THROWS_AS(
      build_cost_matrix(cands, {GroundTruth{BBox{0, 0, 1, 1}, 0}}, CostWeights{}),
      std::invalid_argument);
}
