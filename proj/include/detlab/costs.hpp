#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "detlab/geometry.hpp"

namespace detlab {

// An object candidate: either a grid point or an anchor box, optionally
// carrying the box currently predicted for it plus per-class sigmoid scores.
struct Candidate {
  std::variant<GridPoint, BBox> predefined;
  std::optional<BBox> predicted_box;
  std::vector<double> class_scores;

  bool is_point() const { return std::holds_alternative<GridPoint>(predefined); }
  const GridPoint& point() const { return std::get<GridPoint>(predefined); }
  const BBox& anchor() const { return std::get<BBox>(predefined); }
};

enum class LocationMode { predefined, predicted };
enum class ClsCostForm { bce, focal };
enum class IouCostKind { iou, giou };

// Coefficients of the matching cost. The lambda defaults balance the term
// magnitudes; they are configuration, not constants of nature.
struct CostWeights {
  double lambda_cls = 2.0;
  double lambda_l1 = 5.0;
  double lambda_iou = 2.0;
  LocationMode location_mode = LocationMode::predefined;
  ClsCostForm cls_cost_form = ClsCostForm::bce;
  IouCostKind iou_cost_kind = IouCostKind::iou;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
};

// Row-major n_samples x n_objects matrices. cls holds the raw (unweighted)
// classification cost so total = lambda_cls * cls + loc stays reconstructible.
struct CostMatrix {
  int n_samples = 0;
  int n_objects = 0;
  std::vector<double> total;
  std::vector<double> cls;
  std::vector<double> loc;

  double at(int sample, int object) const { return total[sample * n_objects + object]; }
  double cls_at(int sample, int object) const { return cls[sample * n_objects + object]; }
  double loc_at(int sample, int object) const { return loc[sample * n_objects + object]; }
};

// lambda_iou * (1 - iou) + lambda_l1 * L1 against the candidate geometry
// selected by location_mode. Point candidates in predefined mode use the
// point-to-center distance as the L1 term and take no iou term.
double location_cost(const Candidate& c, const GroundTruth& g, const CostWeights& w);

// Raw classification cost of the ground-truth class column, bce or focal.
double classification_cost(const Candidate& c, const GroundTruth& g, const CostWeights& w);

CostMatrix build_cost_matrix(const std::vector<Candidate>& candidates,
                             const std::vector<GroundTruth>& objects,
                             const CostWeights& weights);

}  // namespace detlab
