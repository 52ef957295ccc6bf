#include "detlab/costs.hpp"

#include <cmath>
#include <stdexcept>

namespace detlab {

namespace {
constexpr double kProbEps = 1e-7;

double clamp_prob(double p) {
  if (p < kProbEps) return kProbEps;
  if (p > 1.0 - kProbEps) return 1.0 - kProbEps;
  return p;
}
}  // namespace

double location_cost(const Candidate& c, const GroundTruth& g, const CostWeights& w) {
  const bool predicted = w.location_mode == LocationMode::predicted;
  if (predicted && !c.predicted_box.has_value()) {
    throw std::invalid_argument("predicted location mode requires a predicted box");
  }
  if (!predicted && c.is_point()) {
    return w.lambda_l1 * point_center_distance(c.point(), g.box);
  }
  const BBox& box = predicted ? *c.predicted_box : c.anchor();
  const double overlap =
      w.iou_cost_kind == IouCostKind::giou ? giou(box, g.box) : iou(box, g.box);
  return w.lambda_iou * (1.0 - overlap) + w.lambda_l1 * l1_distance(box, g.box);
}

double classification_cost(const Candidate& c, const GroundTruth& g, const CostWeights& w) {
  if (g.category < 0 || g.category >= static_cast<int>(c.class_scores.size())) {
    throw std::invalid_argument("ground-truth category outside candidate score range");
  }
  const double p = clamp_prob(c.class_scores[g.category]);
  const double nll = -std::log(p);
  if (w.cls_cost_form == ClsCostForm::focal) {
    return w.focal_alpha * std::pow(1.0 - p, w.focal_gamma) * nll;
  }
  return nll;
}

CostMatrix build_cost_matrix(const std::vector<Candidate>& candidates,
                             const std::vector<GroundTruth>& objects,
                             const CostWeights& weights) {
  if (candidates.empty()) {
    throw std::invalid_argument("cost matrix needs at least one candidate");
  }
  const size_t k = candidates.front().class_scores.size();
  for (const Candidate& c : candidates) {
    if (c.class_scores.size() != k) {
      throw std::invalid_argument("candidates disagree on the number of classes");
    }
  }

  CostMatrix cm;
  cm.n_samples = static_cast<int>(candidates.size());
  cm.n_objects = static_cast<int>(objects.size());
  cm.total.resize(candidates.size() * objects.size());
  cm.cls.resize(cm.total.size());
  cm.loc.resize(cm.total.size());

  for (int i = 0; i < cm.n_samples; ++i) {
    for (int j = 0; j < cm.n_objects; ++j) {
      const double cls = classification_cost(candidates[i], objects[j], weights);
      const double loc = location_cost(candidates[i], objects[j], weights);
      const size_t idx = static_cast<size_t>(i) * cm.n_objects + j;
      cm.cls[idx] = cls;
      cm.loc[idx] = loc;
      cm.total[idx] = weights.lambda_cls * cls + loc;
      if (!std::isfinite(cm.total[idx])) {
        throw std::invalid_argument("non-finite matching cost");
      }
    }
  }
  return cm;
}

}  // namespace detlab
