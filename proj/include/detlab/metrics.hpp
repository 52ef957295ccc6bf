#pragma once

#include <vector>

#include "detlab/postprocess.hpp"

namespace detlab {

using DetectionSet = std::vector<std::vector<Detection>>;  // per image
using GroundTruthSet = std::vector<std::vector<GroundTruth>>;

struct PrCurve {
  double iou_threshold = 0.5;
  std::vector<double> precision;  // at recall 0.00, 0.01, ..., 1.00
};

struct EvalResult {
  double ap = 0.0;        // mean over iou thresholds
  double ap50 = 0.0;      // at IoU 0.5
  double recall50 = 0.0;  // at IoU 0.5
  double mmr = 0.0;       // log-average miss rate
  double redundancy = 0.0;
  std::vector<PrCurve> curves;
};

std::vector<double> default_iou_thresholds();  // 0.50:0.05:0.95

// Greedy score-ordered matching per category, 101-point interpolated AP,
// averaged over categories present in the ground truth and over thresholds.
// Throws when gts are empty across all images. max_dets < 0 means unlimited.
double evaluate_ap(const DetectionSet& dets, const GroundTruthSet& gts,
                   const std::vector<double>& iou_thresholds, int max_dets = -1,
                   std::vector<PrCurve>* curves = nullptr);

// Miss rate vs false-positives-per-image, geometric mean over nine points
// log-spaced in [1e-2, 1], IoU 0.5 matching.
double evaluate_mmr(const DetectionSet& dets, const GroundTruthSet& gts,
                    int max_dets = -1);

// Fraction of ground truths matched by any detection at the threshold.
double recall_at(const DetectionSet& dets, const GroundTruthSet& gts, double iou_thr,
                 int max_dets = -1);

// Mean over ground truths of the number of detections scoring above tau
// with IoU >= iou_thr against that ground truth.
double redundancy(const DetectionSet& dets, const GroundTruthSet& gts, double tau,
                  double iou_thr);

EvalResult evaluate(const DetectionSet& dets, const GroundTruthSet& gts,
                    double redundancy_tau = 0.3, int max_dets = -1);

}  // namespace detlab
