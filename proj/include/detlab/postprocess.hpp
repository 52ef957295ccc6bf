#pragma once

#include <optional>
#include <vector>

#include "detlab/geometry.hpp"

namespace detlab {

struct Detection {
  BBox box;
  int category = 0;
  double score = 0.0;
};

// Keep detections with score strictly above tau, order preserved.
std::vector<Detection> score_filter(const std::vector<Detection>& dets, double tau);

// Greedy suppression: repeatedly keep the highest-score remaining detection
// (ties by input index) and drop every detection with IoU >= iou_threshold
// against it, same-class only when classwise. Output is in pick order.
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold,
                           bool classwise = true);

struct Histogram {
  int bins = 50;
  double lo = 0.0;
  double hi = 1.0;
  std::vector<long> counts;
};

Histogram histogram_scores(const std::vector<double>& scores, int bins = 50);

struct ScoreGapReport {
  int top_index = -1;
  double gap = 0.0;
  Histogram histogram;
  // Filled by per_object_score_gap; nullopt marks an object with fewer than
  // two candidates above the IoU floor.
  std::vector<std::optional<double>> per_object_gaps;
};

// Gap between the first- and second-highest score. Needs >= 2 scores.
ScoreGapReport score_gap(const std::vector<double>& scores, int bins = 50);

// Restricts the sample set per object to detections with IoU >= iou_floor
// against it, reports one gap per object plus the pooled histogram/gap over
// the union of those sets.
ScoreGapReport per_object_score_gap(const std::vector<Detection>& dets,
                                    const std::vector<GroundTruth>& objects,
                                    double iou_floor = 0.3, int bins = 50);

}  // namespace detlab
