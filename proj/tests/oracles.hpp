#pragma once

// Test-only oracles, written from the metric definitions with independent
// code paths (direct scans, no envelope precomputation, no shared helpers).

#include <algorithm>
#include <set>
#include <vector>

#include "detlab/metrics.hpp"

namespace oracles {

struct PrPoint {
  double precision = 0.0;
  double recall = 0.0;
};

inline double ap_oracle_one(const std::vector<detlab::Detection>& dets,
                            const std::vector<detlab::GroundTruth>& gts, int category,
                            double iou_thr) {
  std::vector<int> order;
  for (size_t i = 0; i < dets.size(); ++i) {
    if (dets[i].category == category) order.push_back(static_cast<int>(i));
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dets[a].score > dets[b].score; });

  int n_gt = 0;
  for (const auto& g : gts) {
    if (g.category == category) ++n_gt;
  }
  if (n_gt == 0) return 0.0;

  std::vector<char> taken(gts.size(), 0);
  std::vector<PrPoint> points;
  int tp = 0, fp = 0;
  for (int d : order) {
    int best = -1;
    double best_iou = 0.0;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].category != category) continue;
      const double ov = detlab::iou(dets[d].box, gts[g].box);
      if (ov >= iou_thr && ov > best_iou) {
        best_iou = ov;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      taken[best] = 1;
      ++tp;
    } else {
      ++fp;
    }
    points.push_back({double(tp) / (tp + fp), double(tp) / n_gt});
  }

  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    double best_p = 0.0;
    for (const PrPoint& p : points) {
      if (p.recall >= r - 1e-12) best_p = std::max(best_p, p.precision);
    }
    sum += best_p;
  }
  return sum / 101.0;
}

// Single-image AP averaged over the categories present in the ground truth
// and over the thresholds.
inline double ap_oracle(const std::vector<detlab::Detection>& dets,
                        const std::vector<detlab::GroundTruth>& gts,
                        const std::vector<double>& thresholds) {
  std::set<int> cats;
  for (const auto& g : gts) cats.insert(g.category);
  double total = 0.0;
  for (double thr : thresholds) {
    double per_cat = 0.0;
    for (int c : cats) per_cat += ap_oracle_one(dets, gts, c, thr);
    total += per_cat / cats.size();
  }
  return total / thresholds.size();
}

}  // namespace oracles
