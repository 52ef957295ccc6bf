#include "detlab/postprocess.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

namespace detlab {

std::vector<Detection> score_filter(const std::vector<Detection>& dets, double tau) {
  std::vector<Detection> kept;
  kept.reserve(dets.size());
  for (const Detection& d : dets) {
    if (d.score > tau) kept.push_back(d);
  }
  return kept;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold,
                           bool classwise) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw std::invalid_argument("nms threshold must lie in (0, 1]");
  }
  std::vector<int> order(dets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return dets[a].score > dets[b].score; });

  std::vector<char> suppressed(dets.size(), 0);
  std::vector<Detection> kept;
  for (size_t a = 0; a < order.size(); ++a) {
    const int i = order[a];
    if (suppressed[i]) continue;
    kept.push_back(dets[i]);
    for (size_t b = a + 1; b < order.size(); ++b) {
      const int j = order[b];
      if (suppressed[j]) continue;
      if (classwise && dets[i].category != dets[j].category) continue;
      if (iou(dets[i].box, dets[j].box) >= iou_threshold) suppressed[j] = 1;
    }
  }
  return kept;
}

Histogram histogram_scores(const std::vector<double>& scores, int bins) {
  if (bins < 1) throw std::invalid_argument("histogram needs at least one bin");
  Histogram h;
  h.bins = bins;
  h.counts.assign(bins, 0);
  for (double s : scores) {
    int b = static_cast<int>(s * bins);
    b = std::clamp(b, 0, bins - 1);
    ++h.counts[b];
  }
  return h;
}

ScoreGapReport score_gap(const std::vector<double>& scores, int bins) {
  if (scores.size() < 2) {
    throw std::invalid_argument("score gap needs at least two samples");
  }
  ScoreGapReport r;
  r.top_index = 0;
  for (size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[r.top_index]) r.top_index = static_cast<int>(i);
  }
  double second = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < scores.size(); ++i) {
    if (static_cast<int>(i) == r.top_index) continue;
    second = std::max(second, scores[i]);
  }
  r.gap = scores[r.top_index] - second;
  r.histogram = histogram_scores(scores, bins);
  return r;
}

ScoreGapReport per_object_score_gap(const std::vector<Detection>& dets,
                                    const std::vector<GroundTruth>& objects,
                                    double iou_floor, int bins) {
  ScoreGapReport r;
  std::set<int> pooled;
  for (const GroundTruth& g : objects) {
    std::vector<int> members;
    for (size_t i = 0; i < dets.size(); ++i) {
      if (iou(dets[i].box, g.box) >= iou_floor) members.push_back(static_cast<int>(i));
    }
    pooled.insert(members.begin(), members.end());
    if (members.size() < 2) {
      r.per_object_gaps.push_back(std::nullopt);
      continue;
    }
    std::vector<double> scores;
    scores.reserve(members.size());
    for (int i : members) scores.push_back(dets[i].score);
    r.per_object_gaps.push_back(score_gap(scores, bins).gap);
  }

  std::vector<double> pooled_scores;
  pooled_scores.reserve(pooled.size());
  for (int i : pooled) pooled_scores.push_back(dets[i].score);
  if (pooled_scores.size() >= 2) {
    const ScoreGapReport pooled_report = score_gap(pooled_scores, bins);
    r.gap = pooled_report.gap;
    auto it = pooled.begin();
    std::advance(it, pooled_report.top_index);
    r.top_index = *it;
  }
  r.histogram = histogram_scores(pooled_scores, bins);
  return r;
}

}  // namespace detlab
