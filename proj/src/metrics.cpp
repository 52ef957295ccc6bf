#include "detlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace detlab {

namespace {

struct FlatDetection {
  int image = 0;
  int index = 0;
  double score = 0.0;
};

// Detections of one category sorted by (score desc, image asc, index asc).
std::vector<FlatDetection> flatten_sorted(const DetectionSet& dets, int category,
                                          int max_dets) {
  std::vector<FlatDetection> flat;
  for (size_t img = 0; img < dets.size(); ++img) {
    std::vector<int> order;
    for (size_t i = 0; i < dets[img].size(); ++i) {
      if (category < 0 || dets[img][i].category == category)
        order.push_back(static_cast<int>(i));
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return dets[img][a].score > dets[img][b].score;
    });
    if (max_dets >= 0 && static_cast<int>(order.size()) > max_dets)
      order.resize(max_dets);
    for (int i : order)
      flat.push_back({static_cast<int>(img), i, dets[img][i].score});
  }
  std::stable_sort(flat.begin(), flat.end(), [](const FlatDetection& a,
                                                const FlatDetection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.image != b.image) return a.image < b.image;
    return a.index < b.index;
  });
  return flat;
}

// Marks each detection TP/FP by greedy matching against unmatched gts of the
// same category (best IoU >= thr wins, ties to the lowest gt index).
std::vector<char> greedy_match(const std::vector<FlatDetection>& flat,
                               const DetectionSet& dets, const GroundTruthSet& gts,
                               int category, double iou_thr) {
  std::vector<std::vector<char>> gt_used(gts.size());
  for (size_t img = 0; img < gts.size(); ++img) gt_used[img].assign(gts[img].size(), 0);

  std::vector<char> is_tp(flat.size(), 0);
  for (size_t k = 0; k < flat.size(); ++k) {
    const FlatDetection& fd = flat[k];
    const Detection& d = dets[fd.image][fd.index];
    double best_iou = 0.0;
    int best_gt = -1;
    const auto& img_gts = gts[fd.image];
    for (size_t g = 0; g < img_gts.size(); ++g) {
      if (gt_used[fd.image][g]) continue;
      if (category >= 0 && img_gts[g].category != category) continue;
      const double ov = iou(d.box, img_gts[g].box);
      if (ov >= iou_thr && ov > best_iou) {
        best_iou = ov;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      gt_used[fd.image][best_gt] = 1;
      is_tp[k] = 1;
    }
  }
  return is_tp;
}

int count_gts(const GroundTruthSet& gts, int category) {
  int n = 0;
  for (const auto& img : gts)
    for (const auto& g : img)
      if (category < 0 || g.category == category) ++n;
  return n;
}

double interpolated_ap(const std::vector<char>& is_tp, int n_gt,
                       std::vector<double>* curve = nullptr) {
  std::vector<double> precision, recall;
  int tp = 0, fp = 0;
  for (char t : is_tp) {
    t ? ++tp : ++fp;
    precision.push_back(static_cast<double>(tp) / (tp + fp));
    recall.push_back(static_cast<double>(tp) / n_gt);
  }
  // Precision envelope: max precision at recall >= r.
  for (int i = static_cast<int>(precision.size()) - 2; i >= 0; --i)
    precision[i] = std::max(precision[i], precision[i + 1]);

  double ap = 0.0;
  if (curve) curve->assign(101, 0.0);
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    double p = 0.0;
    for (size_t i = 0; i < recall.size(); ++i) {
      if (recall[i] >= r - 1e-12) {
        p = precision[i];
        break;
      }
    }
    ap += p;
    if (curve) (*curve)[k] = p;
  }
  return ap / 101.0;
}

std::set<int> gt_categories(const GroundTruthSet& gts) {
  std::set<int> cats;
  for (const auto& img : gts)
    for (const auto& g : img) cats.insert(g.category);
  return cats;
}

}  // namespace

std::vector<double> default_iou_thresholds() {
  std::vector<double> t;
  for (int k = 0; k < 10; ++k) t.push_back(0.5 + 0.05 * k);
  return t;
}

double evaluate_ap(const DetectionSet& dets, const GroundTruthSet& gts,
                   const std::vector<double>& iou_thresholds, int max_dets,
                   std::vector<PrCurve>* curves) {
  if (dets.size() != gts.size()) {
    throw std::invalid_argument("detection and ground-truth image counts differ");
  }
  const std::set<int> cats = gt_categories(gts);
  if (cats.empty()) {
    throw std::invalid_argument("no ground truth in any image");
  }
  if (curves) curves->clear();

  double ap_sum = 0.0;
  for (double thr : iou_thresholds) {
    double cat_sum = 0.0;
    std::vector<double> curve_accum(101, 0.0);
    for (int cat : cats) {
      const auto flat = flatten_sorted(dets, cat, max_dets);
      const auto is_tp = greedy_match(flat, dets, gts, cat, thr);
      std::vector<double> curve;
      cat_sum += interpolated_ap(is_tp, count_gts(gts, cat), curves ? &curve : nullptr);
      if (curves) {
        for (int k = 0; k <= 100; ++k) curve_accum[k] += curve[k];
      }
    }
    ap_sum += cat_sum / cats.size();
    if (curves) {
      PrCurve pc;
      pc.iou_threshold = thr;
      pc.precision = curve_accum;
      for (double& p : pc.precision) p /= cats.size();
      curves->push_back(std::move(pc));
    }
  }
  return ap_sum / iou_thresholds.size();
}

double evaluate_mmr(const DetectionSet& dets, const GroundTruthSet& gts, int max_dets) {
  if (gts.empty()) throw std::invalid_argument("mmr needs at least one image");
  const int n_gt = count_gts(gts, -1);
  const int n_images = static_cast<int>(gts.size());
  if (n_gt == 0) return 0.0;

  // Global score sweep; greedy matching is prefix-consistent, so the state
  // after k detections equals thresholding at the k-th score.
  const auto flat = flatten_sorted(dets, -1, max_dets);
  std::vector<std::vector<char>> gt_used(gts.size());
  for (size_t img = 0; img < gts.size(); ++img) gt_used[img].assign(gts[img].size(), 0);

  struct CurvePoint {
    double fppi;
    double miss;
  };
  std::vector<CurvePoint> curve;
  curve.push_back({0.0, 1.0});
  int tp = 0, fp = 0;
  for (const FlatDetection& fd : flat) {
    const Detection& d = dets[fd.image][fd.index];
    double best_iou = 0.0;
    int best_gt = -1;
    const auto& img_gts = gts[fd.image];
    for (size_t g = 0; g < img_gts.size(); ++g) {
      if (gt_used[fd.image][g]) continue;
      if (img_gts[g].category != d.category) continue;
      const double ov = iou(d.box, img_gts[g].box);
      if (ov >= 0.5 && ov > best_iou) {
        best_iou = ov;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      gt_used[fd.image][best_gt] = 1;
      ++tp;
    } else {
      ++fp;
    }
    curve.push_back({static_cast<double>(fp) / n_images,
                     1.0 - static_cast<double>(tp) / n_gt});
  }

  double log_sum = 0.0;
  bool hit_zero = false;
  for (int k = 0; k < 9; ++k) {
    const double ref = std::pow(10.0, -2.0 + 2.0 * k / 8.0);
    double mr = 1.0;
    for (const CurvePoint& p : curve) {
      if (p.fppi <= ref + 1e-12) mr = std::min(mr, p.miss);
    }
    if (mr <= 0.0) {
      hit_zero = true;
      break;
    }
    log_sum += std::log(mr);
  }
  if (hit_zero) return 0.0;
  return std::exp(log_sum / 9.0);
}

double recall_at(const DetectionSet& dets, const GroundTruthSet& gts, double iou_thr,
                 int max_dets) {
  const int n_gt = count_gts(gts, -1);
  if (n_gt == 0) return 0.0;
  int matched = 0;
  const std::set<int> cats = gt_categories(gts);
  for (int cat : cats) {
    const auto flat = flatten_sorted(dets, cat, max_dets);
    const auto is_tp = greedy_match(flat, dets, gts, cat, iou_thr);
    for (char t : is_tp) matched += t;
  }
  return static_cast<double>(matched) / n_gt;
}

double redundancy(const DetectionSet& dets, const GroundTruthSet& gts, double tau,
                  double iou_thr) {
  const int n_gt = count_gts(gts, -1);
  if (n_gt == 0) return 0.0;
  long hits = 0;
  for (size_t img = 0; img < gts.size(); ++img) {
    for (const GroundTruth& g : gts[img]) {
      for (const Detection& d : dets[img]) {
        if (d.score > tau && iou(d.box, g.box) >= iou_thr) ++hits;
      }
    }
  }
  return static_cast<double>(hits) / n_gt;
}

EvalResult evaluate(const DetectionSet& dets, const GroundTruthSet& gts,
                    double redundancy_tau, int max_dets) {
  EvalResult r;
  r.ap = evaluate_ap(dets, gts, default_iou_thresholds(), max_dets, &r.curves);
  r.ap50 = evaluate_ap(dets, gts, {0.5}, max_dets);
  r.recall50 = recall_at(dets, gts, 0.5, max_dets);
  r.mmr = evaluate_mmr(dets, gts, max_dets);
  r.redundancy = redundancy(dets, gts, redundancy_tau, 0.5);
  return r;
}

}  // namespace detlab
