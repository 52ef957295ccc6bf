#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "detlab/assign.hpp"
#include "detlab/costs.hpp"
#include "detlab/geometry.hpp"
#include "detlab/metrics.hpp"
#include "detlab/postprocess.hpp"
#include "detlab/rng.hpp"

namespace detlab::toy {

struct SceneConfig {
  int width = 64;
  int height = 64;
  int categories = 3;
  int min_objects = 1;
  int max_objects = 3;
  double min_size = 0.18;
  double max_size = 0.5;
  bool crowded = false;
  double crowd_min_iou = 0.3;
  int max_retries = 2000;
};

struct Scene {
  int width = 0;
  int height = 0;
  std::vector<GroundTruth> objects;
  std::vector<float> pixels;  // height * width * 3, row-major, values in [0,1]
  uint64_t seed = 0;
};

// Filled rectangles, color-coded by category, on a textured background.
// Crowded mode groups objects into pairs with IoU >= crowd_min_iou and throws
// after max_retries if the constraint cannot be met.
Scene generate_scene(const SceneConfig& cfg, uint64_t seed);

// Pixels are a pure function of (size, objects, seed); loading a scene from
// its object list reproduces them exactly.
void render_pixels(Scene& scene);

struct ToyConfig {
  int grid = 32;    // candidate points at the S x S cell centers
  int patch = 12;   // square pixel patch per cell (overlapping neighbours)
  int hidden = 24;  // width of the single hidden layer
  int categories = 3;
};

// One-hidden-layer network applied per cell: K sigmoid class scores plus
// four softplus side distances decoded into a box around the cell center.
struct ToyModel {
  ToyConfig cfg;
  std::vector<double> params;

  int input_dim() const { return 3 * cfg.patch * cfg.patch; }
  int param_count() const;

  static ToyModel zeros(const ToyConfig& cfg);
  static ToyModel random_init(const ToyConfig& cfg, std::mt19937_64& rng);
};

struct CellOutputs {
  int grid = 0;
  int categories = 0;
  std::vector<double> scores;     // S^2 x K
  std::vector<double> sides;      // S^2 x 4 (left, top, right, bottom)
  std::vector<BBox> boxes;        // decoded
  std::vector<GridPoint> cells;   // cell centers in normalized units
};

CellOutputs forward(const ToyModel& model, const Scene& scene);

enum class LossClsForm { bce, focal };

struct TrainSettings {
  CostWeights cost;
  AssignConfig assign;
  double lr = 0.05;
  LossClsForm loss_cls = LossClsForm::focal;
  double focal_alpha = 0.25;
  double focal_gamma = 2.0;
  double loc_l1_weight = 1.0;
  double loc_giou_weight = 1.0;
};

struct TrainLoss {
  double cls_loss = 0.0;
  double loc_loss = 0.0;
  double total = 0.0;
  int positive_pairs = 0;
};

std::vector<Candidate> make_candidates(const CellOutputs& out);

Assignment match_candidates(const CellOutputs& out, const Scene& scene,
                            const TrainSettings& settings);

// Loss of the scene under a frozen assignment; grad (same layout as params)
// is optional. Sums are normalized by the number of positive pairs.
TrainLoss scene_loss(const ToyModel& model, const Scene& scene,
                     const Assignment& assignment, const TrainSettings& settings,
                     std::vector<double>* grad);

// Forward, match, compute loss, apply one gradient-descent update.
TrainLoss training_step(ToyModel& model, const Scene& scene,
                        const TrainSettings& settings);

// One detection per cell (argmax class), highest max_dets by score.
std::vector<Detection> detections_from(const CellOutputs& out, int max_dets = 300);

enum class Regime {
  o2m,
  o2o_loc_predef,
  o2o_loc_pred,
  o2o_loc_cls_predef,
  o2o_loc_cls_pred,
};

const char* regime_name(Regime r);
std::optional<Regime> regime_from_name(const std::string& name);
std::vector<Regime> all_regimes();

// Cost weights and assignment strategy for each studied regime.
TrainSettings regime_settings(Regime r);

struct ExperimentConfig {
  Regime regime = Regime::o2o_loc_cls_pred;
  int seeds = 20;
  uint64_t root_seed = 1;
  int steps = 240;
  int train_scenes = 8;
  int eval_scenes = 8;
  ToyConfig toy;
  SceneConfig scene;
  double lr = 0.05;
  double eval_score_tau = 0.05;
  double nms_iou = 0.5;
  double redundancy_tau = 0.3;
  double gap_iou_floor = 0.3;
  int max_dets = 300;
  int histogram_bins = 50;
  int jobs = 0;  // 0: hardware concurrency
};

struct SeedResult {
  uint64_t seed = 0;
  double ap = 0.0;
  double ap50 = 0.0;
  double ap_nms = 0.0;
  double ap50_nms = 0.0;
  double recall50 = 0.0;
  double recall50_nms = 0.0;
  double mmr = 0.0;
  double mmr_nms = 0.0;
  double gap_mean = 0.0;
  int gap_defined = 0;
  double top1_median = 0.0;
  double redundancy = 0.0;
  double first_loss = 0.0;
  double final_loss = 0.0;
  Histogram hist_early, hist_mid, hist_late;
};

struct ExperimentReport {
  Regime regime = Regime::o2m;
  std::vector<SeedResult> per_seed;  // sorted by seed
  double ap_mean = 0.0;
  double ap_nms_mean = 0.0;
  double delta_mean = 0.0;  // ap_nms - ap, in AP points (x100)
  double gap_median = 0.0;
  double top1_median_median = 0.0;
  double redundancy_mean = 0.0;
};

// Scene streams depend only on (root_seed, seed_index), never on the regime,
// so regimes are compared on matched data.
uint64_t experiment_run_root(const ExperimentConfig& cfg, int seed_index);
std::vector<Scene> experiment_scenes(const ExperimentConfig& cfg, int seed_index,
                                     bool held_out);

// Trains per-seed models on matched scene streams, evaluates with and
// without NMS, collects score histograms at the 10%/50%/100% checkpoints.
// final_models, when given, receives one trained model per seed (same order
// as per_seed).
ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                std::vector<ToyModel>* final_models = nullptr);

// The seed-level worker behind run_experiment, exposed for focused tests.
SeedResult run_experiment_seed(const ExperimentConfig& cfg, int seed_index,
                               ToyModel* final_model = nullptr);

double median(std::vector<double> values);

}  // namespace detlab::toy
