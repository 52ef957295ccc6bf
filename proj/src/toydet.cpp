#include "detlab/toydet.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace detlab::toy {

namespace {

constexpr double kPalette[8][3] = {
    {0.90, 0.20, 0.20}, {0.20, 0.85, 0.25}, {0.20, 0.35, 0.90}, {0.90, 0.85, 0.20},
    {0.85, 0.25, 0.85}, {0.25, 0.85, 0.85}, {0.95, 0.60, 0.20}, {0.55, 0.40, 0.20},
};

double softplus(double z) {
  if (z > 30.0) return z;
  return std::log1p(std::exp(z));
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log sigmoid(z) and log(1 - sigmoid(z)) without cancellation
double log_sig(double z) { return -softplus(-z); }
double log_one_minus_sig(double z) { return -softplus(z); }

BBox sample_box(const SceneConfig& cfg, std::mt19937_64& rng) {
  const double w = uniform(rng, cfg.min_size, cfg.max_size);
  const double h = uniform(rng, cfg.min_size, cfg.max_size);
  const double x1 = uniform(rng, 0.0, 1.0 - w);
  const double y1 = uniform(rng, 0.0, 1.0 - h);
  return make_bbox(x1, y1, x1 + w, y1 + h);
}

// Overlapping partner for crowded pairs: jittered copy with IoU >= min_iou.
BBox sample_partner(const BBox& base, const SceneConfig& cfg, std::mt19937_64& rng) {
  const double bw = base.x2 - base.x1;
  const double bh = base.y2 - base.y1;
  for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
    const double scale = uniform(rng, 0.85, 1.15);
    const double w = std::clamp(bw * scale, cfg.min_size * 0.5, 1.0);
    const double h = std::clamp(bh * scale, cfg.min_size * 0.5, 1.0);
    const double dx = uniform(rng, -0.5, 0.5) * bw;
    const double dy = uniform(rng, -0.5, 0.5) * bh;
    double x1 = base.x1 + dx, y1 = base.y1 + dy;
    x1 = std::clamp(x1, 0.0, 1.0 - w);
    y1 = std::clamp(y1, 0.0, 1.0 - h);
    const BBox candidate = make_bbox(x1, y1, x1 + w, y1 + h);
    if (iou(base, candidate) >= cfg.crowd_min_iou) return candidate;
  }
  throw std::runtime_error("crowded scene generation: overlap constraint infeasible");
}

}  // namespace

Scene generate_scene(const SceneConfig& cfg, uint64_t seed) {
  if (cfg.min_objects < 1 || cfg.max_objects < cfg.min_objects ||
      cfg.min_size <= 0.0 || cfg.max_size > 1.0 || cfg.min_size > cfg.max_size) {
    throw std::invalid_argument("invalid scene configuration");
  }
  Scene scene;
  scene.width = cfg.width;
  scene.height = cfg.height;
  scene.seed = seed;

  std::mt19937_64 rng = make_stream(seed, "scene-objects");
  const int count = uniform_int(rng, cfg.min_objects, cfg.max_objects);
  for (int i = 0; i < count; ++i) {
    GroundTruth gt;
    if (cfg.crowded && i % 2 == 1) {
      gt.box = sample_partner(scene.objects.back().box, cfg, rng);
      gt.category = scene.objects.back().category;  // crowds share a class
    } else {
      gt.box = sample_box(cfg, rng);
      gt.category = uniform_int(rng, 0, cfg.categories - 1);
    }
    scene.objects.push_back(gt);
  }
  render_pixels(scene);
  return scene;
}

void render_pixels(Scene& scene) {
  const int w = scene.width, h = scene.height;
  scene.pixels.assign(static_cast<size_t>(w) * h * 3, 0.0f);

  std::mt19937_64 bg = make_stream(scene.seed, "scene-background");
  double freq_x[3], freq_y[3], phase[3];
  for (int c = 0; c < 3; ++c) {
    freq_x[c] = uniform(bg, 0.5, 3.0);
    freq_y[c] = uniform(bg, 0.5, 3.0);
    phase[c] = uniform(bg, 0.0, 2.0 * M_PI);
  }
  std::mt19937_64 noise = make_stream(scene.seed, "scene-noise");
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fx = (x + 0.5) / w, fy = (y + 0.5) / h;
      for (int c = 0; c < 3; ++c) {
        const double texture =
            0.40 + 0.12 * std::sin(2.0 * M_PI * (freq_x[c] * fx + freq_y[c] * fy) +
                                   phase[c]);
        const double value = texture + uniform(noise, -0.05, 0.05);
        scene.pixels[(static_cast<size_t>(y) * w + x) * 3 + c] =
            static_cast<float>(std::clamp(value, 0.0, 1.0));
      }
    }
  }

  std::mt19937_64 obj_noise = make_stream(scene.seed, "scene-object-noise");
  for (const GroundTruth& gt : scene.objects) {
    const double* base = kPalette[gt.category % 8];
    double tint[3];
    for (int c = 0; c < 3; ++c) tint[c] = base[c] + uniform(obj_noise, -0.06, 0.06);
    const int x_lo = std::clamp(static_cast<int>(std::floor(gt.box.x1 * w)), 0, w - 1);
    const int x_hi = std::clamp(static_cast<int>(std::ceil(gt.box.x2 * w)), 0, w);
    const int y_lo = std::clamp(static_cast<int>(std::floor(gt.box.y1 * h)), 0, h - 1);
    const int y_hi = std::clamp(static_cast<int>(std::ceil(gt.box.y2 * h)), 0, h);
    for (int y = y_lo; y < y_hi; ++y) {
      for (int x = x_lo; x < x_hi; ++x) {
        for (int c = 0; c < 3; ++c) {
          const double value = tint[c] + uniform(obj_noise, -0.03, 0.03);
          scene.pixels[(static_cast<size_t>(y) * w + x) * 3 + c] =
              static_cast<float>(std::clamp(value, 0.0, 1.0));
        }
      }
    }
  }
}

// Parameter layout: W1[H x M], b1[H], Wc[K x H], bc[K], Wb[4 x H], bb[4].
namespace {
struct Layout {
  int M, H, K;
  int w1() const { return 0; }
  int b1() const { return H * M; }
  int wc() const { return b1() + H; }
  int bc() const { return wc() + K * H; }
  int wb() const { return bc() + K; }
  int bb() const { return wb() + 4 * H; }
  int count() const { return bb() + 4; }
};

Layout layout_of(const ToyConfig& cfg) {
  return Layout{3 * cfg.patch * cfg.patch, cfg.hidden, cfg.categories};
}
}  // namespace

int ToyModel::param_count() const { return layout_of(cfg).count(); }

ToyModel ToyModel::zeros(const ToyConfig& cfg) {
  ToyModel m;
  m.cfg = cfg;
  m.params.assign(layout_of(cfg).count(), 0.0);
  return m;
}

ToyModel ToyModel::random_init(const ToyConfig& cfg, std::mt19937_64& rng) {
  ToyModel m = zeros(cfg);
  const Layout L = layout_of(cfg);
  const double s1 = 1.0 / std::sqrt(static_cast<double>(L.M));
  const double s2 = 1.0 / std::sqrt(static_cast<double>(L.H));
  for (int i = 0; i < L.H * L.M; ++i) m.params[L.w1() + i] = s1 * normal(rng);
  for (int i = 0; i < L.K * L.H; ++i) m.params[L.wc() + i] = s2 * normal(rng);
  for (int i = 0; i < 4 * L.H; ++i) m.params[L.wb() + i] = s2 * normal(rng);
  // Class logits start low so the dense negatives dominate less early on.
  for (int k = 0; k < L.K; ++k) m.params[L.bc() + k] = -2.0;
  return m;
}

namespace {

// Patch of the input image centered on a cell, channels interleaved,
// shifted to [-0.5, 0.5]. Borders clamp.
void extract_patch(const Scene& scene, const ToyConfig& cfg, int gx, int gy,
                   std::vector<double>& out) {
  const int w = scene.width, h = scene.height, p = cfg.patch;
  const double cx = (gx + 0.5) / cfg.grid * w;
  const double cy = (gy + 0.5) / cfg.grid * h;
  const int x0 = static_cast<int>(std::lround(cx)) - p / 2;
  const int y0 = static_cast<int>(std::lround(cy)) - p / 2;
  out.resize(static_cast<size_t>(3) * p * p);
  size_t idx = 0;
  for (int dy = 0; dy < p; ++dy) {
    const int sy = std::clamp(y0 + dy, 0, h - 1);
    for (int dx = 0; dx < p; ++dx) {
      const int sx = std::clamp(x0 + dx, 0, w - 1);
      const float* px = &scene.pixels[(static_cast<size_t>(sy) * w + sx) * 3];
      out[idx++] = px[0] - 0.5;
      out[idx++] = px[1] - 0.5;
      out[idx++] = px[2] - 0.5;
    }
  }
}

struct ForwardCache {
  std::vector<double> inputs;      // S^2 x M
  std::vector<double> hidden;      // S^2 x H (tanh)
  std::vector<double> cls_logits;  // S^2 x K
  std::vector<double> side_logits; // S^2 x 4
  CellOutputs out;
};

void forward_into(const ToyModel& model, const Scene& scene, ForwardCache& cache) {
  const ToyConfig& cfg = model.cfg;
  const Layout L = layout_of(cfg);
  const int cells = cfg.grid * cfg.grid;
  cache.inputs.resize(static_cast<size_t>(cells) * L.M);
  cache.hidden.resize(static_cast<size_t>(cells) * L.H);
  cache.cls_logits.resize(static_cast<size_t>(cells) * L.K);
  cache.side_logits.resize(static_cast<size_t>(cells) * 4);
  cache.out.grid = cfg.grid;
  cache.out.categories = cfg.categories;
  cache.out.scores.resize(static_cast<size_t>(cells) * L.K);
  cache.out.sides.resize(static_cast<size_t>(cells) * 4);
  cache.out.boxes.resize(cells);
  cache.out.cells.resize(cells);

  const double* W1 = &model.params[L.w1()];
  const double* b1 = &model.params[L.b1()];
  const double* Wc = &model.params[L.wc()];
  const double* bc = &model.params[L.bc()];
  const double* Wb = &model.params[L.wb()];
  const double* bb = &model.params[L.bb()];

  std::vector<double> patch;
  for (int gy = 0; gy < cfg.grid; ++gy) {
    for (int gx = 0; gx < cfg.grid; ++gx) {
      const int cell = gy * cfg.grid + gx;
      extract_patch(scene, cfg, gx, gy, patch);
      double* u = &cache.inputs[static_cast<size_t>(cell) * L.M];
      std::copy(patch.begin(), patch.end(), u);

      double* a = &cache.hidden[static_cast<size_t>(cell) * L.H];
      for (int hh = 0; hh < L.H; ++hh) {
        double z = b1[hh];
        const double* row = &W1[static_cast<size_t>(hh) * L.M];
        for (int m = 0; m < L.M; ++m) z += row[m] * u[m];
        a[hh] = std::tanh(z);
      }

      double* cl = &cache.cls_logits[static_cast<size_t>(cell) * L.K];
      double* sc = &cache.out.scores[static_cast<size_t>(cell) * L.K];
      for (int k = 0; k < L.K; ++k) {
        double z = bc[k];
        const double* row = &Wc[static_cast<size_t>(k) * L.H];
        for (int hh = 0; hh < L.H; ++hh) z += row[hh] * a[hh];
        cl[k] = z;
        sc[k] = sigmoid(z);
      }

      double* sl = &cache.side_logits[static_cast<size_t>(cell) * 4];
      double* sd = &cache.out.sides[static_cast<size_t>(cell) * 4];
      for (int t = 0; t < 4; ++t) {
        double z = bb[t];
        const double* row = &Wb[static_cast<size_t>(t) * L.H];
        for (int hh = 0; hh < L.H; ++hh) z += row[hh] * a[hh];
        sl[t] = z;
        sd[t] = softplus(z);
      }

      const double cx = (gx + 0.5) / cfg.grid;
      const double cy = (gy + 0.5) / cfg.grid;
      cache.out.cells[cell] = GridPoint{cx, cy};
      cache.out.boxes[cell] =
          BBox{cx - sd[0], cy - sd[1], cx + sd[2], cy + sd[3]};
    }
  }
}

// d(GIoU)/d(pred box corners); mirrors the forward arithmetic in geometry.
void giou_gradient(const BBox& a, const BBox& g, double grad[4]) {
  const double aw = a.x2 - a.x1, ah = a.y2 - a.y1;
  const double A = aw * ah, G = area(g);
  const double ix1 = std::max(a.x1, g.x1), iy1 = std::max(a.y1, g.y1);
  const double ix2 = std::min(a.x2, g.x2), iy2 = std::min(a.y2, g.y2);
  const double iw = ix2 - ix1, ih = iy2 - iy1;
  const bool has_inter = iw > 0.0 && ih > 0.0;
  const double I = has_inter ? iw * ih : 0.0;
  const double U = A + G - I;
  const double cw = std::max(a.x2, g.x2) - std::min(a.x1, g.x1);
  const double ch = std::max(a.y2, g.y2) - std::min(a.y1, g.y1);
  const double C = cw * ch;

  // dA
  const double dA[4] = {-ah, -aw, ah, aw};
  // dI
  double dI[4] = {0, 0, 0, 0};
  if (has_inter) {
    if (a.x1 >= g.x1) dI[0] = -ih;
    if (a.y1 >= g.y1) dI[1] = -iw;
    if (a.x2 <= g.x2) dI[2] = ih;
    if (a.y2 <= g.y2) dI[3] = iw;
  }
  // dC
  double dC[4] = {0, 0, 0, 0};
  if (a.x1 <= g.x1) dC[0] = -ch;
  if (a.y1 <= g.y1) dC[1] = -cw;
  if (a.x2 >= g.x2) dC[2] = ch;
  if (a.y2 >= g.y2) dC[3] = cw;

  // giou = I/U - 1 + U/C
  for (int c = 0; c < 4; ++c) {
    const double dU = dA[c] - dI[c];
    double gr = 0.0;
    if (U > 0.0) gr += (dI[c] * U - I * dU) / (U * U);
    if (C > 0.0) gr += (dU * C - U * dC[c]) / (C * C);
    grad[c] = gr;
  }
}

}  // namespace

CellOutputs forward(const ToyModel& model, const Scene& scene) {
  ForwardCache cache;
  forward_into(model, scene, cache);
  return std::move(cache.out);
}

std::vector<Candidate> make_candidates(const CellOutputs& out) {
  const int cells = out.grid * out.grid;
  std::vector<Candidate> cands(cells);
  for (int i = 0; i < cells; ++i) {
    cands[i].predefined = out.cells[i];
    cands[i].predicted_box = out.boxes[i];
    cands[i].class_scores.assign(out.scores.begin() + static_cast<size_t>(i) * out.categories,
                                 out.scores.begin() + static_cast<size_t>(i + 1) * out.categories);
  }
  return cands;
}

Assignment match_candidates(const CellOutputs& out, const Scene& scene,
                            const TrainSettings& settings) {
  const CostMatrix cm =
      build_cost_matrix(make_candidates(out), scene.objects, settings.cost);
  return run_assignment(cm, settings.assign);
}

TrainLoss scene_loss(const ToyModel& model, const Scene& scene,
                     const Assignment& assignment, const TrainSettings& settings,
                     std::vector<double>* grad) {
  const ToyConfig& cfg = model.cfg;
  const Layout L = layout_of(cfg);
  const int cells = cfg.grid * cfg.grid;

  ForwardCache cache;
  forward_into(model, scene, cache);

  // Classification targets from the assignment (multi-label when a sample
  // serves several objects).
  std::vector<char> target(static_cast<size_t>(cells) * L.K, 0);
  int positive_pairs = 0;
  for (size_t j = 0; j < assignment.positives.size(); ++j) {
    const int category = scene.objects[j].category;
    for (int i : assignment.positives[j]) {
      target[static_cast<size_t>(i) * L.K + category] = 1;
      ++positive_pairs;
    }
  }
  const double norm = std::max(1, positive_pairs);

  TrainLoss loss;
  loss.positive_pairs = positive_pairs;

  std::vector<double> d_cls(static_cast<size_t>(cells) * L.K, 0.0);
  std::vector<double> d_side(static_cast<size_t>(cells) * 4, 0.0);

  const double alpha = settings.focal_alpha;
  const double gamma = settings.focal_gamma;
  for (int i = 0; i < cells; ++i) {
    for (int k = 0; k < L.K; ++k) {
      const size_t idx = static_cast<size_t>(i) * L.K + k;
      const double z = cache.cls_logits[idx];
      const double p = cache.out.scores[idx];
      const bool pos = target[idx] != 0;
      double value, dz;
      if (settings.loss_cls == LossClsForm::bce) {
        value = pos ? -log_sig(z) : -log_one_minus_sig(z);
        dz = p - (pos ? 1.0 : 0.0);
      } else {
        const double lp = log_sig(z), lq = log_one_minus_sig(z);
        if (pos) {
          const double q = 1.0 - p;
          value = -alpha * std::pow(q, gamma) * lp;
          dz = alpha * gamma * p * std::pow(q, gamma) * lp -
               alpha * std::pow(q, gamma + 1.0);
        } else {
          value = -(1.0 - alpha) * std::pow(p, gamma) * lq;
          dz = -(1.0 - alpha) * gamma * std::pow(p, gamma) * (1.0 - p) * lq +
               (1.0 - alpha) * std::pow(p, gamma + 1.0);
        }
      }
      loss.cls_loss += value / norm;
      d_cls[idx] = dz / norm;
    }
  }

  // Location loss only on positive pairs: side distances never see negatives.
  for (size_t j = 0; j < assignment.positives.size(); ++j) {
    const BBox& gt = scene.objects[j].box;
    for (int i : assignment.positives[j]) {
      const BBox& box = cache.out.boxes[i];
      double d_box[4] = {0, 0, 0, 0};

      const double coords[4] = {box.x1, box.y1, box.x2, box.y2};
      const double gt_coords[4] = {gt.x1, gt.y1, gt.x2, gt.y2};
      double l1 = 0.0;
      for (int c = 0; c < 4; ++c) {
        l1 += std::abs(coords[c] - gt_coords[c]);
        d_box[c] += settings.loc_l1_weight *
                    (coords[c] > gt_coords[c] ? 1.0 : coords[c] < gt_coords[c] ? -1.0 : 0.0);
      }
      const double g = giou(box, gt);
      double d_giou[4];
      giou_gradient(box, gt, d_giou);
      for (int c = 0; c < 4; ++c) d_box[c] -= settings.loc_giou_weight * d_giou[c];

      loss.loc_loss +=
          (settings.loc_l1_weight * l1 + settings.loc_giou_weight * (1.0 - g)) / norm;

      // box = (cx - s0, cy - s1, cx + s2, cy + s3)
      const double d_sides[4] = {-d_box[0], -d_box[1], d_box[2], d_box[3]};
      for (int t = 0; t < 4; ++t) {
        const size_t idx = static_cast<size_t>(i) * 4 + t;
        d_side[idx] += d_sides[t] * sigmoid(cache.side_logits[idx]) / norm;
      }
    }
  }

  loss.total = loss.cls_loss + loss.loc_loss;
  if (!grad) return loss;

  grad->assign(L.count(), 0.0);
  double* dW1 = grad->data() + L.w1();
  double* db1 = grad->data() + L.b1();
  double* dWc = grad->data() + L.wc();
  double* dbc = grad->data() + L.bc();
  double* dWb = grad->data() + L.wb();
  double* dbb = grad->data() + L.bb();
  const double* Wc = &model.params[L.wc()];
  const double* Wb = &model.params[L.wb()];

  std::vector<double> da(L.H);
  for (int i = 0; i < cells; ++i) {
    const double* a = &cache.hidden[static_cast<size_t>(i) * L.H];
    const double* u = &cache.inputs[static_cast<size_t>(i) * L.M];
    std::fill(da.begin(), da.end(), 0.0);

    bool any = false;
    for (int k = 0; k < L.K; ++k) {
      const double dz = d_cls[static_cast<size_t>(i) * L.K + k];
      if (dz == 0.0) continue;
      any = true;
      dbc[k] += dz;
      double* wrow = dWc + static_cast<size_t>(k) * L.H;
      const double* crow = Wc + static_cast<size_t>(k) * L.H;
      for (int hh = 0; hh < L.H; ++hh) {
        wrow[hh] += dz * a[hh];
        da[hh] += dz * crow[hh];
      }
    }
    for (int t = 0; t < 4; ++t) {
      const double dz = d_side[static_cast<size_t>(i) * 4 + t];
      if (dz == 0.0) continue;
      any = true;
      dbb[t] += dz;
      double* wrow = dWb + static_cast<size_t>(t) * L.H;
      const double* brow = Wb + static_cast<size_t>(t) * L.H;
      for (int hh = 0; hh < L.H; ++hh) {
        wrow[hh] += dz * a[hh];
        da[hh] += dz * brow[hh];
      }
    }
    if (!any) continue;

    for (int hh = 0; hh < L.H; ++hh) {
      const double dz = da[hh] * (1.0 - a[hh] * a[hh]);
      if (dz == 0.0) continue;
      db1[hh] += dz;
      double* wrow = dW1 + static_cast<size_t>(hh) * L.M;
      for (int m = 0; m < L.M; ++m) wrow[m] += dz * u[m];
    }
  }
  return loss;
}

TrainLoss training_step(ToyModel& model, const Scene& scene,
                        const TrainSettings& settings) {
  const CellOutputs out = forward(model, scene);
  Assignment assignment = match_candidates(out, scene, settings);
  if (assignment.mode == AssignMode::one_to_many) {
    bool any = false;
    for (const auto& p : assignment.positives) any = any || !p.empty();
    if (!any) {
      std::cerr << "warning: no positive samples this step, location loss is 0\n";
    }
  }
  std::vector<double> grad;
  const TrainLoss loss = scene_loss(model, scene, assignment, settings, &grad);
  for (size_t i = 0; i < model.params.size(); ++i) {
    model.params[i] -= settings.lr * grad[i];
  }
  return loss;
}

std::vector<Detection> detections_from(const CellOutputs& out, int max_dets) {
  const int cells = out.grid * out.grid;
  std::vector<Detection> dets(cells);
  for (int i = 0; i < cells; ++i) {
    const double* sc = &out.scores[static_cast<size_t>(i) * out.categories];
    int best = 0;
    for (int k = 1; k < out.categories; ++k) {
      if (sc[k] > sc[best]) best = k;
    }
    dets[i] = Detection{out.boxes[i], best, sc[best]};
  }
  if (max_dets >= 0 && static_cast<int>(dets.size()) > max_dets) {
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    dets.resize(max_dets);
  }
  return dets;
}

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::o2m: return "o2m";
    case Regime::o2o_loc_predef: return "o2o_loc_predef";
    case Regime::o2o_loc_pred: return "o2o_loc_pred";
    case Regime::o2o_loc_cls_predef: return "o2o_loc_cls_predef";
    case Regime::o2o_loc_cls_pred: return "o2o_loc_cls_pred";
  }
  return "?";
}

std::optional<Regime> regime_from_name(const std::string& name) {
  for (Regime r : all_regimes()) {
    if (name == regime_name(r)) return r;
  }
  return std::nullopt;
}

std::vector<Regime> all_regimes() {
  return {Regime::o2m, Regime::o2o_loc_predef, Regime::o2o_loc_pred,
          Regime::o2o_loc_cls_predef, Regime::o2o_loc_cls_pred};
}

TrainSettings regime_settings(Regime r) {
  TrainSettings s;
  s.cost.lambda_l1 = 5.0;
  s.cost.cls_cost_form = ClsCostForm::bce;
  switch (r) {
    case Regime::o2m:
      s.cost.lambda_cls = 0.0;
      s.cost.lambda_iou = 0.0;
      s.cost.location_mode = LocationMode::predefined;
      s.assign.strategy = AssignStrategy::threshold;
      // 5 * center distance < 0.6: every cell within 0.12 of the center.
      s.assign.theta = {ThetaRule::Kind::constant, 0.6};
      break;
    case Regime::o2o_loc_predef:
      s.cost.lambda_cls = 0.0;
      s.cost.lambda_iou = 0.0;
      s.cost.location_mode = LocationMode::predefined;
      s.assign.strategy = AssignStrategy::bipartite;
      break;
    case Regime::o2o_loc_pred:
      s.cost.lambda_cls = 0.0;
      s.cost.lambda_iou = 2.0;
      s.cost.location_mode = LocationMode::predicted;
      s.assign.strategy = AssignStrategy::bipartite;
      break;
    case Regime::o2o_loc_cls_predef:
      s.cost.lambda_cls = 2.0;
      s.cost.lambda_iou = 0.0;
      s.cost.location_mode = LocationMode::predefined;
      s.assign.strategy = AssignStrategy::bipartite;
      break;
    case Regime::o2o_loc_cls_pred:
      s.cost.lambda_cls = 2.0;
      s.cost.lambda_iou = 2.0;
      s.cost.location_mode = LocationMode::predicted;
      s.assign.strategy = AssignStrategy::bipartite;
      break;
  }
  return s;
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

Histogram score_histogram(const std::vector<std::vector<double>>& per_scene, int bins) {
  std::vector<double> all;
  for (const auto& v : per_scene) all.insert(all.end(), v.begin(), v.end());
  return histogram_scores(all, bins);
}

std::vector<double> top_scores(const CellOutputs& out) {
  const int cells = out.grid * out.grid;
  std::vector<double> tops(cells);
  for (int i = 0; i < cells; ++i) {
    const double* sc = &out.scores[static_cast<size_t>(i) * out.categories];
    tops[i] = *std::max_element(sc, sc + out.categories);
  }
  return tops;
}

}  // namespace

uint64_t experiment_run_root(const ExperimentConfig& cfg, int seed_index) {
  return splitmix64(cfg.root_seed + static_cast<uint64_t>(seed_index));
}

std::vector<Scene> experiment_scenes(const ExperimentConfig& cfg, int seed_index,
                                     bool held_out) {
  const uint64_t run_root = experiment_run_root(cfg, seed_index);
  const int count = held_out ? cfg.eval_scenes : cfg.train_scenes;
  const uint64_t salt = held_out ? 0x9000 : 0x100;
  std::vector<Scene> scenes;
  scenes.reserve(count);
  for (int i = 0; i < count; ++i) {
    scenes.push_back(generate_scene(cfg.scene, splitmix64(run_root ^ (salt + i))));
  }
  return scenes;
}

SeedResult run_experiment_seed(const ExperimentConfig& cfg, int seed_index,
                               ToyModel* final_model) {
  const uint64_t run_root = experiment_run_root(cfg, seed_index);
  SeedResult result;
  result.seed = run_root;

  std::vector<Scene> train = experiment_scenes(cfg, seed_index, false);
  std::vector<Scene> eval_scenes = experiment_scenes(cfg, seed_index, true);

  ToyConfig toy_cfg = cfg.toy;
  toy_cfg.categories = cfg.scene.categories;
  std::mt19937_64 init_rng = make_stream(run_root, "model-init");
  ToyModel model = ToyModel::random_init(toy_cfg, init_rng);

  TrainSettings settings = regime_settings(cfg.regime);
  settings.lr = cfg.lr;

  const int early = std::max(1, cfg.steps / 10);
  const int mid = std::max(1, cfg.steps / 2);

  auto collect_histogram = [&](Histogram& slot) {
    std::vector<std::vector<double>> per_scene;
    for (const Scene& s : eval_scenes) per_scene.push_back(top_scores(forward(model, s)));
    slot = score_histogram(per_scene, cfg.histogram_bins);
  };

  for (int step = 0; step < cfg.steps; ++step) {
    const TrainLoss loss = training_step(model, train[step % cfg.train_scenes], settings);
    if (step == 0) result.first_loss = loss.total;
    if (step + 1 == early) collect_histogram(result.hist_early);
    if (step + 1 == mid) collect_histogram(result.hist_mid);
    if (step + 1 == cfg.steps) {
      collect_histogram(result.hist_late);
      result.final_loss = loss.total;
    }
  }

  // Evaluation with and without NMS on held-out scenes.
  DetectionSet raw, filtered, suppressed;
  GroundTruthSet gts;
  std::vector<double> gaps, top1;
  int gap_defined = 0;
  for (const Scene& s : eval_scenes) {
    const CellOutputs out = forward(model, s);
    const std::vector<Detection> dets = detections_from(out, cfg.max_dets);
    raw.push_back(dets);
    filtered.push_back(score_filter(dets, cfg.eval_score_tau));
    suppressed.push_back(nms(filtered.back(), cfg.nms_iou, true));
    gts.push_back(s.objects);

    const ScoreGapReport gap_report =
        per_object_score_gap(dets, s.objects, cfg.gap_iou_floor, cfg.histogram_bins);
    for (const auto& g : gap_report.per_object_gaps) {
      if (g.has_value()) {
        gaps.push_back(*g);
        ++gap_defined;
      }
    }
    const std::vector<double> tops = top_scores(out);
    top1.push_back(*std::max_element(tops.begin(), tops.end()));
  }

  result.ap = 100.0 * evaluate_ap(filtered, gts, default_iou_thresholds(), cfg.max_dets);
  result.ap50 = 100.0 * evaluate_ap(filtered, gts, {0.5}, cfg.max_dets);
  result.ap_nms =
      100.0 * evaluate_ap(suppressed, gts, default_iou_thresholds(), cfg.max_dets);
  result.ap50_nms = 100.0 * evaluate_ap(suppressed, gts, {0.5}, cfg.max_dets);
  result.recall50 = recall_at(filtered, gts, 0.5, cfg.max_dets);
  result.recall50_nms = recall_at(suppressed, gts, 0.5, cfg.max_dets);
  result.mmr = evaluate_mmr(filtered, gts, cfg.max_dets);
  result.mmr_nms = evaluate_mmr(suppressed, gts, cfg.max_dets);
  result.redundancy = redundancy(raw, gts, cfg.redundancy_tau, 0.5);
  result.gap_defined = gap_defined;
  result.gap_mean =
      gaps.empty() ? 0.0 : std::accumulate(gaps.begin(), gaps.end(), 0.0) / gaps.size();
  result.top1_median = median(top1);

  if (final_model) *final_model = std::move(model);
  return result;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                std::vector<ToyModel>* final_models) {
  ExperimentReport report;
  report.regime = cfg.regime;
  report.per_seed.resize(cfg.seeds);
  std::vector<ToyModel> models(final_models ? cfg.seeds : 0);

  const int jobs = cfg.jobs > 0
                       ? cfg.jobs
                       : std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::future<void>> futures;
  std::atomic<int> next{0};
  for (int j = 0; j < std::min(jobs, cfg.seeds); ++j) {
    futures.push_back(std::async(std::launch::async, [&]() {
      for (int i = next.fetch_add(1); i < cfg.seeds; i = next.fetch_add(1)) {
        report.per_seed[i] =
            run_experiment_seed(cfg, i, final_models ? &models[i] : nullptr);
      }
    }));
  }
  for (auto& f : futures) f.get();

  // Ordered merge: sort by seed, models follow the same permutation.
  std::vector<int> order(cfg.seeds);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return report.per_seed[a].seed < report.per_seed[b].seed;
  });
  std::vector<SeedResult> sorted;
  sorted.reserve(cfg.seeds);
  for (int i : order) sorted.push_back(std::move(report.per_seed[i]));
  report.per_seed = std::move(sorted);
  if (final_models) {
    final_models->clear();
    for (int i : order) final_models->push_back(std::move(models[i]));
  }

  std::vector<double> gaps, top1s;
  for (const SeedResult& s : report.per_seed) {
    report.ap_mean += s.ap;
    report.ap_nms_mean += s.ap_nms;
    report.delta_mean += s.ap_nms - s.ap;
    report.redundancy_mean += s.redundancy;
    gaps.push_back(s.gap_mean);
    top1s.push_back(s.top1_median);
  }
  const double n = std::max<size_t>(1, report.per_seed.size());
  report.ap_mean /= n;
  report.ap_nms_mean /= n;
  report.delta_mean /= n;
  report.redundancy_mean /= n;
  report.gap_median = median(gaps);
  report.top1_median_median = median(top1s);
  return report;
}

}  // namespace detlab::toy
