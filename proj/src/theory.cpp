#include "detlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace detlab::theory {

namespace {

double dot_hat(const std::vector<double>& w, const std::vector<double>& x) {
  double s = 0.0;
  for (size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
  return s;
}

// w^T [x, 1]
double score(const std::vector<double>& w, const std::vector<double>& x) {
  return dot_hat(w, x) + w.back();
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

double hat_norm_sq(const std::vector<double>& x) {
  double s = 0.0;
  for (double a : x) s += a * a;
  return s;
}

int argmax_score(const std::vector<double>& w, const SampleSet& samples) {
  int best = 0;
  for (int i = 1; i < samples.size(); ++i) {
    if (score(w, samples.points[i]) > score(w, samples.points[best])) best = i;
  }
  return best;
}

}  // namespace

SampleSet SampleSet::validated(std::vector<std::vector<double>> pts) {
  if (pts.size() < 2) throw std::invalid_argument("sample set needs n >= 2");
  const size_t d = pts[0].size();
  for (size_t i = 0; i < pts.size(); ++i) {
    if (pts[i].size() != d) throw std::invalid_argument("inconsistent dimensions");
    if (norm(pts[i]) > 1.0 + 1e-12) {
      throw std::invalid_argument("sample outside the unit ball");
    }
    for (size_t j = i + 1; j < pts.size(); ++j) {
      if (pts[i] == pts[j]) throw std::invalid_argument("duplicate sample points");
    }
  }
  SampleSet s;
  s.points = std::move(pts);
  return s;
}

SampleSet SampleSet::random(int n, int d, std::mt19937_64& rng) {
  std::vector<std::vector<double>> pts;
  pts.reserve(n);
  while (static_cast<int>(pts.size()) < n) {
    std::vector<double> p(d);
    for (double& c : p) c = normal(rng);
    const double len = norm(p);
    if (len < 1e-9) continue;
    // Uniform direction, radius biased toward the shell but inside the ball.
    const double r = std::pow(uniform01(rng), 1.0 / d);
    for (double& c : p) c *= r / len;
    pts.push_back(std::move(p));
  }
  return validated(std::move(pts));
}

std::vector<int> assign_labels_one_to_one(const std::vector<double>& w,
                                          const SampleSet& samples) {
  std::vector<int> labels(samples.size(), -1);
  labels[argmax_score(w, samples)] = +1;
  return labels;
}

std::vector<int> assign_labels_fixed(const SampleSet& samples, int positive_index) {
  if (positive_index < 0 || positive_index >= samples.size()) {
    throw std::invalid_argument("fixed positive index out of range");
  }
  std::vector<int> labels(samples.size(), -1);
  labels[positive_index] = +1;
  return labels;
}

std::optional<Certificate> margin_certificate(const std::vector<double>& w,
                                              const SampleSet& samples) {
  const int first = argmax_score(w, samples);
  int second = first == 0 ? 1 : 0;
  for (int i = 0; i < samples.size(); ++i) {
    if (i == first) continue;
    if (score(w, samples.points[i]) > score(w, samples.points[second])) second = i;
  }
  // Scores share the +b term, so the hat parts decide the ordering too.
  const double s1 = dot_hat(w, samples.points[first]);
  const double s2 = dot_hat(w, samples.points[second]);
  if (!(s1 > s2)) return std::nullopt;  // tie: no positive margin exists

  Certificate c;
  c.gamma = -0.5 * (s1 + s2);
  c.delta = 0.5 * (s1 - s2);
  c.first = first;
  c.second = second;
  double n = 0.0;
  for (size_t i = 0; i + 1 < w.size(); ++i) n += w[i] * w[i];
  c.norm = std::sqrt(n + c.gamma * c.gamma);
  return c;
}

double certificate_margin(const std::vector<double>& w, double gamma,
                          const SampleSet& samples, const std::vector<int>& labels) {
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples.size(); ++i) {
    const double s = dot_hat(w, samples.points[i]) + gamma;
    worst = std::min(worst, labels[i] * s);
  }
  return worst;
}

bool is_converged(const std::vector<double>& w, const SampleSet& samples,
                  LabelRule rule, int fixed_index) {
  const std::vector<int> labels = rule == LabelRule::one_to_one
                                      ? assign_labels_one_to_one(w, samples)
                                      : assign_labels_fixed(samples, fixed_index);
  for (int i = 0; i < samples.size(); ++i) {
    const double s = score(w, samples.points[i]);
    if (labels[i] > 0 && !(s > 0.0)) return false;
    if (labels[i] < 0 && s > 0.0) return false;
  }
  return true;
}

void perceptron_step(PerceptronState& state, const SampleSet& samples,
                     const EtaPolicy& eta, LabelRule rule, int fixed_index) {
  const std::vector<int> labels = rule == LabelRule::one_to_one
                                      ? assign_labels_one_to_one(state.w, samples)
                                      : assign_labels_fixed(samples, fixed_index);

  // Worst violation first; a positive sample is wrong unless strictly
  // positive, a negative one unless nonpositive.
  int pick = -1;
  double worst = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples.size(); ++i) {
    const double s = score(state.w, samples.points[i]);
    const bool wrong = labels[i] > 0 ? !(s > 0.0) : s > 0.0;
    if (!wrong) continue;
    const double violation = -labels[i] * s;
    if (violation > worst) {
      worst = violation;
      pick = i;
    }
  }
  if (pick < 0) throw std::logic_error("perceptron_step called at convergence");

  const std::vector<double>& x = samples.points[pick];
  const int y = labels[pick];
  const double xsq = hat_norm_sq(x);

  double step = eta.base;
  if (eta.kind == EtaPolicy::Kind::capped && xsq > 0.0 && worst > 0.0) {
    step = std::min(eta.base, 2.0 * worst / xsq);
  }

  TraceEntry entry;
  entry.step = state.updates;
  entry.eta = step;
  const std::optional<Certificate> cert = margin_certificate(state.w, samples);
  if (cert) {
    entry.gamma = cert->gamma;
    entry.delta = cert->delta;
    entry.cert_norm = cert->norm;
  }
  entry.argmax_index =
      rule == LabelRule::one_to_one ? argmax_score(state.w, samples) : fixed_index;
  entry.update_index = pick;
  entry.violation = worst;

  const double b_before = state.w.back();
  for (size_t i = 0; i + 1 < state.w.size(); ++i) state.w[i] += step * y * x[i];
  state.w.back() += step * y;  // augmented coordinate is 1
  entry.w_norm_after = norm(state.w);

  // Post-hoc stepsize condition from the convergence analysis:
  // ||x||^2 eta^2 + y (gamma' - 2 gamma) eta + b (gamma' - gamma) > 0,
  // with gamma' taken from the post-update classifier.
  const std::optional<Certificate> next_cert = margin_certificate(state.w, samples);
  if (cert && next_cert) {
    const double g = cert->gamma, gn = next_cert->gamma;
    const double lhs = xsq * step * step + y * (gn - 2.0 * g) * step +
                       b_before * (gn - g);
    entry.stepsize_condition = lhs > 0.0;
  }

  ++state.updates;
  if (state.updates == 1) state.w1 = state.w;
  state.trace.push_back(std::move(entry));
}

RunResult run_to_convergence(const SampleSet& samples, const EtaPolicy& eta,
                             int max_steps, std::vector<double> w0, LabelRule rule,
                             int fixed_index) {
  if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (static_cast<int>(w0.size()) != samples.dim() + 1) {
    throw std::invalid_argument("w0 must have dimension d + 1");
  }
  RunResult r;
  r.state.w = std::move(w0);
  r.state.w0 = r.state.w;
  for (int step = 0; step < max_steps; ++step) {
    if (is_converged(r.state.w, samples, rule, fixed_index)) {
      r.converged = true;
      return r;
    }
    perceptron_step(r.state, samples, eta, rule, fixed_index);
  }
  r.converged = is_converged(r.state.w, samples, rule, fixed_index);
  return r;
}

std::vector<double> random_unit_weights(int dim_augmented, std::mt19937_64& rng) {
  std::vector<double> w(dim_augmented);
  double len = 0.0;
  do {
    for (double& c : w) c = normal(rng);
    len = norm(w);
  } while (len < 1e-9);
  for (double& c : w) c /= len;
  return w;
}

double bound_formula(double eta_max, double eta_min, double delta_min,
                     double w1_dot_w0star, double w0_norm) {
  const double numerator =
      eta_max * eta_max -
      2.0 * eta_min * delta_min * (w1_dot_w0star - w0_norm - eta_max);
  return numerator / (2.0 * eta_min * eta_min * delta_min * delta_min);
}

BoundReport theorem_bound(const PerceptronState& state) {
  BoundReport r;
  if (state.updates == 0) {
    r.reason = "no updates recorded";
    return r;
  }
  double eta_min = std::numeric_limits<double>::infinity();
  double eta_max = 0.0;
  double delta_min = std::numeric_limits<double>::infinity();
  r.all_conditions = true;
  for (const TraceEntry& e : state.trace) {
    if (!e.gamma.has_value()) {
      r.reason = "undefined certificate at step " + std::to_string(e.step);
      return r;
    }
    eta_max = std::max(eta_max, e.eta);
    if (e.step >= 1 || state.updates == 1) {
      eta_min = std::min(eta_min, e.eta);
      delta_min = std::min(delta_min, *e.delta / e.cert_norm);
    }
    if (!e.stepsize_condition.has_value() || !*e.stepsize_condition) {
      r.all_conditions = false;
    }
  }

  // w0* = [w0_hat, gamma_0], normalized to unit length.
  const TraceEntry& first = state.trace.front();
  double w1_dot = 0.0;
  for (size_t i = 0; i + 1 < state.w1.size(); ++i) w1_dot += state.w1[i] * state.w0[i];
  w1_dot += state.w1.back() * first.gamma.value();
  w1_dot /= first.cert_norm;

  r.evaluable = true;
  r.eta_min = eta_min;
  r.eta_max = eta_max;
  r.delta_min = delta_min;
  r.bound = bound_formula(eta_max, eta_min, delta_min, w1_dot, norm(state.w0));
  return r;
}

}  // namespace detlab::theory
