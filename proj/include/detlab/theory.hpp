#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "detlab/rng.hpp"

namespace detlab::theory {

// Instance points live in the unit ball of R^d; the classifier operates on
// the augmented vector [x, 1] so the bias rides along as the last weight.
struct SampleSet {
  std::vector<std::vector<double>> points;  // n x d, unaugmented

  int dim() const { return points.empty() ? 0 : static_cast<int>(points[0].size()); }
  int size() const { return static_cast<int>(points.size()); }

  // Validates norms <= 1, n >= 2, equal dims, distinct points.
  static SampleSet validated(std::vector<std::vector<double>> pts);
  static SampleSet random(int n, int d, std::mt19937_64& rng);
};

// Separating classifier certificate for the current one-to-one labels:
// w* = [w_hat, gamma] classifies every sample with margin >= delta.
struct Certificate {
  double gamma = 0.0;
  double delta = 0.0;
  double norm = 1.0;  // ||[w_hat, gamma]||
  int first = -1;     // argmax index
  int second = -1;    // runner-up index
};

struct TraceEntry {
  int step = 0;
  double eta = 0.0;
  std::optional<double> gamma;  // nullopt when the top-2 scores tie
  std::optional<double> delta;
  double cert_norm = 1.0;
  int argmax_index = -1;
  int update_index = -1;
  double violation = 0.0;  // -y * w^T x at the updated sample
  std::optional<bool> stepsize_condition;  // needs the next step's gamma
  double w_norm_after = 0.0;
};

struct EtaPolicy {
  enum class Kind {
    constant,
    // min(base, 2*violation/||x||^2): keeps ||w||^2 growth within eta^2 per
    // update, matching the norm bound the convergence analysis relies on.
    capped
  };
  Kind kind = Kind::constant;
  double base = 1.0;
};

enum class LabelRule { one_to_one, fixed_positive };

struct PerceptronState {
  std::vector<double> w;   // [w_hat, b], size d+1
  std::vector<double> w0;  // initial classifier
  std::vector<double> w1;  // after the first update (empty before it)
  int updates = 0;
  std::vector<TraceEntry> trace;
};

// +1 at the argmax of w^T [x, 1] (lowest index on ties), -1 elsewhere.
std::vector<int> assign_labels_one_to_one(const std::vector<double>& w,
                                          const SampleSet& samples);

std::vector<int> assign_labels_fixed(const SampleSet& samples, int positive_index);

// gamma = -w_hat^T (x1 + x2) / 2, delta = w_hat^T (x1 - x2) / 2 for the top-2
// samples under w. nullopt when the top-2 scores tie (delta would be 0).
std::optional<Certificate> margin_certificate(const std::vector<double>& w,
                                              const SampleSet& samples);

// Margin of [w_hat, gamma] over the labelled augmented samples (min y w*^T x).
double certificate_margin(const std::vector<double>& w, double gamma,
                          const SampleSet& samples, const std::vector<int>& labels);

bool is_converged(const std::vector<double>& w, const SampleSet& samples,
                  LabelRule rule = LabelRule::one_to_one, int fixed_index = 0);

// One update on the worst-violating misclassified sample (lowest index on
// ties). Throws if called at convergence.
void perceptron_step(PerceptronState& state, const SampleSet& samples,
                     const EtaPolicy& eta, LabelRule rule = LabelRule::one_to_one,
                     int fixed_index = 0);

struct RunResult {
  PerceptronState state;
  bool converged = false;
};

RunResult run_to_convergence(const SampleSet& samples, const EtaPolicy& eta,
                             int max_steps, std::vector<double> w0,
                             LabelRule rule = LabelRule::one_to_one,
                             int fixed_index = 0);

std::vector<double> random_unit_weights(int dim_augmented, std::mt19937_64& rng);

struct BoundReport {
  bool evaluable = false;
  std::string reason;
  double bound = 0.0;
  double delta_min = 0.0;  // over normalized certificates
  double eta_min = 0.0;
  double eta_max = 0.0;
  bool all_conditions = false;  // every recorded stepsize condition holds
};

// Step bound from the run trace, with certificates normalized to unit length.
// Not evaluable when any certificate is undefined or no update happened.
BoundReport theorem_bound(const PerceptronState& state);

// The bound value from already-extracted scalars; exposed for direct checks
// of the formula's limiting behaviour.
double bound_formula(double eta_max, double eta_min, double delta_min,
                     double w1_dot_w0star, double w0_norm);

}  // namespace detlab::theory
