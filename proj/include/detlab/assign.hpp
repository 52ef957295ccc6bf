#pragma once

#include <vector>

#include "detlab/costs.hpp"

namespace detlab {

enum class AssignMode { one_to_many, one_to_one };
enum class AssignStrategy { threshold, mincost, bipartite };

// Per-object cost threshold rule: a constant, or a quantile of the
// object's cost column (linear interpolation between order statistics).
struct ThetaRule {
  enum class Kind { constant, quantile };
  Kind kind = Kind::constant;
  double value = 0.5;
};

struct AssignConfig {
  AssignStrategy strategy = AssignStrategy::bipartite;
  ThetaRule theta;
};

struct Assignment {
  AssignMode mode = AssignMode::one_to_one;
  // positives[j] lists the positive sample indices of object j, ascending.
  std::vector<std::vector<int>> positives;
  // mincost only: two objects picked the same sample.
  bool has_conflict = false;
  // Sum of matched costs (one-to-one) or of all positive pairs (one-to-many),
  // accumulated in object order.
  double total_cost = 0.0;
};

// All samples below theta(j), per object. Empty columns are permitted and
// reported on stderr.
Assignment assign_one_to_many(const CostMatrix& cm, const AssignConfig& cfg);

// Independent per-object argmin; objects may share a sample (flagged).
Assignment assign_mincost(const CostMatrix& cm);

// Minimum-total-cost injective matching objects -> samples. Requires
// n_samples >= n_objects. Ties resolve to the lexicographically smallest
// optimal assignment (object 0 gets the lowest feasible sample index, then
// object 1, ...).
Assignment assign_bipartite(const CostMatrix& cm);

// Exhaustive-permutation optimum; n_objects <= 8. Returns the
// lexicographically smallest optimal assignment.
Assignment brute_force_matching(const CostMatrix& cm);

Assignment run_assignment(const CostMatrix& cm, const AssignConfig& cfg);

}  // namespace detlab
