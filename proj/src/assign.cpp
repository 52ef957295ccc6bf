#include "detlab/assign.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace detlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double column_theta(const CostMatrix& cm, int object, const ThetaRule& rule) {
  if (rule.kind == ThetaRule::Kind::constant) return rule.value;
  std::vector<double> col(cm.n_samples);
  for (int i = 0; i < cm.n_samples; ++i) col[i] = cm.at(i, object);
  std::sort(col.begin(), col.end());
  const double q = std::clamp(rule.value, 0.0, 1.0);
  const double pos = q * (cm.n_samples - 1);
  const int lo = static_cast<int>(pos);
  const int hi = std::min(lo + 1, cm.n_samples - 1);
  const double frac = pos - lo;
  return col[lo] + frac * (col[hi] - col[lo]);
}

double matched_total(const CostMatrix& cm, const std::vector<int>& object_to_sample) {
  double total = 0.0;
  for (int j = 0; j < cm.n_objects; ++j) total += cm.at(object_to_sample[j], j);
  return total;
}

// Shortest augmenting path assignment over a row-major cost grid with
// n_rows <= n_cols. Returns row -> col and fills the dual potentials, so
// callers can recover the tight subgraph. Column scan order is ascending,
// which makes the result deterministic.
struct RectSolver {
  int n_rows = 0;
  int n_cols = 0;
  const double* cost = nullptr;  // n_rows * n_cols

  double entry(int r, int c) const { return cost[static_cast<size_t>(r) * n_cols + c]; }

  // 1-indexed internals, column 0 is the virtual root.
  std::vector<int> solve(std::vector<double>* row_duals = nullptr,
                         std::vector<double>* col_duals = nullptr) const {
    const int n = n_rows, m = n_cols;
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1, 0.0);
    std::vector<int> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1, 0);
    for (int i = 1; i <= n; ++i) {
      p[0] = i;
      int j0 = 0;
      std::fill(minv.begin(), minv.end(), kInf);
      std::fill(used.begin(), used.end(), 0);
      do {
        used[j0] = 1;
        const int i0 = p[j0];
        double delta = kInf;
        int j1 = -1;
        for (int j = 1; j <= m; ++j) {
          if (used[j]) continue;
          const double cur = entry(i0 - 1, j - 1) - u[i0] - v[j];
          if (cur < minv[j]) {
            minv[j] = cur;
            way[j] = j0;
          }
          if (minv[j] < delta) {
            delta = minv[j];
            j1 = j;
          }
        }
        for (int j = 0; j <= m; ++j) {
          if (used[j]) {
            u[p[j]] += delta;
            v[j] -= delta;
          } else {
            minv[j] -= delta;
          }
        }
        j0 = j1;
      } while (p[j0] != 0);
      do {
        const int j1 = way[j0];
        p[j0] = p[j1];
        j0 = j1;
      } while (j0 != 0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= m; ++j) {
      if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
    }
    if (row_duals) row_duals->assign(u.begin() + 1, u.end());
    if (col_duals) col_duals->assign(v.begin() + 1, v.end());
    return row_to_col;
  }
};

// Resolve ties to the lexicographically smallest optimal assignment.
// Candidate columns are restricted to the tight subgraph of the solved
// duals (any optimal assignment lives there); each candidate is verified
// exactly by re-solving the remaining subproblem. In the common no-tie case
// every row has a single tight column and this reduces to a cheap scan.
std::vector<int> lexicographic_refine(const RectSolver& solver,
                                      const std::vector<int>& solved,
                                      const std::vector<double>& u,
                                      const std::vector<double>& v) {
  const int n = solver.n_rows, m = solver.n_cols;

  double scale = 1.0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c) scale = std::max(scale, std::abs(solver.entry(r, c)));
  const double tight_tol = 1e-9 * scale;

  std::vector<std::vector<int>> tight(n);
  bool any_tie = false;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < m; ++c) {
      if (solver.entry(r, c) - u[r] - v[c] <= tight_tol) tight[r].push_back(c);
    }
    if (tight[r].size() > 1) any_tie = true;
  }
  if (!any_tie) return solved;

  double best_total = 0.0;
  for (int r = 0; r < n; ++r) best_total += solver.entry(r, solved[r]);

  std::vector<int> result(n, -1);
  std::vector<char> col_used(m, 0);
  double prefix = 0.0;
  for (int r = 0; r < n; ++r) {
    bool placed = false;
    for (int c : tight[r]) {
      if (col_used[c]) continue;
      // Exact check: can the remaining rows still reach the optimum?
      double completion = 0.0;
      bool feasible = true;
      if (r + 1 < n) {
        std::vector<double> sub;
        std::vector<int> col_map;
        for (int cc = 0; cc < m; ++cc) {
          if (!col_used[cc] && cc != c) col_map.push_back(cc);
        }
        if (static_cast<int>(col_map.size()) < n - r - 1) {
          feasible = false;
        } else {
          sub.reserve(static_cast<size_t>(n - r - 1) * col_map.size());
          for (int rr = r + 1; rr < n; ++rr)
            for (int cc : col_map) sub.push_back(solver.entry(rr, cc));
          RectSolver subsolver{n - r - 1, static_cast<int>(col_map.size()), sub.data()};
          const std::vector<int> sub_assign = subsolver.solve();
          for (int rr = 0; rr < n - r - 1; ++rr)
            completion += subsolver.entry(rr, sub_assign[rr]);
        }
      }
      if (feasible &&
          prefix + solver.entry(r, c) + completion <= best_total + tight_tol) {
        result[r] = c;
        col_used[c] = 1;
        prefix += solver.entry(r, c);
        placed = true;
        break;
      }
    }
    if (!placed) return solved;  // numerical fallback, keep the solver result
  }

  // Never return something worse than the plain solve.
  double refined_total = 0.0;
  for (int r = 0; r < n; ++r) refined_total += solver.entry(r, result[r]);
  if (refined_total > best_total) return solved;
  return result;
}

}  // namespace

Assignment assign_one_to_many(const CostMatrix& cm, const AssignConfig& cfg) {
  Assignment a;
  a.mode = AssignMode::one_to_many;
  a.positives.resize(cm.n_objects);
  for (int j = 0; j < cm.n_objects; ++j) {
    const double theta = column_theta(cm, j, cfg.theta);
    for (int i = 0; i < cm.n_samples; ++i) {
      if (cm.at(i, j) < theta) {
        a.positives[j].push_back(i);
        a.total_cost += cm.at(i, j);
      }
    }
    if (a.positives[j].empty()) {
      std::cerr << "warning: object " << j << " has no sample below theta=" << theta
                << "\n";
    }
  }
  return a;
}

Assignment assign_mincost(const CostMatrix& cm) {
  if (cm.n_samples < 1) throw std::invalid_argument("mincost needs at least one sample");
  Assignment a;
  a.mode = AssignMode::one_to_one;
  a.positives.resize(cm.n_objects);
  std::vector<int> chosen(cm.n_objects, -1);
  for (int j = 0; j < cm.n_objects; ++j) {
    int best = 0;
    for (int i = 1; i < cm.n_samples; ++i) {
      if (cm.at(i, j) < cm.at(best, j)) best = i;
    }
    chosen[j] = best;
    a.positives[j] = {best};
    a.total_cost += cm.at(best, j);
  }
  std::vector<int> sorted = chosen;
  std::sort(sorted.begin(), sorted.end());
  a.has_conflict = std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
  return a;
}

Assignment assign_bipartite(const CostMatrix& cm) {
  if (cm.n_samples < cm.n_objects) {
    throw std::invalid_argument("bipartite matching needs n_samples >= n_objects");
  }
  Assignment a;
  a.mode = AssignMode::one_to_one;
  a.positives.resize(cm.n_objects);
  if (cm.n_objects == 0) return a;

  // Solve with objects as rows: cost(j, i) = cm.at(i, j).
  std::vector<double> grid(static_cast<size_t>(cm.n_objects) * cm.n_samples);
  for (int j = 0; j < cm.n_objects; ++j)
    for (int i = 0; i < cm.n_samples; ++i)
      grid[static_cast<size_t>(j) * cm.n_samples + i] = cm.at(i, j);

  RectSolver solver{cm.n_objects, cm.n_samples, grid.data()};
  std::vector<double> u, v;
  std::vector<int> object_to_sample = solver.solve(&u, &v);
  object_to_sample = lexicographic_refine(solver, object_to_sample, u, v);

  for (int j = 0; j < cm.n_objects; ++j) a.positives[j] = {object_to_sample[j]};
  a.total_cost = matched_total(cm, object_to_sample);
  return a;
}

Assignment brute_force_matching(const CostMatrix& cm) {
  if (cm.n_objects > 8) {
    throw std::invalid_argument("brute-force matching is limited to 8 objects");
  }
  if (cm.n_samples < cm.n_objects) {
    throw std::invalid_argument("brute-force matching needs n_samples >= n_objects");
  }
  Assignment a;
  a.mode = AssignMode::one_to_one;
  a.positives.resize(cm.n_objects);
  if (cm.n_objects == 0) return a;

  std::vector<int> current(cm.n_objects, -1), best;
  std::vector<char> used(cm.n_samples, 0);
  double best_total = kInf;

  // Depth-first over objects with ascending sample indices: the first
  // optimum found is the lexicographically smallest one.
  auto recurse = [&](auto&& self, int j, double running) -> void {
    if (j == cm.n_objects) {
      if (running < best_total) {
        best_total = running;
        best = current;
      }
      return;
    }
    for (int i = 0; i < cm.n_samples; ++i) {
      if (used[i]) continue;
      used[i] = 1;
      current[j] = i;
      self(self, j + 1, running + cm.at(i, j));
      used[i] = 0;
    }
  };
  recurse(recurse, 0, 0.0);

  for (int j = 0; j < cm.n_objects; ++j) a.positives[j] = {best[j]};
  a.total_cost = matched_total(cm, best);
  return a;
}

Assignment run_assignment(const CostMatrix& cm, const AssignConfig& cfg) {
  switch (cfg.strategy) {
    case AssignStrategy::threshold:
      return assign_one_to_many(cm, cfg);
    case AssignStrategy::mincost:
      return assign_mincost(cm);
    case AssignStrategy::bipartite:
      return assign_bipartite(cm);
  }
  throw std::logic_error("unknown assignment strategy");
}

}  // namespace detlab
