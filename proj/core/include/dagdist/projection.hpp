#pragma once

#include <Eigen/Dense>
#include <array>
#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "dagdist/acyclicity.hpp"
#include "dagdist/adjacency.hpp"

namespace dagdist {

// Path-following schedule for the acyclicity projection: minimize
// (mu/2)||Wt - W||_F^2 + h(W) by plain gradient descent while mu decays
// geometrically, warm-starting each stage at the previous solution.
struct PathSchedule {
  double mu_initial = 1.0;
  double decay = 0.5;
  int stages = 10;
  int inner_max_iters = 5000;
  double inner_tolerance = 1e-6;  // stop when the gradient inf-norm falls below
  double inner_step = 0.1;        // gradient-descent step, halved on domain exit

  // Conservative defaults with the customary 1/p step.
  static PathSchedule reference(int p);
  // Same schedule with the smaller 0.25/p step used for network-induced inputs.
  static PathSchedule nonlinear_reference(int p);
  // Looser inner solve for reparameterized training loops, where projection
  // error far below the hard threshold is wasted work.
  static PathSchedule training(int p);
};

struct SparsityBudget {
  double lambda = std::numeric_limits<double>::infinity();  // >= 0, inf = unconstrained
  bool unbounded() const { return std::isinf(lambda); }
};

struct ProjectOptions {
  double hard_threshold = 0.1;  // entries with |w| < hard_threshold become exact zeros
  bool ensure_acyclic = true;   // raise the threshold until the support is acyclic
};

struct ProjectionResult {
  WeightedAdjacency projected;
  Eigen::MatrixXd pre_threshold;  // after the l1 step, before hard thresholding
  double objective = 0.0;         // 0.5 ||input - projected||_F^2
  std::vector<std::pair<int, int>> active_set;  // nonzero support of projected, row-major
  bool binding = false;           // l1 constraint active at the solution
};

// Derivatives of the composed projection at a solution with a stable support.
// In the binding case the l1 multiplier couples every active entry:
//   d w_jk / d wt_qr = delta - sign(w_qr) sign(w_jk) / |A|   on A x A,
//   d w_jk / d lambda = sign(w_jk) / |A|,
// with A the active set of the pre-threshold matrix; rows for entries removed
// by the hard threshold are zero. Non-binding: identity on the surviving
// support, zero elsewhere.
class ProjectionJacobian {
 public:
  ProjectionJacobian(bool binding, Eigen::MatrixXd survivor_sign, Eigen::MatrixXd active_sign,
                     int active_count);

  bool binding() const { return binding_; }
  int active_count() const { return active_count_; }

  double coefficient(int j, int k, int q, int r) const;
  // Nonzero entries keyed by (j, k, q, r).
  std::map<std::array<int, 4>, double> d_w_d_wtilde() const;
  Eigen::MatrixXd d_w_d_lambda() const;

  // J^T g: pulls a gradient in the projected matrix back to the pre-image.
  Eigen::MatrixXd pullback(const Eigen::MatrixXd& upstream) const;

 private:
  bool binding_;
  Eigen::MatrixXd survivor_sign_;  // sign(projected), zero off its support
  Eigen::MatrixXd active_sign_;    // sign(pre_threshold), zero off the active set
  int active_count_;
};

// Nearest matrix (Frobenius) whose support is acyclic in the mu -> 0 limit.
// Starts at W = 0; iterates never leave {rho(W∘W) < 1}.
WeightedAdjacency acyclicity_project(const WeightedAdjacency& wt, const PathSchedule& schedule);

// Euclidean projection onto the l1 ball of radius budget.lambda over the
// off-diagonal entries (sort-based soft threshold). Feasible inputs are
// returned unchanged, which also makes the map idempotent.
WeightedAdjacency l1_project(const WeightedAdjacency& w, const SparsityBudget& budget);

// Full projection: acyclicity step, l1 step, then hard thresholding.
ProjectionResult project(const WeightedAdjacency& wt, const SparsityBudget& budget,
                         const PathSchedule& schedule, const ProjectOptions& options = {});

// Projects each matrix independently; results are slot-for-slot identical to
// the sequential loop regardless of worker count.
std::vector<ProjectionResult> project_batch(const std::vector<WeightedAdjacency>& wts,
                                            const SparsityBudget& budget,
                                            const PathSchedule& schedule,
                                            const ProjectOptions& options = {});

// Exhaustive oracle for p <= 5: enumerates every acyclic support, solves the
// support-restricted l1-constrained least squares by bisection, and returns
// the best. Ties keep the earliest support in the documented enumeration
// order (ascending row-major bitmask), so the empty graph wins at lambda = 0.
// Deliberately shares no code with the path-following solver.
ProjectionResult brute_force_project(const WeightedAdjacency& wt, const SparsityBudget& budget);

ProjectionJacobian projection_jacobian(const ProjectionResult& result,
                                       const SparsityBudget& budget);

}  // namespace dagdist
