#include "dagdist/projection.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <string>
#include <unordered_map>

#include "dagdist/parallel.hpp"

namespace dagdist {

namespace {

// Slack for the "already feasible" short circuit, relative to the budget so
// huge radii do not lose the bitwise-identity property to rounding.
double feasibility_slack(double lambda) { return 1e-12 * (1.0 + lambda); }

void check_budget(const SparsityBudget& budget) {
  if (std::isnan(budget.lambda) || budget.lambda < 0.0)
    throw std::invalid_argument("sparsity budget must satisfy lambda >= 0");
}

void check_schedule(const PathSchedule& s) {
  if (s.mu_initial <= 0.0 || s.decay <= 0.0 || s.decay >= 1.0 || s.stages < 1 ||
      s.inner_max_iters < 1 || s.inner_tolerance <= 0.0 || s.inner_step <= 0.0)
    throw std::invalid_argument("malformed path schedule");
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// One stage of penalized descent: min (mu/2)||wt - W||^2 + h(W). The step is
// halved whenever a trial iterate leaves the domain or increases the stage
// objective and regrows only after a run of clean accepts, so the search does
// not bounce off the same rejection level every iteration; W entering in the
// domain keeps every accepted iterate in it.
void inner_solve(Eigen::MatrixXd& w, const Eigen::MatrixXd& wt, double mu,
                 const PathSchedule& s, int stage) {
  double h = 0.0;
  Eigen::MatrixXd grad_h;
  if (!detail::acyclicity_value_gradient(w, h, grad_h))
    throw DivergedInnerSolve("warm start outside domain at stage " + std::to_string(stage));
  double f = 0.5 * mu * (w - wt).squaredNorm() + h;

  double eta = s.inner_step;
  int clean_accepts = 0;
  Eigen::MatrixXd g(w.rows(), w.cols()), trial(w.rows(), w.cols());
  Eigen::MatrixXd grad_trial(w.rows(), w.cols());
  for (int iter = 0; iter < s.inner_max_iters; ++iter) {
    g = mu * (w - wt) + grad_h;
    if (g.cwiseAbs().maxCoeff() < s.inner_tolerance) return;
    bool halved = false;
    for (;;) {
      trial = w - eta * g;
      double h_trial = 0.0;
      const bool in_domain = detail::acyclicity_value_gradient(trial, h_trial, grad_trial);
      if (in_domain) {
        const double f_trial = 0.5 * mu * (trial - wt).squaredNorm() + h_trial;
        if (f_trial <= f) {
          w.swap(trial);
          grad_h.swap(grad_trial);
          f = f_trial;
          if (halved) {
            clean_accepts = 0;
          } else if (++clean_accepts >= 3 && eta < s.inner_step) {
            eta = std::min(eta * 2.0, s.inner_step);
            clean_accepts = 0;
          }
          break;
        }
      }
      eta *= 0.5;
      halved = true;
      if (eta < 1e-16) {
        // the objective sits at its numerical floor: the stage is done
        if (in_domain) return;
        throw DivergedInnerSolve("backtracking exhausted at stage " + std::to_string(stage) +
                                 ", iteration " + std::to_string(iter));
      }
    }
  }
}

Eigen::MatrixXd acyclicity_project_dense(const Eigen::MatrixXd& wt, const PathSchedule& s) {
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(wt.rows(), wt.cols());
  double mu = s.mu_initial;
  for (int stage = 0; stage < s.stages; ++stage) {
    inner_solve(w, wt, mu, s, stage);
    mu *= s.decay;
  }
  return w;
}

// Sort-based l1-ball projection over the off-diagonal entries. Callers
// guarantee ||w||_1 exceeds the budget and lambda > 0.
Eigen::MatrixXd soft_threshold_to_budget(const Eigen::MatrixXd& w, double lambda) {
  const int p = static_cast<int>(w.rows());
  std::vector<double> mags;
  mags.reserve(static_cast<std::size_t>(p) * (p - 1));
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k)
      if (j != k) mags.push_back(std::abs(w(j, k)));
  std::sort(mags.begin(), mags.end(), std::greater<double>());

  double prefix = 0.0, theta = 0.0;
  int rank = 0;
  for (std::size_t i = 0; i < mags.size(); ++i) {
    const double candidate_prefix = prefix + mags[i];
    if (mags[i] > (candidate_prefix - lambda) / static_cast<double>(i + 1)) {
      prefix = candidate_prefix;
      rank = static_cast<int>(i + 1);
    } else {
      break;
    }
  }
  theta = (prefix - lambda) / static_cast<double>(rank);
  if (theta < 0.0) theta = 0.0;

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) {
      if (j == k) continue;
      const double shrunk = std::abs(w(j, k)) - theta;
      out(j, k) = shrunk > 0.0 ? sign_of(w(j, k)) * shrunk : 0.0;
    }
  return out;
}

Eigen::MatrixXd hard_threshold(const Eigen::MatrixXd& w, double threshold) {
  if (threshold < 0.0) throw std::invalid_argument("hard threshold must be >= 0");
  if (threshold == 0.0) return w;
  return (w.cwiseAbs().array() < threshold).select(0.0, w);
}

// Removes the smallest surviving magnitudes until the support is acyclic.
Eigen::MatrixXd escalate_until_acyclic(Eigen::MatrixXd w) {
  while (!detail::is_exactly_acyclic_dense(w)) {
    double smallest = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double a = std::abs(w(i));
      if (a > 0.0 && a < smallest) smallest = a;
    }
    w = (w.cwiseAbs().array() <= smallest).select(0.0, w);
  }
  return w;
}

std::vector<std::pair<int, int>> support_of(const Eigen::MatrixXd& w) {
  std::vector<std::pair<int, int>> support;
  for (int j = 0; j < w.rows(); ++j)
    for (int k = 0; k < w.cols(); ++k)
      if (j != k && w(j, k) != 0.0) support.emplace_back(j, k);
  return support;
}

// Topological order of `support`, taking the heaviest remaining sender first
// so the order tracks the input's dominant structure.
std::vector<int> seed_order(const Eigen::MatrixXd& support, const Eigen::MatrixXd& wt) {
  const int p = static_cast<int>(wt.rows());
  std::vector<int> indegree(p, 0);
  std::vector<char> placed(p, 0);
  std::vector<int> order;
  order.reserve(p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k)
      if (j != k && support(j, k) != 0.0) ++indegree[k];
  for (int step = 0; step < p; ++step) {
    int pick = -1;
    double best_mass = -1.0;
    for (int j = 0; j < p; ++j) {
      if (placed[j] || indegree[j] > 0) continue;
      double mass = 0.0;
      for (int k = 0; k < p; ++k)
        if (!placed[k] && k != j) mass += std::abs(wt(j, k));
      if (mass > best_mass) {
        best_mass = mass;
        pick = j;
      }
    }
    if (pick < 0)
      for (int j = 0; j < p && pick < 0; ++j)
        if (!placed[j]) pick = j;
    placed[pick] = 1;
    order.push_back(pick);
    for (int k = 0; k < p; ++k)
      if (support(pick, k) != 0.0 && !placed[k]) --indegree[k];
  }
  return order;
}

// Exact minimizer of (1/2)||wt - V||_F^2 over matrices supported on the
// upper triangle of `order` with ||V||_1 <= lambda.
Eigen::MatrixXd solve_for_order(const Eigen::MatrixXd& wt, const std::vector<int>& order,
                                const SparsityBudget& budget, bool* binding_out) {
  const int p = static_cast<int>(order.size());
  Eigen::MatrixXd masked = Eigen::MatrixXd::Zero(p, p);
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b) masked(order[a], order[b]) = wt(order[a], order[b]);
  const double total = masked.cwiseAbs().sum();
  const bool binding =
      !budget.unbounded() && total > budget.lambda + feasibility_slack(budget.lambda);
  if (binding_out) *binding_out = binding;
  if (!binding) return masked;
  if (budget.lambda == 0.0) return Eigen::MatrixXd::Zero(p, p);
  return soft_threshold_to_budget(masked, budget.lambda);
}

double order_objective(const Eigen::MatrixXd& wt, const std::vector<int>& order,
                       const SparsityBudget& budget) {
  return 0.5 * (wt - solve_for_order(wt, order, budget, nullptr)).squaredNorm();
}

// Insertion local search over topological orders, each candidate scored by
// the exact restricted solve above.
std::vector<int> refine_order(const Eigen::MatrixXd& wt, const SparsityBudget& budget,
                              std::vector<int> order) {
  const int p = static_cast<int>(order.size());
  // beyond this size the sweeps would dwarf the path solve itself
  if (p < 2 || p > 200 || budget.lambda == 0.0) return order;
  double best = order_objective(wt, order, budget);
  for (int sweep = 0; sweep < 60; ++sweep) {
    std::vector<int> winner;
    double winner_objective = best;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) {
        if (i == j) continue;
        std::vector<int> candidate = order;
        const int node = candidate[static_cast<std::size_t>(i)];
        candidate.erase(candidate.begin() + i);
        candidate.insert(candidate.begin() + j, node);
        const double objective = order_objective(wt, candidate, budget);
        if (objective < winner_objective - 1e-12 * (1.0 + best)) {
          winner_objective = objective;
          winner = std::move(candidate);
        }
      }
    if (winner.empty()) break;
    order = std::move(winner);
    best = winner_objective;
  }
  return order;
}

}  // namespace

PathSchedule PathSchedule::reference(int p) {
  PathSchedule s;
  s.inner_step = 1.0 / std::max(1, p);
  return s;
}

PathSchedule PathSchedule::nonlinear_reference(int p) {
  PathSchedule s;
  s.inner_step = 0.25 / std::max(1, p);
  return s;
}

PathSchedule PathSchedule::training(int p) {
  PathSchedule s;
  s.inner_step = 1.0 / std::max(1, p);
  s.inner_tolerance = 1e-3;
  s.inner_max_iters = 300;
  return s;
}

WeightedAdjacency acyclicity_project(const WeightedAdjacency& wt, const PathSchedule& schedule) {
  check_schedule(schedule);
  return WeightedAdjacency(acyclicity_project_dense(wt.matrix(), schedule));
}

WeightedAdjacency l1_project(const WeightedAdjacency& w, const SparsityBudget& budget) {
  check_budget(budget);
  if (budget.unbounded()) return w;
  const double total = w.l1_norm();
  if (total <= budget.lambda + feasibility_slack(budget.lambda)) return w;
  if (budget.lambda == 0.0) return WeightedAdjacency::zeros(w.dim());
  return WeightedAdjacency(soft_threshold_to_budget(w.matrix(), budget.lambda));
}

ProjectionResult project(const WeightedAdjacency& wt, const SparsityBudget& budget,
                         const PathSchedule& schedule, const ProjectOptions& options) {
  check_budget(budget);
  check_schedule(schedule);

  const WeightedAdjacency acyclic = acyclicity_project(wt, schedule);
  const WeightedAdjacency composed = l1_project(acyclic, budget);

  // The path solve fixes the branch; re-solving the restricted problem along
  // its topological order is exact and never worse than the composed image.
  const Eigen::MatrixXd skeleton =
      escalate_until_acyclic(hard_threshold(composed.matrix(), 0.02));
  std::vector<int> order = refine_order(wt.matrix(), budget,
                                        seed_order(skeleton, wt.matrix()));

  bool binding = false;
  Eigen::MatrixXd pre = solve_for_order(wt.matrix(), order, budget, &binding);
  Eigen::MatrixXd projected = hard_threshold(pre, options.hard_threshold);
  if (options.ensure_acyclic) projected = escalate_until_acyclic(std::move(projected));

  ProjectionResult result{WeightedAdjacency(std::move(projected)), std::move(pre), 0.0, {}, binding};
  result.objective = 0.5 * (wt.matrix() - result.projected.matrix()).squaredNorm();
  result.active_set = support_of(result.projected.matrix());
  return result;
}

std::vector<ProjectionResult> project_batch(const std::vector<WeightedAdjacency>& wts,
                                            const SparsityBudget& budget,
                                            const PathSchedule& schedule,
                                            const ProjectOptions& options) {
  std::vector<ProjectionResult> results;
  results.reserve(wts.size());
  for (const auto& wt : wts)
    results.push_back(ProjectionResult{WeightedAdjacency::zeros(wt.dim()), {}, 0.0, {}, false});
  parallel_for(wts.size(),
               [&](std::size_t i) { results[i] = project(wts[i], budget, schedule, options); });
  return results;
}

namespace {

// Acyclic off-diagonal support masks for small p, ascending bitmask order.
// Bit i covers the i-th off-diagonal position in row-major order.
const std::vector<std::uint32_t>& acyclic_masks(int p) {
  static std::unordered_map<int, std::vector<std::uint32_t>> cache;
  static std::mutex cache_mutex;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(p);
  if (it != cache.end()) return it->second;

  const int bits = p * (p - 1);
  std::vector<std::pair<int, int>> positions;
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k)
      if (j != k) positions.emplace_back(j, k);

  std::vector<std::uint32_t> masks;
  Eigen::MatrixXd support(p, p);
  for (std::uint32_t mask = 0; mask < (1u << bits); ++mask) {
    support.setZero();
    for (int i = 0; i < bits; ++i)
      if (mask & (1u << i)) support(positions[i].first, positions[i].second) = 1.0;
    if (detail::is_exactly_acyclic_dense(support)) masks.push_back(mask);
  }
  return cache.emplace(p, std::move(masks)).first->second;
}

// Independent l1-ball projection of a vector: bisection on the soft threshold
// instead of the sort rule used by l1_project.
std::vector<double> l1_ball_bisect(const std::vector<double>& v, double lambda) {
  std::vector<double> out(v.size(), 0.0);
  if (lambda == 0.0) return out;
  double total = 0.0, top = 0.0;
  for (double x : v) {
    total += std::abs(x);
    top = std::max(top, std::abs(x));
  }
  if (std::isinf(lambda) || total <= lambda) return v;

  double lo = 0.0, hi = top;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    double mass = 0.0;
    for (double x : v) mass += std::max(std::abs(x) - mid, 0.0);
    (mass > lambda ? lo : hi) = mid;
  }
  const double theta = 0.5 * (lo + hi);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double shrunk = std::abs(v[i]) - theta;
    out[i] = shrunk > 0.0 ? sign_of(v[i]) * shrunk : 0.0;
  }
  return out;
}

}  // namespace

ProjectionResult brute_force_project(const WeightedAdjacency& wt, const SparsityBudget& budget) {
  check_budget(budget);
  const int p = wt.dim();
  if (p > 5)
    throw TooLarge("exhaustive projection enumerates all DAG supports, limited to p <= 5");

  std::vector<std::pair<int, int>> positions;
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k)
      if (j != k) positions.emplace_back(j, k);
  const int bits = static_cast<int>(positions.size());

  const Eigen::MatrixXd& w = wt.matrix();
  double best_objective = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best = Eigen::MatrixXd::Zero(p, p);
  bool best_binding = false;

  std::vector<double> masked;
  for (const std::uint32_t mask : acyclic_masks(p)) {
    masked.clear();
    for (int i = 0; i < bits; ++i)
      masked.push_back(mask & (1u << i) ? w(positions[i].first, positions[i].second) : 0.0);
    const double mass =
        std::accumulate(masked.begin(), masked.end(), 0.0,
                        [](double acc, double x) { return acc + std::abs(x); });
    const std::vector<double> solved = l1_ball_bisect(masked, budget.lambda);

    // Fixed position order keeps exact ties exactly tied across masks, so the
    // strict comparison below implements the earliest-mask tie break.
    double objective = 0.0;
    for (int i = 0; i < bits; ++i) {
      const double diff = w(positions[i].first, positions[i].second) - solved[i];
      objective += diff * diff;
    }
    objective *= 0.5;

    if (objective < best_objective) {
      best_objective = objective;
      best.setZero();
      for (int i = 0; i < bits; ++i) best(positions[i].first, positions[i].second) = solved[i];
      best_binding = !budget.unbounded() && mass > budget.lambda + feasibility_slack(budget.lambda);
    }
  }

  ProjectionResult result{WeightedAdjacency(best), best, best_objective, {}, best_binding};
  result.active_set = support_of(result.projected.matrix());
  return result;
}

ProjectionJacobian::ProjectionJacobian(bool binding, Eigen::MatrixXd survivor_sign,
                                       Eigen::MatrixXd active_sign, int active_count)
    : binding_(binding),
      survivor_sign_(std::move(survivor_sign)),
      active_sign_(std::move(active_sign)),
      active_count_(active_count) {}

double ProjectionJacobian::coefficient(int j, int k, int q, int r) const {
  if (survivor_sign_(j, k) == 0.0) return 0.0;
  const double delta = (j == q && k == r) ? 1.0 : 0.0;
  if (!binding_) return delta;
  if (active_sign_(q, r) == 0.0) return 0.0;
  return delta - active_sign_(q, r) * active_sign_(j, k) / static_cast<double>(active_count_);
}

std::map<std::array<int, 4>, double> ProjectionJacobian::d_w_d_wtilde() const {
  std::map<std::array<int, 4>, double> entries;
  const int p = static_cast<int>(survivor_sign_.rows());
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) {
      if (survivor_sign_(j, k) == 0.0) continue;
      for (int q = 0; q < p; ++q)
        for (int r = 0; r < p; ++r) {
          const double c = coefficient(j, k, q, r);
          if (c != 0.0) entries[{j, k, q, r}] = c;
        }
    }
  return entries;
}

Eigen::MatrixXd ProjectionJacobian::d_w_d_lambda() const {
  if (!binding_) return Eigen::MatrixXd::Zero(survivor_sign_.rows(), survivor_sign_.cols());
  return survivor_sign_ / static_cast<double>(active_count_);
}

Eigen::MatrixXd ProjectionJacobian::pullback(const Eigen::MatrixXd& upstream) const {
  // Entries removed by the hard threshold pass no gradient.
  Eigen::MatrixXd masked = (survivor_sign_.array() == 0.0).select(0.0, upstream);
  if (!binding_) return masked;
  const double coupling = (masked.array() * active_sign_.array()).sum() /
                          static_cast<double>(active_count_);
  return masked - coupling * active_sign_;
}

ProjectionJacobian projection_jacobian(const ProjectionResult& result,
                                       const SparsityBudget& budget) {
  check_budget(budget);
  const Eigen::MatrixXd survivor_sign = result.projected.matrix().unaryExpr(&sign_of);
  Eigen::MatrixXd active_sign = result.pre_threshold.unaryExpr(&sign_of);
  const int active_count = static_cast<int>((active_sign.array() != 0.0).count());

  if (result.binding && active_count == 0)
    throw EmptyActiveSet("binding l1 constraint with an empty active set (lambda = 0)");
  if (!result.binding) active_sign = survivor_sign;  // only the survivors matter
  return ProjectionJacobian(result.binding, survivor_sign, active_sign, active_count);
}

}  // namespace dagdist
