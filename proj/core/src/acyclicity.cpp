#include "dagdist/acyclicity.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace dagdist {
namespace detail {

namespace {
// det(I - W∘W) <= 1 whenever rho(W∘W) < 1 (the trace of every power of the
// nonnegative matrix W∘W is nonnegative), so a computed h below this cutoff
// certifies the input is outside the domain rather than rounding noise.
constexpr double kNegativeTolerance = 1e-8;
}  // namespace

double log_det_gram_complement(const Eigen::MatrixXd& w) {
  const Eigen::Index p = w.rows();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p) - w.cwiseProduct(w);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);

  // Accumulate log|u_ii| with explicit sign tracking so determinants near the
  // underflow range are still usable.
  double log_det = 0.0;
  int sign = lu.permutationP().determinant() > 0 ? 1 : -1;
  for (Eigen::Index i = 0; i < p; ++i) {
    const double u = lu.matrixLU()(i, i);
    if (u == 0.0 || !std::isfinite(u)) return std::numeric_limits<double>::quiet_NaN();
    if (u < 0.0) sign = -sign;
    log_det += std::log(std::abs(u));
  }
  if (sign <= 0) return std::numeric_limits<double>::quiet_NaN();
  return log_det;
}

bool acyclicity_value_gradient(const Eigen::MatrixXd& w, double& h, Eigen::MatrixXd& grad) {
  const Eigen::Index p = w.rows();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p) - w.cwiseProduct(w);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(m);

  double log_det = 0.0;
  int sign = lu.permutationP().determinant() > 0 ? 1 : -1;
  for (Eigen::Index i = 0; i < p; ++i) {
    const double u = lu.matrixLU()(i, i);
    if (u == 0.0 || !std::isfinite(u)) return false;
    if (u < 0.0) sign = -sign;
    log_det += std::log(std::abs(u));
  }
  if (sign <= 0) return false;
  h = -log_det;
  if (h < -kNegativeTolerance) return false;
  if (h < 0.0) h = 0.0;

  grad.noalias() = lu.inverse().transpose();
  grad = 2.0 * grad.cwiseProduct(w);
  return grad.allFinite();
}

bool is_exactly_acyclic_dense(const Eigen::MatrixXd& w) {
  return !topological_order(w).empty();
}

std::vector<int> topological_order(const Eigen::MatrixXd& w) {
  const int p = static_cast<int>(w.rows());
  std::vector<int> indegree(p, 0);
  for (int k = 0; k < p; ++k)
    for (int j = 0; j < p; ++j)
      if (j != k && w(j, k) != 0.0) ++indegree[k];

  std::vector<int> order;
  order.reserve(p);
  std::vector<int> ready;
  for (int k = 0; k < p; ++k)
    if (indegree[k] == 0) ready.push_back(k);

  while (!ready.empty()) {
    const int j = ready.back();
    ready.pop_back();
    order.push_back(j);
    for (int k = 0; k < p; ++k)
      if (k != j && w(j, k) != 0.0 && --indegree[k] == 0) ready.push_back(k);
  }
  if (static_cast<int>(order.size()) != p) order.clear();
  return order;
}

}  // namespace detail

double acyclicity_value(const WeightedAdjacency& w) {
  const double log_det = detail::log_det_gram_complement(w.matrix());
  if (std::isnan(log_det))
    throw OutsideDomain("I - W∘W has a non-positive determinant; spectral radius of W∘W >= 1");
  double h = -log_det;
  if (h < -detail::kNegativeTolerance)
    throw OutsideDomain("det(I - W∘W) > 1 certifies spectral radius of W∘W >= 1");
  return h < 0.0 ? 0.0 : h;
}

Eigen::MatrixXd acyclicity_gradient(const WeightedAdjacency& w) {
  double h = 0.0;
  Eigen::MatrixXd grad;
  if (!detail::acyclicity_value_gradient(w.matrix(), h, grad))
    throw OutsideDomain("acyclicity gradient undefined: W outside {rho(W∘W) < 1}");
  return grad;
}

bool is_exactly_acyclic(const WeightedAdjacency& w) {
  return detail::is_exactly_acyclic_dense(w.matrix());
}

DomainCertificate spectral_certificate(const WeightedAdjacency& w, int iterations,
                                       double margin) {
  const Eigen::Index p = w.dim();
  const Eigen::MatrixXd a = w.matrix().cwiseProduct(w.matrix());

  // Collatz-Wielandt: for any x > 0, rho(A) <= max_i (Ax)_i / x_i. Iterating
  // toward the Perron vector tightens the bound; the floor keeps x positive.
  constexpr double kFloor = 1e-300;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(p, 1.0 / static_cast<double>(p));
  double bound = std::numeric_limits<double>::infinity();

  DomainCertificate cert;
  for (int it = 0; it < iterations; ++it) {
    cert.iterations = it + 1;
    Eigen::VectorXd y = a * x;
    if (!y.allFinite()) {
      cert.in_domain = false;
      cert.spectral_bound = std::numeric_limits<double>::infinity();
      return cert;
    }
    const double ratio = (y.array() / x.array()).maxCoeff();
    if (ratio < bound) bound = ratio;
    if (bound <= 0.0) break;  // x > 0 and Ax = 0: A is the zero matrix
    const double total = y.sum();
    if (total <= 0.0) break;
    x = (y / total).cwiseMax(kFloor);
  }
  if (bound < 0.0) bound = 0.0;
  cert.spectral_bound = bound;
  cert.in_domain = bound < 1.0 - margin;
  return cert;
}

}  // namespace dagdist
