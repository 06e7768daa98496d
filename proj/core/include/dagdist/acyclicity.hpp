#pragma once

#include <Eigen/Dense>

#include "dagdist/adjacency.hpp"

namespace dagdist {

struct DomainCertificate {
  bool in_domain = false;
  double spectral_bound = 0.0;  // certified upper bound on rho(W∘W)
  int iterations = 0;
};

// h(W) = -log det(I - W∘W). Zero exactly on acyclic supports, positive on the
// rest of the domain {rho(W∘W) < 1}, and +inf at its boundary. Throws
// OutsideDomain when the factorization of I - W∘W rejects W.
double acyclicity_value(const WeightedAdjacency& w);

// ∇h(W) = 2 (I - W∘W)^{-T} ∘ W. Zero diagonal by construction.
Eigen::MatrixXd acyclicity_gradient(const WeightedAdjacency& w);

// Exact combinatorial check (Kahn's algorithm) on the nonzero support.
bool is_exactly_acyclic(const WeightedAdjacency& w);

// Power iteration with Collatz-Wielandt upper bounds on rho(W∘W). Advisory
// diagnostic; membership is reported with a safety margin. The factorization
// inside acyclicity_value stays the authoritative domain test.
DomainCertificate spectral_certificate(const WeightedAdjacency& w, int iterations = 100,
                                       double margin = 1e-6);

namespace detail {

// log det(I - W∘W) via partial-pivot LU, or NaN when the factorization sees a
// non-positive determinant (the matrix is outside the domain or on its edge).
double log_det_gram_complement(const Eigen::MatrixXd& w);

// Returns false if outside the domain; otherwise writes h and ∇h.
bool acyclicity_value_gradient(const Eigen::MatrixXd& w, double& h, Eigen::MatrixXd& grad);

bool is_exactly_acyclic_dense(const Eigen::MatrixXd& w);

// Topological order of the nonzero support, empty if cyclic.
std::vector<int> topological_order(const Eigen::MatrixXd& w);

}  // namespace detail

}  // namespace dagdist
