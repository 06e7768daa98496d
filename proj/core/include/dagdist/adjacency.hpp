#pragma once

#include <Eigen/Dense>

#include "dagdist/errors.hpp"

namespace dagdist {

// Largest node count the dense backend accepts before refusing to allocate.
inline constexpr int kMaxNodes = 2000;

// Weighted adjacency matrix of a directed graph on p nodes. The diagonal is
// exactly zero and every entry is finite; both are checked at construction.
class WeightedAdjacency {
 public:
  explicit WeightedAdjacency(Eigen::MatrixXd w);

  static WeightedAdjacency zeros(int p);
  // Copies m with the diagonal forced to exact zero.
  static WeightedAdjacency from_dense(const Eigen::MatrixXd& m);

  int dim() const { return static_cast<int>(w_.rows()); }
  double operator()(int j, int k) const { return w_(j, k); }
  const Eigen::MatrixXd& matrix() const { return w_; }

  double l1_norm() const { return w_.cwiseAbs().sum(); }
  int edge_count() const { return static_cast<int>((w_.array() != 0.0).count()); }

 private:
  Eigen::MatrixXd w_;
};

}  // namespace dagdist
