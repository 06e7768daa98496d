#include "dagdist/adjacency.hpp"

#include <string>
#include <utility>

namespace dagdist {

WeightedAdjacency::WeightedAdjacency(Eigen::MatrixXd w) : w_(std::move(w)) {
  if (w_.rows() != w_.cols() || w_.rows() < 1)
    throw DimensionMismatch("adjacency must be square and non-empty, got " +
                            std::to_string(w_.rows()) + "x" + std::to_string(w_.cols()));
  if (w_.rows() > kMaxNodes)
    throw TooLarge("adjacency dimension " + std::to_string(w_.rows()) +
                   " exceeds dense backend limit " + std::to_string(kMaxNodes));
  if (!w_.allFinite()) throw NonFinite("adjacency contains non-finite entries");
  for (Eigen::Index i = 0; i < w_.rows(); ++i)
    if (w_(i, i) != 0.0)
      throw std::invalid_argument("adjacency diagonal must be exactly zero (node " +
                                  std::to_string(i) + ")");
}

WeightedAdjacency WeightedAdjacency::zeros(int p) {
  return WeightedAdjacency(Eigen::MatrixXd::Zero(p, p));
}

WeightedAdjacency WeightedAdjacency::from_dense(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd w = m;
  w.diagonal().setZero();
  return WeightedAdjacency(std::move(w));
}

}  // namespace dagdist
