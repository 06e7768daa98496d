#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dagdist/adjacency.hpp"

namespace dagdist {

using SupportMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Edge marginals plus the bag of 0/1 supports they came from. Summaries built
// from probabilities alone (no samples) still serve the marginal metrics.
struct PosteriorSummary {
  Eigen::MatrixXd edge_probs;          // p x p, zero diagonal, entries in [0, 1]
  std::vector<SupportMatrix> samples;  // may be empty

  static PosteriorSummary from_samples(const std::vector<WeightedAdjacency>& graphs);
  static PosteriorSummary from_probs(Eigen::MatrixXd probs);
};

// Sum over ordered off-diagonal pairs of (1[edge in truth] - p_hat)^2.
double brier(const PosteriorSummary& summary, const WeightedAdjacency& truth);

// Mean structural Hamming distance over the sample bag. A pair counts 1 when
// its edge pattern differs in any way, so a reversed edge costs 1.
double expected_shd(const PosteriorSummary& summary, const WeightedAdjacency& truth);

// Mean F1 over the sample bag, edges compared as ordered pairs. Undefined
// precision or recall counts as 0; an empty sample against a nonempty truth
// scores 0, and empty against empty scores 1.
double expected_f1(const PosteriorSummary& summary, const WeightedAdjacency& truth);

// Area under the ROC curve of edge_probs against the 0/1 truth, ordered
// off-diagonal pairs, ties resolved by midranks.
double auroc(const PosteriorSummary& summary, const WeightedAdjacency& truth);

// Midrank AUROC of raw scores against binary labels.
double auroc_scores(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace dagdist
