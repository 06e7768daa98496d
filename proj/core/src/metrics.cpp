#include "dagdist/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace dagdist {

namespace {

void check_same_dim(const Eigen::Index a, const Eigen::Index b) {
  if (a != b)
    throw DimensionMismatch("summary is " + std::to_string(a) + " nodes, truth is " +
                            std::to_string(b));
}

SupportMatrix support_of(const WeightedAdjacency& w) {
  const int p = w.dim();
  SupportMatrix s(p, p);
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) s(j, k) = (j != k && w(j, k) != 0.0) ? 1 : 0;
  return s;
}

double f1_single(const SupportMatrix& sample, const SupportMatrix& truth) {
  int tp = 0, predicted = 0, actual = 0;
  for (Eigen::Index j = 0; j < sample.rows(); ++j)
    for (Eigen::Index k = 0; k < sample.cols(); ++k) {
      if (j == k) continue;
      predicted += sample(j, k);
      actual += truth(j, k);
      tp += sample(j, k) & truth(j, k);
    }
  if (predicted == 0 && actual == 0) return 1.0;  // both graphs empty
  const double precision = predicted > 0 ? static_cast<double>(tp) / predicted : 0.0;
  const double recall = actual > 0 ? static_cast<double>(tp) / actual : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double shd_single(const SupportMatrix& sample, const SupportMatrix& truth) {
  int distance = 0;
  for (Eigen::Index j = 0; j < sample.rows(); ++j)
    for (Eigen::Index k = j + 1; k < sample.cols(); ++k)
      if (sample(j, k) != truth(j, k) || sample(k, j) != truth(k, j)) ++distance;
  return static_cast<double>(distance);
}

}  // namespace

PosteriorSummary PosteriorSummary::from_samples(const std::vector<WeightedAdjacency>& graphs) {
  if (graphs.empty()) throw EmptySampleBag("cannot summarize zero posterior samples");
  const int p = graphs.front().dim();

  PosteriorSummary summary;
  summary.edge_probs = Eigen::MatrixXd::Zero(p, p);
  summary.samples.reserve(graphs.size());
  for (const auto& g : graphs) {
    check_same_dim(g.dim(), p);
    summary.samples.push_back(support_of(g));
    summary.edge_probs += summary.samples.back().cast<double>();
  }
  summary.edge_probs /= static_cast<double>(graphs.size());
  return summary;
}

PosteriorSummary PosteriorSummary::from_probs(Eigen::MatrixXd probs) {
  if (probs.rows() != probs.cols() || probs.rows() < 1)
    throw DimensionMismatch("edge probabilities must form a square matrix");
  if (!probs.allFinite() || probs.minCoeff() < 0.0 || probs.maxCoeff() > 1.0)
    throw std::invalid_argument("edge probabilities must lie in [0, 1]");
  for (Eigen::Index j = 0; j < probs.rows(); ++j)
    if (probs(j, j) != 0.0) throw std::invalid_argument("edge probability diagonal must be zero");
  return PosteriorSummary{std::move(probs), {}};
}

double brier(const PosteriorSummary& summary, const WeightedAdjacency& truth) {
  check_same_dim(summary.edge_probs.rows(), truth.dim());
  const int p = truth.dim();
  double total = 0.0;
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) {
      if (j == k) continue;
      const double indicator = truth(j, k) != 0.0 ? 1.0 : 0.0;
      const double diff = indicator - summary.edge_probs(j, k);
      total += diff * diff;
    }
  return total;
}

double expected_shd(const PosteriorSummary& summary, const WeightedAdjacency& truth) {
  check_same_dim(summary.edge_probs.rows(), truth.dim());
  if (summary.samples.empty())
    throw EmptySampleBag("expected SHD needs posterior samples, not just marginals");
  const SupportMatrix t = support_of(truth);
  double total = 0.0;
  for (const auto& s : summary.samples) total += shd_single(s, t);
  return total / static_cast<double>(summary.samples.size());
}

double expected_f1(const PosteriorSummary& summary, const WeightedAdjacency& truth) {
  check_same_dim(summary.edge_probs.rows(), truth.dim());
  if (summary.samples.empty())
    throw EmptySampleBag("expected F1 needs posterior samples, not just marginals");
  const SupportMatrix t = support_of(truth);
  double total = 0.0;
  for (const auto& s : summary.samples) total += f1_single(s, t);
  return total / static_cast<double>(summary.samples.size());
}

double auroc_scores(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size())
    throw DimensionMismatch("scores and labels must have equal length");
  const std::size_t n = scores.size();
  std::size_t positives = 0;
  for (int l : labels) positives += l != 0 ? 1 : 0;
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0)
    throw DegenerateTruth("AUROC undefined without both positive and negative pairs");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Midranks: tied scores share the average of their rank range.
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;  // ranks are 1-based
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }

  double positive_rank_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    if (labels[k] != 0) positive_rank_sum += rank[k];
  const double np = static_cast<double>(positives), nn = static_cast<double>(negatives);
  return (positive_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double auroc(const PosteriorSummary& summary, const WeightedAdjacency& truth) {
  check_same_dim(summary.edge_probs.rows(), truth.dim());
  const int p = truth.dim();
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(static_cast<std::size_t>(p) * (p - 1));
  for (int j = 0; j < p; ++j)
    for (int k = 0; k < p; ++k) {
      if (j == k) continue;
      scores.push_back(summary.edge_probs(j, k));
      labels.push_back(truth(j, k) != 0.0 ? 1 : 0);
    }
  return auroc_scores(scores, labels);
}

}  // namespace dagdist
