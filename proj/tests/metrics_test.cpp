#include <doctest.h>

#include "dagdist/metrics.hpp"

using namespace dagdist;

namespace {

WeightedAdjacency graph_from(std::initializer_list<std::pair<int, int>> edges, int p) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (auto [j, k] : edges) m(j, k) = 1.0;
  return WeightedAdjacency(m);
}

}  // namespace

TEST_CASE("brier score reproduces the hand example") {
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(2, 2);
  probs(0, 1) = 0.25;
  const PosteriorSummary summary = PosteriorSummary::from_probs(probs);
  const WeightedAdjacency truth = graph_from({{0, 1}}, 2);
  CHECK(brier(summary, truth) == doctest::Approx(0.5625).epsilon(1e-15));
}

TEST_CASE("expected SHD averages the bag against the truth") {
  const WeightedAdjacency truth = graph_from({{0, 1}, {0, 2}, {1, 2}}, 3);
  const PosteriorSummary summary =
      PosteriorSummary::from_samples({truth, WeightedAdjacency::zeros(3)});
  CHECK(expected_shd(summary, truth) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("a reversed edge costs one SHD unit, not two") {
  const WeightedAdjacency truth = graph_from({{0, 1}}, 2);
  const WeightedAdjacency reversed = graph_from({{1, 0}}, 2);
  CHECK(expected_shd(PosteriorSummary::from_samples({reversed}), truth) ==
        doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("expected F1 reproduces the two-true-two-spurious example") {
  const WeightedAdjacency truth = graph_from({{0, 1}, {0, 2}}, 4);
  const WeightedAdjacency guess = graph_from({{0, 1}, {0, 2}, {1, 2}, {1, 3}}, 4);
  CHECK(expected_f1(PosteriorSummary::from_samples({guess}), truth) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("F1 edge cases are defined") {
  const WeightedAdjacency empty = WeightedAdjacency::zeros(3);
  const WeightedAdjacency truth = graph_from({{0, 1}}, 3);
  CHECK(expected_f1(PosteriorSummary::from_samples({empty}), truth) == 0.0);
  CHECK(expected_f1(PosteriorSummary::from_samples({empty}), empty) == 1.0);
}

TEST_CASE("midrank AUROC reproduces the hand example") {
  CHECK(auroc_scores({0.9, 0.8, 0.3, 0.1}, {1, 0, 1, 0}) ==
        doctest::Approx(0.75).epsilon(1e-15));
  // ties take midranks
  CHECK(auroc_scores({0.5, 0.5}, {1, 0}) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("AUROC over edge probabilities handles perfect and degenerate cases") {
  const WeightedAdjacency truth = graph_from({{0, 1}, {2, 1}}, 3);
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(3, 3);
  probs(0, 1) = 0.9;
  probs(2, 1) = 0.7;
  probs(1, 0) = 0.1;
  CHECK(auroc(PosteriorSummary::from_probs(probs), truth) == 1.0);

  CHECK_THROWS_AS(auroc(PosteriorSummary::from_probs(probs), WeightedAdjacency::zeros(3)),
                  DegenerateTruth);
}

TEST_CASE("summary construction validates its inputs") {
  CHECK_THROWS_AS(PosteriorSummary::from_samples({}), EmptySampleBag);

  const PosteriorSummary summary = PosteriorSummary::from_samples(
      {graph_from({{0, 1}}, 2), graph_from({{1, 0}}, 2)});
  CHECK(summary.edge_probs(0, 1) == 0.5);
  CHECK(summary.edge_probs(1, 0) == 0.5);
  REQUIRE(summary.samples.size() == 2);
}
