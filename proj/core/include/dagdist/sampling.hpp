#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "dagdist/projection.hpp"

namespace dagdist {

// Entrywise Gaussian over pre-images: wt_jk ~ N(mean_jk, scale_jk^2) for
// j != k. The diagonal is structurally zero; scale diagonals are ignored.
struct BaseGaussian {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd scale;
  std::uint64_t seed = 0;

  static BaseGaussian standard(int p, std::uint64_t seed = 0);
};

struct DagSample {
  WeightedAdjacency graph;
  Eigen::MatrixXd pre_image;
  int retries = 0;
};

struct SampleStats {
  int retries = 0;  // total redraws caused by projection failures
};

// Draws `count` graphs by projecting Gaussian pre-images. Sample i is drawn
// from its own RNG stream derived from (base.seed, i), so results do not
// depend on batch size or worker count. A sample whose projection diverges is
// redrawn once from the same stream before the error propagates.
std::vector<DagSample> sample_dag(const BaseGaussian& base, const SparsityBudget& budget,
                                  int count, const PathSchedule& schedule,
                                  const ProjectOptions& options = {},
                                  SampleStats* stats = nullptr);

// Same with the reference schedule for the base dimension.
std::vector<DagSample> sample_dag(const BaseGaussian& base, const SparsityBudget& budget,
                                  int count);

}  // namespace dagdist
