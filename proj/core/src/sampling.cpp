#include "dagdist/sampling.hpp"

#include <string>

#include "dagdist/parallel.hpp"
#include "dagdist/rng.hpp"

namespace dagdist {

namespace {

void check_base(const BaseGaussian& base) {
  const Eigen::Index p = base.mean.rows();
  if (p < 1 || base.mean.cols() != p) throw DimensionMismatch("base mean must be square");
  if (base.scale.rows() != p || base.scale.cols() != p)
    throw DimensionMismatch("base scale must match the mean's shape");
  if (!base.mean.allFinite() || !base.scale.allFinite())
    throw NonFinite("base distribution has non-finite parameters");
  for (Eigen::Index j = 0; j < p; ++j) {
    if (base.mean(j, j) != 0.0)
      throw std::invalid_argument("base mean diagonal must be exactly zero");
    for (Eigen::Index k = 0; k < p; ++k)
      if (j != k && base.scale(j, k) <= 0.0)
        throw std::invalid_argument("base scale must be positive off the diagonal");
  }
}

Eigen::MatrixXd draw_pre_image(const BaseGaussian& base, std::mt19937_64& rng) {
  const Eigen::Index p = base.mean.rows();
  std::normal_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd wt = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index k = 0; k < p; ++k)
      if (j != k) wt(j, k) = base.mean(j, k) + base.scale(j, k) * unit(rng);
  return wt;
}

}  // namespace

BaseGaussian BaseGaussian::standard(int p, std::uint64_t seed) {
  return BaseGaussian{Eigen::MatrixXd::Zero(p, p), Eigen::MatrixXd::Ones(p, p), seed};
}

std::vector<DagSample> sample_dag(const BaseGaussian& base, const SparsityBudget& budget,
                                  int count, const PathSchedule& schedule,
                                  const ProjectOptions& options, SampleStats* stats) {
  check_base(base);
  if (count < 0) throw std::invalid_argument("sample count must be >= 0");

  const int p = static_cast<int>(base.mean.rows());
  std::vector<DagSample> samples(
      static_cast<std::size_t>(count),
      DagSample{WeightedAdjacency::zeros(p), Eigen::MatrixXd::Zero(p, p), 0});

  parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
    std::mt19937_64 rng = stream_rng(base.seed, i);
    Eigen::MatrixXd wt = draw_pre_image(base, rng);
    try {
      ProjectionResult result = project(WeightedAdjacency(wt), budget, schedule, options);
      samples[i] = DagSample{std::move(result.projected), std::move(wt), 0};
    } catch (const DivergedInnerSolve&) {
      // One redraw from the same stream, then the failure surfaces.
      Eigen::MatrixXd retry = draw_pre_image(base, rng);
      try {
        ProjectionResult result = project(WeightedAdjacency(retry), budget, schedule, options);
        samples[i] = DagSample{std::move(result.projected), std::move(retry), 1};
      } catch (const DivergedInnerSolve& err) {
        throw DivergedInnerSolve("sample " + std::to_string(i) +
                                 " failed twice: " + err.what());
      }
    }
  });

  if (stats) {
    stats->retries = 0;
    for (const auto& s : samples) stats->retries += s.retries;
  }
  return samples;
}

std::vector<DagSample> sample_dag(const BaseGaussian& base, const SparsityBudget& budget,
                                  int count) {
  return sample_dag(base, budget, count,
                    PathSchedule::reference(static_cast<int>(base.mean.rows())));
}

}  // namespace dagdist
