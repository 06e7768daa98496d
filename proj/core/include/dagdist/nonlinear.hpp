#pragma once

#include <cstdint>

#include "dagdist/network.hpp"
#include "dagdist/synth.hpp"
#include "dagdist/variational.hpp"

namespace dagdist {

struct NonlinearFit {
  NetworkShape shape;
  MeanFieldGaussian q;
};

// Starting posterior: first-layer means at zero, deeper-layer weight means
// drawn N(0, 1/fan_in) so sampled functions are not identically zero, every
// scale at one.
MeanFieldGaussian initial_network_posterior(const NetworkLayout& layout, std::uint64_t seed);

// Monte Carlo ELBO over network parameters: each sample unpacks a network,
// projects it through the induced adjacency, and scores the projected
// network's predictions. First-layer gradients flow through the row
// rescaling and the adjacency projection; deeper-layer gradients pass
// through unchanged.
ElboEstimate estimate_network_elbo_gradient(const MeanFieldGaussian& q,
                                            const MeanFieldGaussian& prior,
                                            const NetworkLayout& layout,
                                            const Eigen::MatrixXd& x,
                                            const TrainConfig& config,
                                            std::uint64_t iteration = 0);

// KL is taken against `prior`; the ascent itself starts from
// initial_network_posterior(config.seed).
NonlinearFit fit_nonlinear(const Dataset& data, const NetworkShape& shape,
                           const MeanFieldGaussian& prior, const TrainConfig& config,
                           FitTrace* trace = nullptr);

// Graph samples: networks drawn from q, projected, induced supports kept.
PosteriorSummary network_posterior_summary(const NonlinearFit& fit,
                                           const SparsityBudget& budget, int count,
                                           std::uint64_t seed, const PathSchedule& schedule,
                                           const ProjectOptions& options = {});
PosteriorSummary network_posterior_summary(const NonlinearFit& fit,
                                           const SparsityBudget& budget, int count,
                                           std::uint64_t seed);

}  // namespace dagdist
