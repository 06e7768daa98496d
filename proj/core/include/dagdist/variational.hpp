#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "dagdist/metrics.hpp"
#include "dagdist/projection.hpp"
#include "dagdist/synth.hpp"

namespace dagdist {

// Row-major enumeration of the p*(p-1) off-diagonal entries. The diagonal is
// structurally zero and never parameterized.
class OffDiagonalLayout {
 public:
  explicit OffDiagonalLayout(int p);
  static OffDiagonalLayout from_dim(Eigen::Index dim);  // dim = p*(p-1)

  int nodes() const { return p_; }
  Eigen::Index count() const { return static_cast<Eigen::Index>(p_) * (p_ - 1); }
  Eigen::Index index(int j, int k) const;
  std::pair<int, int> entry(Eigen::Index idx) const;
  Eigen::MatrixXd to_matrix(const Eigen::VectorXd& v) const;
  Eigen::VectorXd to_vector(const Eigen::MatrixXd& m) const;

 private:
  int p_ = 0;
};

double softplus(double x);
double softplus_inverse(double y);
double sigmoid(double x);

// Independent Gaussians with scales parameterized through softplus so they
// stay positive under unconstrained updates.
struct MeanFieldGaussian {
  Eigen::VectorXd means;
  Eigen::VectorXd raw_scales;

  Eigen::Index dim() const { return means.size(); }
  Eigen::VectorXd scales() const;
  static MeanFieldGaussian standard(Eigen::Index dim);  // mean 0, scale 1
};

double kl_divergence(const MeanFieldGaussian& q, const MeanFieldGaussian& prior);

// Gaussian linear SEM likelihood, cached through the Gram matrix so each
// evaluation is O(p^2) after the one-time O(n p^2) setup.
struct LinearSemLikelihood {
  double noise_variance = 1.0;
  Eigen::Index n = 0;
  Eigen::MatrixXd gram;  // X^T X
  double data_sq_norm = 0.0;

  static LinearSemLikelihood from_matrix(const Eigen::MatrixXd& x, double noise_variance = 1.0);
  static LinearSemLikelihood from(const Dataset& data, double noise_variance = 1.0);
  Eigen::Index p() const { return gram.rows(); }
};

double log_likelihood(const LinearSemLikelihood& lik, const WeightedAdjacency& w);
Eigen::MatrixXd log_likelihood_gradient(const LinearSemLikelihood& lik,
                                        const WeightedAdjacency& w);

struct TrainConfig {
  double learning_rate = 0.1;
  int samples_per_iter = 100;
  int max_iters = 2000;
  int patience = 100;
  double elbo_smoothing = 0.9;
  SparsityBudget budget;  // unbounded by default
  std::uint64_t seed = 0;
  double noise_variance = 1.0;
  double hard_threshold = 0.1;
  std::optional<PathSchedule> schedule;  // default: PathSchedule::training(p)
};

struct FitTrace {
  std::vector<double> elbo;
  int iterations = 0;
  bool stopped_early = false;
};

struct ElboEstimate {
  double value = 0.0;
  Eigen::VectorXd d_means;
  Eigen::VectorXd d_raw_scales;
};

// Monte Carlo ELBO with reparameterized pre-images: each sample projects
// means + scales * eps and scores the result under the likelihood; the
// projection differential carries the gradient back to the pre-image.
// Noise streams are keyed by (seed, iteration * samples_per_iter + l), so a
// fixed iteration index makes the estimate deterministic.
ElboEstimate estimate_elbo_gradient(const MeanFieldGaussian& q,
                                    const MeanFieldGaussian& prior,
                                    const LinearSemLikelihood& lik, const TrainConfig& config,
                                    std::uint64_t iteration = 0);
double estimate_elbo(const MeanFieldGaussian& q, const MeanFieldGaussian& prior,
                     const LinearSemLikelihood& lik, const TrainConfig& config,
                     std::uint64_t iteration = 0);

// Stochastic ELBO ascent with Adam, stopping once the smoothed ELBO has not
// improved for `patience` iterations.
MeanFieldGaussian fit(const Dataset& data, const MeanFieldGaussian& prior,
                      const TrainConfig& config, FitTrace* trace = nullptr);

// Draws posterior graph samples by projecting pre-images drawn from q.
PosteriorSummary posterior_summary(const MeanFieldGaussian& q, const SparsityBudget& budget,
                                   int count, std::uint64_t seed,
                                   const PathSchedule& schedule,
                                   const ProjectOptions& options = {});
PosteriorSummary posterior_summary(const MeanFieldGaussian& q, const SparsityBudget& budget,
                                   int count, std::uint64_t seed);

namespace detail {

// Folds -KL(q || prior) and its gradients into a likelihood-only estimate.
void subtract_kl(const MeanFieldGaussian& q, const MeanFieldGaussian& prior,
                 ElboEstimate& est);

// The shared Adam ascent loop; `estimate` is called once per iteration with
// the current posterior and the iteration index.
MeanFieldGaussian ascend(
    MeanFieldGaussian q, const TrainConfig& config,
    const std::function<ElboEstimate(const MeanFieldGaussian&, std::uint64_t)>& estimate,
    FitTrace* trace);

void check_train_config(const TrainConfig& config);

}  // namespace detail

}  // namespace dagdist
