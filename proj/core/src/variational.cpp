#include "dagdist/variational.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "dagdist/errors.hpp"
#include "dagdist/parallel.hpp"
#include "dagdist/rng.hpp"
#include "dagdist/sampling.hpp"

namespace dagdist {

OffDiagonalLayout::OffDiagonalLayout(int p) : p_(p) {
  if (p < 1) throw DimensionMismatch("layout needs at least one node");
  if (p > kMaxNodes) throw TooLarge("node count exceeds limit");
}

OffDiagonalLayout OffDiagonalLayout::from_dim(Eigen::Index dim) {
  const int p = static_cast<int>(
      std::llround((1.0 + std::sqrt(1.0 + 4.0 * static_cast<double>(dim))) / 2.0));
  if (p < 1 || static_cast<Eigen::Index>(p) * (p - 1) != dim)
    throw DimensionMismatch("dimension is not p*(p-1) for any p");
  return OffDiagonalLayout(p);
}

Eigen::Index OffDiagonalLayout::index(int j, int k) const {
  if (j < 0 || j >= p_ || k < 0 || k >= p_ || j == k)
    throw DimensionMismatch("off-diagonal index out of range");
  return static_cast<Eigen::Index>(j) * (p_ - 1) + (k < j ? k : k - 1);
}

std::pair<int, int> OffDiagonalLayout::entry(Eigen::Index idx) const {
  if (idx < 0 || idx >= count()) throw DimensionMismatch("flat index out of range");
  const int j = static_cast<int>(idx / (p_ - 1));
  const int r = static_cast<int>(idx % (p_ - 1));
  return {j, r < j ? r : r + 1};
}

Eigen::MatrixXd OffDiagonalLayout::to_matrix(const Eigen::VectorXd& v) const {
  if (v.size() != count()) throw DimensionMismatch("vector length is not p*(p-1)");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p_, p_);
  Eigen::Index at = 0;
  for (int j = 0; j < p_; ++j)
    for (int k = 0; k < p_; ++k)
      if (k != j) m(j, k) = v(at++);
  return m;
}

Eigen::VectorXd OffDiagonalLayout::to_vector(const Eigen::MatrixXd& m) const {
  if (m.rows() != p_ || m.cols() != p_) throw DimensionMismatch("matrix is not p by p");
  Eigen::VectorXd v(count());
  Eigen::Index at = 0;
  for (int j = 0; j < p_; ++j)
    for (int k = 0; k < p_; ++k)
      if (k != j) v(at++) = m(j, k);
  return v;
}

double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double softplus_inverse(double y) {
  if (!(y > 0.0)) throw std::invalid_argument("softplus inverse needs a positive input");
  if (y > 30.0) return y + std::log1p(-std::exp(-y));
  return std::log(std::expm1(y));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::VectorXd MeanFieldGaussian::scales() const {
  return raw_scales.unaryExpr([](double r) { return softplus(r); });
}

MeanFieldGaussian MeanFieldGaussian::standard(Eigen::Index dim) {
  if (dim < 0) throw DimensionMismatch("negative dimension");
  MeanFieldGaussian q;
  q.means = Eigen::VectorXd::Zero(dim);
  q.raw_scales = Eigen::VectorXd::Constant(dim, softplus_inverse(1.0));
  return q;
}

double kl_divergence(const MeanFieldGaussian& q, const MeanFieldGaussian& prior) {
  if (q.dim() != prior.dim() || q.raw_scales.size() != q.dim() ||
      prior.raw_scales.size() != prior.dim())
    throw DimensionMismatch("posterior and prior dimensions differ");
  const Eigen::VectorXd sq = q.scales();
  const Eigen::VectorXd sp = prior.scales();
  double kl = 0.0;
  for (Eigen::Index i = 0; i < q.dim(); ++i) {
    const double ratio = sq(i) / sp(i);
    const double r2 = ratio * ratio;
    const double shift = (q.means(i) - prior.means(i)) / sp(i);
    kl += 0.5 * (r2 + shift * shift - 1.0 - std::log(r2));
  }
  return kl;
}

LinearSemLikelihood LinearSemLikelihood::from_matrix(const Eigen::MatrixXd& x,
                                                     double noise_variance) {
  if (x.rows() < 1 || x.cols() < 1) throw DimensionMismatch("empty data matrix");
  if (!x.allFinite()) throw NonFinite("data contains non-finite values");
  if (!(noise_variance > 0.0)) throw std::invalid_argument("noise variance must be positive");
  LinearSemLikelihood lik;
  lik.noise_variance = noise_variance;
  lik.n = x.rows();
  lik.gram = x.transpose() * x;
  lik.data_sq_norm = x.squaredNorm();
  return lik;
}

LinearSemLikelihood LinearSemLikelihood::from(const Dataset& data, double noise_variance) {
  return from_matrix(data.x, noise_variance);
}

double log_likelihood(const LinearSemLikelihood& lik, const WeightedAdjacency& w) {
  if (w.dim() != lik.p()) throw DimensionMismatch("graph does not match data width");
  const Eigen::MatrixXd& m = w.matrix();
  const double cross = lik.gram.cwiseProduct(m.transpose()).sum();  // tr(G W)
  const double quad = m.cwiseProduct(lik.gram * m).sum();           // tr(W^T G W)
  const double ss = std::max(0.0, lik.data_sq_norm - 2.0 * cross + quad);
  const double np = static_cast<double>(lik.n) * static_cast<double>(lik.p());
  return -0.5 * np * std::log(2.0 * M_PI * lik.noise_variance) -
         ss / (2.0 * lik.noise_variance);
}

Eigen::MatrixXd log_likelihood_gradient(const LinearSemLikelihood& lik,
                                        const WeightedAdjacency& w) {
  if (w.dim() != lik.p()) throw DimensionMismatch("graph does not match data width");
  return (lik.gram - lik.gram * w.matrix()) / lik.noise_variance;
}

namespace detail {

void check_train_config(const TrainConfig& config) {
  if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (config.samples_per_iter < 1)
    throw std::invalid_argument("samples_per_iter must be positive");
  if (config.max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (config.patience < 1) throw std::invalid_argument("patience must be positive");
  if (!(config.elbo_smoothing >= 0.0 && config.elbo_smoothing < 1.0))
    throw std::invalid_argument("elbo smoothing must be in [0, 1)");
  if (!(config.noise_variance > 0.0))
    throw std::invalid_argument("noise variance must be positive");
}

void subtract_kl(const MeanFieldGaussian& q, const MeanFieldGaussian& prior,
                 ElboEstimate& est) {
  if (q.dim() != prior.dim()) throw DimensionMismatch("posterior and prior dimensions differ");
  const Eigen::VectorXd sq = q.scales();
  const Eigen::VectorXd sp = prior.scales();
  for (Eigen::Index i = 0; i < q.dim(); ++i) {
    const double ratio = sq(i) / sp(i);
    const double r2 = ratio * ratio;
    const double shift = (q.means(i) - prior.means(i)) / sp(i);
    est.value -= 0.5 * (r2 + shift * shift - 1.0 - std::log(r2));
    est.d_means(i) -= (q.means(i) - prior.means(i)) / (sp(i) * sp(i));
    // (sq^2 - sp^2) / (sp^2 sq) vanishes exactly when the scales coincide
    est.d_raw_scales(i) -=
        (sq(i) * sq(i) - sp(i) * sp(i)) / (sp(i) * sp(i) * sq(i)) * sigmoid(q.raw_scales(i));
  }
}

MeanFieldGaussian ascend(
    MeanFieldGaussian q, const TrainConfig& config,
    const std::function<ElboEstimate(const MeanFieldGaussian&, std::uint64_t)>& estimate,
    FitTrace* trace) {
  check_train_config(config);
  const double b1 = 0.9, b2 = 0.999, adam_eps = 1e-8;
  Eigen::VectorXd m_mean = Eigen::VectorXd::Zero(q.dim());
  Eigen::VectorXd v_mean = Eigen::VectorXd::Zero(q.dim());
  Eigen::VectorXd m_raw = Eigen::VectorXd::Zero(q.dim());
  Eigen::VectorXd v_raw = Eigen::VectorXd::Zero(q.dim());

  if (trace) {
    trace->elbo.clear();
    trace->iterations = 0;
    trace->stopped_early = false;
  }

  double smoothed = 0.0, best = 0.0;
  int stall = 0;
  for (int it = 0; it < config.max_iters; ++it) {
    const ElboEstimate est = estimate(q, static_cast<std::uint64_t>(it));
    if (!std::isfinite(est.value) || !est.d_means.allFinite() ||
        !est.d_raw_scales.allFinite())
      throw NonFinite("objective diverged at iteration " + std::to_string(it) +
                      " (|mean| up to " +
                      std::to_string(q.means.cwiseAbs().maxCoeff()) + ", |raw scale| up to " +
                      std::to_string(q.raw_scales.cwiseAbs().maxCoeff()) + ")");

    const double t = it + 1.0;
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    auto step = [&](Eigen::VectorXd& param, Eigen::VectorXd& m, Eigen::VectorXd& v,
                    const Eigen::VectorXd& g) {
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
      param.array() +=
          config.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + adam_eps);
    };
    step(q.means, m_mean, v_mean, est.d_means);
    step(q.raw_scales, m_raw, v_raw, est.d_raw_scales);

    if (trace) {
      trace->elbo.push_back(est.value);
      trace->iterations = it + 1;
    }
    smoothed = it == 0 ? est.value
                       : config.elbo_smoothing * smoothed +
                             (1.0 - config.elbo_smoothing) * est.value;
    if (it == 0 || smoothed > best) {
      best = smoothed;
      stall = 0;
    } else {
      ++stall;
    }
    if (stall >= config.patience) {
      if (trace) trace->stopped_early = true;
      break;
    }
  }
  return q;
}

}  // namespace detail

ElboEstimate estimate_elbo_gradient(const MeanFieldGaussian& q,
                                    const MeanFieldGaussian& prior,
                                    const LinearSemLikelihood& lik, const TrainConfig& config,
                                    std::uint64_t iteration) {
  detail::check_train_config(config);
  if (q.dim() != prior.dim()) throw DimensionMismatch("posterior and prior dimensions differ");
  const OffDiagonalLayout layout = OffDiagonalLayout::from_dim(q.dim());
  if (layout.nodes() != lik.p())
    throw DimensionMismatch("parameter dimension does not match data width");

  const int samples = config.samples_per_iter;
  const PathSchedule schedule =
      config.schedule ? *config.schedule : PathSchedule::training(layout.nodes());
  const ProjectOptions options{config.hard_threshold, true};
  const Eigen::VectorXd scales = q.scales();

  std::vector<double> loglik(samples);
  std::vector<Eigen::VectorXd> grads(samples), noises(samples);
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t l) {
    auto rng = stream_rng(config.seed,
                          iteration * static_cast<std::uint64_t>(samples) + l);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0;; ++attempt) {
      Eigen::VectorXd eps(q.dim());
      for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = unit(rng);
      const Eigen::VectorXd wt = q.means + scales.cwiseProduct(eps);
      try {
        const ProjectionResult res = project(WeightedAdjacency(layout.to_matrix(wt)),
                                             config.budget, schedule, options);
        loglik[l] = log_likelihood(lik, res.projected);
        const Eigen::MatrixXd upstream = log_likelihood_gradient(lik, res.projected);
        Eigen::MatrixXd pulled;
        if (res.binding && res.pre_threshold.cwiseAbs().sum() == 0.0)
          pulled = Eigen::MatrixXd::Zero(layout.nodes(), layout.nodes());
        else
          pulled = projection_jacobian(res, config.budget).pullback(upstream);
        grads[l] = layout.to_vector(pulled);
        noises[l] = eps;
        return;
      } catch (const DivergedInnerSolve&) {
        if (attempt >= 1) throw;
      }
    }
  });

  ElboEstimate out;
  out.value = 0.0;
  out.d_means = Eigen::VectorXd::Zero(q.dim());
  out.d_raw_scales = Eigen::VectorXd::Zero(q.dim());
  for (int l = 0; l < samples; ++l) {
    out.value += loglik[l];
    out.d_means += grads[l];
    out.d_raw_scales += grads[l].cwiseProduct(noises[l]);
  }
  out.value /= samples;
  out.d_means /= samples;
  out.d_raw_scales /= samples;
  for (Eigen::Index i = 0; i < q.dim(); ++i)
    out.d_raw_scales(i) *= sigmoid(q.raw_scales(i));

  detail::subtract_kl(q, prior, out);
  return out;
}

double estimate_elbo(const MeanFieldGaussian& q, const MeanFieldGaussian& prior,
                     const LinearSemLikelihood& lik, const TrainConfig& config,
                     std::uint64_t iteration) {
  return estimate_elbo_gradient(q, prior, lik, config, iteration).value;
}

MeanFieldGaussian fit(const Dataset& data, const MeanFieldGaussian& prior,
                      const TrainConfig& config, FitTrace* trace) {
  const LinearSemLikelihood lik = LinearSemLikelihood::from(data, config.noise_variance);
  const OffDiagonalLayout layout(static_cast<int>(lik.p()));
  if (prior.dim() != layout.count())
    throw DimensionMismatch("prior dimension does not match data width");
  return detail::ascend(
      prior, config,
      [&](const MeanFieldGaussian& q, std::uint64_t it) {
        return estimate_elbo_gradient(q, prior, lik, config, it);
      },
      trace);
}

PosteriorSummary posterior_summary(const MeanFieldGaussian& q, const SparsityBudget& budget,
                                   int count, std::uint64_t seed,
                                   const PathSchedule& schedule,
                                   const ProjectOptions& options) {
  const OffDiagonalLayout layout = OffDiagonalLayout::from_dim(q.dim());
  BaseGaussian base;
  base.mean = layout.to_matrix(q.means);
  base.scale = layout.to_matrix(q.scales());
  base.seed = seed;
  const std::vector<DagSample> draws = sample_dag(base, budget, count, schedule, options);
  std::vector<WeightedAdjacency> graphs;
  graphs.reserve(draws.size());
  for (const auto& d : draws) graphs.push_back(d.graph);
  return PosteriorSummary::from_samples(graphs);
}

PosteriorSummary posterior_summary(const MeanFieldGaussian& q, const SparsityBudget& budget,
                                   int count, std::uint64_t seed) {
  const OffDiagonalLayout layout = OffDiagonalLayout::from_dim(q.dim());
  return posterior_summary(q, budget, count, seed, PathSchedule::reference(layout.nodes()));
}

}  // namespace dagdist
