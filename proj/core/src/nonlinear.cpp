#include "dagdist/nonlinear.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "dagdist/errors.hpp"
#include "dagdist/parallel.hpp"
#include "dagdist/rng.hpp"

namespace dagdist {
namespace {

PathSchedule default_network_schedule(const TrainConfig& config, int p) {
  if (config.schedule) return *config.schedule;
  PathSchedule schedule = PathSchedule::training(p);
  schedule.inner_step = 0.25 / p;  // induced adjacencies sit closer to the domain edge
  return schedule;
}

struct NodeGrads {
  Eigen::MatrixXd d_first;       // p x d0, row `node` zero
  Eigen::VectorXd d_first_bias;  // d0
  std::vector<NodeNetwork::Layer> d_deeper;
};

// Plain backprop for one node's MLP; `upstream` is dL/df_node per row of x.
NodeGrads backprop_node(const NodeNetwork& net, int node, const Eigen::MatrixXd& x,
                        const Eigen::VectorXd& upstream) {
  const auto& stack = net.deeper[node];
  std::vector<Eigen::MatrixXd> acts;  // acts[i] is the input to deeper layer i
  acts.reserve(stack.size());
  acts.push_back(
      ((x * net.first[node]).rowwise() + net.first_bias[node].transpose()).cwiseMax(0.0));
  for (std::size_t i = 0; i + 1 < stack.size(); ++i)
    acts.push_back(
        ((acts.back() * stack[i].weight).rowwise() + stack[i].bias.transpose()).cwiseMax(0.0));

  NodeGrads out;
  out.d_deeper.resize(stack.size());
  Eigen::MatrixXd g = upstream;
  for (int i = static_cast<int>(stack.size()) - 1; i >= 0; --i) {
    out.d_deeper[i].weight = acts[i].transpose() * g;
    out.d_deeper[i].bias = g.colwise().sum().transpose();
    const Eigen::MatrixXd gh = g * stack[i].weight.transpose();
    g = gh.cwiseProduct((acts[i].array() > 0.0).cast<double>().matrix());
  }
  out.d_first = x.transpose() * g;
  out.d_first.row(node).setZero();
  out.d_first_bias = g.colwise().sum().transpose();
  return out;
}

}  // namespace

MeanFieldGaussian initial_network_posterior(const NetworkLayout& layout, std::uint64_t seed) {
  NodeNetwork means = NodeNetwork::zeros(layout.shape());
  auto rng = stream_rng(seed, 0x6e6574);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < means.p; ++k) {
    for (auto& layer : means.deeper[k]) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(layer.weight.rows()));
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
          layer.weight(r, c) = scale * unit(rng);
    }
  }
  MeanFieldGaussian q = MeanFieldGaussian::standard(layout.param_count());
  q.means = layout.pack(means);
  return q;
}

ElboEstimate estimate_network_elbo_gradient(const MeanFieldGaussian& q,
                                            const MeanFieldGaussian& prior,
                                            const NetworkLayout& layout,
                                            const Eigen::MatrixXd& x,
                                            const TrainConfig& config,
                                            std::uint64_t iteration) {
  detail::check_train_config(config);
  if (q.dim() != prior.dim()) throw DimensionMismatch("posterior and prior dimensions differ");
  if (q.dim() != layout.param_count())
    throw DimensionMismatch("posterior dimension does not match the network layout");
  const int p = layout.shape().p;
  if (x.cols() != p) throw DimensionMismatch("data width does not match node count");
  if (!x.allFinite()) throw NonFinite("data contains non-finite values");

  const int samples = config.samples_per_iter;
  const PathSchedule schedule = default_network_schedule(config, p);
  const ProjectOptions options{config.hard_threshold, true};
  const Eigen::VectorXd scales = q.scales();
  const double sigma2 = config.noise_variance;

  std::vector<double> loglik(samples);
  std::vector<Eigen::VectorXd> grads(samples), noises(samples);
  parallel_for(static_cast<std::size_t>(samples), [&](std::size_t l) {
    auto rng = stream_rng(config.seed,
                          iteration * static_cast<std::uint64_t>(samples) + l);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0;; ++attempt) {
      Eigen::VectorXd eps(q.dim());
      for (Eigen::Index i = 0; i < eps.size(); ++i) eps(i) = unit(rng);
      const NodeNetwork pre = layout.unpack(q.means + scales.cwiseProduct(eps));
      try {
        const NetworkProjection proj = project_network(pre, config.budget, schedule, options);
        const Eigen::MatrixXd fitted = forward_all(proj.network, x);
        const Eigen::MatrixXd residual = x - fitted;
        const double np = static_cast<double>(x.rows()) * p;
        loglik[l] = -0.5 * np * std::log(2.0 * M_PI * sigma2) -
                    residual.squaredNorm() / (2.0 * sigma2);

        const Eigen::MatrixXd upstream = residual / sigma2;  // dL/df per row
        const Eigen::MatrixXd induced = induced_adjacency(pre).matrix();
        const Eigen::MatrixXd& projected = proj.matrix.projected.matrix();

        NodeNetwork gnet = NodeNetwork::zeros(layout.shape());
        std::vector<NodeGrads> per_node(p);
        Eigen::MatrixXd g_adj = Eigen::MatrixXd::Zero(p, p);  // dL/dW via row directions
        for (int k = 0; k < p; ++k) {
          per_node[k] = backprop_node(proj.network, k, x, upstream.col(k));
          gnet.first_bias[k] = per_node[k].d_first_bias;
          gnet.deeper[k] = per_node[k].d_deeper;
          for (int j = 0; j < p; ++j) {
            if (j == k || induced(j, k) == 0.0) continue;
            g_adj(j, k) =
                per_node[k].d_first.row(j).dot(pre.first[k].row(j)) / induced(j, k);
          }
        }

        Eigen::MatrixXd pulled;
        if (proj.matrix.binding && proj.matrix.pre_threshold.cwiseAbs().sum() == 0.0)
          pulled = Eigen::MatrixXd::Zero(p, p);
        else
          pulled = projection_jacobian(proj.matrix, config.budget).pullback(g_adj);

        for (int k = 0; k < p; ++k) {
          for (int j = 0; j < p; ++j) {
            if (j == k) continue;
            const double wt = induced(j, k);
            if (wt == 0.0) continue;  // norm is not differentiable here; keep zero
            const double w = projected(j, k);
            const Eigen::RowVectorXd unit_row = pre.first[k].row(j) / wt;
            const double through_norm =
                pulled(j, k) -
                per_node[k].d_first.row(j).dot(pre.first[k].row(j)) * w / (wt * wt);
            gnet.first[k].row(j) =
                (w / wt) * per_node[k].d_first.row(j) + through_norm * unit_row;
          }
        }

        grads[l] = layout.pack(gnet);
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

NonlinearFit fit_nonlinear(const Dataset& data, const NetworkShape& shape,
                           const MeanFieldGaussian& prior, const TrainConfig& config,
                           FitTrace* trace) {
  if (data.x.cols() != shape.p)
    throw DimensionMismatch("data width does not match the requested node count");
  const NetworkLayout layout(shape);
  if (prior.dim() != layout.param_count())
    throw DimensionMismatch("prior dimension does not match the network layout");
  MeanFieldGaussian start = initial_network_posterior(layout, config.seed);

  NonlinearFit out;
  out.shape = shape;
  out.q = detail::ascend(
      std::move(start), config,
      [&](const MeanFieldGaussian& q, std::uint64_t it) {
        return estimate_network_elbo_gradient(q, prior, layout, data.x, config, it);
      },
      trace);
  return out;
}

PosteriorSummary network_posterior_summary(const NonlinearFit& fit,
                                           const SparsityBudget& budget, int count,
                                           std::uint64_t seed, const PathSchedule& schedule,
                                           const ProjectOptions& options) {
  if (count < 1) throw std::invalid_argument("sample count must be positive");
  const NetworkLayout layout(fit.shape);
  if (fit.q.dim() != layout.param_count())
    throw DimensionMismatch("fit parameters do not match its shape");
  const Eigen::VectorXd scales = fit.q.scales();

  std::vector<WeightedAdjacency> graphs(static_cast<std::size_t>(count),
                                        WeightedAdjacency::zeros(fit.shape.p));
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t i) {
    auto rng = stream_rng(seed, i);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0;; ++attempt) {
      Eigen::VectorXd eps(fit.q.dim());
      for (Eigen::Index c = 0; c < eps.size(); ++c) eps(c) = unit(rng);
      const NodeNetwork pre = layout.unpack(fit.q.means + scales.cwiseProduct(eps));
      try {
        graphs[i] = project_network(pre, budget, schedule, options).matrix.projected;
        return;
      } catch (const DivergedInnerSolve&) {
        if (attempt >= 1) throw;
      }
    }
  });
  return PosteriorSummary::from_samples(graphs);
}

PosteriorSummary network_posterior_summary(const NonlinearFit& fit,
                                           const SparsityBudget& budget, int count,
                                           std::uint64_t seed) {
  return network_posterior_summary(fit, budget, count, seed,
                                   PathSchedule::nonlinear_reference(fit.shape.p));
}

}  // namespace dagdist
