#include <doctest.h>

#include <cmath>

#include "dagdist/nonlinear.hpp"
#include "dagdist/synth.hpp"

using namespace dagdist;

namespace {

PathSchedule tight_schedule(int p) {
  PathSchedule s = PathSchedule::nonlinear_reference(p);
  s.stages = 14;
  s.inner_tolerance = 1e-9;
  s.inner_max_iters = 50000;
  return s;
}

double network_elbo(const MeanFieldGaussian& q, const MeanFieldGaussian& prior,
                    const NetworkLayout& layout, const Eigen::MatrixXd& x,
                    const TrainConfig& cfg) {
  return estimate_network_elbo_gradient(q, prior, layout, x, cfg, 2).value;
}

}  // namespace

TEST_CASE("initial network posterior has zero first-layer means and unit scales") {
  const NetworkLayout layout({3, {4}});
  const MeanFieldGaussian q = initial_network_posterior(layout, 7);
  CHECK(q.dim() == layout.param_count());
  CHECK(q.scales().isApproxToConstant(1.0, 1e-12));

  const NodeNetwork mean_net = layout.unpack(q.means);
  for (int k = 0; k < 3; ++k) {
    CHECK(mean_net.first[k].cwiseAbs().maxCoeff() == 0.0);
    CHECK(mean_net.first_bias[k].cwiseAbs().maxCoeff() == 0.0);
    // deeper weights are seeded away from zero so sampled functions vary
    CHECK(mean_net.deeper[k][0].weight.cwiseAbs().maxCoeff() > 0.0);
  }
  CHECK(initial_network_posterior(layout, 7).means == q.means);
  CHECK(initial_network_posterior(layout, 8).means != q.means);
}

TEST_CASE("network elbo gradient matches finite differences under common noise") {
  const int p = 2;
  const NetworkShape shape{p, {2}};
  const NetworkLayout layout(shape);

  GraphSpec spec;
  spec.p = p;
  spec.edges = 1;
  const WeightedAdjacency graph = sample_graph(spec, 4);
  const NodeNetwork gen = make_generator_network(graph, {2}, 4);
  const Dataset data = simulate_nonlinear(gen, NoiseSpec{}, 25, 6);

  MeanFieldGaussian q = initial_network_posterior(layout, 9);
  q.means = layout.pack(gen);  // start at a network with a clearly acyclic graph
  q.raw_scales.setConstant(softplus_inverse(1e-3));
  const MeanFieldGaussian prior = MeanFieldGaussian::standard(layout.param_count());

  TrainConfig cfg;
  cfg.samples_per_iter = 2;
  cfg.seed = 15;
  cfg.schedule = tight_schedule(p);

  const ElboEstimate est = estimate_network_elbo_gradient(q, prior, layout, data.x, cfg, 2);
  CHECK(std::isfinite(est.value));

  const double h = 1e-5;
  for (Eigen::Index i = 0; i < layout.param_count(); i += 3) {
    MeanFieldGaussian hi = q, lo = q;
    hi.means(i) += h;
    lo.means(i) -= h;
    const double fd = (network_elbo(hi, prior, layout, data.x, cfg) -
                       network_elbo(lo, prior, layout, data.x, cfg)) /
                      (2.0 * h);
    CHECK(est.d_means(i) == doctest::Approx(fd).epsilon(2e-3).scale(std::abs(fd) + 1e-5));
  }
  for (Eigen::Index i = 1; i < layout.param_count(); i += 5) {
    MeanFieldGaussian hi = q, lo = q;
    hi.raw_scales(i) += h;
    lo.raw_scales(i) -= h;
    const double fd = (network_elbo(hi, prior, layout, data.x, cfg) -
                       network_elbo(lo, prior, layout, data.x, cfg)) /
                      (2.0 * h);
    CHECK(est.d_raw_scales(i) == doctest::Approx(fd).epsilon(2e-3).scale(std::abs(fd) + 1e-5));
  }
}

TEST_CASE("zero-iteration nonlinear fits return the prior posture") {
  const NetworkShape shape{3, {3}};
  const NetworkLayout layout(shape);
  GraphSpec spec;
  spec.p = 3;
  spec.edges = 2;
  const NodeNetwork gen = make_generator_network(sample_graph(spec, 1), {3}, 1);
  const Dataset data = simulate_nonlinear(gen, NoiseSpec{}, 20, 2);

  TrainConfig cfg;
  cfg.max_iters = 0;
  cfg.seed = 5;
  const MeanFieldGaussian prior = MeanFieldGaussian::standard(layout.param_count());
  const NonlinearFit out = fit_nonlinear(data, shape, prior, cfg);
  const MeanFieldGaussian start = initial_network_posterior(layout, cfg.seed);
  CHECK(out.q.means == start.means);
  CHECK(out.q.raw_scales == start.raw_scales);
}

TEST_CASE("nonlinear fitting runs and improves the smoothed objective") {
  GraphSpec spec;
  spec.p = 3;
  spec.edges = 2;
  const WeightedAdjacency graph = sample_graph(spec, 20);
  const NodeNetwork gen = make_generator_network(graph, {4}, 20);
  const Dataset data = simulate_nonlinear(gen, NoiseSpec{}, 150, 21);

  const NetworkShape shape{3, {4}};
  const NetworkLayout layout(shape);
  TrainConfig cfg;
  cfg.samples_per_iter = 8;
  cfg.max_iters = 60;
  cfg.patience = 30;
  cfg.seed = 22;

  FitTrace trace;
  const NonlinearFit fit =
      fit_nonlinear(data, shape, MeanFieldGaussian::standard(layout.param_count()), cfg, &trace);
  REQUIRE(trace.iterations > 0);
  CHECK(std::isfinite(trace.elbo.back()));
  CHECK(trace.elbo.back() > trace.elbo.front());
  CHECK(fit.q.dim() == layout.param_count());
}

TEST_CASE("network posterior summaries are reproducible") {
  const NetworkShape shape{3, {3}};
  const NetworkLayout layout(shape);
  NonlinearFit fit{shape, initial_network_posterior(layout, 3)};

  const PosteriorSummary a = network_posterior_summary(fit, SparsityBudget{}, 15, 8);
  const PosteriorSummary b = network_posterior_summary(fit, SparsityBudget{}, 15, 8);
  CHECK(a.edge_probs == b.edge_probs);
  REQUIRE(a.samples.size() == 15);
  for (const auto& s : a.samples) {
    Eigen::MatrixXd dense = s.cast<double>();
    CHECK(detail::is_exactly_acyclic_dense(dense));
  }
}

TEST_CASE("prior dimension mismatches are rejected") {
  const NetworkShape shape{3, {3}};
  GraphSpec spec;
  spec.p = 3;
  spec.edges = 2;
  const NodeNetwork gen = make_generator_network(sample_graph(spec, 1), {3}, 1);
  const Dataset data = simulate_nonlinear(gen, NoiseSpec{}, 10, 2);
  CHECK_THROWS_AS(fit_nonlinear(data, shape, MeanFieldGaussian::standard(4), TrainConfig{}),
                  DimensionMismatch);
}
