#include <doctest.h>

#include <cmath>
#include <random>

#include "dagdist/network.hpp"
#include "dagdist/rng.hpp"

using namespace dagdist;

namespace {

NodeNetwork random_network(const NetworkShape& shape, std::uint64_t seed,
                           double first_scale = 0.25) {
  NodeNetwork net = NodeNetwork::zeros(shape);
  auto rng = stream_rng(seed, 0);
  std::normal_distribution<double> normal;
  for (int k = 0; k < shape.p; ++k) {
    for (int j = 0; j < shape.p; ++j) {
      if (j == k) continue;
      for (int c = 0; c < net.first[k].cols(); ++c)
        net.first[k](j, c) = first_scale * normal(rng);
    }
    for (Eigen::Index c = 0; c < net.first_bias[k].size(); ++c)
      net.first_bias[k](c) = 0.1 * normal(rng);
    for (auto& layer : net.deeper[k]) {
      for (Eigen::Index i = 0; i < layer.weight.size(); ++i)
        layer.weight(i / layer.weight.cols(), i % layer.weight.cols()) = normal(rng);
      for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = 0.1 * normal(rng);
    }
  }
  return net;
}

}  // namespace

TEST_CASE("induced adjacency is the rowwise norm of the first layer") {
  NodeNetwork net = NodeNetwork::zeros({2, {4}});
  net.first[1].row(0) << 1.0, 1.0, 1.0, 1.0;
  const WeightedAdjacency w = induced_adjacency(net);
  CHECK(w(0, 1) == 2.0);
  CHECK(w(1, 0) == 0.0);
}

TEST_CASE("a node never reads its own coordinate") {
  NodeNetwork net = NodeNetwork::zeros({3, {2}});
  net.first[1](1, 0) = 0.5;  // row k of block k must stay zero
  CHECK_THROWS_AS(induced_adjacency(net), DimensionMismatch);
}

TEST_CASE("forward pass matches the hand-computed one-hidden-unit case") {
  NodeNetwork net = NodeNetwork::zeros({2, {1}});
  const double a = 0.75, b = -0.2, c = 2.0, e = 0.3;
  net.first[1](0, 0) = a;
  net.first_bias[1](0) = b;
  net.deeper[1][0].weight(0, 0) = c;
  net.deeper[1][0].bias(0) = e;

  Eigen::VectorXd x(2);
  x << 1.5, 9.9;  // node 1 must ignore its own coordinate
  const double expected = c * std::max(0.0, a * 1.5 + b) + e;
  const Eigen::VectorXd f = forward(net, x);
  CHECK(f(1) == doctest::Approx(expected).epsilon(1e-15));
  CHECK(f(0) == 0.0);  // node 0 still has the all-zero network
  // negative preactivation is clipped by the ReLU
  x(0) = -1.0;
  CHECK(forward(net, x)(1) == doctest::Approx(c * 0.0 + e).epsilon(1e-15));
}

TEST_CASE("batched forward agrees with the vector forward") {
  const NetworkShape shape{4, {5, 3}};
  const NodeNetwork net = random_network(shape, 8);
  auto rng = stream_rng(9, 0);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(6, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i / 4, i % 4) = normal(rng);

  const Eigen::MatrixXd batch = forward_all(net, x);
  for (int i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd row = forward(net, x.row(i).transpose());
    for (int k = 0; k < 4; ++k) CHECK(batch(i, k) == doctest::Approx(row(k)).epsilon(1e-13));
  }
  for (int k = 0; k < 4; ++k) {
    const Eigen::VectorXd col = node_forward(net, k, x);
    for (int i = 0; i < x.rows(); ++i) CHECK(col(i) == batch(i, k));
  }
}

TEST_CASE("packing and unpacking are mutually inverse") {
  const NetworkShape shape{3, {4, 2}};
  const NetworkLayout layout(shape);
  const NodeNetwork net = random_network(shape, 10);

  const Eigen::VectorXd params = layout.pack(net);
  CHECK(params.size() == layout.param_count());
  const NodeNetwork back = layout.unpack(params);
  for (int k = 0; k < shape.p; ++k) {
    CHECK(back.first[k] == net.first[k]);
    CHECK(back.first_bias[k] == net.first_bias[k]);
    for (std::size_t l = 0; l < net.deeper[k].size(); ++l) {
      CHECK(back.deeper[k][l].weight == net.deeper[k][l].weight);
      CHECK(back.deeper[k][l].bias == net.deeper[k][l].bias);
    }
  }
  CHECK(layout.pack(back) == params);
}

TEST_CASE("network projection rescales rows and leaves deeper layers untouched") {
  const NetworkShape shape{6, {6}};
  const NodeNetwork net = random_network(shape, 11);
  const PathSchedule schedule = PathSchedule::nonlinear_reference(shape.p);

  const NetworkProjection out = project_network(net, SparsityBudget{}, schedule);
  const WeightedAdjacency reinduced = induced_adjacency(out.network);
  CHECK((reinduced.matrix() - out.matrix.projected.matrix()).cwiseAbs().maxCoeff() < 1e-8);

  for (int k = 0; k < shape.p; ++k) {
    CHECK(out.network.first_bias[k] == net.first_bias[k]);
    for (std::size_t l = 0; l < net.deeper[k].size(); ++l) {
      CHECK(out.network.deeper[k][l].weight == net.deeper[k][l].weight);
      CHECK(out.network.deeper[k][l].bias == net.deeper[k][l].bias);
    }
  }

  // the first-layer displacement collapses rowwise to the adjacency displacement
  double displacement = 0.0;
  for (int k = 0; k < shape.p; ++k)
    displacement += (out.network.first[k] - net.first[k]).squaredNorm();
  CHECK(std::abs(0.5 * displacement - out.matrix.objective) < 1e-10);

  // zeroed edges zero the whole row
  for (int k = 0; k < shape.p; ++k)
    for (int j = 0; j < shape.p; ++j)
      if (out.matrix.projected(j, k) == 0.0)
        CHECK(out.network.first[k].row(j).norm() == 0.0);
}

TEST_CASE("nonlinear log likelihood of the zero network is the Gaussian constant") {
  const NodeNetwork net = NodeNetwork::zeros({2, {3}});
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(1, 2);
  CHECK(nonlinear_log_likelihood(net, x, 1.0) ==
        doctest::Approx(-std::log(2.0 * M_PI)).epsilon(1e-14));
}

TEST_CASE("malformed networks are rejected") {
  NodeNetwork net = NodeNetwork::zeros({3, {2}});
  net.first[0] = Eigen::MatrixXd::Zero(2, 2);  // wrong fan-in
  CHECK_THROWS_AS(induced_adjacency(net), DimensionMismatch);
}
