#pragma once

#include <Eigen/Dense>
#include <vector>

#include "dagdist/projection.hpp"

namespace dagdist {

struct NetworkShape {
  int p = 0;
  std::vector<int> hidden_widths{10};
};

// Per-node MLPs x -> f_k(x): ReLU hidden layers, scalar linear output. Row j
// of node k's first-layer block carries coordinate j into f_k; row k is
// structurally zero, so node k never reads its own coordinate.
struct NodeNetwork {
  struct Layer {
    Eigen::MatrixXd weight;  // fan_in x fan_out
    Eigen::VectorXd bias;    // fan_out
  };

  int p = 0;
  std::vector<int> hidden_widths;
  std::vector<Eigen::MatrixXd> first;       // p blocks of p x hidden_widths[0]
  std::vector<Eigen::VectorXd> first_bias;  // p vectors of hidden_widths[0]
  std::vector<std::vector<Layer>> deeper;   // p stacks, final fan_out is 1

  static NodeNetwork zeros(const NetworkShape& shape);
};

// w_jk = l2 norm of row j of node k's first-layer block.
WeightedAdjacency induced_adjacency(const NodeNetwork& net);

struct NetworkProjection {
  NodeNetwork network;
  ProjectionResult matrix;  // projection of the induced adjacency
};

// Projects the induced adjacency, then rescales each first-layer row so the
// output's induced adjacency equals the projected matrix (0/0 rescales to a
// zero row). Deeper layers and all biases are copied bit for bit. Among all
// networks inducing the projected adjacency this is the closest one: the
// first-layer displacement collapses rowwise to the adjacency displacement.
NetworkProjection project_network(const NodeNetwork& net, const SparsityBudget& budget,
                                  const PathSchedule& schedule,
                                  const ProjectOptions& options = {});

// f(x) for all nodes.
Eigen::VectorXd forward(const NodeNetwork& net, const Eigen::VectorXd& x);
// Row i of the result is f(x_i) for row i of x.
Eigen::MatrixXd forward_all(const NodeNetwork& net, const Eigen::MatrixXd& x);
// f_k(x_i) for every row i of x.
Eigen::VectorXd node_forward(const NodeNetwork& net, int node, const Eigen::MatrixXd& x);

// Gaussian log density of x under x_k = f_k(x) + eps_k, eps ~ N(0, sigma2 I).
double nonlinear_log_likelihood(const NodeNetwork& net, const Eigen::MatrixXd& x,
                                double noise_variance);

// Flat parameter order: for each node k, first-layer rows j != k (ascending j,
// row-major within a row), first bias, then each deeper layer's weight
// (row-major) and bias. Row k of the first layer is not a parameter.
class NetworkLayout {
 public:
  explicit NetworkLayout(NetworkShape shape);

  const NetworkShape& shape() const { return shape_; }
  Eigen::Index param_count() const { return total_; }
  Eigen::Index per_node() const { return per_node_; }

  Eigen::VectorXd pack(const NodeNetwork& net) const;
  NodeNetwork unpack(const Eigen::VectorXd& params) const;

 private:
  NetworkShape shape_;
  Eigen::Index per_node_ = 0;
  Eigen::Index total_ = 0;
};

}  // namespace dagdist
