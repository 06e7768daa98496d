#include "dagdist/network.hpp"

#include <cmath>
#include <stdexcept>

#include "dagdist/errors.hpp"

namespace dagdist {
namespace {

void check_shape(const NetworkShape& shape) {
  if (shape.p < 1) throw std::invalid_argument("network needs at least one node");
  if (shape.p > kMaxNodes) throw TooLarge("node count exceeds limit");
  if (shape.hidden_widths.empty()) throw std::invalid_argument("need at least one hidden layer");
  for (int w : shape.hidden_widths)
    if (w < 1) throw std::invalid_argument("hidden widths must be positive");
}

void check_network(const NodeNetwork& net) {
  const int p = net.p;
  if (p < 1 || net.hidden_widths.empty()) throw DimensionMismatch("malformed network");
  if (static_cast<int>(net.first.size()) != p || static_cast<int>(net.first_bias.size()) != p ||
      static_cast<int>(net.deeper.size()) != p)
    throw DimensionMismatch("network has wrong number of node blocks");
  const int d0 = net.hidden_widths.front();
  for (int k = 0; k < p; ++k) {
    if (net.first[k].rows() != p || net.first[k].cols() != d0)
      throw DimensionMismatch("first layer block has wrong shape");
    if (net.first_bias[k].size() != d0) throw DimensionMismatch("first bias has wrong size");
    if (net.first[k].row(k).cwiseAbs().sum() != 0.0)
      throw DimensionMismatch("self row of first layer must be zero");
    int fan_in = d0;
    const auto& stack = net.deeper[k];
    if (stack.size() != net.hidden_widths.size())
      throw DimensionMismatch("deeper stack has wrong depth");
    for (std::size_t i = 0; i < stack.size(); ++i) {
      const int fan_out =
          i + 1 < net.hidden_widths.size() ? net.hidden_widths[i + 1] : 1;
      if (stack[i].weight.rows() != fan_in || stack[i].weight.cols() != fan_out ||
          stack[i].bias.size() != fan_out)
        throw DimensionMismatch("deeper layer has wrong shape");
      fan_in = fan_out;
    }
  }
}

}  // namespace

NodeNetwork NodeNetwork::zeros(const NetworkShape& shape) {
  check_shape(shape);
  NodeNetwork net;
  net.p = shape.p;
  net.hidden_widths = shape.hidden_widths;
  const int d0 = shape.hidden_widths.front();
  net.first.assign(shape.p, Eigen::MatrixXd::Zero(shape.p, d0));
  net.first_bias.assign(shape.p, Eigen::VectorXd::Zero(d0));
  net.deeper.resize(shape.p);
  for (int k = 0; k < shape.p; ++k) {
    int fan_in = d0;
    for (std::size_t i = 0; i < shape.hidden_widths.size(); ++i) {
      const int fan_out =
          i + 1 < shape.hidden_widths.size() ? shape.hidden_widths[i + 1] : 1;
      net.deeper[k].push_back({Eigen::MatrixXd::Zero(fan_in, fan_out),
                               Eigen::VectorXd::Zero(fan_out)});
      fan_in = fan_out;
    }
  }
  return net;
}

WeightedAdjacency induced_adjacency(const NodeNetwork& net) {
  check_network(net);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(net.p, net.p);
  for (int k = 0; k < net.p; ++k)
    for (int j = 0; j < net.p; ++j)
      if (j != k) w(j, k) = net.first[k].row(j).norm();
  return WeightedAdjacency(std::move(w));
}

NetworkProjection project_network(const NodeNetwork& net, const SparsityBudget& budget,
                                  const PathSchedule& schedule,
                                  const ProjectOptions& options) {
  const WeightedAdjacency induced = induced_adjacency(net);
  NetworkProjection out{net, project(induced, budget, schedule, options)};
  for (int k = 0; k < net.p; ++k) {
    for (int j = 0; j < net.p; ++j) {
      if (j == k) continue;
      const double before = induced(j, k);
      if (before == 0.0)
        out.network.first[k].row(j).setZero();
      else
        out.network.first[k].row(j) *= out.matrix.projected(j, k) / before;
    }
  }
  return out;
}

Eigen::VectorXd forward(const NodeNetwork& net, const Eigen::VectorXd& x) {
  check_network(net);
  if (x.size() != net.p) throw DimensionMismatch("input size does not match node count");
  Eigen::VectorXd out(net.p);
  for (int k = 0; k < net.p; ++k) {
    Eigen::VectorXd h =
        (net.first[k].transpose() * x + net.first_bias[k]).cwiseMax(0.0);
    const auto& stack = net.deeper[k];
    for (std::size_t i = 0; i + 1 < stack.size(); ++i)
      h = (stack[i].weight.transpose() * h + stack[i].bias).cwiseMax(0.0);
    out(k) = (stack.back().weight.transpose() * h + stack.back().bias)(0);
  }
  return out;
}

Eigen::VectorXd node_forward(const NodeNetwork& net, int node, const Eigen::MatrixXd& x) {
  check_network(net);
  if (x.cols() != net.p) throw DimensionMismatch("data width does not match node count");
  if (node < 0 || node >= net.p) throw DimensionMismatch("node index out of range");
  Eigen::MatrixXd h =
      ((x * net.first[node]).rowwise() + net.first_bias[node].transpose()).cwiseMax(0.0);
  const auto& stack = net.deeper[node];
  for (std::size_t i = 0; i + 1 < stack.size(); ++i)
    h = ((h * stack[i].weight).rowwise() + stack[i].bias.transpose()).cwiseMax(0.0);
  return h * stack.back().weight +
         Eigen::VectorXd::Constant(x.rows(), stack.back().bias(0));
}

Eigen::MatrixXd forward_all(const NodeNetwork& net, const Eigen::MatrixXd& x) {
  check_network(net);
  if (x.cols() != net.p) throw DimensionMismatch("data width does not match node count");
  Eigen::MatrixXd out(x.rows(), net.p);
  for (int k = 0; k < net.p; ++k) out.col(k) = node_forward(net, k, x);
  return out;
}

double nonlinear_log_likelihood(const NodeNetwork& net, const Eigen::MatrixXd& x,
                                double noise_variance) {
  if (noise_variance <= 0.0) throw std::invalid_argument("noise variance must be positive");
  const Eigen::MatrixXd residual = x - forward_all(net, x);
  const double n = static_cast<double>(x.rows());
  const double p = static_cast<double>(x.cols());
  return -0.5 * n * p * std::log(2.0 * M_PI * noise_variance) -
         residual.squaredNorm() / (2.0 * noise_variance);
}

NetworkLayout::NetworkLayout(NetworkShape shape) : shape_(std::move(shape)) {
  check_shape(shape_);
  const auto& widths = shape_.hidden_widths;
  per_node_ = static_cast<Eigen::Index>(shape_.p - 1) * widths.front() + widths.front();
  int fan_in = widths.front();
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const int fan_out = i + 1 < widths.size() ? widths[i + 1] : 1;
    per_node_ += static_cast<Eigen::Index>(fan_in) * fan_out + fan_out;
    fan_in = fan_out;
  }
  total_ = per_node_ * shape_.p;
}

Eigen::VectorXd NetworkLayout::pack(const NodeNetwork& net) const {
  check_network(net);
  if (net.p != shape_.p || net.hidden_widths != shape_.hidden_widths)
    throw DimensionMismatch("network does not match layout shape");
  Eigen::VectorXd params(total_);
  Eigen::Index at = 0;
  for (int k = 0; k < shape_.p; ++k) {
    for (int j = 0; j < shape_.p; ++j) {
      if (j == k) continue;
      for (Eigen::Index c = 0; c < net.first[k].cols(); ++c)
        params(at++) = net.first[k](j, c);
    }
    params.segment(at, net.first_bias[k].size()) = net.first_bias[k];
    at += net.first_bias[k].size();
    for (const auto& layer : net.deeper[k]) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
          params(at++) = layer.weight(r, c);
      params.segment(at, layer.bias.size()) = layer.bias;
      at += layer.bias.size();
    }
  }
  return params;
}

NodeNetwork NetworkLayout::unpack(const Eigen::VectorXd& params) const {
  if (params.size() != total_) throw DimensionMismatch("parameter vector has wrong length");
  NodeNetwork net = NodeNetwork::zeros(shape_);
  Eigen::Index at = 0;
  for (int k = 0; k < shape_.p; ++k) {
    for (int j = 0; j < shape_.p; ++j) {
      if (j == k) continue;
      for (Eigen::Index c = 0; c < net.first[k].cols(); ++c)
        net.first[k](j, c) = params(at++);
    }
    net.first_bias[k] = params.segment(at, net.first_bias[k].size());
    at += net.first_bias[k].size();
    for (auto& layer : net.deeper[k]) {
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
          layer.weight(r, c) = params(at++);
      layer.bias = params.segment(at, layer.bias.size());
      at += layer.bias.size();
    }
  }
  return net;
}

}  // namespace dagdist
