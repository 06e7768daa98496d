#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dagdist/adjacency.hpp"
#include "dagdist/network.hpp"

namespace dagdist {

enum class GraphKind { ErdosRenyi, ScaleFree };

struct GraphSpec {
  int p = 10;
  int edges = 10;
  GraphKind kind = GraphKind::ErdosRenyi;
  double exponent = 2.5;  // target degree exponent for scale-free graphs
  double weight_low = 0.3;
  double weight_high = 0.7;
};

enum class NoiseKind { Gaussian, Exponential, Gumbel, Heteroscedastic };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::Gaussian;
};

struct Dataset {
  Eigen::MatrixXd x;  // n observations by p variables
  std::optional<WeightedAdjacency> truth;
  std::optional<NodeNetwork> truth_network;
  std::map<std::string, std::string> meta;
};

std::string to_name(GraphKind kind);
std::string to_name(NoiseKind kind);
GraphKind graph_kind_from_name(const std::string& name);
NoiseKind noise_kind_from_name(const std::string& name);

// Undirected skeleton by pair sampling (uniform for Erdos-Renyi, degree-biased
// for scale-free), oriented by a random node permutation so the result is
// always acyclic. Weights are uniform on +-[weight_low, weight_high].
WeightedAdjacency sample_graph(const GraphSpec& spec, std::uint64_t seed);

// Ancestral sampling of x = W^T x + eps in topological order.
Dataset simulate_linear(const WeightedAdjacency& truth, const NoiseSpec& noise, int n,
                        std::uint64_t seed);

// Per-node MLP whose induced adjacency matches |graph| exactly; rows for
// non-parents are zero.
NodeNetwork make_generator_network(const WeightedAdjacency& graph,
                                   const std::vector<int>& hidden_widths,
                                   std::uint64_t seed);

// Ancestral sampling of x = f(x) + eps in topological order of the induced
// adjacency.
Dataset simulate_nonlinear(const NodeNetwork& net, const NoiseSpec& noise, int n,
                           std::uint64_t seed);

// Numeric CSV, optional single header row (auto-detected). Ragged rows or
// non-numeric cells in the body raise ParseError.
Eigen::MatrixXd load_matrix_csv(const std::string& path);
void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                     const std::vector<std::string>& header = {});

// Truth is either a p-by-p matrix CSV or an edge list with lines "j -> k"
// (0-based indices, optional trailing weight); the format is sniffed.
WeightedAdjacency load_truth(const std::string& path, int p);

Dataset load_dataset(const std::string& data_csv, const std::string& truth_path = "");

// Head rows for training, last round(holdout_fraction * n) rows (at least one,
// at most n - 1) held out.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double holdout_fraction = 0.1);

}  // namespace dagdist
