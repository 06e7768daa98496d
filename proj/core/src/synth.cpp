#include "dagdist/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "dagdist/acyclicity.hpp"
#include "dagdist/errors.hpp"
#include "dagdist/rng.hpp"

namespace dagdist {
namespace {

// Unordered pairs {a < b} in lexicographic order; first_index(a) is the
// position of (a, a+1).
long long first_index(int a, int p) {
  return static_cast<long long>(a) * p - static_cast<long long>(a) * (a + 1) / 2;
}

std::pair<int, int> decode_pair(long long idx, int p) {
  int lo = 0, hi = p - 2;  // largest a with first_index(a) <= idx
  while (lo < hi) {
    const int mid = (lo + hi + 1) / 2;
    if (first_index(mid, p) <= idx)
      lo = mid;
    else
      hi = mid - 1;
  }
  return {lo, lo + 1 + static_cast<int>(idx - first_index(lo, p))};
}

std::vector<long long> sample_uniform_pairs(int edges, long long total,
                                            std::mt19937_64& rng) {
  // Floyd's algorithm: each of the last `edges` slots either keeps a fresh
  // uniform draw or, on collision, its own index.
  std::unordered_set<long long> chosen;
  chosen.reserve(static_cast<std::size_t>(edges) * 2);
  for (long long j = total - edges; j < total; ++j) {
    std::uniform_int_distribution<long long> pick(0, j);
    const long long t = pick(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  return {chosen.begin(), chosen.end()};
}

std::vector<long long> sample_degree_biased_pairs(const GraphSpec& spec, long long total,
                                                  std::mt19937_64& rng) {
  // Chung-Lu style: endpoint i drawn with probability proportional to
  // (i + 1)^(-1/(exponent - 1)), duplicates rejected, uniform fill as a
  // last resort so the requested edge count is always met.
  std::vector<double> node_weight(spec.p);
  const double power = -1.0 / (spec.exponent - 1.0);
  for (int i = 0; i < spec.p; ++i) node_weight[i] = std::pow(i + 1.0, power);
  std::discrete_distribution<int> endpoint(node_weight.begin(), node_weight.end());

  std::unordered_set<long long> chosen;
  chosen.reserve(static_cast<std::size_t>(spec.edges) * 2);
  long long attempts = 0;
  const long long max_attempts = 200LL * spec.edges + 1000;
  while (static_cast<int>(chosen.size()) < spec.edges && attempts < max_attempts) {
    ++attempts;
    int a = endpoint(rng);
    int b = endpoint(rng);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    chosen.insert(first_index(a, spec.p) + (b - a - 1));
  }
  if (static_cast<int>(chosen.size()) < spec.edges) {
    std::vector<long long> rest;
    rest.reserve(total - chosen.size());
    for (long long idx = 0; idx < total; ++idx)
      if (!chosen.count(idx)) rest.push_back(idx);
    std::shuffle(rest.begin(), rest.end(), rng);
    for (std::size_t i = 0; static_cast<int>(chosen.size()) < spec.edges; ++i)
      chosen.insert(rest[i]);
  }
  return {chosen.begin(), chosen.end()};
}

void check_spec(const GraphSpec& spec) {
  if (spec.p < 1) throw InfeasibleSpec("need at least one node");
  if (spec.p > kMaxNodes) throw TooLarge("node count exceeds limit");
  const long long total = static_cast<long long>(spec.p) * (spec.p - 1) / 2;
  if (spec.edges < 0 || spec.edges > total)
    throw InfeasibleSpec("edge count outside [0, p*(p-1)/2]");
  if (!(spec.weight_low > 0.0) || !(spec.weight_high >= spec.weight_low) ||
      !std::isfinite(spec.weight_high))
    throw InfeasibleSpec("weight range must satisfy 0 < low <= high < inf");
  if (spec.kind == GraphKind::ScaleFree && !(spec.exponent > 1.0))
    throw InfeasibleSpec("scale-free exponent must exceed 1");
}

Eigen::MatrixXd draw_noise(const NoiseSpec& noise, int n, int p, std::mt19937_64& rng) {
  Eigen::MatrixXd e(n, p);
  switch (noise.kind) {
    case NoiseKind::Gaussian: {
      std::normal_distribution<double> dist(0.0, 1.0);
      for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) e(i, j) = dist(rng);
      break;
    }
    case NoiseKind::Exponential: {
      std::exponential_distribution<double> dist(1.0);
      for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) e(i, j) = dist(rng);
      break;
    }
    case NoiseKind::Gumbel: {
      std::extreme_value_distribution<double> dist(0.0, 1.0);
      for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) e(i, j) = dist(rng);
      break;
    }
    case NoiseKind::Heteroscedastic: {
      std::uniform_real_distribution<double> sigma_dist(2.0 / 3.0, 4.0 / 3.0);
      Eigen::VectorXd sigma(p);
      for (int j = 0; j < p; ++j) sigma(j) = sigma_dist(rng);
      std::normal_distribution<double> dist(0.0, 1.0);
      for (int j = 0; j < p; ++j)
        for (int i = 0; i < n; ++i) e(i, j) = sigma(j) * dist(rng);
      break;
    }
  }
  return e;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool parse_cell(const std::string& raw, double& out) {
  const std::string cell = trim(raw);
  if (cell.empty()) return false;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && ptr == end;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

}  // namespace

std::string to_name(GraphKind kind) {
  return kind == GraphKind::ErdosRenyi ? "er" : "scale-free";
}

std::string to_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::Gaussian: return "gaussian";
    case NoiseKind::Exponential: return "exponential";
    case NoiseKind::Gumbel: return "gumbel";
    case NoiseKind::Heteroscedastic: return "heteroscedastic";
  }
  return "gaussian";
}

GraphKind graph_kind_from_name(const std::string& name) {
  if (name == "er" || name == "erdos-renyi") return GraphKind::ErdosRenyi;
  if (name == "scale-free" || name == "sf") return GraphKind::ScaleFree;
  throw ParseError("unknown graph kind: " + name);
}

NoiseKind noise_kind_from_name(const std::string& name) {
  if (name == "gaussian") return NoiseKind::Gaussian;
  if (name == "exponential") return NoiseKind::Exponential;
  if (name == "gumbel") return NoiseKind::Gumbel;
  if (name == "heteroscedastic") return NoiseKind::Heteroscedastic;
  throw ParseError("unknown noise kind: " + name);
}

WeightedAdjacency sample_graph(const GraphSpec& spec, std::uint64_t seed) {
  check_spec(spec);
  auto rng = stream_rng(seed, 0);

  std::vector<int> order(spec.p);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> position(spec.p);
  for (int i = 0; i < spec.p; ++i) position[order[i]] = i;

  const long long total = static_cast<long long>(spec.p) * (spec.p - 1) / 2;
  std::vector<long long> pairs;
  if (spec.edges > 0) {
    pairs = spec.kind == GraphKind::ErdosRenyi
                ? sample_uniform_pairs(spec.edges, total, rng)
                : sample_degree_biased_pairs(spec, total, rng);
  }
  std::sort(pairs.begin(), pairs.end());

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(spec.p, spec.p);
  std::uniform_real_distribution<double> magnitude(spec.weight_low, spec.weight_high);
  std::uniform_int_distribution<int> coin(0, 1);
  for (long long idx : pairs) {
    auto [a, b] = decode_pair(idx, spec.p);
    const int from = position[a] < position[b] ? a : b;
    const int to = from == a ? b : a;
    const double sign = coin(rng) == 0 ? 1.0 : -1.0;
    w(from, to) = sign * magnitude(rng);
  }
  return WeightedAdjacency(std::move(w));
}

Dataset simulate_linear(const WeightedAdjacency& truth, const NoiseSpec& noise, int n,
                        std::uint64_t seed) {
  if (n < 1) throw InfeasibleSpec("need at least one observation");
  const int p = truth.dim();
  const std::vector<int> order = detail::topological_order(truth.matrix());
  if (order.empty()) throw CyclicInput("truth graph has a directed cycle");
  auto rng = stream_rng(seed, 0);
  const Eigen::MatrixXd e = draw_noise(noise, n, p, rng);

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, p);
  for (int k : order) x.col(k) = e.col(k) + x * truth.matrix().col(k);

  Dataset out;
  out.x = std::move(x);
  out.meta = {{"mode", "linear"},
              {"noise", to_name(noise.kind)},
              {"p", std::to_string(p)},
              {"edges", std::to_string(truth.edge_count())},
              {"n", std::to_string(n)},
              {"seed", std::to_string(seed)}};
  out.truth = truth;
  return out;
}

NodeNetwork make_generator_network(const WeightedAdjacency& graph,
                                   const std::vector<int>& hidden_widths,
                                   std::uint64_t seed) {
  NetworkShape shape{graph.dim(), hidden_widths};
  NodeNetwork net = NodeNetwork::zeros(shape);
  auto rng = stream_rng(seed, 0);
  std::normal_distribution<double> unit(0.0, 1.0);

  for (int k = 0; k < net.p; ++k) {
    for (int j = 0; j < net.p; ++j) {
      if (j == k || graph(j, k) == 0.0) continue;
      Eigen::VectorXd direction(net.first[k].cols());
      for (Eigen::Index c = 0; c < direction.size(); ++c) direction(c) = unit(rng);
      if (direction.norm() == 0.0) direction(0) = 1.0;
      net.first[k].row(j) =
          direction.transpose() * (std::abs(graph(j, k)) / direction.norm());
    }
    for (auto& layer : net.deeper[k]) {
      const double scale = std::sqrt(2.0 / static_cast<double>(layer.weight.rows()));
      for (Eigen::Index r = 0; r < layer.weight.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.weight.cols(); ++c)
          layer.weight(r, c) = scale * unit(rng);
    }
  }
  return net;
}

Dataset simulate_nonlinear(const NodeNetwork& net, const NoiseSpec& noise, int n,
                           std::uint64_t seed) {
  if (n < 1) throw InfeasibleSpec("need at least one observation");
  WeightedAdjacency truth = induced_adjacency(net);
  const std::vector<int> order = detail::topological_order(truth.matrix());
  if (order.empty()) throw CyclicInput("induced adjacency has a directed cycle");
  auto rng = stream_rng(seed, 0);
  const Eigen::MatrixXd e = draw_noise(noise, n, net.p, rng);

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, net.p);
  for (int k : order) x.col(k) = node_forward(net, k, x) + e.col(k);

  std::string widths;
  for (std::size_t i = 0; i < net.hidden_widths.size(); ++i)
    widths += (i ? "," : "") + std::to_string(net.hidden_widths[i]);

  Dataset out;
  out.x = std::move(x);
  out.meta = {{"mode", "nonlinear"},
              {"noise", to_name(noise.kind)},
              {"p", std::to_string(net.p)},
              {"edges", std::to_string(truth.edge_count())},
              {"n", std::to_string(n)},
              {"seed", std::to_string(seed)},
              {"hidden", widths}};
  out.truth = std::move(truth);
  out.truth_network = net;
  return out;
}

Eigen::MatrixXd load_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  Eigen::Index cols = -1;
  bool first_content_line = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    std::vector<double> row(cells.size());
    bool ok = true;
    for (std::size_t i = 0; i < cells.size() && ok; ++i) ok = parse_cell(cells[i], row[i]);
    if (!ok) {
      if (first_content_line) {  // header row
        cols = static_cast<Eigen::Index>(cells.size());
        first_content_line = false;
        continue;
      }
      throw ParseError(path + ":" + std::to_string(line_no) + ": non-numeric cell");
    }
    if (cols == -1)
      cols = static_cast<Eigen::Index>(row.size());
    else if (static_cast<Eigen::Index>(row.size()) != cols)
      throw ParseError(path + ":" + std::to_string(line_no) + ": ragged row");
    first_content_line = false;
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": no data rows");

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  return m;
}

void save_matrix_csv(const std::string& path, const Eigen::MatrixXd& m,
                     const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << std::setprecision(17);
  if (!header.empty()) {
    if (static_cast<Eigen::Index>(header.size()) != m.cols())
      throw DimensionMismatch("header width does not match matrix");
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
  }
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << "\n";
  }
  if (!out) throw ParseError("failed writing " + path);
}

WeightedAdjacency load_truth(const std::string& path, int p) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::string line;
  bool edge_list = false;
  while (std::getline(in, line)) {
    const std::string content = trim(line);
    if (content.empty()) continue;
    edge_list = content.find("->") != std::string::npos;
    break;
  }
  in.clear();
  in.seekg(0);

  if (!edge_list) {
    Eigen::MatrixXd m = load_matrix_csv(path);
    if (m.rows() != m.cols() || (p > 0 && m.rows() != p))
      throw ParseError(path + ": truth matrix must be " + std::to_string(p) + " by " +
                       std::to_string(p));
    return WeightedAdjacency::from_dense(std::move(m));
  }

  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string content = trim(line);
    if (content.empty() || content[0] == '#') continue;
    const auto arrow = content.find("->");
    if (arrow == std::string::npos)
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'j -> k'");
    std::istringstream left(content.substr(0, arrow));
    std::istringstream right(content.substr(arrow + 2));
    int from = -1, to = -1;
    double weight = 1.0;
    left >> from;
    right >> to;
    if (left.fail() || right.fail())
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected 'j -> k'");
    right >> weight;
    if (right.fail()) weight = 1.0;
    if (from < 0 || from >= p || to < 0 || to >= p)
      throw ParseError(path + ":" + std::to_string(line_no) + ": node index out of range");
    if (from == to) throw ParseError(path + ":" + std::to_string(line_no) + ": self loop");
    m(from, to) = weight;
  }
  return WeightedAdjacency(std::move(m));
}

Dataset load_dataset(const std::string& data_csv, const std::string& truth_path) {
  Dataset out;
  out.x = load_matrix_csv(data_csv);
  out.meta = {{"source", data_csv},
              {"n", std::to_string(out.x.rows())},
              {"p", std::to_string(out.x.cols())}};
  if (!out.x.allFinite()) throw ParseError(data_csv + ": non-finite values in data");
  if (!truth_path.empty())
    out.truth = load_truth(truth_path, static_cast<int>(out.x.cols()));
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double holdout_fraction) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw std::invalid_argument("holdout fraction must be in (0, 1)");
  const Eigen::Index n = data.x.rows();
  if (n < 2) throw InfeasibleSpec("need at least two rows to split");
  Eigen::Index n_val = static_cast<Eigen::Index>(std::llround(holdout_fraction * n));
  n_val = std::max<Eigen::Index>(1, std::min(n_val, n - 1));

  Dataset train = data;
  Dataset val = data;
  train.x = data.x.topRows(n - n_val);
  val.x = data.x.bottomRows(n_val);
  train.meta["split"] = "train";
  val.meta["split"] = "validation";
  train.meta["n"] = std::to_string(train.x.rows());
  val.meta["n"] = std::to_string(val.x.rows());
  return {std::move(train), std::move(val)};
}

}  // namespace dagdist
