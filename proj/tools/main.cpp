#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dagdist/checkpoint.hpp"
#include "dagdist/errors.hpp"
#include "dagdist/metrics.hpp"
#include "dagdist/nonlinear.hpp"
#include "dagdist/projection.hpp"
#include "dagdist/rng.hpp"
#include "dagdist/sampling.hpp"
#include "dagdist/synth.hpp"
#include "dagdist/variational.hpp"
#include "dagdist/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dagdist;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::string lambda_text(double lambda) {
  if (std::isinf(lambda)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", lambda);
  return buf;
}

// Every output file gets a sibling <name>.meta.json carrying the version, the
// run's config hash, and the seed, so artifacts stay traceable on their own.
void write_sidecar(const fs::path& file, const std::string& config_hash,
                   std::uint64_t seed) {
  json meta;
  meta["version"] = kVersion;
  meta["config_hash"] = config_hash;
  meta["seed"] = seed;
  std::ofstream out(file.string() + ".meta.json");
  if (!out) throw ParseError("cannot write " + file.string() + ".meta.json");
  out << meta.dump(2) << "\n";
}

void write_json(const fs::path& file, const json& doc) {
  std::ofstream out(file);
  if (!out) throw ParseError("cannot write " + file.string());
  out << doc.dump(2) << "\n";
}

json meta_block(const std::string& command, const std::string& config_hash,
                std::uint64_t seed) {
  json meta;
  meta["tool"] = "dagdist";
  meta["version"] = kVersion;
  meta["command"] = command;
  meta["config_hash"] = config_hash;
  meta["seed"] = seed;
  return meta;
}

struct GenerateArgs {
  std::string out;
  int p = 10;
  int edges = 20;
  std::string graph = "er";
  double exponent = 2.5;
  std::string noise = "gaussian";
  std::string mode = "linear";
  std::vector<int> hidden{10};
  int n = 100;
  std::uint64_t seed = 0;
  double weight_low = 0.3;
  double weight_high = 0.7;
};

int run_generate(const GenerateArgs& a) {
  GraphSpec spec;
  spec.p = a.p;
  spec.edges = a.edges;
  spec.kind = graph_kind_from_name(a.graph);
  spec.exponent = a.exponent;
  spec.weight_low = a.weight_low;
  spec.weight_high = a.weight_high;
  const NoiseSpec noise{noise_kind_from_name(a.noise)};

  const WeightedAdjacency graph = sample_graph(spec, mix_seed(a.seed, 1));
  Dataset data;
  if (a.mode == "linear") {
    data = simulate_linear(graph, noise, a.n, mix_seed(a.seed, 2));
  } else if (a.mode == "nonlinear") {
    const NodeNetwork net = make_generator_network(graph, a.hidden, mix_seed(a.seed, 3));
    data = simulate_nonlinear(net, noise, a.n, mix_seed(a.seed, 2));
  } else {
    throw ParseError("mode must be linear or nonlinear");
  }
  data.meta["graph"] = a.graph;
  data.meta["seed"] = std::to_string(a.seed);
  if (spec.kind == GraphKind::ScaleFree)
    data.meta["exponent"] = std::to_string(a.exponent);

  const std::string hash = fnv1a_hex(
      "generate;p=" + std::to_string(a.p) + ";edges=" + std::to_string(a.edges) +
      ";graph=" + a.graph + ";noise=" + a.noise + ";mode=" + a.mode +
      ";n=" + std::to_string(a.n) + ";seed=" + std::to_string(a.seed));

  fs::create_directories(a.out);
  const fs::path dir(a.out);
  save_matrix_csv((dir / "data.csv").string(), data.x);
  write_sidecar(dir / "data.csv", hash, a.seed);
  // The generator's truth matrix for nonlinear data carries the induced row
  // norms; its support is the graph.
  save_matrix_csv((dir / "truth.csv").string(),
                  a.mode == "linear" ? graph.matrix() : data.truth->matrix());
  write_sidecar(dir / "truth.csv", hash, a.seed);

  json meta = meta_block("generate", hash, a.seed);
  for (const auto& [k, v] : data.meta) meta["dataset"][k] = v;
  meta["files"] = {"data.csv", "truth.csv"};
  write_json(dir / "meta.json", meta);
  return 0;
}

struct ProjectArgs {
  std::string in;
  std::string out;
  double lambda = kInf;
  double threshold = 0.1;
  bool no_ensure_acyclic = false;
  int stages = 0;
  int inner_iters = 0;
  double inner_tol = 0.0;
  double inner_step = 0.0;
  double mu = 0.0;
  double decay = 0.0;
};

PathSchedule schedule_from_flags(int p, int stages, int inner_iters, double inner_tol,
                                 double inner_step, double mu, double decay) {
  PathSchedule s = PathSchedule::reference(p);
  if (stages > 0) s.stages = stages;
  if (inner_iters > 0) s.inner_max_iters = inner_iters;
  if (inner_tol > 0.0) s.inner_tolerance = inner_tol;
  if (inner_step > 0.0) s.inner_step = inner_step;
  if (mu > 0.0) s.mu_initial = mu;
  if (decay > 0.0) s.decay = decay;
  return s;
}

int run_project(const ProjectArgs& a) {
  const Eigen::MatrixXd m = load_matrix_csv(a.in);
  if (m.rows() != m.cols()) throw ParseError(a.in + ": projection input must be square");
  const WeightedAdjacency input = WeightedAdjacency::from_dense(m);
  const int p = input.dim();

  const PathSchedule schedule = schedule_from_flags(p, a.stages, a.inner_iters,
                                                    a.inner_tol, a.inner_step, a.mu, a.decay);
  const SparsityBudget budget{a.lambda};
  const ProjectOptions options{a.threshold, !a.no_ensure_acyclic};
  const ProjectionResult result = project(input, budget, schedule, options);

  const std::string hash =
      fnv1a_hex("project;lambda=" + lambda_text(a.lambda) +
                ";threshold=" + std::to_string(a.threshold) + ";p=" + std::to_string(p));

  fs::create_directories(a.out);
  const fs::path dir(a.out);
  save_matrix_csv((dir / "projected.csv").string(), result.projected.matrix());
  write_sidecar(dir / "projected.csv", hash, 0);

  json report;
  report["meta"] = meta_block("project", hash, 0);
  report["objective"] = result.objective;
  report["active_size"] = result.active_set.size();
  report["binding"] = result.binding;
  report["acyclic"] = is_exactly_acyclic(result.projected);
  report["l1_norm"] = result.projected.l1_norm();
  report["lambda"] = std::isinf(a.lambda) ? json("inf") : json(a.lambda);
  write_json(dir / "projection.json", report);
  return 0;
}

struct FitArgs {
  std::string data;
  std::string out;
  std::string mode = "linear";
  std::vector<int> hidden{10};
  std::optional<double> lambda;
  std::string lambda_grid = "auto";
  int grid_size = 10;
  int grid_samples = 100;
  double holdout = 0.1;
  int samples = 100;
  int max_iters = 2000;
  int patience = 100;
  double lr = 0.1;
  double smoothing = 0.9;
  double noise_variance = 1.0;
  double threshold = 0.1;
  std::uint64_t seed = 0;
};

TrainConfig train_config(const FitArgs& a, double lambda) {
  TrainConfig cfg;
  cfg.learning_rate = a.lr;
  cfg.samples_per_iter = a.samples;
  cfg.max_iters = a.max_iters;
  cfg.patience = a.patience;
  cfg.elbo_smoothing = a.smoothing;
  cfg.budget = SparsityBudget{lambda};
  cfg.seed = a.seed;
  cfg.noise_variance = a.noise_variance;
  cfg.hard_threshold = a.threshold;
  return cfg;
}

std::vector<NetworkProjection> draw_network_projections(const NonlinearFit& nf,
                                                        const SparsityBudget& budget,
                                                        int count, std::uint64_t seed,
                                                        const ProjectOptions& options) {
  const NetworkLayout layout(nf.shape);
  const Eigen::VectorXd scales = nf.q.scales();
  const PathSchedule schedule = PathSchedule::nonlinear_reference(nf.shape.p);
  std::vector<NetworkProjection> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    auto rng = stream_rng(seed, static_cast<std::uint64_t>(i));
    std::normal_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0;; ++attempt) {
      Eigen::VectorXd eps(nf.q.dim());
      for (Eigen::Index c = 0; c < eps.size(); ++c) eps(c) = unit(rng);
      const NodeNetwork pre = layout.unpack(nf.q.means + scales.cwiseProduct(eps));
      try {
        out.push_back(project_network(pre, budget, schedule, options));
        break;
      } catch (const DivergedInnerSolve&) {
        if (attempt >= 1) throw;
      }
    }
  }
  return out;
}

// Mean held-out log-likelihood over posterior samples; the validation score
// of the lambda-grid protocol.
double validation_score_linear(const MeanFieldGaussian& q, double lambda,
                               const Eigen::MatrixXd& val, const FitArgs& a) {
  const OffDiagonalLayout layout = OffDiagonalLayout::from_dim(q.dim());
  const LinearSemLikelihood lik = LinearSemLikelihood::from_matrix(val, a.noise_variance);
  BaseGaussian base{layout.to_matrix(q.means), layout.to_matrix(q.scales()),
                    mix_seed(a.seed, 9001)};
  const auto draws =
      sample_dag(base, SparsityBudget{lambda}, a.grid_samples,
                 PathSchedule::reference(layout.nodes()), ProjectOptions{a.threshold, true});
  double total = 0.0;
  for (const auto& d : draws) total += log_likelihood(lik, d.graph);
  return total / draws.size();
}

double validation_score_nonlinear(const NonlinearFit& nf, double lambda,
                                  const Eigen::MatrixXd& val, const FitArgs& a) {
  const auto projections =
      draw_network_projections(nf, SparsityBudget{lambda}, a.grid_samples,
                               mix_seed(a.seed, 9001), ProjectOptions{a.threshold, true});
  double total = 0.0;
  for (const auto& proj : projections)
    total += nonlinear_log_likelihood(proj.network, val, a.noise_variance);
  return total / projections.size();
}

double mean_sample_l1(const std::vector<WeightedAdjacency>& graphs) {
  double total = 0.0;
  for (const auto& g : graphs) total += g.l1_norm();
  return graphs.empty() ? 0.0 : total / graphs.size();
}

int run_fit(const FitArgs& a) {
  if (a.mode != "linear" && a.mode != "nonlinear")
    throw ParseError("mode must be linear or nonlinear");
  const Dataset full = load_dataset(a.data);
  const int p = static_cast<int>(full.x.cols());

  std::string canon = "fit;mode=" + a.mode + ";samples=" + std::to_string(a.samples) +
                      ";max_iters=" + std::to_string(a.max_iters) +
                      ";patience=" + std::to_string(a.patience) +
                      ";lr=" + std::to_string(a.lr) +
                      ";noise=" + std::to_string(a.noise_variance) +
                      ";threshold=" + std::to_string(a.threshold) +
                      ";seed=" + std::to_string(a.seed);
  if (a.lambda) canon += ";lambda=" + lambda_text(*a.lambda);
  const std::string hash = fnv1a_hex(canon);

  fs::create_directories(a.out);
  const fs::path dir(a.out);

  const bool nonlinear = a.mode == "nonlinear";
  const NetworkShape shape{p, a.hidden};
  const MeanFieldGaussian prior =
      nonlinear ? MeanFieldGaussian::standard(NetworkLayout(shape).param_count())
                : MeanFieldGaussian::standard(static_cast<Eigen::Index>(p) * (p - 1));

  auto fit_once = [&](const Dataset& data, double lambda, FitTrace* trace) {
    const TrainConfig cfg = train_config(a, lambda);
    if (nonlinear) return fit_nonlinear(data, shape, prior, cfg, trace).q;
    return fit(data, prior, cfg, trace);
  };

  double chosen_lambda;
  MeanFieldGaussian q = prior;
  FitTrace trace;
  json selection;

  if (a.lambda) {
    chosen_lambda = *a.lambda;
    q = fit_once(full, chosen_lambda, &trace);
  } else {
    const auto [train, val] = split_dataset(full, a.holdout);

    std::vector<double> grid;
    if (a.lambda_grid == "auto") {
      const MeanFieldGaussian unconstrained = fit_once(train, kInf, nullptr);
      double lambda_max;
      if (nonlinear) {
        NonlinearFit nf{shape, unconstrained};
        const auto projections =
            draw_network_projections(nf, SparsityBudget{kInf}, a.grid_samples,
                                     mix_seed(a.seed, 9002), ProjectOptions{a.threshold, true});
        std::vector<WeightedAdjacency> graphs;
        for (const auto& pr : projections) graphs.push_back(pr.matrix.projected);
        lambda_max = mean_sample_l1(graphs);
      } else {
        const OffDiagonalLayout layout(p);
        BaseGaussian base{layout.to_matrix(unconstrained.means),
                          layout.to_matrix(unconstrained.scales()), mix_seed(a.seed, 9002)};
        const auto draws = sample_dag(base, SparsityBudget{kInf}, a.grid_samples,
                                      PathSchedule::reference(p),
                                      ProjectOptions{a.threshold, true});
        std::vector<WeightedAdjacency> graphs;
        for (const auto& d : draws) graphs.push_back(d.graph);
        lambda_max = mean_sample_l1(graphs);
      }
      selection["lambda_max"] = lambda_max;
      for (int i = 0; i < a.grid_size; ++i)
        grid.push_back(lambda_max * i / (a.grid_size - 1.0));
    } else {
      std::stringstream ss(a.lambda_grid);
      std::string tok;
      while (std::getline(ss, tok, ',')) grid.push_back(std::stod(tok));
      if (grid.empty()) throw ParseError("empty lambda grid");
    }

    std::vector<double> scores(grid.size());
    std::vector<MeanFieldGaussian> fits(grid.size(), prior);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      fits[i] = fit_once(train, grid[i], nullptr);
      scores[i] = nonlinear
                      ? validation_score_nonlinear({shape, fits[i]}, grid[i], val.x, a)
                      : validation_score_linear(fits[i], grid[i], val.x, a);
    }
    const std::size_t winner =
        std::max_element(scores.begin(), scores.end()) - scores.begin();
    chosen_lambda = grid[winner];
    q = fits[winner];

    std::ofstream table(dir / "lambda_scores.csv");
    if (!table) throw ParseError("cannot write lambda_scores.csv");
    table << std::setprecision(17) << "lambda,validation_loglik,selected\n";
    for (std::size_t i = 0; i < grid.size(); ++i)
      table << grid[i] << "," << scores[i] << "," << (i == winner ? 1 : 0) << "\n";
    write_sidecar(dir / "lambda_scores.csv", hash, a.seed);
    selection["grid"] = grid;
    selection["scores"] = scores;
    selection["train_rows"] = train.x.rows();
    selection["validation_rows"] = val.x.rows();
  }

  Checkpoint ckpt;
  ckpt.mode = a.mode;
  ckpt.p = p;
  if (nonlinear) ckpt.hidden_widths = a.hidden;
  ckpt.q = q;
  ckpt.lambda = chosen_lambda;
  ckpt.hard_threshold = a.threshold;
  ckpt.noise_variance = a.noise_variance;
  ckpt.seed = a.seed;
  save_checkpoint(ckpt, (dir / "checkpoint.json").string());

  json meta = meta_block("fit", hash, a.seed);
  meta["data"] = a.data;
  meta["mode"] = a.mode;
  meta["lambda"] = std::isinf(chosen_lambda) ? json("inf") : json(chosen_lambda);
  meta["iterations"] = trace.iterations;
  meta["stopped_early"] = trace.stopped_early;
  if (!selection.empty()) meta["selection"] = selection;
  write_json(dir / "meta.json", meta);
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string truth;
  std::string out;
  int count = 100;
  std::uint64_t seed = 0;
};

int run_eval(const EvalArgs& a) {
  if (a.count < 1) throw ParseError("count must be positive");
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const SparsityBudget budget{ckpt.lambda};
  const ProjectOptions options{ckpt.hard_threshold, true};

  PosteriorSummary summary = [&] {
    if (ckpt.mode == "nonlinear") {
      NonlinearFit nf{{ckpt.p, ckpt.hidden_widths}, ckpt.q};
      return network_posterior_summary(nf, budget, a.count, a.seed,
                                       PathSchedule::nonlinear_reference(ckpt.p), options);
    }
    return posterior_summary(ckpt.q, budget, a.count, a.seed,
                             PathSchedule::reference(ckpt.p), options);
  }();

  const std::string hash = fnv1a_hex("eval;count=" + std::to_string(a.count) +
                                     ";seed=" + std::to_string(a.seed) +
                                     ";checkpoint_hash=" + checkpoint_config_hash(ckpt));

  fs::create_directories(a.out);
  const fs::path dir(a.out);
  save_matrix_csv((dir / "edge_probs.csv").string(), summary.edge_probs);
  write_sidecar(dir / "edge_probs.csv", hash, a.seed);

  json report;
  report["meta"] = meta_block("eval", hash, a.seed);
  report["count"] = a.count;
  report["mode"] = ckpt.mode;

  if (a.truth.empty()) {
    std::cerr << "no truth file given; skipping brier/shd/f1/auroc\n";
    report["metrics_skipped"] = "no truth file";
  } else {
    const WeightedAdjacency truth = load_truth(a.truth, ckpt.p);
    report["brier"] = brier(summary, truth);
    report["expected_shd"] = expected_shd(summary, truth);
    report["expected_f1"] = expected_f1(summary, truth);
    try {
      report["auroc"] = auroc(summary, truth);
    } catch (const DegenerateTruth&) {
      std::cerr << "truth has a single class over ordered pairs; auroc skipped\n";
      report["auroc"] = nullptr;
    }
    std::ofstream csv(dir / "metrics.csv");
    if (!csv) throw ParseError("cannot write metrics.csv");
    csv << std::setprecision(17) << "brier,expected_shd,expected_f1,auroc,count,seed\n"
        << report["brier"].get<double>() << "," << report["expected_shd"].get<double>()
        << "," << report["expected_f1"].get<double>() << ",";
    if (report["auroc"].is_null())
      csv << "nan";
    else
      csv << report["auroc"].get<double>();
    csv << "," << a.count << "," << a.seed << "\n";
    write_sidecar(dir / "metrics.csv", hash, a.seed);
  }
  write_json(dir / "metrics.json", report);
  return 0;
}

struct SweepArgs {
  std::string out;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::vector<int> n_values{100};
  std::vector<double> lambdas{kInf};
  GenerateArgs gen;  // p/edges/graph/noise/mode/hidden reused
  FitArgs fit;       // optimizer settings reused
  int count = 100;
};

int run_sweep(const SweepArgs& a) {
  struct Combo {
    std::uint64_t seed;
    int n;
    double lambda;
  };
  std::vector<Combo> combos;
  for (std::uint64_t s : a.seeds)
    for (int n : a.n_values)
      for (double l : a.lambdas) combos.push_back({s, n, l});
  if (combos.empty()) throw ParseError("empty sweep");

  const std::string hash = fnv1a_hex("sweep;combos=" + std::to_string(combos.size()) +
                                     ";p=" + std::to_string(a.gen.p) +
                                     ";edges=" + std::to_string(a.gen.edges) +
                                     ";mode=" + std::to_string(a.fit.mode == "nonlinear"));
  fs::create_directories(a.out);
  const fs::path dir(a.out);

  std::vector<json> rows(combos.size());
  for (std::size_t i = 0; i < combos.size(); ++i) {
    const Combo& c = combos[i];
    const fs::path run_dir = dir / ("runs/s" + std::to_string(c.seed) + "_n" +
                                    std::to_string(c.n) + "_l" + lambda_text(c.lambda));
    GenerateArgs gen = a.gen;
    gen.out = run_dir.string();
    gen.n = c.n;
    gen.seed = c.seed;
    run_generate(gen);

    FitArgs fit = a.fit;
    fit.data = (run_dir / "data.csv").string();
    fit.out = run_dir.string();
    fit.mode = a.fit.mode;
    fit.hidden = a.gen.hidden;
    fit.lambda = c.lambda;
    fit.seed = c.seed;
    run_fit(fit);

    EvalArgs eval;
    eval.checkpoint = (run_dir / "checkpoint.json").string();
    eval.truth = (run_dir / "truth.csv").string();
    eval.out = run_dir.string();
    eval.count = a.count;
    eval.seed = mix_seed(c.seed, 1001);
    run_eval(eval);

    std::ifstream in(run_dir / "metrics.json");
    json metrics;
    in >> metrics;
    json row;
    row["seed"] = c.seed;
    row["n"] = c.n;
    row["lambda"] = lambda_text(c.lambda);
    row["brier"] = metrics["brier"];
    row["expected_shd"] = metrics["expected_shd"];
    row["expected_f1"] = metrics["expected_f1"];
    row["auroc"] = metrics["auroc"];
    rows[i] = row;
  }

  std::ofstream csv(dir / "sweep.csv");
  if (!csv) throw ParseError("cannot write sweep.csv");
  csv << std::setprecision(17) << "seed,n,lambda,brier,expected_shd,expected_f1,auroc\n";
  for (const json& row : rows) {
    csv << row["seed"].get<std::uint64_t>() << "," << row["n"].get<int>() << ","
        << row["lambda"].get<std::string>() << "," << row["brier"].get<double>() << ","
        << row["expected_shd"].get<double>() << "," << row["expected_f1"].get<double>()
        << ",";
    if (row["auroc"].is_null())
      csv << "nan";
    else
      csv << row["auroc"].get<double>();
    csv << "\n";
  }
  write_sidecar(dir / "sweep.csv", hash, a.seeds.front());

  json meta = meta_block("sweep", hash, a.seeds.front());
  meta["combos"] = combos.size();
  write_json(dir / "meta.json", meta);
  return 0;
}

// Expands every "--config FILE" in place into the flags listed in FILE
// (key=value lines, '#'/';' comments). A key already present as an explicit
// flag is skipped, so the command line always wins over the file.
void expand_config_args(std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size();) {
    std::string path;
    std::size_t consumed = 0;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ParseError("--config expects a file path");
      path = args[i + 1];
      consumed = 2;
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
      consumed = 1;
    } else {
      ++i;
      continue;
    }
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read config file: " + path);
    const auto trim = [](const std::string& s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    std::vector<std::string> expanded;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string stripped = trim(line);
      if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos || eq == 0)
        throw ParseError(path + ":" + std::to_string(lineno) + ": expected key=value");
      const std::string flag = "--" + trim(stripped.substr(0, eq));
      const std::string value = trim(stripped.substr(eq + 1));
      bool shadowed = false;
      for (const auto& arg : args)
        if (arg == flag || arg.rfind(flag + "=", 0) == 0) shadowed = true;
      if (shadowed) continue;
      expanded.push_back(flag);
      expanded.push_back(value);
    }
    args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
               args.begin() + static_cast<std::ptrdiff_t>(i + consumed));
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(i), expanded.begin(), expanded.end());
    i += expanded.size();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"projected DAG distributions: generation, fitting, evaluation"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* cmd_gen = app.add_subcommand("generate", "simulate a dataset from a random DAG");
  cmd_gen->add_option("--out", gen.out, "output directory")->required();
  cmd_gen->add_option("--p", gen.p, "node count");
  cmd_gen->add_option("--edges", gen.edges, "edge count");
  cmd_gen->add_option("--graph", gen.graph, "er or scale-free");
  cmd_gen->add_option("--exponent", gen.exponent, "scale-free degree exponent");
  cmd_gen->add_option("--noise", gen.noise,
                      "gaussian, exponential, gumbel, or heteroscedastic");
  cmd_gen->add_option("--mode", gen.mode, "linear or nonlinear");
  cmd_gen->add_option("--hidden", gen.hidden, "hidden layer widths (nonlinear)")
      ->delimiter(',');
  cmd_gen->add_option("--n", gen.n, "observations");
  cmd_gen->add_option("--seed", gen.seed, "master seed");
  cmd_gen->add_option("--weight-low", gen.weight_low, "min |edge weight|");
  cmd_gen->add_option("--weight-high", gen.weight_high, "max |edge weight|");

  ProjectArgs prj;
  auto* cmd_prj = app.add_subcommand("project", "project a matrix onto the DAG set");
  cmd_prj->add_option("--in", prj.in, "input matrix CSV")->required();
  cmd_prj->add_option("--out", prj.out, "output directory")->required();
  cmd_prj->add_option("--lambda", prj.lambda, "l1 budget (inf for none)");
  cmd_prj->add_option("--threshold", prj.threshold, "hard threshold");
  cmd_prj->add_flag("--no-ensure-acyclic", prj.no_ensure_acyclic,
                    "do not raise the threshold to force acyclicity");
  cmd_prj->add_option("--stages", prj.stages, "path-following stages");
  cmd_prj->add_option("--inner-iters", prj.inner_iters, "inner iteration cap");
  cmd_prj->add_option("--inner-tol", prj.inner_tol, "inner gradient tolerance");
  cmd_prj->add_option("--inner-step", prj.inner_step, "inner step size");
  cmd_prj->add_option("--mu", prj.mu, "initial path weight");
  cmd_prj->add_option("--decay", prj.decay, "path weight decay");

  FitArgs fit;
  auto* cmd_fit = app.add_subcommand("fit", "variational fit with lambda selection");
  cmd_fit->add_option("--data", fit.data, "dataset CSV")->required();
  cmd_fit->add_option("--out", fit.out, "output directory")->required();
  cmd_fit->add_option("--mode", fit.mode, "linear or nonlinear");
  cmd_fit->add_option("--hidden", fit.hidden, "hidden layer widths (nonlinear)")
      ->delimiter(',');
  double fit_lambda = 0.0;
  auto* lambda_opt = cmd_fit->add_option("--lambda", fit_lambda,
                                         "fixed l1 budget; skips the grid (inf allowed)");
  cmd_fit->add_option("--lambda-grid", fit.lambda_grid,
                      "auto or comma-separated budgets");
  cmd_fit->add_option("--grid-size", fit.grid_size, "auto grid size");
  cmd_fit->add_option("--grid-samples", fit.grid_samples,
                      "posterior samples per validation score");
  cmd_fit->add_option("--holdout", fit.holdout, "validation fraction");
  cmd_fit->add_option("--samples", fit.samples, "DAG samples per iteration");
  cmd_fit->add_option("--max-iters", fit.max_iters, "iteration cap");
  cmd_fit->add_option("--patience", fit.patience, "smoothed-objective patience");
  cmd_fit->add_option("--lr", fit.lr, "learning rate");
  cmd_fit->add_option("--smoothing", fit.smoothing, "objective smoothing factor");
  cmd_fit->add_option("--noise-variance", fit.noise_variance, "likelihood variance");
  cmd_fit->add_option("--threshold", fit.threshold, "hard threshold");
  cmd_fit->add_option("--seed", fit.seed, "master seed");

  EvalArgs eval;
  auto* cmd_eval = app.add_subcommand("eval", "sample the posterior and score it");
  cmd_eval->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
  cmd_eval->add_option("--truth", eval.truth, "truth matrix CSV or edge list");
  cmd_eval->add_option("--out", eval.out, "output directory")->required();
  cmd_eval->add_option("--count", eval.count, "posterior samples");
  cmd_eval->add_option("--seed", eval.seed, "sampling seed");

  SweepArgs sweep;
  auto* cmd_sweep = app.add_subcommand("sweep", "generate/fit/eval over a grid");
  cmd_sweep->add_option("--out", sweep.out, "output directory")->required();
  cmd_sweep->add_option("--seeds", sweep.seeds, "seeds")->delimiter(',');
  cmd_sweep->add_option("--n-values", sweep.n_values, "dataset sizes")->delimiter(',');
  cmd_sweep->add_option("--lambdas", sweep.lambdas, "l1 budgets (inf allowed)")
      ->delimiter(',');
  cmd_sweep->add_option("--p", sweep.gen.p, "node count");
  cmd_sweep->add_option("--edges", sweep.gen.edges, "edge count");
  cmd_sweep->add_option("--graph", sweep.gen.graph, "er or scale-free");
  cmd_sweep->add_option("--exponent", sweep.gen.exponent, "scale-free degree exponent");
  cmd_sweep->add_option("--noise", sweep.gen.noise, "noise family");
  cmd_sweep->add_option("--mode", sweep.gen.mode, "linear or nonlinear");
  cmd_sweep->add_option("--hidden", sweep.gen.hidden, "hidden widths")->delimiter(',');
  cmd_sweep->add_option("--count", sweep.count, "posterior samples per eval");
  cmd_sweep->add_option("--samples", sweep.fit.samples, "DAG samples per iteration");
  cmd_sweep->add_option("--max-iters", sweep.fit.max_iters, "iteration cap");
  cmd_sweep->add_option("--patience", sweep.fit.patience, "smoothed-objective patience");
  cmd_sweep->add_option("--lr", sweep.fit.lr, "learning rate");
  cmd_sweep->add_option("--noise-variance", sweep.fit.noise_variance,
                        "likelihood variance");
  cmd_sweep->add_option("--threshold", sweep.fit.threshold, "hard threshold");

  // every flag of a subcommand can also come from a key=value config file;
  // the file is expanded into flags before the parse, so the option below
  // only documents the spelling
  std::string config_path;
  for (CLI::App* sub : {cmd_gen, cmd_prj, cmd_fit, cmd_eval, cmd_sweep})
    sub->add_option("--config", config_path, "read options from a key=value file");

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    expand_config_args(args);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::reverse(args.begin(), args.end());

  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_gen->parsed()) return run_generate(gen);
    if (cmd_prj->parsed()) return run_project(prj);
    if (cmd_fit->parsed()) {
      if (lambda_opt->count() > 0) fit.lambda = fit_lambda;
      return run_fit(fit);
    }
    if (cmd_eval->parsed()) return run_eval(eval);
    if (cmd_sweep->parsed()) {
      sweep.fit.mode = sweep.gen.mode;
      return run_sweep(sweep);
    }
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const InfeasibleSpec& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const TooLarge& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CyclicInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DegenerateTruth& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
}
