#include "dagdist/checkpoint.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "dagdist/errors.hpp"
#include "dagdist/network.hpp"

namespace dagdist {
namespace {

using nlohmann::json;

std::uint64_t double_bits(double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, sizeof bits);
  return bits;
}

Eigen::Index expected_dim(const Checkpoint& ckpt) {
  if (ckpt.mode == "linear") return static_cast<Eigen::Index>(ckpt.p) * (ckpt.p - 1);
  return NetworkLayout({ckpt.p, ckpt.hidden_widths}).param_count();
}

void check_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.mode != "linear" && ckpt.mode != "nonlinear")
    throw ParseError("checkpoint mode must be linear or nonlinear");
  if (ckpt.p < 1) throw ParseError("checkpoint node count must be positive");
  if (ckpt.mode == "linear" && !ckpt.hidden_widths.empty())
    throw ParseError("linear checkpoint cannot carry hidden widths");
  if (ckpt.mode == "nonlinear" && ckpt.hidden_widths.empty())
    throw ParseError("nonlinear checkpoint needs hidden widths");
  if (ckpt.q.means.size() != ckpt.q.raw_scales.size() ||
      ckpt.q.means.size() != expected_dim(ckpt))
    throw ParseError("checkpoint parameter size does not match its shape");
  if (!ckpt.q.means.allFinite() || !ckpt.q.raw_scales.allFinite())
    throw ParseError("checkpoint parameters must be finite");
  if (std::isnan(ckpt.lambda) || ckpt.lambda < 0.0)
    throw ParseError("checkpoint lambda must be >= 0 or inf");
  if (!std::isfinite(ckpt.hard_threshold) || ckpt.hard_threshold < 0.0)
    throw ParseError("checkpoint hard threshold must be finite and >= 0");
  if (!(ckpt.noise_variance > 0.0) || !std::isfinite(ckpt.noise_variance))
    throw ParseError("checkpoint noise variance must be positive and finite");
}

}  // namespace

std::string checkpoint_config_hash(const Checkpoint& ckpt) {
  std::string canon = "v=" + std::to_string(kCheckpointVersion) + ";mode=" + ckpt.mode +
                      ";p=" + std::to_string(ckpt.p) + ";widths=";
  for (std::size_t i = 0; i < ckpt.hidden_widths.size(); ++i)
    canon += (i ? "," : "") + std::to_string(ckpt.hidden_widths[i]);
  canon += ";lambda=" +
           (std::isinf(ckpt.lambda) ? std::string("inf")
                                    : std::to_string(double_bits(ckpt.lambda)));
  canon += ";threshold=" + std::to_string(double_bits(ckpt.hard_threshold));
  canon += ";noise=" + std::to_string(double_bits(ckpt.noise_variance));
  canon += ";seed=" + std::to_string(ckpt.seed);

  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  check_checkpoint(ckpt);
  json doc;
  doc["format"] = "dagdist-checkpoint";
  doc["version"] = kCheckpointVersion;
  doc["mode"] = ckpt.mode;
  doc["p"] = ckpt.p;
  doc["hidden_widths"] = ckpt.hidden_widths;
  if (std::isinf(ckpt.lambda))
    doc["lambda"] = "inf";
  else
    doc["lambda"] = ckpt.lambda;
  doc["hard_threshold"] = ckpt.hard_threshold;
  doc["noise_variance"] = ckpt.noise_variance;
  doc["seed"] = ckpt.seed;
  doc["config_hash"] = checkpoint_config_hash(ckpt);
  doc["means"] = std::vector<double>(ckpt.q.means.begin(), ckpt.q.means.end());
  doc["raw_scales"] =
      std::vector<double>(ckpt.q.raw_scales.begin(), ckpt.q.raw_scales.end());

  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << doc.dump(2) << "\n";
  if (!out) throw ParseError("failed writing " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& err) {
    throw ParseError(path + ": " + err.what());
  }

  Checkpoint ckpt;
  try {
    if (doc.at("format").get<std::string>() != "dagdist-checkpoint")
      throw ParseError(path + ": not a checkpoint file");
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion)
      throw ParseError(path + ": unsupported checkpoint version " +
                       std::to_string(version));
    ckpt.mode = doc.at("mode").get<std::string>();
    ckpt.p = doc.at("p").get<int>();
    ckpt.hidden_widths = doc.at("hidden_widths").get<std::vector<int>>();
    if (doc.at("lambda").is_string()) {
      if (doc.at("lambda").get<std::string>() != "inf")
        throw ParseError(path + ": bad lambda");
      ckpt.lambda = std::numeric_limits<double>::infinity();
    } else {
      ckpt.lambda = doc.at("lambda").get<double>();
    }
    ckpt.hard_threshold = doc.at("hard_threshold").get<double>();
    ckpt.noise_variance = doc.at("noise_variance").get<double>();
    ckpt.seed = doc.at("seed").get<std::uint64_t>();
    const auto means = doc.at("means").get<std::vector<double>>();
    const auto raws = doc.at("raw_scales").get<std::vector<double>>();
    ckpt.q.means = Eigen::Map<const Eigen::VectorXd>(means.data(), means.size());
    ckpt.q.raw_scales = Eigen::Map<const Eigen::VectorXd>(raws.data(), raws.size());
    if (doc.at("config_hash").get<std::string>() != checkpoint_config_hash(ckpt))
      throw ParseError(path + ": config hash mismatch");
  } catch (const json::exception& err) {
    throw ParseError(path + ": " + err.what());
  }
  check_checkpoint(ckpt);
  return ckpt;
}

}  // namespace dagdist
