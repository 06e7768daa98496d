#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dagdist/variational.hpp"

namespace dagdist {

inline constexpr int kCheckpointVersion = 1;

// Serialized fit: the variational parameters plus everything needed to
// reproduce sampling and evaluation. Round-trips bit for bit.
struct Checkpoint {
  std::string mode = "linear";     // "linear" or "nonlinear"
  int p = 0;
  std::vector<int> hidden_widths;  // empty in linear mode
  MeanFieldGaussian q;
  double lambda = std::numeric_limits<double>::infinity();
  double hard_threshold = 0.1;
  double noise_variance = 1.0;
  std::uint64_t seed = 0;
};

// FNV-1a over the run configuration (everything except the parameters);
// stored on save and re-checked on load.
std::string checkpoint_config_hash(const Checkpoint& ckpt);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dagdist
