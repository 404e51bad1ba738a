#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tscm/ploss.hpp"
#include "tscm/types.hpp"

namespace tscm {

// Controls the synthetic world: a long-tailed predicate distribution
// (frequencies proportional to rank^-zipf_s) and confusion clusters of
// predicates whose feature prototypes sit close together.
struct SynthConfig {
  int K = 20;
  int C = 10;
  int n_train = 20000;
  int n_test = 5000;
  double zipf_s = 1.5;
  int n_clusters = 5;
  double cluster_spread = 2.0;
  double noise_sigma = 1.0;
  int d = 16;
  std::uint64_t seed = 42;
  int pairs_per_image = 25;
};

SynthConfig default_synth_config();
SynthConfig synth_config_from_json(const std::string& text);
std::string synth_config_to_json(const SynthConfig& config);

struct SynthSplit {
  Dataset dataset;
  FeatureSet features;  // rows aligned with the dataset's triplets in order
};

struct SynthWorld {
  SynthSplit train;
  SynthSplit test;
  std::vector<int> cluster_of_class;  // ground-truth confusion structure
};

// Deterministic for a fixed config. Predicates split into contiguous
// frequency blocks, one block per cluster, so confusable classes carry a
// local head/tail gradient. Box pairs follow a per-cluster geometric
// signature with small per-predicate offsets, which makes the pair features
// informative about cluster membership.
SynthWorld generate(const SynthConfig& config);

enum class BgMode { kConstant, kUniform };

struct BgConfig {
  BgMode mode = BgMode::kUniform;
  double constant = 1.0;
  double lo = -0.5;
  double hi = 1.5;
  std::uint64_t seed = 0;
};

// Scores every feature row with the model and attaches a background logit per
// sample. Identities come from the dataset's triplets, row-aligned with the
// feature set.
LogitDump simulate_biased_logits(const LinearModel& model, const FeatureSet& features,
                                 const Dataset& dataset, const BgConfig& bg);

// Fallback when no dataset is available: each row becomes its own image.
LogitDump simulate_biased_logits(const LinearModel& model, const FeatureSet& features,
                                 const BgConfig& bg);

// Largest-remainder quotas for counts proportional to (rank+1)^-s; exact-sum,
// balanced within +/-1 at s = 0.
std::vector<long> zipf_counts(int K, double s, long n);

}  // namespace tscm
