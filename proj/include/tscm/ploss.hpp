#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tscm/types.hpp"

namespace tscm {

// Precomputed per-label weights for the population loss:
//   w[y][y'] = pi[y'] / pi[y]  when y' is in y's population,
//   w[y][y'] = 1               otherwise (and for y' == y).
// Labels whose population is empty reduce to plain cross-entropy.
class PLossContext {
 public:
  PLossContext(FrequencyVector pi, PopulationTable populations);

  // All-unit weights (plain cross-entropy); used for CE baselines.
  static PLossContext uniform(int K);

  int K() const { return K_; }
  double weight(int y, int y_prime) const { return weights_[y][y_prime]; }
  // ln w, cached: the loss works on shifted logits f + ln w.
  double log_weight(int y, int y_prime) const { return log_weights_[y][y_prime]; }

  const FrequencyVector& frequencies() const { return pi_; }
  const PopulationTable& populations() const { return populations_; }

 private:
  PLossContext() = default;

  int K_ = 0;
  FrequencyVector pi_;
  PopulationTable populations_;
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<double>> log_weights_;
};

// log[1 + sum_{y' != y} w[y][y'] e^{f_{y'} - f_y}], evaluated as a max-shifted
// log-sum-exp over {f_y} u {f_{y'} + ln w} minus f_y. Nonnegative.
double p_loss(const PLossContext& ctx, int y, std::span<const double> logits);

// Closed form: softmax over the shifted logits minus the one-hot label.
// Components sum to zero.
std::vector<double> p_loss_gradient(const PLossContext& ctx, int y,
                                    std::span<const double> logits);

struct LinearModel {
  std::vector<std::vector<double>> weights;  // K rows of d
  std::vector<double> bias;                  // K

  int K() const { return static_cast<int>(bias.size()); }
  int d() const { return weights.empty() ? 0 : static_cast<int>(weights[0].size()); }

  std::vector<double> logits(std::span<const double> x) const;
};

struct TrainConfig {
  double lr = 0.1;
  int epochs = 40;
  int batch = 128;
  std::uint64_t seed = 0;
  double l2 = 0.0;  // applied to weights only, not bias
};

struct TrainResult {
  LinearModel model;
  std::vector<double> epoch_mean_loss;  // diagnostics; decrease not guaranteed
};

// Mini-batch gradient descent on the mean population loss, zero-initialized,
// seeded shuffling. Deterministic for fixed inputs and config.
TrainResult train_linear(const FeatureSet& data, const PLossContext& ctx,
                         const TrainConfig& config);

TrainConfig train_config_from_json(const std::string& text);

// tscm-model JSONL format; lives here with the type it serializes.
LinearModel load_model(const std::string& path);
void save_model(const LinearModel& model, const std::string& path);

}  // namespace tscm
