#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tscm/types.hpp"

namespace tscm {

struct MetricsReport {
  std::map<int, double> r_at;   // retrieval K -> image-level recall
  std::map<int, double> mr_at;  // retrieval K -> macro mean recall
  std::vector<std::optional<double>> per_class_recall;  // argmax-based; absent if no gt
  double micro_accuracy = 0.0;
  double mr_argmax = 0.0;  // macro mean of per_class_recall
  double avg_r = 0.0;
  double avg_mr = 0.0;
  double mr_combined = 0.0;                // (avg_r + avg_mr) / 2
  std::map<int, double> mc_at;             // only when a baseline is supplied
  std::optional<double> mc_argmax;
  std::map<int, double> gt_rank_percent;   // rank of gt among false predictions
  long false_prediction_count = 0;
};

// recall[k] = #(gt = k and pred = k) / #(gt = k); absent when class k never
// appears as ground truth.
std::vector<std::optional<double>> per_class_recall(const PredictionSet& preds);

// Image-level top-k retrieval under the graph constraint: each pair enters the
// ranking once, with its predicted class and that class's score. Ties rank by
// smaller pair_id, then smaller class id.
double recall_at_k(const PredictionSet& preds, int k);

// Per-record retrieval outcome at k, aligned with preds.records. A record
// counts when its prediction equals its ground truth and survives the image
// top-k cut.
std::vector<char> matched_at_k(const PredictionSet& preds, int k);

double mean_recall_at_k(const PredictionSet& preds, int k);

// mC per class: of the baseline's false predictions with gt = k, the fraction
// the adjusted set turns correct. Classes the baseline never misses are
// excluded from the mean.
std::optional<double> correction_rate_argmax(const PredictionSet& baseline,
                                             const PredictionSet& adjusted);
std::optional<double> correction_rate_at_k(const PredictionSet& baseline,
                                           const PredictionSet& adjusted, int k);

// Over false argmax predictions, the distribution (percent) of where the
// ground-truth class ranks in the score ordering. Empty when nothing is wrong.
std::map<int, double> gt_rank_distribution(const PredictionSet& preds);

MetricsReport evaluate(const PredictionSet& preds, const std::vector<int>& ks,
                       const PredictionSet* baseline = nullptr);

void save_report(const MetricsReport& report, const std::string& path);

// Macro-averaged margin between each test label's logit and its strongest
// same-cluster rival, from raw foreground logits. cluster_of_class maps every
// class id to a cluster id.
double mean_within_cluster_margin(const LogitDump& dump,
                                  const std::vector<int>& cluster_of_class);

}  // namespace tscm
