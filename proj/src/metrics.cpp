#include "tscm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <tuple>

#include "json.hpp"

namespace tscm {

namespace {

struct Candidate {
  double score;
  int pair_id;
  int class_id;
  std::size_t record_idx;
};

// records grouped by image in first-appearance order
std::vector<std::vector<std::size_t>> group_by_image(const PredictionSet& preds) {
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < preds.records.size(); ++i) {
    const std::string& id = preds.records[i].image_id;
    auto [it, inserted] = index.try_emplace(id, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  return groups;
}

void check_same_keys(const PredictionSet& a, const PredictionSet& b) {
  if (a.K != b.K) throw validation_error("prediction sets have different K");
  if (a.records.size() != b.records.size()) {
    throw validation_error("prediction sets cover different (image, pair) keys");
  }
  std::set<std::pair<std::string, int>> keys_a, keys_b;
  for (const PredictionRecord& r : a.records) keys_a.emplace(r.image_id, r.pair_id);
  for (const PredictionRecord& r : b.records) keys_b.emplace(r.image_id, r.pair_id);
  if (keys_a != keys_b) {
    throw validation_error("prediction sets cover different (image, pair) keys");
  }
}

// row index of the record with each key, for aligning baseline/adjusted sets
std::map<std::pair<std::string, int>, std::size_t> key_index(const PredictionSet& preds) {
  std::map<std::pair<std::string, int>, std::size_t> idx;
  for (std::size_t i = 0; i < preds.records.size(); ++i) {
    const PredictionRecord& r = preds.records[i];
    if (!idx.emplace(std::make_pair(r.image_id, r.pair_id), i).second) {
      throw validation_error("duplicate (image, pair) key in predictions");
    }
  }
  return idx;
}

double macro_mean(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  int n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  return n > 0 ? sum / n : 0.0;
}

}  // namespace

std::vector<std::optional<double>> per_class_recall(const PredictionSet& preds) {
  if (preds.records.empty()) throw validation_error("prediction set is empty");
  std::vector<long> total(preds.K, 0), correct(preds.K, 0);
  for (const PredictionRecord& r : preds.records) {
    ++total[r.gt_predicate];
    if (r.predicted == r.gt_predicate) ++correct[r.gt_predicate];
  }
  std::vector<std::optional<double>> recall(preds.K);
  for (int k = 0; k < preds.K; ++k) {
    if (total[k] > 0) recall[k] = static_cast<double>(correct[k]) / total[k];
  }
  return recall;
}

std::vector<char> matched_at_k(const PredictionSet& preds, int k) {
  if (k < 1) throw validation_error("retrieval k must be >= 1");
  std::vector<char> matched(preds.records.size(), 0);
  for (const std::vector<std::size_t>& group : group_by_image(preds)) {
    std::vector<Candidate> cands;
    cands.reserve(group.size());
    for (std::size_t i : group) {
      const PredictionRecord& r = preds.records[i];
      cands.push_back({r.scores[r.predicted], r.pair_id, r.predicted, i});
    }
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.pair_id != b.pair_id) return a.pair_id < b.pair_id;
      return a.class_id < b.class_id;
    });
    const std::size_t cut = std::min<std::size_t>(k, cands.size());
    for (std::size_t r = 0; r < cut; ++r) {
      const PredictionRecord& rec = preds.records[cands[r].record_idx];
      if (cands[r].class_id == rec.gt_predicate) matched[cands[r].record_idx] = 1;
    }
  }
  return matched;
}

double recall_at_k(const PredictionSet& preds, int k) {
  if (preds.records.empty()) throw validation_error("prediction set is empty");
  const std::vector<char> matched = matched_at_k(preds, k);
  long hits = 0;
  for (char m : matched) hits += m;
  return static_cast<double>(hits) / static_cast<double>(preds.records.size());
}

double mean_recall_at_k(const PredictionSet& preds, int k) {
  if (preds.records.empty()) throw validation_error("prediction set is empty");
  const std::vector<char> matched = matched_at_k(preds, k);
  std::vector<long> total(preds.K, 0), hit(preds.K, 0);
  for (std::size_t i = 0; i < preds.records.size(); ++i) {
    ++total[preds.records[i].gt_predicate];
    if (matched[i]) ++hit[preds.records[i].gt_predicate];
  }
  double sum = 0.0;
  int n = 0;
  for (int c = 0; c < preds.K; ++c) {
    if (total[c] > 0) {
      sum += static_cast<double>(hit[c]) / total[c];
      ++n;
    }
  }
  return n > 0 ? sum / n : 0.0;
}

std::optional<double> correction_rate_argmax(const PredictionSet& baseline,
                                             const PredictionSet& adjusted) {
  check_same_keys(baseline, adjusted);
  const auto idx = key_index(adjusted);
  std::vector<long> wrong(baseline.K, 0), corrected(baseline.K, 0);
  for (const PredictionRecord& b : baseline.records) {
    if (b.predicted == b.gt_predicate) continue;
    ++wrong[b.gt_predicate];
    const PredictionRecord& a = adjusted.records[idx.at({b.image_id, b.pair_id})];
    if (a.predicted == a.gt_predicate) ++corrected[b.gt_predicate];
  }
  double sum = 0.0;
  int n = 0;
  for (int c = 0; c < baseline.K; ++c) {
    if (wrong[c] > 0) {
      sum += static_cast<double>(corrected[c]) / wrong[c];
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::optional<double> correction_rate_at_k(const PredictionSet& baseline,
                                           const PredictionSet& adjusted, int k) {
  check_same_keys(baseline, adjusted);
  const auto idx = key_index(adjusted);
  const std::vector<char> base_matched = matched_at_k(baseline, k);
  const std::vector<char> adj_matched = matched_at_k(adjusted, k);
  std::vector<long> missed(baseline.K, 0), corrected(baseline.K, 0);
  for (std::size_t i = 0; i < baseline.records.size(); ++i) {
    const PredictionRecord& b = baseline.records[i];
    if (base_matched[i]) continue;
    ++missed[b.gt_predicate];
    if (adj_matched[idx.at({b.image_id, b.pair_id})]) ++corrected[b.gt_predicate];
  }
  double sum = 0.0;
  int n = 0;
  for (int c = 0; c < baseline.K; ++c) {
    if (missed[c] > 0) {
      sum += static_cast<double>(corrected[c]) / missed[c];
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::map<int, double> gt_rank_distribution(const PredictionSet& preds) {
  std::map<int, long> counts;
  long total = 0;
  for (const PredictionRecord& r : preds.records) {
    if (r.predicted == r.gt_predicate) continue;
    // rank of gt with the same tie rule as the class ranking: higher scores
    // first, equal scores ordered by class id
    int rank = 1;
    for (int c = 0; c < preds.K; ++c) {
      if (c == r.gt_predicate) continue;
      if (r.scores[c] > r.scores[r.gt_predicate] ||
          (r.scores[c] == r.scores[r.gt_predicate] && c < r.gt_predicate)) {
        ++rank;
      }
    }
    ++counts[rank];
    ++total;
  }
  std::map<int, double> percent;
  for (const auto& [rank, count] : counts) {
    percent[rank] = 100.0 * static_cast<double>(count) / static_cast<double>(total);
  }
  return percent;
}

MetricsReport evaluate(const PredictionSet& preds, const std::vector<int>& ks,
                       const PredictionSet* baseline) {
  validate(preds);
  if (preds.records.empty()) throw validation_error("prediction set is empty");
  MetricsReport report;
  report.per_class_recall = per_class_recall(preds);
  report.mr_argmax = macro_mean(report.per_class_recall);

  long correct = 0;
  for (const PredictionRecord& r : preds.records) {
    if (r.predicted == r.gt_predicate) ++correct;
  }
  report.micro_accuracy = static_cast<double>(correct) / preds.records.size();

  for (int k : ks) {
    report.r_at[k] = recall_at_k(preds, k);
    report.mr_at[k] = mean_recall_at_k(preds, k);
  }
  if (!ks.empty()) {
    double sr = 0.0, smr = 0.0;
    for (int k : ks) {
      sr += report.r_at[k];
      smr += report.mr_at[k];
    }
    report.avg_r = sr / ks.size();
    report.avg_mr = smr / ks.size();
    report.mr_combined = 0.5 * (report.avg_r + report.avg_mr);
  }

  report.gt_rank_percent = gt_rank_distribution(preds);
  for (const PredictionRecord& r : preds.records) {
    if (r.predicted != r.gt_predicate) ++report.false_prediction_count;
  }

  if (baseline != nullptr) {
    validate(*baseline);
    report.mc_argmax = correction_rate_argmax(*baseline, preds);
    for (int k : ks) {
      if (auto mc = correction_rate_at_k(*baseline, preds, k)) report.mc_at[k] = *mc;
    }
  }
  return report;
}

void save_report(const MetricsReport& report, const std::string& path) {
  nlohmann::ordered_json j;
  j["format"] = "tscm-report";
  j["version"] = 1;
  auto key_map = [](const std::map<int, double>& m) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto& [k, v] : m) out[std::to_string(k)] = v;
    return out;
  };
  j["r_at"] = key_map(report.r_at);
  j["mr_at"] = key_map(report.mr_at);
  j["per_class_recall"] = nlohmann::ordered_json::array();
  for (const auto& r : report.per_class_recall) {
    if (r) {
      j["per_class_recall"].push_back(*r);
    } else {
      j["per_class_recall"].push_back(nullptr);
    }
  }
  j["micro_accuracy"] = report.micro_accuracy;
  j["mr_argmax"] = report.mr_argmax;
  j["avg_r"] = report.avg_r;
  j["avg_mr"] = report.avg_mr;
  j["mr_combined"] = report.mr_combined;
  if (report.mc_argmax) j["mc_argmax"] = *report.mc_argmax;
  if (!report.mc_at.empty()) j["mc_at"] = key_map(report.mc_at);
  j["gt_rank_percent"] = key_map(report.gt_rank_percent);
  j["false_prediction_count"] = report.false_prediction_count;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
  if (!out.flush()) throw io_error("write failed for '" + path + "'");
}

double mean_within_cluster_margin(const LogitDump& dump,
                                  const std::vector<int>& cluster_of_class) {
  validate(dump);
  if (static_cast<int>(cluster_of_class.size()) != dump.K) {
    throw validation_error("cluster map size does not match K");
  }
  std::vector<double> margin_sum(dump.K, 0.0);
  std::vector<long> n(dump.K, 0);
  for (const LogitRecord& rec : dump.records) {
    const int y = rec.gt_predicate;
    double rival = -std::numeric_limits<double>::infinity();
    for (int c = 0; c < dump.K; ++c) {
      if (c != y && cluster_of_class[c] == cluster_of_class[y]) {
        rival = std::max(rival, rec.fg_logits[c]);
      }
    }
    if (!std::isfinite(rival)) continue;  // singleton cluster, no rival
    margin_sum[y] += rec.fg_logits[y] - rival;
    ++n[y];
  }
  double sum = 0.0;
  int classes = 0;
  for (int c = 0; c < dump.K; ++c) {
    if (n[c] > 0) {
      sum += margin_sum[c] / n[c];
      ++classes;
    }
  }
  if (classes == 0) throw validation_error("no within-cluster rivals anywhere");
  return sum / classes;
}

}  // namespace tscm
