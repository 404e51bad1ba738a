#include "tscm/populations.hpp"

#include <algorithm>
#include <cmath>

namespace tscm {

std::array<double, 6> PairCategoryAccumulator::mean(const Key& key) const {
  const Cell& cell = cells.at(key);
  std::array<double, 6> m{};
  for (int i = 0; i < 6; ++i) m[i] = cell.feature_sum[i] / static_cast<double>(cell.count);
  return m;
}

FrequencyVector class_frequencies(const Dataset& ds) {
  validate(ds);
  std::vector<long> counts(ds.K, 0);
  long total = 0;
  for (const ImageRecord& rec : ds.records) {
    for (const TripletInstance& t : rec.triplets) {
      ++counts[t.predicate];
      ++total;
    }
  }
  FrequencyVector freq;
  freq.pi.resize(ds.K);
  for (int k = 0; k < ds.K; ++k) {
    if (counts[k] == 0) {
      throw validation_error("frequency undefined for class " + std::to_string(k));
    }
    freq.pi[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
  }
  return freq;
}

PairCategoryAccumulator accumulate_pair_features(const Dataset& ds) {
  validate(ds);
  PairCategoryAccumulator acc;
  for (const ImageRecord& rec : ds.records) {
    for (std::size_t p = 0; p < rec.triplets.size(); ++p) {
      const TripletInstance& t = rec.triplets[p];
      const ObjectInstance& subj = rec.objects[t.subject_idx];
      const ObjectInstance& obj = rec.objects[t.object_idx];
      PairFeature psi;
      try {
        psi = pair_feature(subj.box, obj.box);
      } catch (const validation_error& e) {
        throw validation_error("image '" + rec.image_id + "' pair " + std::to_string(p) + ": " +
                               e.what());
      }
      auto& cell = acc.cells[{subj.category, obj.category, t.predicate}];
      for (int i = 0; i < 6; ++i) cell.feature_sum[i] += psi.psi[i];
      ++cell.count;
    }
  }
  return acc;
}

void merge_into(PairCategoryAccumulator& target, const PairCategoryAccumulator& shard) {
  for (const auto& [key, cell] : shard.cells) {
    auto& dst = target.cells[key];
    for (int i = 0; i < 6; ++i) dst.feature_sum[i] += cell.feature_sum[i];
    dst.count += cell.count;
  }
}

RelationFeatureTable relation_features(const PairCategoryAccumulator& acc, int K) {
  RelationFeatureTable table;
  table.features.assign(K, std::nullopt);
  table.support.assign(K, 0);
  std::vector<std::array<double, 6>> sums(K, std::array<double, 6>{});
  // cells iterate in key order, so the per-predicate sums are reproducible
  for (const auto& [key, cell] : acc.cells) {
    const int t = std::get<2>(key);
    if (t < 0 || t >= K) throw validation_error("accumulator predicate out of range");
    const auto m = acc.mean(key);
    for (int i = 0; i < 6; ++i) sums[t][i] += m[i];
    ++table.support[t];
  }
  for (int t = 0; t < K; ++t) {
    if (table.support[t] == 0) continue;
    std::array<double, 6> f{};
    // denominator is the observed pair-category count, not C^2
    for (int i = 0; i < 6; ++i) f[i] = sums[t][i] / static_cast<double>(table.support[t]);
    table.features[t] = f;
  }
  return table;
}

std::optional<std::array<double, 6>> relation_feature(const PairCategoryAccumulator& acc, int K,
                                                      int predicate) {
  if (predicate < 0 || predicate >= K) {
    throw validation_error("predicate out of range");
  }
  return relation_features(acc, K).features[predicate];
}

PopulationTable build_populations(const RelationFeatureTable& table, int alpha) {
  const int K = table.K();
  std::vector<int> candidates;
  for (int t = 0; t < K; ++t) {
    if (table.features[t]) candidates.push_back(t);
  }
  const int n = static_cast<int>(candidates.size());
  if (alpha < 1 || alpha > n - 1) {
    throw validation_error("alpha must be in [1, " + std::to_string(n - 1) +
                           "] for " + std::to_string(n) + " featured predicates");
  }
  PopulationTable pop;
  pop.alpha = alpha;
  pop.populations.assign(K, {});
  for (int t : candidates) {
    const auto& ft = *table.features[t];
    std::vector<std::pair<double, int>> dists;  // (distance, id)
    dists.reserve(n - 1);
    for (int u : candidates) {
      if (u == t) continue;
      const auto& fu = *table.features[u];
      double sq = 0.0;
      for (int i = 0; i < 6; ++i) {
        const double diff = ft[i] - fu[i];
        sq += diff * diff;
      }
      dists.emplace_back(std::sqrt(sq), u);
    }
    // pair ordering breaks distance ties toward the smaller id
    std::sort(dists.begin(), dists.end());
    pop.populations[t].reserve(alpha);
    for (int r = 0; r < alpha; ++r) pop.populations[t].push_back(dists[r].second);
  }
  validate(pop);
  return pop;
}

PopulationTable build_populations(const Dataset& ds, int alpha) {
  return build_populations(relation_features(accumulate_pair_features(ds), ds.K), alpha);
}

}  // namespace tscm
