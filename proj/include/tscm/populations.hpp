#pragma once

#include <array>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "tscm/geometry.hpp"
#include "tscm/types.hpp"

namespace tscm {

// Running sums of pair features keyed by (subject category, object category,
// predicate). Ordered map so all downstream reductions iterate in a fixed key
// order regardless of how accumulation was sharded.
struct PairCategoryAccumulator {
  struct Cell {
    std::array<double, 6> feature_sum{};
    long count = 0;
  };
  using Key = std::tuple<int, int, int>;  // (subj_cat, obj_cat, predicate)

  std::map<Key, Cell> cells;

  std::array<double, 6> mean(const Key& key) const;
};

// Per-predicate fused feature: mean over the predicate's observed pair
// categories of the per-category mean. Predicates never observed have no
// feature and zero support.
struct RelationFeatureTable {
  std::vector<std::optional<std::array<double, 6>>> features;  // size K
  std::vector<int> support;  // distinct (i,j) pair categories per predicate

  int K() const { return static_cast<int>(features.size()); }
};

// pi[k] = triplet count of predicate k / total triplets. Errors if any
// predicate has zero triplets (the loss divides by every pi entry).
FrequencyVector class_frequencies(const Dataset& ds);

PairCategoryAccumulator accumulate_pair_features(const Dataset& ds);

// Merges shard accumulators; sums commute, so shard order is immaterial.
void merge_into(PairCategoryAccumulator& target, const PairCategoryAccumulator& shard);

RelationFeatureTable relation_features(const PairCategoryAccumulator& acc, int K);

std::optional<std::array<double, 6>> relation_feature(const PairCategoryAccumulator& acc, int K,
                                                      int predicate);

// For each predicate with a feature: the alpha nearest other predicates with
// features by Euclidean distance, ties to the smaller id. Featureless
// predicates get empty populations and are excluded as candidates.
PopulationTable build_populations(const RelationFeatureTable& table, int alpha);

// Full pipeline: dataset -> populations. Takes no model anywhere.
PopulationTable build_populations(const Dataset& ds, int alpha);

}  // namespace tscm
