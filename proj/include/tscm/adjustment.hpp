#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "tscm/types.hpp"

namespace tscm {

// Strictly positive per-class scores z[c] = e^{fg[c]} * guidance. The guidance
// term is shared across classes, so within-sample score ratios depend only on
// logit differences.
struct AugmentedLogits {
  std::vector<double> z;
  double guidance = 0.0;
};

// Bounds collected for one (class, rank) cell. A lower bound is the smallest
// factor that keeps a correct prediction; an upper bound is the factor below
// which a wrong prediction stops outranking the ground truth.
struct BoundSet {
  int class_id = 0;
  int rank = 0;  // 1-based
  std::vector<double> lower;
  std::vector<double> upper;
};

struct SweepResult {
  double chosen_t = 1.0;
  long satisfied_count = 0;
  double interval_lo = 1.0;
  double interval_hi = 1.0;  // +inf when unbounded above
};

// Non-positive background logits are clamped to this guidance value.
inline constexpr double kGuidanceEpsilon = 1e-6;

AugmentedLogits augment_logits(const LogitRecord& record);

// Class ids sorted by augmented score descending, ties to the smaller id.
std::vector<int> rank_classes(const AugmentedLogits& aug);

// Scans the dump for samples whose rank-j class is class_id and converts each
// into one bound: ground truth == class_id gives a lower bound
// max_{c != i} z[c]/z[i]; any other ground truth g gives the upper bound
// z[g]/z[i]. Other classes are treated as unadjusted while extracting.
BoundSet extract_bounds(const LogitDump& dump, int class_id, int rank);

// Equalizes the two sides at min(|lower|, |upper|) by seeded sampling without
// replacement (sides are sorted first so shard order cannot leak in). A set
// with an empty side is returned unchanged.
BoundSet balance_bounds(const BoundSet& bounds, std::uint64_t seed);

// Maximizes count(t) = #{l : t >= l} + #{u : t < u} over t > 0. The count is
// piecewise constant with breakpoints at the bound values; the maximizer is a
// union of half-open intervals. The representative of the winning interval is
// its point closest to 1 (1 itself when inside, the left edge above 1, the
// midpoint when the interval sits fully below 1). Among tied intervals the
// representative closest to 1 wins, then the smaller t.
SweepResult sweep_optimal_factor(const BoundSet& bounds);

// Per-cell pipeline over the (K x beta) grid; cell (i, j) is seeded with
// derive_seed(seed, i, j). Cells with no samples keep factor 1. Cells are
// independent, so n_threads only changes wall time, never the result.
AdjustmentMatrix fit_adjustment(const LogitDump& dump, int beta, std::uint64_t seed,
                                int n_threads = 1);

struct AdjustedPrediction {
  std::vector<double> scores;
  int predicted = 0;
};

// Multiplies the top-beta ranked scores by their cell factors; ranks past beta
// keep their augmented score bit-for-bit. Argmax ties go to the smaller id.
AdjustedPrediction apply_adjustment(const LogitRecord& record, const AdjustmentMatrix& T);

PredictionSet apply_adjustment(const LogitDump& dump, const AdjustmentMatrix& T);

}  // namespace tscm
