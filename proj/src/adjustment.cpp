#include "tscm/adjustment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "tscm/rng.hpp"

namespace tscm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// count(t) evaluated directly; the sweep must agree with this at its chosen t.
long count_satisfied(const BoundSet& b, double t) {
  long count = 0;
  for (double l : b.lower) {
    if (t >= l) ++count;
  }
  for (double u : b.upper) {
    if (t < u) ++count;
  }
  return count;
}

// Point of [lo, hi) closest to 1; hi may be +inf, lo may be 0 (exclusive).
double representative(double lo, double hi) {
  if (lo <= 1.0 && 1.0 < hi) return 1.0;
  if (lo > 1.0) return lo;
  // interval entirely below 1; the midpoint stays interior
  const double mid = 0.5 * (lo + hi);
  return (mid < hi && mid > 0.0) ? mid : lo;
}

}  // namespace

AugmentedLogits augment_logits(const LogitRecord& record) {
  AugmentedLogits aug;
  aug.guidance = record.bg_logit > 0.0 ? record.bg_logit : kGuidanceEpsilon;
  aug.z.resize(record.fg_logits.size());
  for (std::size_t c = 0; c < aug.z.size(); ++c) {
    aug.z[c] = std::exp(record.fg_logits[c]) * aug.guidance;
  }
  return aug;
}

std::vector<int> rank_classes(const AugmentedLogits& aug) {
  std::vector<int> order(aug.z.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return aug.z[a] > aug.z[b]; });
  return order;
}

BoundSet extract_bounds(const LogitDump& dump, int class_id, int rank) {
  if (rank < 1) throw validation_error("rank must be >= 1");
  if (class_id < 0 || class_id >= dump.K) throw validation_error("class out of range");
  BoundSet bounds;
  bounds.class_id = class_id;
  bounds.rank = rank;
  if (rank > dump.K) return bounds;
  for (const LogitRecord& rec : dump.records) {
    const AugmentedLogits aug = augment_logits(rec);
    const std::vector<int> order = rank_classes(aug);
    if (order[rank - 1] != class_id) continue;
    const double zi = aug.z[class_id];
    if (rec.gt_predicate == class_id) {
      double best_other = 0.0;
      for (int c = 0; c < dump.K; ++c) {
        if (c != class_id) best_other = std::max(best_other, aug.z[c]);
      }
      bounds.lower.push_back(best_other / zi);
    } else {
      bounds.upper.push_back(aug.z[rec.gt_predicate] / zi);
    }
  }
  return bounds;
}

BoundSet balance_bounds(const BoundSet& bounds, std::uint64_t seed) {
  BoundSet out = bounds;
  std::sort(out.lower.begin(), out.lower.end());
  std::sort(out.upper.begin(), out.upper.end());
  if (out.lower.empty() || out.upper.empty()) return out;
  const std::size_t m = std::min(out.lower.size(), out.upper.size());
  Rng rng(seed);
  auto pick = [&](std::vector<double>& side) {
    if (side.size() == m) return;
    std::vector<std::size_t> idx = rng.sample_indices(side.size(), m);
    std::sort(idx.begin(), idx.end());
    std::vector<double> kept;
    kept.reserve(m);
    for (std::size_t i : idx) kept.push_back(side[i]);
    side = std::move(kept);
  };
  pick(out.lower);
  pick(out.upper);
  return out;
}

SweepResult sweep_optimal_factor(const BoundSet& bounds) {
  SweepResult result;
  if (bounds.lower.empty() && bounds.upper.empty()) {
    result.chosen_t = 1.0;
    result.satisfied_count = 0;
    result.interval_lo = 0.0;
    result.interval_hi = kInf;
    return result;
  }
  for (double b : bounds.lower) {
    if (!(b > 0.0) || !std::isfinite(b)) throw validation_error("bounds must be positive");
  }
  for (double b : bounds.upper) {
    if (!(b > 0.0) || !std::isfinite(b)) throw validation_error("bounds must be positive");
  }

  // Breakpoints where count(t) can change. Crossing t upward through v
  // satisfies lower bounds equal to v (t >= l) and breaks upper bounds equal
  // to v (t < u), so count is constant on [v_k, v_{k+1}).
  std::vector<double> values;
  values.reserve(bounds.lower.size() + bounds.upper.size());
  values.insert(values.end(), bounds.lower.begin(), bounds.lower.end());
  values.insert(values.end(), bounds.upper.begin(), bounds.upper.end());
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());

  std::vector<double> sorted_lower = bounds.lower;
  std::vector<double> sorted_upper = bounds.upper;
  std::sort(sorted_lower.begin(), sorted_lower.end());
  std::sort(sorted_upper.begin(), sorted_upper.end());
  auto count_eq = [](const std::vector<double>& v, double x) {
    auto [lo, hi] = std::equal_range(v.begin(), v.end(), x);
    return static_cast<long>(hi - lo);
  };

  long count = static_cast<long>(bounds.upper.size());  // interval (0, v_0)
  long best_count = -1;
  double best_rep = 1.0;
  double best_lo = 0.0;
  double best_hi = kInf;

  auto consider = [&](double lo, double hi, long c) {
    const double rep = representative(lo, hi);
    const bool better =
        c > best_count ||
        (c == best_count && (std::abs(rep - 1.0) < std::abs(best_rep - 1.0) ||
                             (std::abs(rep - 1.0) == std::abs(best_rep - 1.0) && rep < best_rep)));
    if (better) {
      best_count = c;
      best_rep = rep;
      best_lo = lo;
      best_hi = hi;
    }
  };

  consider(0.0, values.front(), count);
  for (std::size_t k = 0; k < values.size(); ++k) {
    count += count_eq(sorted_lower, values[k]);
    count -= count_eq(sorted_upper, values[k]);
    const double hi = (k + 1 < values.size()) ? values[k + 1] : kInf;
    consider(values[k], hi, count);
  }

  result.chosen_t = best_rep;
  result.interval_lo = best_lo;
  result.interval_hi = best_hi;
  result.satisfied_count = count_satisfied(bounds, best_rep);
  return result;
}

AdjustmentMatrix fit_adjustment(const LogitDump& dump, int beta, std::uint64_t seed,
                                int n_threads) {
  validate(dump);
  if (dump.records.empty()) throw validation_error("logit dump is empty");
  if (beta < 1) throw validation_error("beta must be >= 1");
  if (beta > dump.K) throw validation_error("beta must be <= K");
  if (n_threads < 1) n_threads = 1;

  const int K = dump.K;

  // One pass over the dump: each sample lands in exactly one cell per rank
  // j <= beta, namely (class at rank j, j).
  std::vector<std::vector<BoundSet>> cells(K);
  for (int i = 0; i < K; ++i) {
    cells[i].resize(beta);
    for (int j = 0; j < beta; ++j) {
      cells[i][j].class_id = i;
      cells[i][j].rank = j + 1;
    }
  }
  for (const LogitRecord& rec : dump.records) {
    const AugmentedLogits aug = augment_logits(rec);
    const std::vector<int> order = rank_classes(aug);
    for (int j = 0; j < beta && j < K; ++j) {
      const int i = order[j];
      BoundSet& cell = cells[i][j];
      const double zi = aug.z[i];
      if (rec.gt_predicate == i) {
        double best_other = 0.0;
        for (int c = 0; c < K; ++c) {
          if (c != i) best_other = std::max(best_other, aug.z[c]);
        }
        cell.lower.push_back(best_other / zi);
      } else {
        cell.upper.push_back(aug.z[rec.gt_predicate] / zi);
      }
    }
  }

  AdjustmentMatrix T = AdjustmentMatrix::identity(K, beta);
  auto fit_cell = [&](int i, int j) {
    const BoundSet balanced = balance_bounds(cells[i][j], derive_seed(seed, i, j + 1));
    T.factors[i][j] = sweep_optimal_factor(balanced).chosen_t;
  };

  if (n_threads == 1) {
    for (int i = 0; i < K; ++i) {
      for (int j = 0; j < beta; ++j) fit_cell(i, j);
    }
  } else {
    // Static striping over rows; each cell writes only its own slot.
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (int w = 0; w < n_threads; ++w) {
      workers.emplace_back([&, w]() {
        for (int i = w; i < K; i += n_threads) {
          for (int j = 0; j < beta; ++j) fit_cell(i, j);
        }
      });
    }
    for (std::thread& t : workers) t.join();
  }
  validate(T);
  return T;
}

AdjustedPrediction apply_adjustment(const LogitRecord& record, const AdjustmentMatrix& T) {
  const int K = static_cast<int>(record.fg_logits.size());
  if (T.K() != K) throw validation_error("adjustment matrix K does not match record");
  const AugmentedLogits aug = augment_logits(record);
  const std::vector<int> order = rank_classes(aug);
  AdjustedPrediction out;
  out.scores = aug.z;
  for (int j = 0; j < T.beta && j < K; ++j) {
    const int c = order[j];
    out.scores[c] = aug.z[c] * T.factors[c][j];
  }
  out.predicted = 0;
  for (int c = 1; c < K; ++c) {
    if (out.scores[c] > out.scores[out.predicted]) out.predicted = c;
  }
  return out;
}

PredictionSet apply_adjustment(const LogitDump& dump, const AdjustmentMatrix& T) {
  validate(dump);
  PredictionSet preds;
  preds.K = dump.K;
  preds.records.reserve(dump.records.size());
  for (const LogitRecord& rec : dump.records) {
    AdjustedPrediction adj = apply_adjustment(rec, T);
    PredictionRecord out;
    out.image_id = rec.image_id;
    out.pair_id = rec.pair_id;
    out.gt_predicate = rec.gt_predicate;
    out.predicted = adj.predicted;
    out.scores = std::move(adj.scores);
    preds.records.push_back(std::move(out));
  }
  return preds;
}

}  // namespace tscm
