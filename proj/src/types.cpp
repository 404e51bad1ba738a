#include "tscm/types.hpp"

#include <cmath>
#include <set>
#include <unordered_set>

namespace tscm {

namespace {

bool finite(double v) { return std::isfinite(v); }

void check_box(const BoundingBox& b, const std::string& where) {
  if (!finite(b.cx) || !finite(b.cy) || !finite(b.h) || !finite(b.w)) {
    throw validation_error(where + ": box has non-finite coordinates");
  }
  if (!(b.h > 0.0) || !(b.w > 0.0)) {
    throw validation_error(where + ": box has non-positive extent");
  }
}

}  // namespace

void validate(const Dataset& ds) {
  if (ds.K < 2) throw validation_error("dataset: K must be >= 2");
  if (ds.C < 1) throw validation_error("dataset: C must be >= 1");
  std::unordered_set<std::string> seen_ids;
  for (const ImageRecord& rec : ds.records) {
    const std::string where = "image '" + rec.image_id + "'";
    if (!seen_ids.insert(rec.image_id).second) {
      throw validation_error(where + ": duplicate image_id");
    }
    for (const ObjectInstance& obj : rec.objects) {
      if (obj.category < 0 || obj.category >= ds.C) {
        throw validation_error(where + ": object category out of range");
      }
      check_box(obj.box, where);
    }
    const int n_obj = static_cast<int>(rec.objects.size());
    for (const TripletInstance& t : rec.triplets) {
      if (t.subject_idx < 0 || t.subject_idx >= n_obj || t.object_idx < 0 ||
          t.object_idx >= n_obj) {
        throw validation_error(where + ": invalid object index");
      }
      if (t.subject_idx == t.object_idx) {
        throw validation_error(where + ": triplet relates an object to itself");
      }
      if (t.predicate < 0 || t.predicate >= ds.K) {
        throw validation_error(where + ": predicate out of range");
      }
    }
  }
}

void validate(const LogitDump& dump) {
  if (dump.K < 2) throw validation_error("logit dump: K must be >= 2");
  for (const LogitRecord& rec : dump.records) {
    const std::string where = "logits '" + rec.image_id + "' pair " + std::to_string(rec.pair_id);
    if (static_cast<int>(rec.fg_logits.size()) != dump.K) {
      throw validation_error(where + ": logit arity mismatch");
    }
    if (rec.gt_predicate < 0 || rec.gt_predicate >= dump.K) {
      throw validation_error(where + ": gt predicate out of range");
    }
    for (double v : rec.fg_logits) {
      if (!std::isfinite(v)) throw validation_error(where + ": non-finite logit");
    }
    if (!std::isfinite(rec.bg_logit)) throw validation_error(where + ": non-finite bg logit");
  }
}

void validate(const PopulationTable& pop) {
  if (pop.alpha < 1) throw validation_error("population table: alpha must be >= 1");
  const int K = pop.K();
  for (int t = 0; t < K; ++t) {
    const std::string where = "population of predicate " + std::to_string(t);
    if (static_cast<int>(pop.populations[t].size()) > pop.alpha) {
      throw validation_error(where + ": more than alpha members");
    }
    std::set<int> seen;
    for (int id : pop.populations[t]) {
      if (id < 0 || id >= K) throw validation_error(where + ": member out of range");
      if (id == t) throw validation_error(where + ": contains its own predicate");
      if (!seen.insert(id).second) throw validation_error(where + ": duplicate member");
    }
  }
}

void validate(const FrequencyVector& freq) {
  double sum = 0.0;
  for (int k = 0; k < freq.K(); ++k) {
    const double p = freq.pi[k];
    if (!std::isfinite(p) || !(p > 0.0)) {
      throw validation_error("frequency undefined for class " + std::to_string(k));
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw validation_error("frequencies do not sum to 1");
  }
}

void validate(const AdjustmentMatrix& adj) {
  if (adj.beta < 1) throw validation_error("adjustment matrix: beta must be >= 1");
  for (int k = 0; k < adj.K(); ++k) {
    if (static_cast<int>(adj.factors[k].size()) != adj.beta) {
      throw validation_error("adjustment matrix: row " + std::to_string(k) + " arity mismatch");
    }
    for (double f : adj.factors[k]) {
      if (!std::isfinite(f) || !(f > 0.0)) {
        throw validation_error("adjustment matrix: non-positive factor for class " +
                               std::to_string(k));
      }
    }
  }
}

void validate(const PredictionSet& preds) {
  if (preds.K < 2) throw validation_error("predictions: K must be >= 2");
  for (const PredictionRecord& rec : preds.records) {
    const std::string where =
        "prediction '" + rec.image_id + "' pair " + std::to_string(rec.pair_id);
    if (static_cast<int>(rec.scores.size()) != preds.K) {
      throw validation_error(where + ": score arity mismatch");
    }
    if (rec.gt_predicate < 0 || rec.gt_predicate >= preds.K) {
      throw validation_error(where + ": gt predicate out of range");
    }
    if (rec.predicted < 0 || rec.predicted >= preds.K) {
      throw validation_error(where + ": predicted class out of range");
    }
    for (double v : rec.scores) {
      if (!std::isfinite(v)) throw validation_error(where + ": non-finite score");
    }
  }
}

void validate(const FeatureSet& feats) {
  if (feats.d < 1) throw validation_error("features: d must be >= 1");
  if (feats.x.size() != feats.labels.size()) {
    throw validation_error("features: row/label count mismatch");
  }
  for (std::size_t i = 0; i < feats.x.size(); ++i) {
    if (static_cast<int>(feats.x[i].size()) != feats.d) {
      throw validation_error("features: row " + std::to_string(i) + " arity mismatch");
    }
    if (feats.labels[i] < 0) {
      throw validation_error("features: row " + std::to_string(i) + " has negative label");
    }
    for (double v : feats.x[i]) {
      if (!std::isfinite(v)) {
        throw validation_error("features: row " + std::to_string(i) + " has non-finite value");
      }
    }
  }
}

}  // namespace tscm
