#pragma once

#include <array>
#include <utility>

#include "tscm/types.hpp"

namespace tscm {

// Model-agnostic 6-vector describing a subject/object box pair:
//   [mean-left, mean-top, mean-right, mean-bottom] / subject height,
//   then height ratio h_obj/h_subj and width ratio w_obj/w_subj.
struct PairFeature {
  std::array<double, 6> psi{};

  bool operator==(const PairFeature&) const = default;
};

// Translates both boxes by a common offset so the upper-left corner of their
// union lands at the origin. Quotients out image position; sizes unchanged.
std::pair<BoundingBox, BoundingBox> canonicalize_pair(const BoundingBox& subject,
                                                      const BoundingBox& object);

// Canonicalizes, then evaluates the six feature components. Scale- and
// translation-insensitive; asymmetric in (subject, object).
PairFeature pair_feature(const BoundingBox& subject, const BoundingBox& object);

// One 6-vector row per triplet, labelled with the predicate; rows follow the
// dataset's record/triplet order.
FeatureSet pair_feature_set(const Dataset& ds);

}  // namespace tscm
