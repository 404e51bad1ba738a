#include "tscm/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace tscm {

namespace {

void check_valid(const BoundingBox& b, const char* role) {
  if (!std::isfinite(b.cx) || !std::isfinite(b.cy) || !std::isfinite(b.h) ||
      !std::isfinite(b.w)) {
    throw validation_error(std::string(role) + " box has non-finite coordinates");
  }
  if (!(b.h > 0.0) || !(b.w > 0.0)) {
    throw validation_error(std::string("degenerate ") + role);
  }
}

}  // namespace

std::pair<BoundingBox, BoundingBox> canonicalize_pair(const BoundingBox& subject,
                                                      const BoundingBox& object) {
  check_valid(subject, "subject");
  check_valid(object, "object");
  const double dx = std::min(subject.left(), object.left());
  const double dy = std::min(subject.top(), object.top());
  BoundingBox s = subject;
  BoundingBox o = object;
  s.cx -= dx;
  s.cy -= dy;
  o.cx -= dx;
  o.cy -= dy;
  return {s, o};
}

PairFeature pair_feature(const BoundingBox& subject, const BoundingBox& object) {
  auto [s, o] = canonicalize_pair(subject, object);
  const double denom = 4.0 * s.h;
  const double sum_cx = 2.0 * (s.cx + o.cx);
  const double sum_cy = 2.0 * (s.cy + o.cy);
  const double sum_w = s.w + o.w;
  const double sum_h = s.h + o.h;
  PairFeature f;
  f.psi[0] = (sum_cx - sum_w) / denom;
  f.psi[1] = (sum_cy - sum_h) / denom;
  f.psi[2] = (sum_cx + sum_w) / denom;
  f.psi[3] = (sum_cy + sum_h) / denom;
  f.psi[4] = o.h / s.h;
  f.psi[5] = o.w / s.w;
  return f;
}

FeatureSet pair_feature_set(const Dataset& ds) {
  validate(ds);
  FeatureSet feats;
  feats.d = 6;
  for (const ImageRecord& rec : ds.records) {
    for (std::size_t p = 0; p < rec.triplets.size(); ++p) {
      const TripletInstance& t = rec.triplets[p];
      PairFeature psi;
      try {
        psi = pair_feature(rec.objects[t.subject_idx].box, rec.objects[t.object_idx].box);
      } catch (const validation_error& e) {
        throw validation_error("image '" + rec.image_id + "' pair " + std::to_string(p) + ": " +
                               e.what());
      }
      feats.x.emplace_back(psi.psi.begin(), psi.psi.end());
      feats.labels.push_back(t.predicate);
    }
  }
  return feats;
}

}  // namespace tscm
