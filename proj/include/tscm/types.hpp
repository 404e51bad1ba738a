#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tscm {

// Validation failures (bad records, broken invariants, malformed files).
// The CLI maps these to exit code 1.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem-level failures (missing file, unwritable path). Exit code 2.
class io_error : public std::runtime_error {
 public:
  explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// Axis-aligned box in center format: (cx, cy) is the center, h/w the extent.
struct BoundingBox {
  double cx = 0.0;
  double cy = 0.0;
  double h = 0.0;
  double w = 0.0;

  double left() const { return cx - 0.5 * w; }
  double top() const { return cy - 0.5 * h; }

  bool operator==(const BoundingBox&) const = default;
};

struct ObjectInstance {
  int category = 0;  // in [0, C) of the owning Dataset
  BoundingBox box;

  bool operator==(const ObjectInstance&) const = default;
};

struct TripletInstance {
  int subject_idx = 0;  // index into the image's object list
  int object_idx = 0;
  int predicate = 0;  // in [0, K)

  bool operator==(const TripletInstance&) const = default;
};

struct ImageRecord {
  std::string image_id;
  std::vector<ObjectInstance> objects;
  std::vector<TripletInstance> triplets;

  bool operator==(const ImageRecord&) const = default;
};

struct Dataset {
  int C = 0;  // object categories
  int K = 0;  // predicate categories
  std::vector<ImageRecord> records;

  bool operator==(const Dataset&) const = default;
};

// One classified subject-object pair: raw foreground logits plus the
// background-relationship logit emitted alongside them.
struct LogitRecord {
  std::string image_id;
  int pair_id = 0;  // unique within the image
  int gt_predicate = 0;
  std::vector<double> fg_logits;  // size K
  double bg_logit = 0.0;

  bool operator==(const LogitRecord&) const = default;
};

struct LogitDump {
  int K = 0;
  std::vector<LogitRecord> records;

  bool operator==(const LogitDump&) const = default;
};

// Per-predicate list of the alpha most similar other predicates. Lists may be
// shorter than alpha only for predicates that never occur in the dataset
// (those get an empty population). Membership is deliberately asymmetric.
struct PopulationTable {
  int alpha = 0;
  std::vector<std::vector<int>> populations;  // K lists

  int K() const { return static_cast<int>(populations.size()); }

  bool operator==(const PopulationTable&) const = default;
};

// Normalized predicate frequencies; strictly positive, sums to 1.
struct FrequencyVector {
  std::vector<double> pi;

  int K() const { return static_cast<int>(pi.size()); }

  bool operator==(const FrequencyVector&) const = default;
};

// K x beta multiplicative factors; factors(c, j-1) adjusts class c when it
// sits at rank j of the augmented-logit ordering. 1.0 means no adjustment.
struct AdjustmentMatrix {
  int beta = 0;
  std::vector<std::vector<double>> factors;  // K rows of beta values

  int K() const { return static_cast<int>(factors.size()); }

  static AdjustmentMatrix identity(int K, int beta) {
    AdjustmentMatrix m;
    m.beta = beta;
    m.factors.assign(K, std::vector<double>(beta, 1.0));
    return m;
  }

  bool operator==(const AdjustmentMatrix&) const = default;
};

// Row of a predictions file: argmax decision plus the full score vector the
// decision was taken over (used for image-level ranking).
struct PredictionRecord {
  std::string image_id;
  int pair_id = 0;
  int gt_predicate = 0;
  int predicted = 0;
  std::vector<double> scores;  // size K

  bool operator==(const PredictionRecord&) const = default;
};

struct PredictionSet {
  int K = 0;
  std::vector<PredictionRecord> records;

  bool operator==(const PredictionSet&) const = default;
};

// Feature matrix paired with labels, row-aligned with the dataset's triplets
// in record order.
struct FeatureSet {
  int d = 0;
  std::vector<std::vector<double>> x;  // n rows of d values
  std::vector<int> labels;             // n predicate ids

  int n() const { return static_cast<int>(labels.size()); }

  bool operator==(const FeatureSet&) const = default;
};

void validate(const Dataset& ds);
void validate(const LogitDump& dump);
void validate(const PopulationTable& pop);
void validate(const FrequencyVector& freq);
void validate(const AdjustmentMatrix& adj);
void validate(const PredictionSet& preds);
void validate(const FeatureSet& feats);

}  // namespace tscm
