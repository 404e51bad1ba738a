#include "tscm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "json.hpp"
#include "tscm/rng.hpp"

namespace tscm {

namespace {

using json = nlohmann::ordered_json;

void check_config(const SynthConfig& c) {
  if (c.K < 2) throw validation_error("synth: K must be >= 2");
  if (c.n_clusters < 1 || c.n_clusters > c.K) {
    throw validation_error("synth: need K >= n_clusters >= 1");
  }
  if (c.C < 1 || c.n_train < 1 || c.n_test < 1 || c.d < 1 || c.pairs_per_image < 1) {
    throw validation_error("synth: counts must be positive");
  }
  if (c.zipf_s < 0.0) throw validation_error("synth: zipf_s must be >= 0");
  if (!(c.cluster_spread > 0.0)) throw validation_error("synth: cluster_spread must be > 0");
  if (c.noise_sigma < 0.0) throw validation_error("synth: noise_sigma must be >= 0");
}

std::string padded_id(const char* prefix, int n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%06d", prefix, n);
  return buf;
}

std::vector<double> random_unit_vector(Rng& rng, int d) {
  std::vector<double> v(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& x : v) {
      x = rng.normal();
      norm += x * x;
    }
    norm = std::sqrt(norm);
  } while (norm < 1e-12);
  for (double& x : v) x /= norm;
  return v;
}

// Per-predicate geometric signature: subject-relative offset direction and
// distance plus object/subject size ratios. Clusters share a base signature;
// predicates within a cluster deviate slightly.
struct GeoSignature {
  double angle;
  double distance;   // in units of subject height
  double log_hratio;
  double log_wratio;
};

struct World {
  std::vector<std::vector<double>> prototypes;  // K x d
  std::vector<GeoSignature> signatures;         // K
  std::vector<int> cluster;                     // K
};

World build_world(const SynthConfig& c) {
  World world;
  world.cluster.resize(c.K);
  // frequency-ranked pairs, one frequent pair and one rare pair per cluster:
  // every cluster carries a local head/tail gradient, the source of both
  // confusion errors and prior suppression
  const int half = c.K / 2;
  for (int k = 0; k < c.K; ++k) {
    const int idx = k < half ? k : k - half;
    world.cluster[k] = (idx / 2) % c.n_clusters;
  }
  std::vector<std::vector<int>> members(c.n_clusters);
  for (int k = 0; k < c.K; ++k) members[world.cluster[k]].push_back(k);

  Rng proto_rng(derive_seed(c.seed, 1));
  // keeps clusters far apart relative to both prototype spread and sample
  // noise without inflating the feature scale
  const double center_scale = 2.5 * std::max(c.cluster_spread, c.noise_sigma);
  std::vector<std::vector<double>> centers(c.n_clusters);
  for (auto& center : centers) {
    center.resize(c.d);
    for (double& x : center) x = proto_rng.normal(0.0, center_scale);
  }
  // prototypes of a cluster form a chain (frequent end to rare end) with
  // adjacent spacing cluster_spread, plus a small off-axis offset per class
  world.prototypes.resize(c.K);
  for (int cl = 0; cl < c.n_clusters; ++cl) {
    const std::vector<double> axis = random_unit_vector(proto_rng, c.d);
    const int m = static_cast<int>(members[cl].size());
    for (int i = 0; i < m; ++i) {
      const int k = members[cl][i];
      const double along = (i - 0.5 * (m - 1)) * c.cluster_spread;
      std::vector<double> off = random_unit_vector(proto_rng, c.d);
      world.prototypes[k] = centers[cl];
      for (int j = 0; j < c.d; ++j) {
        world.prototypes[k][j] += along * axis[j] + 0.12 * c.cluster_spread * off[j];
      }
    }
  }

  Rng geo_rng(derive_seed(c.seed, 2));
  world.signatures.resize(c.K);
  for (int k = 0; k < c.K; ++k) {
    const int cl = world.cluster[k];
    GeoSignature sig;
    sig.angle = 2.0 * std::numbers::pi * cl / c.n_clusters + geo_rng.uniform(-0.15, 0.15);
    sig.distance = (1.5 + 0.2 * cl) * std::exp(geo_rng.uniform(-0.08, 0.08));
    sig.log_hratio = 0.35 * ((cl % 3) - 1) + geo_rng.uniform(-0.06, 0.06);
    sig.log_wratio = 0.35 * (((cl + 1) % 3) - 1) + geo_rng.uniform(-0.06, 0.06);
    world.signatures[k] = sig;
  }
  return world;
}

SynthSplit generate_split(const SynthConfig& c, const World& world, const char* prefix, long n,
                          std::uint64_t stream_seed) {
  Rng rng(stream_seed);

  std::vector<long> counts = zipf_counts(c.K, c.zipf_s, n);
  std::vector<int> labels;
  labels.reserve(n);
  for (int k = 0; k < c.K; ++k) {
    for (long i = 0; i < counts[k]; ++i) labels.push_back(k);
  }
  rng.shuffle(labels);

  SynthSplit split;
  split.dataset.C = c.C;
  split.dataset.K = c.K;
  split.features.d = c.d;
  split.features.x.reserve(n);
  split.features.labels.reserve(n);

  // per-triplet geometric noise, small against the cluster signatures
  constexpr double kAngleNoise = 0.12;
  constexpr double kLogDistNoise = 0.10;
  constexpr double kLogSizeNoise = 0.10;

  long row = 0;
  int image_no = 0;
  while (row < n) {
    ImageRecord rec;
    rec.image_id = padded_id(prefix, image_no++);
    const long pairs = std::min<long>(c.pairs_per_image, n - row);
    for (long p = 0; p < pairs; ++p, ++row) {
      const int label = labels[row];
      const GeoSignature& sig = world.signatures[label];

      std::vector<double> x = world.prototypes[label];
      for (double& v : x) v += rng.normal(0.0, c.noise_sigma);
      split.features.x.push_back(std::move(x));
      split.features.labels.push_back(label);

      BoundingBox subj;
      subj.cx = rng.uniform(0.0, 50.0);
      subj.cy = rng.uniform(0.0, 50.0);
      subj.h = std::exp(rng.normal(0.0, 0.15));
      subj.w = std::exp(rng.normal(0.0, 0.15));

      const double angle = sig.angle + rng.normal(0.0, kAngleNoise);
      const double dist = sig.distance * std::exp(rng.normal(0.0, kLogDistNoise)) * subj.h;
      BoundingBox obj;
      obj.cx = subj.cx + dist * std::cos(angle);
      obj.cy = subj.cy + dist * std::sin(angle);
      obj.h = subj.h * std::exp(sig.log_hratio + rng.normal(0.0, kLogSizeNoise));
      obj.w = subj.w * std::exp(sig.log_wratio + rng.normal(0.0, kLogSizeNoise));

      const int subj_cat = static_cast<int>(rng.next_below(c.C));
      const int obj_cat = static_cast<int>(rng.next_below(c.C));
      const int base = static_cast<int>(rec.objects.size());
      rec.objects.push_back({subj_cat, subj});
      rec.objects.push_back({obj_cat, obj});
      rec.triplets.push_back({base, base + 1, label});
    }
    split.dataset.records.push_back(std::move(rec));
  }
  validate(split.dataset);
  validate(split.features);
  return split;
}

}  // namespace

std::vector<long> zipf_counts(int K, double s, long n) {
  if (K < 1 || n < 0) throw validation_error("zipf_counts: bad arguments");
  std::vector<double> weights(K);
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    weights[k] = std::pow(static_cast<double>(k + 1), -s);
    total += weights[k];
  }
  std::vector<long> counts(K);
  std::vector<std::pair<double, int>> remainders(K);
  long assigned = 0;
  for (int k = 0; k < K; ++k) {
    const double quota = static_cast<double>(n) * weights[k] / total;
    counts[k] = static_cast<long>(std::floor(quota));
    assigned += counts[k];
    // larger remainder first; ties to the smaller class id
    remainders[k] = {-(quota - static_cast<double>(counts[k])), k};
  }
  std::sort(remainders.begin(), remainders.end());
  for (long i = 0; i < n - assigned; ++i) ++counts[remainders[i % K].second];
  return counts;
}

SynthConfig default_synth_config() { return SynthConfig{}; }

SynthWorld generate(const SynthConfig& config) {
  check_config(config);
  const World world = build_world(config);
  SynthWorld out;
  out.cluster_of_class = world.cluster;
  out.train = generate_split(config, world, "train", config.n_train, derive_seed(config.seed, 3));
  out.test = generate_split(config, world, "test", config.n_test, derive_seed(config.seed, 4));
  return out;
}

LogitDump simulate_biased_logits(const LinearModel& model, const FeatureSet& features,
                                 const Dataset& dataset, const BgConfig& bg) {
  validate(features);
  if (model.d() != features.d) throw validation_error("model/feature dimension mismatch");
  long total = 0;
  for (const ImageRecord& rec : dataset.records) total += rec.triplets.size();
  if (total != features.n()) {
    throw validation_error("dataset triplet count does not match feature rows");
  }

  Rng rng(bg.seed);
  LogitDump dump;
  dump.K = model.K();
  dump.records.reserve(features.n());
  long row = 0;
  for (const ImageRecord& rec : dataset.records) {
    for (std::size_t p = 0; p < rec.triplets.size(); ++p, ++row) {
      LogitRecord out;
      out.image_id = rec.image_id;
      out.pair_id = static_cast<int>(p);
      out.gt_predicate = rec.triplets[p].predicate;
      out.fg_logits = model.logits(features.x[row]);
      out.bg_logit = bg.mode == BgMode::kConstant ? bg.constant : rng.uniform(bg.lo, bg.hi);
      dump.records.push_back(std::move(out));
    }
  }
  validate(dump);
  return dump;
}

LogitDump simulate_biased_logits(const LinearModel& model, const FeatureSet& features,
                                 const BgConfig& bg) {
  validate(features);
  if (model.d() != features.d) throw validation_error("model/feature dimension mismatch");
  Rng rng(bg.seed);
  LogitDump dump;
  dump.K = model.K();
  dump.records.reserve(features.n());
  for (int i = 0; i < features.n(); ++i) {
    LogitRecord out;
    out.image_id = padded_id("row", i);
    out.pair_id = 0;
    out.gt_predicate = features.labels[i];
    out.fg_logits = model.logits(features.x[i]);
    out.bg_logit = bg.mode == BgMode::kConstant ? bg.constant : rng.uniform(bg.lo, bg.hi);
    dump.records.push_back(std::move(out));
  }
  validate(dump);
  return dump;
}

SynthConfig synth_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw validation_error(std::string("synth config: parse error: ") + e.what());
  }
  SynthConfig c;
  c.K = j.value("K", c.K);
  c.C = j.value("C", c.C);
  c.n_train = j.value("n_train", c.n_train);
  c.n_test = j.value("n_test", c.n_test);
  c.zipf_s = j.value("zipf_s", c.zipf_s);
  c.n_clusters = j.value("n_clusters", c.n_clusters);
  c.cluster_spread = j.value("cluster_spread", c.cluster_spread);
  c.noise_sigma = j.value("noise_sigma", c.noise_sigma);
  c.d = j.value("d", c.d);
  c.seed = j.value("seed", c.seed);
  c.pairs_per_image = j.value("pairs_per_image", c.pairs_per_image);
  check_config(c);
  return c;
}

std::string synth_config_to_json(const SynthConfig& c) {
  json j;
  j["K"] = c.K;
  j["C"] = c.C;
  j["n_train"] = c.n_train;
  j["n_test"] = c.n_test;
  j["zipf_s"] = c.zipf_s;
  j["n_clusters"] = c.n_clusters;
  j["cluster_spread"] = c.cluster_spread;
  j["noise_sigma"] = c.noise_sigma;
  j["d"] = c.d;
  j["seed"] = c.seed;
  j["pairs_per_image"] = c.pairs_per_image;
  return j.dump(2);
}

}  // namespace tscm
