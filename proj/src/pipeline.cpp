#include "tscm/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "tscm/geometry.hpp"
#include "tscm/io.hpp"
#include "tscm/populations.hpp"
#include "tscm/rng.hpp"
#include "tscm/version.hpp"

namespace tscm {

namespace {

using json = nlohmann::ordered_json;

// fixed stage ids for seed derivation
constexpr std::uint64_t kTrainStage = 10;
constexpr std::uint64_t kBgStage = 11;
constexpr std::uint64_t kFitStage = 12;

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out.flush()) throw io_error("write failed for '" + path + "'");
}

json report_json(const MetricsReport& r) {
  json j;
  j["micro_accuracy"] = r.micro_accuracy;
  j["mr_argmax"] = r.mr_argmax;
  j["avg_r"] = r.avg_r;
  j["avg_mr"] = r.avg_mr;
  j["mr_combined"] = r.mr_combined;
  if (r.mc_argmax) j["mc_argmax"] = *r.mc_argmax;
  return j;
}

}  // namespace

PipelineConfig default_pipeline_config() { return PipelineConfig{}; }

PipelineConfig pipeline_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw validation_error(std::string("pipeline config: parse error: ") + e.what());
  }
  PipelineConfig c;
  c.seed = j.value("seed", c.seed);
  c.synth.seed = c.seed;
  if (j.contains("synth")) {
    SynthConfig base = c.synth;
    SynthConfig parsed = synth_config_from_json(j["synth"].dump());
    // synth_config_from_json fills unset fields from the struct default, so
    // re-apply the master seed unless the block pinned one
    parsed.seed = j["synth"].contains("seed") ? parsed.seed : base.seed;
    c.synth = parsed;
  }
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  if (j.contains("train")) c.train = train_config_from_json(j["train"].dump());
  if (j.contains("bg")) {
    const json& b = j["bg"];
    const std::string mode = b.value("mode", "uniform");
    if (mode == "constant") {
      c.bg.mode = BgMode::kConstant;
    } else if (mode == "uniform") {
      c.bg.mode = BgMode::kUniform;
    } else {
      throw validation_error("pipeline config: bg mode must be 'constant' or 'uniform'");
    }
    c.bg.constant = b.value("value", c.bg.constant);
    c.bg.lo = b.value("lo", c.bg.lo);
    c.bg.hi = b.value("hi", c.bg.hi);
  }
  if (j.contains("ks")) c.ks = j["ks"].get<std::vector<int>>();
  c.threads = j.value("threads", c.threads);
  if (c.alpha < 1) throw validation_error("alpha must be >= 1");
  if (c.beta < 1) throw validation_error("beta must be >= 1");
  return c;
}

std::string pipeline_config_to_json(const PipelineConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["synth"] = json::parse(synth_config_to_json(c.synth));
  j["alpha"] = c.alpha;
  j["beta"] = c.beta;
  j["train"] = {{"lr", c.train.lr},
                {"epochs", c.train.epochs},
                {"batch", c.train.batch},
                {"l2", c.train.l2}};
  j["bg"] = {{"mode", c.bg.mode == BgMode::kConstant ? "constant" : "uniform"},
             {"value", c.bg.constant},
             {"lo", c.bg.lo},
             {"hi", c.bg.hi}};
  j["ks"] = c.ks;
  j["threads"] = c.threads;
  return j.dump(2);
}

PipelineSummary run_pipeline(const PipelineConfig& config, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw io_error("cannot create output directory '" + out_dir + "'");
  auto at = [&](const std::string& name) { return (fs::path(out_dir) / name).string(); };

  const ProducerInfo info{static_cast<std::int64_t>(config.seed), kVersion};

  // stage 1 inputs: world, populations, frequencies
  const SynthWorld world = generate(config.synth);
  write_text(at("synth-config.json"), synth_config_to_json(config.synth) + "\n");
  {
    json j;
    j["format"] = "tscm-clusters";
    j["version"] = 1;
    j["K"] = config.synth.K;
    j["cluster"] = world.cluster_of_class;
    write_text(at("clusters.json"), j.dump(2) + "\n");
  }
  save_dataset(world.train.dataset, at("dataset-train.jsonl"), info);
  save_dataset(world.test.dataset, at("dataset-test.jsonl"), info);
  save_features(world.train.features, at("features-train.jsonl"), info);
  save_features(world.test.features, at("features-test.jsonl"), info);
  save_features(pair_feature_set(world.train.dataset), at("pair-features-train.jsonl"), info);

  const FrequencyVector pi = class_frequencies(world.train.dataset);
  const PopulationTable pop = build_populations(world.train.dataset, config.alpha);
  save_populations(pop, at("populations.jsonl"), info);

  // stage 1 training: CE baseline and population loss, same hyperparameters
  TrainConfig tc = config.train;
  tc.seed = derive_seed(config.seed, kTrainStage);
  const PLossContext ce_ctx = PLossContext::uniform(config.synth.K);
  const PLossContext pl_ctx(pi, pop);
  const LinearModel ce_model = train_linear(world.train.features, ce_ctx, tc).model;
  const LinearModel pl_model = train_linear(world.train.features, pl_ctx, tc).model;
  save_model(ce_model, at("model-ce.jsonl"));
  save_model(pl_model, at("model-ploss.jsonl"));

  // stage 2 inputs: logit dumps; factors are fitted on the train split and
  // evaluated on the test split
  BgConfig bg = config.bg;
  bg.seed = derive_seed(config.seed, kBgStage);
  const LogitDump ce_train = simulate_biased_logits(ce_model, world.train.features,
                                                    world.train.dataset, bg);
  const LogitDump ce_test = simulate_biased_logits(ce_model, world.test.features,
                                                   world.test.dataset, bg);
  const LogitDump pl_train = simulate_biased_logits(pl_model, world.train.features,
                                                    world.train.dataset, bg);
  const LogitDump pl_test = simulate_biased_logits(pl_model, world.test.features,
                                                   world.test.dataset, bg);
  save_logits(ce_train, at("logits-ce-train.jsonl"), info);
  save_logits(ce_test, at("logits-ce-test.jsonl"), info);
  save_logits(pl_train, at("logits-ploss-train.jsonl"), info);
  save_logits(pl_test, at("logits-ploss-test.jsonl"), info);

  const std::uint64_t fit_seed = derive_seed(config.seed, kFitStage);
  const AdjustmentMatrix ce_adj = fit_adjustment(ce_train, config.beta, fit_seed, config.threads);
  const AdjustmentMatrix pl_adj = fit_adjustment(pl_train, config.beta, fit_seed, config.threads);
  save_adjustment(ce_adj, at("adjust-ce.jsonl"), info);
  save_adjustment(pl_adj, at("adjust-ploss.jsonl"), info);

  const AdjustmentMatrix identity = AdjustmentMatrix::identity(config.synth.K, config.beta);
  const PredictionSet ce_raw = apply_adjustment(ce_test, identity);
  const PredictionSet ce_adjusted = apply_adjustment(ce_test, ce_adj);
  const PredictionSet pl_raw = apply_adjustment(pl_test, identity);
  const PredictionSet pl_adjusted = apply_adjustment(pl_test, pl_adj);
  save_predictions(ce_raw, at("preds-ce-raw.jsonl"), info);
  save_predictions(ce_adjusted, at("preds-ce-adj.jsonl"), info);
  save_predictions(pl_raw, at("preds-ploss-raw.jsonl"), info);
  save_predictions(pl_adjusted, at("preds-ploss-adj.jsonl"), info);

  PipelineSummary summary;
  summary.ce_raw = evaluate(ce_raw, config.ks);
  summary.ce_adjusted = evaluate(ce_adjusted, config.ks, &ce_raw);
  summary.ploss_raw = evaluate(pl_raw, config.ks);
  summary.ploss_adjusted = evaluate(pl_adjusted, config.ks, &pl_raw);
  save_report(summary.ce_raw, at("report-ce-raw.json"));
  save_report(summary.ce_adjusted, at("report-ce-adj.json"));
  save_report(summary.ploss_raw, at("report-ploss-raw.json"));
  save_report(summary.ploss_adjusted, at("report-ploss-adj.json"));

  summary.margin_ce = mean_within_cluster_margin(ce_test, world.cluster_of_class);
  summary.margin_ploss = mean_within_cluster_margin(pl_test, world.cluster_of_class);

  json s;
  s["format"] = "tscm-summary";
  s["version"] = 1;
  s["seed"] = config.seed;
  s["tool_version"] = kVersion;
  s["margin_ce"] = summary.margin_ce;
  s["margin_ploss"] = summary.margin_ploss;
  s["ce_raw"] = report_json(summary.ce_raw);
  s["ce_adj"] = report_json(summary.ce_adjusted);
  s["ploss_raw"] = report_json(summary.ploss_raw);
  s["ploss_adj"] = report_json(summary.ploss_adjusted);
  write_text(at("summary.json"), s.dump(2) + "\n");
  return summary;
}

}  // namespace tscm
