// tscm: two-stage debiasing pipeline for relationship classification.
// Subcommands cover the full chain from synthetic data generation to metric
// reports; `pipeline` runs everything from one JSON config.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "tscm/adjustment.hpp"
#include "tscm/geometry.hpp"
#include "tscm/io.hpp"
#include "tscm/metrics.hpp"
#include "tscm/pipeline.hpp"
#include "tscm/ploss.hpp"
#include "tscm/populations.hpp"
#include "tscm/rng.hpp"
#include "tscm/synth.hpp"
#include "tscm/version.hpp"

namespace {

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw tscm::io_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct GlobalFlags {
  std::uint64_t seed = 42;
  int threads = 1;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"two-stage causal debiasing for relationship classification"};
  app.set_version_flag("--version", std::string("tscm ") + tscm::kVersion);
  app.require_subcommand(1);

  GlobalFlags flags;
  app.add_option("--seed", flags.seed, "master seed (default 42)");
  app.add_option("--threads", flags.threads, "worker cap; never changes results")
      ->check(CLI::PositiveNumber);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic world");
  std::string synth_config_path, synth_out_dir;
  synth_cmd->add_option("--config", synth_config_path, "synth config JSON");
  synth_cmd->add_option("--out-dir", synth_out_dir, "output directory")->required();

  // featurize
  auto* feat_cmd = app.add_subcommand("featurize", "pair geometry features from a dataset");
  std::string feat_dataset, feat_out;
  feat_cmd->add_option("--dataset", feat_dataset, "annotation file")->required();
  feat_cmd->add_option("--out", feat_out, "output feature file")->required();

  // populations
  auto* pop_cmd = app.add_subcommand("populations", "build the similar-relationship table");
  std::string pop_dataset, pop_out;
  int pop_alpha = 5;
  pop_cmd->add_option("--dataset", pop_dataset, "annotation file")->required();
  pop_cmd->add_option("--alpha", pop_alpha, "population size (default 5)");
  pop_cmd->add_option("--out", pop_out, "output population file")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train the linear classifier");
  std::string train_features, train_dataset, train_pop, train_config_path, train_out;
  train_cmd->add_option("--features", train_features, "feature file")->required();
  train_cmd->add_option("--dataset", train_dataset, "annotation file (provides K and pi)")
      ->required();
  train_cmd->add_option("--pop", train_pop, "population file; omit for plain cross-entropy");
  train_cmd->add_option("--config", train_config_path, "train config JSON");
  train_cmd->add_option("--out-model", train_out, "output model file")->required();

  // dump-logits
  auto* dump_cmd = app.add_subcommand("dump-logits", "score features into a logit dump");
  std::string dump_model, dump_features, dump_dataset, dump_out, dump_bg_mode = "constant";
  double dump_bg_value = 1.0, dump_bg_lo = -0.5, dump_bg_hi = 1.5;
  dump_cmd->add_option("--model", dump_model, "model file")->required();
  dump_cmd->add_option("--features", dump_features, "feature file")->required();
  dump_cmd->add_option("--dataset", dump_dataset, "annotation file for pair identities");
  dump_cmd->add_option("--bg-mode", dump_bg_mode, "constant|uniform (default constant)")
      ->check(CLI::IsMember({"constant", "uniform"}));
  dump_cmd->add_option("--bg-value", dump_bg_value, "constant background logit");
  dump_cmd->add_option("--bg-lo", dump_bg_lo, "uniform background lower edge");
  dump_cmd->add_option("--bg-hi", dump_bg_hi, "uniform background upper edge");
  dump_cmd->add_option("--out", dump_out, "output logit dump")->required();

  // fit-adjust
  auto* fit_cmd = app.add_subcommand("fit-adjust", "learn adjustment factors from a dump");
  std::string fit_logits, fit_out;
  int fit_beta = 3;
  fit_cmd->add_option("--logits", fit_logits, "logit dump")->required();
  fit_cmd->add_option("--beta", fit_beta, "adjusted rank depth (default 3)");
  fit_cmd->add_option("--out", fit_out, "output factor file")->required();

  // apply-adjust
  auto* apply_cmd = app.add_subcommand("apply-adjust", "apply factors to a logit dump");
  std::string apply_logits, apply_adj, apply_out;
  apply_cmd->add_option("--logits", apply_logits, "logit dump")->required();
  apply_cmd->add_option("--adj", apply_adj, "factor file; omit for identity factors");
  apply_cmd->add_option("--out", apply_out, "output predictions file")->required();

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "metric report for a predictions file");
  std::string eval_preds, eval_baseline, eval_dataset, eval_out, eval_ks = "20,50,100";
  eval_cmd->add_option("--preds", eval_preds, "predictions file")->required();
  eval_cmd->add_option("--baseline", eval_baseline, "baseline predictions for correction rates");
  eval_cmd->add_option("--dataset", eval_dataset, "annotation file (K consistency check)")
      ->required();
  eval_cmd->add_option("--ks", eval_ks, "retrieval cutoffs (default 20,50,100)");
  eval_cmd->add_option("--out", eval_out, "output report JSON")->required();

  // pipeline
  auto* pipe_cmd = app.add_subcommand("pipeline", "run the full seeded reproduction");
  std::string pipe_config_path, pipe_out_dir;
  pipe_cmd->add_option("--config", pipe_config_path, "pipeline config JSON");
  pipe_cmd->add_option("--out-dir", pipe_out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion") {
      return app.exit(e);
    }
    std::cerr << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  const tscm::ProducerInfo info{static_cast<std::int64_t>(flags.seed), tscm::kVersion};

  try {
    if (*synth_cmd) {
      tscm::SynthConfig config = tscm::default_synth_config();
      config.seed = flags.seed;
      if (!synth_config_path.empty()) {
        config = tscm::synth_config_from_json(read_text_file(synth_config_path));
      }
      std::filesystem::create_directories(synth_out_dir);
      const tscm::SynthWorld world = tscm::generate(config);
      auto at = [&](const char* name) {
        return (std::filesystem::path(synth_out_dir) / name).string();
      };
      const tscm::ProducerInfo synth_info{static_cast<std::int64_t>(config.seed), tscm::kVersion};
      tscm::save_dataset(world.train.dataset, at("dataset-train.jsonl"), synth_info);
      tscm::save_dataset(world.test.dataset, at("dataset-test.jsonl"), synth_info);
      tscm::save_features(world.train.features, at("features-train.jsonl"), synth_info);
      tscm::save_features(world.test.features, at("features-test.jsonl"), synth_info);
      std::ofstream clusters(at("clusters.json"), std::ios::binary);
      clusters << "{\"format\":\"tscm-clusters\",\"version\":1,\"K\":" << config.K
               << ",\"cluster\":[";
      for (int k = 0; k < config.K; ++k) {
        clusters << (k ? "," : "") << world.cluster_of_class[k];
      }
      clusters << "]}\n";
      std::cout << "synth: wrote " << world.train.dataset.records.size() << " train / "
                << world.test.dataset.records.size() << " test images to " << synth_out_dir
                << "\n";
    } else if (*feat_cmd) {
      const tscm::Dataset ds = tscm::load_dataset(feat_dataset);
      tscm::save_features(tscm::pair_feature_set(ds), feat_out, info);
      std::cout << "featurize: wrote " << feat_out << "\n";
    } else if (*pop_cmd) {
      const tscm::Dataset ds = tscm::load_dataset(pop_dataset);
      if (pop_alpha > ds.K / 4) {
        std::cerr << "warning: alpha " << pop_alpha << " is large relative to K " << ds.K
                  << "; populations are meant to be sparse\n";
      }
      tscm::save_populations(tscm::build_populations(ds, pop_alpha), pop_out, info);
      std::cout << "populations: wrote " << pop_out << "\n";
    } else if (*train_cmd) {
      const tscm::Dataset ds = tscm::load_dataset(train_dataset);
      const tscm::FeatureSet feats = tscm::load_features(train_features);
      tscm::TrainConfig config;
      config.seed = flags.seed;
      if (!train_config_path.empty()) {
        config = tscm::train_config_from_json(read_text_file(train_config_path));
      }
      tscm::PLossContext ctx = tscm::PLossContext::uniform(ds.K);
      if (!train_pop.empty()) {
        ctx = tscm::PLossContext(tscm::class_frequencies(ds), tscm::load_populations(train_pop));
      }
      const tscm::TrainResult result = tscm::train_linear(feats, ctx, config);
      tscm::save_model(result.model, train_out);
      std::cout << "train: " << result.epoch_mean_loss.size() << " epochs";
      if (!result.epoch_mean_loss.empty()) {
        std::cout << ", final mean loss " << result.epoch_mean_loss.back();
      }
      std::cout << ", wrote " << train_out << "\n";
    } else if (*dump_cmd) {
      const tscm::LinearModel model = tscm::load_model(dump_model);
      const tscm::FeatureSet feats = tscm::load_features(dump_features);
      tscm::BgConfig bg;
      bg.mode = dump_bg_mode == "constant" ? tscm::BgMode::kConstant : tscm::BgMode::kUniform;
      bg.constant = dump_bg_value;
      bg.lo = dump_bg_lo;
      bg.hi = dump_bg_hi;
      bg.seed = flags.seed;
      tscm::LogitDump dump;
      if (dump_dataset.empty()) {
        dump = tscm::simulate_biased_logits(model, feats, bg);
      } else {
        dump = tscm::simulate_biased_logits(model, feats, tscm::load_dataset(dump_dataset), bg);
      }
      tscm::save_logits(dump, dump_out, info);
      std::cout << "dump-logits: wrote " << dump.records.size() << " records to " << dump_out
                << "\n";
    } else if (*fit_cmd) {
      if (fit_beta < 1) throw tscm::validation_error("beta must be >= 1");
      const tscm::LogitDump dump = tscm::load_logits(fit_logits);
      const tscm::AdjustmentMatrix adj =
          tscm::fit_adjustment(dump, fit_beta, flags.seed, flags.threads);
      tscm::save_adjustment(adj, fit_out, info);
      std::cout << "fit-adjust: wrote " << fit_out << "\n";
    } else if (*apply_cmd) {
      const tscm::LogitDump dump = tscm::load_logits(apply_logits);
      tscm::AdjustmentMatrix adj = tscm::AdjustmentMatrix::identity(dump.K, 1);
      if (!apply_adj.empty()) {
        adj = tscm::load_adjustment(apply_adj);
        if (adj.K() != dump.K) {
          throw tscm::validation_error("factor file K does not match logit dump");
        }
      }
      tscm::save_predictions(tscm::apply_adjustment(dump, adj), apply_out, info);
      std::cout << "apply-adjust: wrote " << apply_out << "\n";
    } else if (*eval_cmd) {
      const tscm::Dataset ds = tscm::load_dataset(eval_dataset);
      const tscm::PredictionSet preds = tscm::load_predictions(eval_preds);
      if (preds.K != ds.K) {
        throw tscm::validation_error("predictions K does not match dataset K");
      }
      std::vector<int> ks;
      std::stringstream ss(eval_ks);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) ks.push_back(std::stoi(tok));
      }
      if (ks.empty()) throw tscm::validation_error("--ks must list at least one cutoff");
      tscm::MetricsReport report;
      if (eval_baseline.empty()) {
        report = tscm::evaluate(preds, ks);
      } else {
        const tscm::PredictionSet baseline = tscm::load_predictions(eval_baseline);
        if (baseline.K != ds.K) {
          throw tscm::validation_error("baseline K does not match dataset K");
        }
        report = tscm::evaluate(preds, ks, &baseline);
      }
      tscm::save_report(report, eval_out);
      std::cout << "eval: micro accuracy " << report.micro_accuracy << ", mR@argmax "
                << report.mr_argmax << ", wrote " << eval_out << "\n";
    } else if (*pipe_cmd) {
      tscm::PipelineConfig config = tscm::default_pipeline_config();
      config.seed = flags.seed;
      config.synth.seed = flags.seed;
      if (!pipe_config_path.empty()) {
        config = tscm::pipeline_config_from_json(read_text_file(pipe_config_path));
      }
      config.threads = flags.threads;
      const tscm::PipelineSummary summary = tscm::run_pipeline(config, pipe_out_dir);
      std::cout << "pipeline: margin ce " << summary.margin_ce << " -> ploss "
                << summary.margin_ploss << "\n"
                << "pipeline: mR@argmax ce " << summary.ce_raw.mr_argmax << " -> ce+adj "
                << summary.ce_adjusted.mr_argmax << " -> tscm "
                << summary.ploss_adjusted.mr_argmax << "\n"
                << "pipeline: artifacts in " << pipe_out_dir << "\n";
    }
  } catch (const tscm::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const tscm::validation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
