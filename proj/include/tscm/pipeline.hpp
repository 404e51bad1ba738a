#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tscm/adjustment.hpp"
#include "tscm/metrics.hpp"
#include "tscm/ploss.hpp"
#include "tscm/synth.hpp"

namespace tscm {

// One JSON document drives the whole run; every stage seed derives from the
// master seed unless the stage block pins its own.
struct PipelineConfig {
  std::uint64_t seed = 42;
  SynthConfig synth;
  int alpha = 5;
  int beta = 3;
  TrainConfig train{0.2, 40, 128, 0, 1e-4};
  BgConfig bg{BgMode::kUniform, 1.0, -0.5, 1.5, 0};
  std::vector<int> ks = {20, 50, 100};
  int threads = 1;
};

PipelineConfig default_pipeline_config();
PipelineConfig pipeline_config_from_json(const std::string& text);
std::string pipeline_config_to_json(const PipelineConfig& config);

struct PipelineSummary {
  double margin_ce = 0.0;     // within-cluster margin, CE-trained model
  double margin_ploss = 0.0;  // same under the population loss
  MetricsReport ce_raw;
  MetricsReport ce_adjusted;
  MetricsReport ploss_raw;
  MetricsReport ploss_adjusted;
};

// synth -> featurize -> populations -> train (CE and P-Loss) -> dump-logits
// -> fit-adjust (on the train dump) -> apply-adjust (on the test dump) ->
// eval. Writes every intermediate artifact under out_dir; byte-identical
// across reruns with the same config.
PipelineSummary run_pipeline(const PipelineConfig& config, const std::string& out_dir);

}  // namespace tscm
