#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tscm/types.hpp"

namespace tscm {

// Optional header fields stamped by the CLI so every artifact records what
// produced it. Library round-trips ignore them.
struct ProducerInfo {
  std::optional<std::int64_t> seed;
  std::optional<std::string> tool_version;
};

// JSONL formats, one header line + one JSON object per record. Output is
// byte-stable: fixed key order, shortest-round-trip float formatting.
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& path, const ProducerInfo& info = {});

LogitDump load_logits(const std::string& path);
void save_logits(const LogitDump& dump, const std::string& path, const ProducerInfo& info = {});

PopulationTable load_populations(const std::string& path);
void save_populations(const PopulationTable& pop, const std::string& path,
                      const ProducerInfo& info = {});

AdjustmentMatrix load_adjustment(const std::string& path);
void save_adjustment(const AdjustmentMatrix& adj, const std::string& path,
                     const ProducerInfo& info = {});

FeatureSet load_features(const std::string& path);
void save_features(const FeatureSet& feats, const std::string& path,
                   const ProducerInfo& info = {});

PredictionSet load_predictions(const std::string& path);
void save_predictions(const PredictionSet& preds, const std::string& path,
                      const ProducerInfo& info = {});

}  // namespace tscm
