#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "equal/acquisition.hpp"
#include "equal/model.hpp"
#include "equal/trainer.hpp"

namespace equal {

// One experiment: dataset recipe, region tiling, acquisition strategy, loop
// and retraining hyperparameters, seeds, output stem. Parsed from a flat
// "key = value" document; every field has a default, and serialization emits
// the fully resolved document.
struct ExperimentConfig {
  // dataset
  std::size_t data_count = 200;
  std::size_t data_height = 32;
  std::size_t data_width = 32;
  std::size_t data_channels = 5;
  std::size_t data_classes = 4;
  std::uint64_t data_seed = 1;
  std::size_t eval_count = 50;
  std::optional<std::uint64_t> eval_seed;  // default: data_seed + 1

  // regions / acquisition
  std::size_t region_height = 8;
  std::size_t region_width = 8;
  std::string strategy = "equal";  // random | entropy | equal
  TransformKind transform = TransformKind::hflip();
  PairMode pair_mode = PairMode::kSumEntropy;
  std::size_t select_k = 4;
  std::vector<double> budgets = {0.08, 0.12, 0.16, 0.20, 0.24};
  std::size_t warm_start = 0;

  // loop/retrain loss
  std::optional<bool> loss_consistency;  // default: strategy == "equal"
  ConsistencyNorm loss_norm = ConsistencyNorm::kL2;
  double loss_threshold = 0.04;
  double loss_weight = 1.0;
  bool augment_hflip = true;

  // optimizer / schedule
  std::size_t epochs_per_round = 5;
  std::size_t final_epochs = 60;
  std::size_t batch_size = 4;
  double learning_rate = 5e-4;
  double weight_decay = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double lr_decay = 0.1;
  std::size_t lr_decay_every = 20;

  std::vector<std::size_t> hidden = {16, 16};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string retrain_variants = "both";  // ce | sc | both
  bool save_checkpoints = false;
  std::string output = "results";

  bool operator==(const ExperimentConfig& other) const = default;

  // resolved defaults
  bool use_consistency() const { return loss_consistency.value_or(strategy == "equal"); }
  std::uint64_t eval_seed_value() const { return eval_seed.value_or(data_seed + 1); }

  Strategy to_strategy() const;
  LossConfig to_loss_config() const;
  TrainConfig to_train_config() const;
  ModelConfig to_model_config() const;
};

// Parses and validates; unknown keys, type errors and invariant violations
// throw with the offending key named.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Emits every key with its resolved value; parse(serialize(cfg)) == cfg.
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace equal
