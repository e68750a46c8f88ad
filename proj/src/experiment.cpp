#include "equal/experiment.hpp"

#include <chrono>
#include <fstream>
#include <stdexcept>

#include "equal/data.hpp"
#include "equal/rng.hpp"
#include "equal/trainer.hpp"

namespace equal {

namespace {

struct RowSink {
  std::ofstream csv;
  std::ofstream acq;

  RowSink(const std::string& stem, std::size_t num_classes) {
    csv.open(results_csv_path(stem), std::ios::trunc);
    if (!csv) throw std::runtime_error("cannot write " + results_csv_path(stem));
    csv << results_csv_header(num_classes) << "\n";
    csv.flush();
    acq.open(acquisition_log_path(stem), std::ios::trunc);
    if (!acq) throw std::runtime_error("cannot write " + acquisition_log_path(stem));
    acq << "strategy,seed,round,image,region,score\n";
  }

  void push(ResultsTable& table, ResultRow row) {
    csv << format_csv_row(row) << "\n";
    csv.flush();  // rows stay recoverable if the run dies
    table.rows.push_back(std::move(row));
  }

  void warn(const std::string& message) {
    csv << "# warning: " << message << "\n";
    csv.flush();
  }

  // write_results re-emits the canonical files afterwards; both streams must
  // be closed first so no buffered bytes land on top of them.
  void close() {
    csv.close();
    acq.close();
  }
};

std::string fmt_score(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// One strategy x seeds sweep appended into the shared table. `label` is the
// CSV strategy name for the "ce" variant; the "sc" variant gets a '+'
// inserted after the base strategy name.
void execute_runs(const ExperimentConfig& cfg, const std::string& ce_label,
                  const std::string& sc_label, ResultsTable& table, RowSink& sink,
                  std::vector<std::string>& errors) {
  const std::vector<Sample> train_set =
      generate_dataset(cfg.data_seed, cfg.data_count, cfg.data_height, cfg.data_width,
                       cfg.data_channels, cfg.data_classes);
  const std::vector<Sample> eval_set =
      generate_dataset(cfg.eval_seed_value(), cfg.eval_count, cfg.data_height,
                       cfg.data_width, cfg.data_channels, cfg.data_classes);
  const RegionGrid grid = make_region_grid(cfg.data_height, cfg.data_width,
                                           cfg.region_height, cfg.region_width);

  const Strategy strategy = cfg.to_strategy();
  const LossConfig loop_loss = cfg.to_loss_config();
  const TrainConfig train_cfg = cfg.to_train_config();
  const ModelConfig model_cfg = cfg.to_model_config();

  const bool run_ce = cfg.retrain_variants == "ce" || cfg.retrain_variants == "both";
  const bool run_sc = cfg.retrain_variants == "sc" || cfg.retrain_variants == "both";

  for (std::uint64_t seed : cfg.seeds) {
    try {
      TrainConfig seed_train = train_cfg;
      seed_train.seed = mix_seed(seed, 0x100b);
      ActiveLoopResult loop =
          active_loop(train_set, grid, model_cfg, strategy, loop_loss, seed_train,
                      cfg.budgets, cfg.select_k, seed, cfg.warm_start);

      for (const RoundLog& r : loop.rounds) {
        for (const ScoredRegion& s : r.picked) {
          sink.acq << ce_label << "," << seed << "," << r.round << "," << s.region.image
                   << "," << s.region.region << "," << fmt_score(s.score) << "\n";
        }
      }

      for (std::size_t ci = 0; ci < loop.checkpoints.size(); ++ci) {
        const BudgetCheckpoint& cp = loop.checkpoints[ci];
        const double diversity =
            diversity_entropy(cp.pool, train_set, grid, cfg.data_classes);

        for (int variant = 0; variant < 2; ++variant) {
          if (variant == 0 && !run_ce) continue;
          if (variant == 1 && !run_sc) continue;
          const auto t0 = std::chrono::steady_clock::now();

          // both variants share the retrain seed: same init, same data order,
          // only the loss differs
          LossConfig retrain_loss = loop_loss;
          retrain_loss.use_consistency = variant == 1;
          const SegModel model =
              final_retrain(train_set, cp.pool, grid, model_cfg, retrain_loss,
                            seed_train, mix_seed(seed, 0xf1, ci));
          const EvalResult ev = evaluate(model, eval_set);
          const double inc = inconsistency(model, eval_set, cfg.transform);

          const auto t1 = std::chrono::steady_clock::now();
          ResultRow row;
          row.strategy = variant == 0 ? ce_label : sc_label;
          row.budget = cp.budget;
          row.seed = seed;
          row.round = cp.round;
          row.miou = ev.miou;
          row.iou = ev.iou;
          row.diversity_entropy = diversity;
          row.inconsistency = inc;
          row.wall_s = std::chrono::duration<double>(t1 - t0).count();
          sink.push(table, std::move(row));

          if (cfg.save_checkpoints) {
            const std::string name = cfg.output + ".ckpt_" +
                                     (variant == 0 ? ce_label : sc_label) + "_" +
                                     fmt_score(cp.budget) + "_" + std::to_string(seed) +
                                     ".bin";
            save_checkpoint(model, name);
          }
        }
      }
    } catch (const std::exception& e) {
      errors.push_back("seed " + std::to_string(seed) + ": " + e.what());
    }
  }
}

}  // namespace

std::vector<std::string> standard_metadata_notes(const ExperimentConfig& cfg) {
  std::vector<std::string> notes = {
      "no pretraining before final retraining",
      "warm selection-phase training across acquisition rounds",
      "translation transforms use circular boundaries and a per-run fixed offset",
      "wall_s is wall-clock noise and is excluded from determinism comparisons",
  };
  if (cfg.loss_weight != 1.0) {
    notes.push_back("consistency weight set to " + std::to_string(cfg.loss_weight));
  }
  return notes;
}

ResultsTable run_experiment(const ExperimentConfig& cfg, const std::string& stem) {
  ResultsTable table;
  table.num_classes = cfg.data_classes;
  RowSink sink(stem, cfg.data_classes);
  std::vector<std::string> errors;

  execute_runs(cfg, cfg.strategy, cfg.strategy + "+", table, sink, errors);

  sink.close();
  table.recompute_aggregates();
  write_results(table, stem, serialize_config(cfg), standard_metadata_notes(cfg), {},
                errors);
  return table;
}

AblationKind parse_ablation_kind(const std::string& text) {
  if (text == "transform") return AblationKind::kTransform;
  if (text == "loss_norm") return AblationKind::kLossNorm;
  if (text == "region_size") return AblationKind::kRegionSize;
  throw std::invalid_argument("unknown ablation '" + text +
                              "' (expected transform|loss_norm|region_size)");
}

namespace {

std::string csv_token(const TransformKind& kind) {
  std::string n = kind.name();
  for (char& c : n) {
    if (c == ',') c = '_';
  }
  return n;
}

}  // namespace

ResultsTable run_ablation(AblationKind kind, const ExperimentConfig& base,
                          const std::string& stem) {
  ResultsTable table;
  table.num_classes = base.data_classes;
  RowSink sink(stem, base.data_classes);
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  switch (kind) {
    case AblationKind::kTransform: {
      ExperimentConfig cfg = base;
      cfg.retrain_variants = "ce";
      cfg.strategy = "entropy";
      cfg.loss_consistency = false;
      execute_runs(cfg, "entropy", "entropy+", table, sink, errors);

      const std::vector<TransformKind> kinds = {
          TransformKind::hflip(), TransformKind::vflip(), TransformKind::rot90(),
          TransformKind::rot180(),
          TransformKind::translate(std::max(1, static_cast<int>(base.data_width / 8)),
                                   std::max(1, static_cast<int>(base.data_height / 8)))};
      for (const TransformKind& t : kinds) {
        cfg = base;
        cfg.retrain_variants = "ce";
        cfg.strategy = "equal";
        cfg.transform = t;
        cfg.loss_consistency = true;
        const std::string label = "equal:" + csv_token(t);
        execute_runs(cfg, label, label + "+", table, sink, errors);
      }
      break;
    }
    case AblationKind::kLossNorm: {
      for (ConsistencyNorm norm : {ConsistencyNorm::kL2, ConsistencyNorm::kL1}) {
        ExperimentConfig cfg = base;
        cfg.strategy = "equal";
        cfg.loss_consistency = true;
        cfg.loss_norm = norm;
        cfg.retrain_variants = "sc";
        const std::string label = "equal:" + consistency_norm_name(norm);
        execute_runs(cfg, label, "equal+:" + consistency_norm_name(norm), table, sink,
                     errors);
      }
      break;
    }
    case AblationKind::kRegionSize: {
      std::vector<std::pair<std::size_t, std::size_t>> sizes;
      for (std::size_t s = 4; s < std::min(base.data_height, base.data_width); s *= 2) {
        sizes.push_back({s, s});
      }
      sizes.push_back({base.data_height, base.data_width});  // whole image
      for (const auto& [rh, rw] : sizes) {
        const std::string label =
            "equal:r" + std::to_string(rh) + "x" + std::to_string(rw);
        if (base.data_height % rh != 0 || base.data_width % rw != 0) {
          const std::string msg = label + " skipped: region does not tile " +
                                  std::to_string(base.data_height) + "x" +
                                  std::to_string(base.data_width);
          warnings.push_back(msg);
          sink.warn(msg);
          continue;
        }
        ExperimentConfig cfg = base;
        cfg.strategy = "equal";
        cfg.loss_consistency = true;
        cfg.retrain_variants = "ce";
        cfg.region_height = rh;
        cfg.region_width = rw;
        execute_runs(cfg, label, label + "+", table, sink, errors);
      }
      break;
    }
  }

  sink.close();
  table.recompute_aggregates();
  write_results(table, stem, serialize_config(base), standard_metadata_notes(base),
                warnings, errors);
  return table;
}

}  // namespace equal
