#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "equal/config.hpp"
#include "equal/data.hpp"
#include "equal/experiment.hpp"
#include "equal/gradcheck.hpp"
#include "equal/trainer.hpp"

namespace {

equal::ExperimentConfig load_with_overrides(const std::string& path,
                                            const std::string& seed_opt,
                                            const std::string& budget_opt,
                                            const std::string& out_opt) {
  equal::ExperimentConfig cfg = equal::parse_config_file(path);
  if (!seed_opt.empty()) cfg.seeds = {std::stoull(seed_opt)};
  if (!budget_opt.empty()) cfg.budgets = {std::stod(budget_opt)};
  if (!out_opt.empty()) cfg.output = out_opt;
  return cfg;
}

int cmd_run(const std::string& config_path, const std::string& seed,
            const std::string& budget, const std::string& out) {
  const equal::ExperimentConfig cfg = load_with_overrides(config_path, seed, budget, out);
  const equal::ResultsTable table = equal::run_experiment(cfg, cfg.output);
  std::printf("wrote %zu rows to %s\n", table.rows.size(),
              equal::results_csv_path(cfg.output).c_str());
  for (const equal::AggregateRow& a : table.aggregates) {
    std::printf("%-24s budget %.2f  miou %.4f +/- %.4f  (%zu runs)\n",
                a.strategy.c_str(), a.budget, a.miou_mean, a.miou_std, a.runs);
  }
  return 0;
}

int cmd_ablate(const std::string& kind_text, const std::string& config_path,
               const std::string& seed, const std::string& budget,
               const std::string& out) {
  const equal::AblationKind kind = equal::parse_ablation_kind(kind_text);
  const equal::ExperimentConfig cfg = load_with_overrides(config_path, seed, budget, out);
  const equal::ResultsTable table = equal::run_ablation(kind, cfg, cfg.output);
  std::printf("wrote %zu rows to %s\n", table.rows.size(),
              equal::results_csv_path(cfg.output).c_str());
  for (const equal::AggregateRow& a : table.aggregates) {
    std::printf("%-28s budget %.2f  miou %.4f +/- %.4f  (%zu runs)\n",
                a.strategy.c_str(), a.budget, a.miou_mean, a.miou_std, a.runs);
  }
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& dataset_path) {
  const equal::SegModel model = equal::load_checkpoint(checkpoint_path);
  const std::vector<equal::Sample> samples = equal::load_dataset(dataset_path);
  const equal::EvalResult ev = equal::evaluate(model, samples);
  const double inc = equal::inconsistency(model, samples, equal::TransformKind::hflip());
  for (std::size_t c = 0; c < ev.iou.size(); ++c) {
    std::printf("iou_%zu %.6f%s\n", c, ev.iou[c],
                ev.class_in_truth[c] ? "" : " (absent from ground truth)");
  }
  std::printf("miou %.6f\n", ev.miou);
  std::printf("inconsistency %.6f\n", inc);
  return 0;
}

int cmd_gradcheck(std::size_t seeds) {
  const std::vector<equal::GradCheckReport> reports = equal::gradcheck_suite(seeds);
  bool ok = true;
  for (const equal::GradCheckReport& r : reports) {
    std::printf("%-32s max rel err %.3e  %s\n", r.name.c_str(), r.max_rel_err,
                r.pass() ? "ok" : "FAIL");
    ok = ok && r.pass();
  }
  return ok ? 0 : 1;
}

int cmd_gen_data(const std::string& config_path, const std::string& split,
                 const std::string& out) {
  const equal::ExperimentConfig cfg = equal::parse_config_file(config_path);
  const bool eval_split = split == "eval";
  const std::uint64_t seed = eval_split ? cfg.eval_seed_value() : cfg.data_seed;
  const std::size_t count = eval_split ? cfg.eval_count : cfg.data_count;
  const std::vector<equal::Sample> samples = equal::generate_dataset(
      seed, count, cfg.data_height, cfg.data_width, cfg.data_channels, cfg.data_classes);
  equal::DatasetHeader header{count, cfg.data_height, cfg.data_width,
                              cfg.data_channels, cfg.data_classes, seed};
  const std::string path = out.empty() ? cfg.output + "." + split + ".bin" : out;
  equal::save_dataset(samples, header, path);
  std::printf("wrote %zu samples to %s\n", samples.size(), path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"equivariant-consistency active learning for segmentation"};
  app.require_subcommand(1);

  std::string config_path, seed, budget, out, kind, checkpoint, dataset;
  std::string split = "train";
  std::size_t gradcheck_seeds = 10;

  CLI::App* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--seed", seed, "override the seed list with one seed");
  run->add_option("--budget", budget, "override the budget schedule with one fraction");
  run->add_option("--out", out, "override the output stem");

  CLI::App* ablate = app.add_subcommand("ablate", "sweep one axis of a base config");
  ablate->add_option("kind", kind, "transform|loss_norm|region_size")->required();
  ablate->add_option("config", config_path, "config file")->required();
  ablate->add_option("--seed", seed, "override the seed list with one seed");
  ablate->add_option("--budget", budget, "override the budget schedule with one fraction");
  ablate->add_option("--out", out, "override the output stem");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset file");
  eval->add_option("checkpoint", checkpoint, "checkpoint file")->required();
  eval->add_option("dataset", dataset, "dataset file")->required();

  CLI::App* gradcheck = app.add_subcommand("gradcheck", "run the gradient oracle suite");
  gradcheck->add_option("--seeds", gradcheck_seeds, "seeded instances per op");

  CLI::App* gen = app.add_subcommand("gen-data", "generate a dataset file from a config");
  gen->add_option("config", config_path, "config file")->required();
  gen->add_option("--split", split, "train|eval")->check(CLI::IsMember({"train", "eval"}));
  gen->add_option("--out", out, "output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems exit 2, --help exits 0
  }

  try {
    if (run->parsed()) return cmd_run(config_path, seed, budget, out);
    if (ablate->parsed()) return cmd_ablate(kind, config_path, seed, budget, out);
    if (eval->parsed()) return cmd_eval(checkpoint, dataset);
    if (gradcheck->parsed()) return cmd_gradcheck(gradcheck_seeds);
    if (gen->parsed()) return cmd_gen_data(config_path, split, out);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
