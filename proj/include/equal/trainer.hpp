#pragma once

#include <cstdint>
#include <vector>

#include "equal/acquisition.hpp"
#include "equal/adam.hpp"
#include "equal/data.hpp"
#include "equal/model.hpp"
#include "equal/ops.hpp"

namespace equal {

struct LossConfig {
  bool use_consistency = false;
  ConsistencyNorm norm = ConsistencyNorm::kL2;
  TransformKind transform = TransformKind::hflip();
  // An image joins the consistency term only once this fraction of its
  // regions is labeled.
  double eligibility_threshold = 0.04;
  bool augment_hflip = true;
  double consistency_weight = 1.0;
};

struct TrainConfig {
  std::size_t epochs_per_round = 5;
  std::size_t final_epochs = 60;
  std::size_t batch_size = 4;
  AdamConfig adam;
  // Learning-rate decay applies during final retraining only.
  double lr_decay_factor = 0.1;
  std::size_t lr_decay_every = 20;
  std::uint64_t seed = 0;
};

struct BatchLoss {
  double total = 0.0;
  double cross_entropy = 0.0;
  double consistency = 0.0;
};

// Trains in place for `epochs`. Each epoch visits, in a seed-shuffled order,
// every image that has at least one labeled region (or that qualifies for
// the consistency term alone), groups them into batches, and takes one Adam
// step per batch on the summed loss. Throws on a non-finite loss.
std::vector<BatchLoss> train(SegModel& model, const std::vector<Sample>& dataset,
                             const PoolState& pool, const RegionGrid& grid,
                             const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                             std::size_t epochs, bool lr_schedule);

struct RoundLog {
  std::size_t round = 0;
  std::vector<ScoredRegion> picked;
  std::vector<BatchLoss> losses;
};

struct BudgetCheckpoint {
  double budget = 0.0;
  std::size_t round = 0;
  PoolState pool;
};

struct ActiveLoopResult {
  PoolState pool;
  std::vector<RoundLog> rounds;
  std::vector<BudgetCheckpoint> checkpoints;  // one per requested budget
};

// The acquisition loop: select k regions, reveal their labels, train for
// epochs_per_round, until the labeled fraction reaches the largest budget.
// The model starts from random init and stays warm across rounds; the pool is
// snapshotted the first time each budget is crossed. `budgets` must be
// strictly increasing fractions in (0, 1].
ActiveLoopResult active_loop(const std::vector<Sample>& dataset, const RegionGrid& grid,
                             const ModelConfig& model_cfg, const Strategy& strategy,
                             const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                             const std::vector<double>& budgets, std::size_t k,
                             std::uint64_t seed, std::size_t warm_start_regions = 0);

// Region count that satisfies a budget fraction (exact at representable
// products; guarded against e.g. 0.12 * 3200 landing at 384 + 1 ulp).
std::size_t budget_region_target(double budget, std::size_t total_regions);

// Fresh model, trained on the pool's labeled data for final_epochs with the
// lr decay schedule. use_consistency=true is the "+" variant.
SegModel final_retrain(const std::vector<Sample>& dataset, const PoolState& pool,
                       const RegionGrid& grid, const ModelConfig& model_cfg,
                       const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                       std::uint64_t seed);

struct EvalResult {
  std::vector<double> iou;          // per class; 1.0 when absent everywhere
  std::vector<bool> class_in_truth;  // whether the class occurs in ground truth
  double miou = 0.0;                // mean over classes present in ground truth
};

LabelMap predict(const SegModel& model, const Tensor& input);

// Confusion-matrix IoU over the whole set. Classes absent from both
// prediction and truth get IoU 1; classes absent from the truth are excluded
// from the mean.
EvalResult evaluate_maps(const std::vector<LabelMap>& predictions,
                         const std::vector<LabelMap>& truths, std::size_t num_classes);

EvalResult evaluate(const SegModel& model, const std::vector<Sample>& eval_set);

// Mean over images of the L2 self-consistency value between the paired
// branches.
double inconsistency(const SegModel& model, const std::vector<Sample>& eval_set,
                     const TransformKind& kind);

}  // namespace equal
