#include "equal/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "equal/rng.hpp"

namespace equal {

namespace {

bool consistency_eligible(const LossConfig& cfg, const PoolState& pool,
                          std::int64_t image) {
  return cfg.use_consistency &&
         pool.image_labeled_fraction(image) >= cfg.eligibility_threshold;
}

}  // namespace

std::vector<BatchLoss> train(SegModel& model, const std::vector<Sample>& dataset,
                             const PoolState& pool, const RegionGrid& grid,
                             const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                             std::size_t epochs, bool lr_schedule) {
  if (train_cfg.batch_size == 0) throw std::invalid_argument("train: batch size must be positive");
  if (!loss_cfg.use_consistency && pool.labeled_count() == 0) {
    throw std::invalid_argument("train: cross-entropy training needs >= 1 labeled region");
  }

  // Images with labels always train; fully unlabeled images join only when
  // the consistency term admits them (threshold 0).
  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const bool has_labels = pool.image_labeled_count(dataset[i].id) > 0;
    if (has_labels || consistency_eligible(loss_cfg, pool, dataset[i].id)) {
      eligible.push_back(i);
    }
  }

  std::vector<BatchLoss> trace;
  if (eligible.empty() || epochs == 0) return trace;

  std::vector<LabelMap> targets(dataset.size());
  for (std::size_t i : eligible) {
    targets[i] = visible_target(dataset[i], pool, grid);
  }

  const TransformKind aug = TransformKind::hflip();
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    AdamConfig adam = train_cfg.adam;
    if (lr_schedule && train_cfg.lr_decay_every > 0) {
      adam.learning_rate *=
          std::pow(train_cfg.lr_decay_factor,
                   static_cast<double>(epoch / train_cfg.lr_decay_every));
    }

    Rng rng(mix_seed(train_cfg.seed, 0xE90c, epoch));
    std::vector<std::size_t> order = eligible;
    rng.shuffle(order);

    for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + train_cfg.batch_size);
      std::vector<Tensor> grads = zero_param_grads(model);
      BatchLoss batch;

      for (std::size_t bi = start; bi < stop; ++bi) {
        const Sample& sample = dataset[order[bi]];
        Tensor input = sample.input;
        LabelMap target = targets[order[bi]];
        if (loss_cfg.augment_hflip && rng.bernoulli(0.5)) {
          input = apply_transform(aug, input);
          target = apply_transform(aug, target);
        }

        double ce = 0.0;
        double sc = 0.0;
        if (consistency_eligible(loss_cfg, pool, sample.id)) {
          PairForward pair = model_forward_pair(model, input, loss_cfg.transform);
          const Tensor probs = softmax_channel(pair.logits_direct);
          ce = masked_cross_entropy(probs, target);
          sc = loss_cfg.consistency_weight *
               consistency_loss(pair.logits_direct, pair.logits_roundtrip, loss_cfg.norm);

          Tensor g0 = masked_cross_entropy_backward(probs, target);
          auto [gc0, gc1] = consistency_loss_backward(
              pair.logits_direct, pair.logits_roundtrip, loss_cfg.norm);
          for (std::size_t i = 0; i < g0.numel(); ++i) {
            g0[i] += loss_cfg.consistency_weight * gc0[i];
            gc1[i] *= loss_cfg.consistency_weight;
          }
          model_backward_pair(model, pair, loss_cfg.transform, g0, gc1, grads);
        } else {
          ForwardCache cache;
          const Tensor logits = model_forward(model, input, &cache);
          const Tensor probs = softmax_channel(logits);
          ce = masked_cross_entropy(probs, target);
          const Tensor g0 = masked_cross_entropy_backward(probs, target);
          model_backward(model, cache, g0, grads);
        }

        if (!std::isfinite(ce) || !std::isfinite(sc)) {
          throw std::runtime_error("train: non-finite loss at image " +
                                   std::to_string(sample.id) + " (epoch " +
                                   std::to_string(epoch) + ")");
        }
        batch.cross_entropy += ce;
        batch.consistency += sc;
      }

      batch.total = batch.cross_entropy + batch.consistency;
      for (std::size_t p = 0; p < model.params.size(); ++p) {
        adam_step(model.params[p].value, grads[p], model.params[p].opt, adam);
      }
      trace.push_back(batch);
    }
  }
  return trace;
}

std::size_t budget_region_target(double budget, std::size_t total_regions) {
  const double raw = budget * static_cast<double>(total_regions);
  auto target = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::min(target, total_regions);
}

ActiveLoopResult active_loop(const std::vector<Sample>& dataset, const RegionGrid& grid,
                             const ModelConfig& model_cfg, const Strategy& strategy,
                             const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                             const std::vector<double>& budgets, std::size_t k,
                             std::uint64_t seed, std::size_t warm_start_regions) {
  if (budgets.empty()) throw std::invalid_argument("active_loop: no budgets given");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] <= 0.0 || budgets[i] > 1.0 ||
        (i > 0 && budgets[i] <= budgets[i - 1])) {
      throw std::invalid_argument(
          "active_loop: budgets must be strictly increasing fractions in (0, 1]");
    }
  }
  if (k == 0) throw std::invalid_argument("active_loop: k must be positive");

  ModelConfig mc = model_cfg;
  mc.seed = mix_seed(seed, 0x5e1ec7);
  SegModel model = init_model(mc);

  ActiveLoopResult result;
  result.pool = build_pool(dataset.size(), grid);

  if (warm_start_regions > 0) {
    Selection warm = select_regions(model, dataset, result.pool, grid,
                                    Strategy::random(),
                                    std::min(warm_start_regions, result.pool.total_regions()),
                                    mix_seed(seed, 0x3a12));
    for (const ScoredRegion& r : warm.picked) result.pool.mark_labeled(r.region);
  }

  std::vector<std::size_t> needed;
  needed.reserve(budgets.size());
  for (double b : budgets) needed.push_back(budget_region_target(b, result.pool.total_regions()));

  std::size_t next_checkpoint = 0;
  auto snapshot_crossed = [&](std::size_t round) {
    while (next_checkpoint < budgets.size() &&
           result.pool.labeled_count() >= needed[next_checkpoint]) {
      result.checkpoints.push_back({budgets[next_checkpoint], round, result.pool});
      ++next_checkpoint;
    }
  };
  snapshot_crossed(0);  // a warm start may already satisfy early budgets

  TrainConfig round_train = train_cfg;
  std::size_t round = 0;
  while (result.pool.labeled_count() < needed.back()) {
    ++round;
    Selection sel = select_regions(model, dataset, result.pool, grid, strategy, k,
                                   mix_seed(seed, 0xac01, round));
    for (const ScoredRegion& r : sel.picked) result.pool.mark_labeled(r.region);
    snapshot_crossed(round);

    round_train.seed = mix_seed(seed, 0x7a21, round);
    RoundLog log;
    log.round = round;
    log.picked = sel.picked;
    try {
      log.losses = train(model, dataset, result.pool, grid, loss_cfg, round_train,
                         train_cfg.epochs_per_round, /*lr_schedule=*/false);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("round " + std::to_string(round) + ": " + e.what());
    }
    result.rounds.push_back(std::move(log));
  }
  return result;
}

SegModel final_retrain(const std::vector<Sample>& dataset, const PoolState& pool,
                       const RegionGrid& grid, const ModelConfig& model_cfg,
                       const LossConfig& loss_cfg, const TrainConfig& train_cfg,
                       std::uint64_t seed) {
  if (pool.labeled_count() == 0) {
    throw std::invalid_argument("final_retrain: pool has no labeled regions");
  }
  ModelConfig mc = model_cfg;
  mc.seed = mix_seed(seed, 0xf17a1);
  SegModel model = init_model(mc);
  TrainConfig tc = train_cfg;
  tc.seed = mix_seed(seed, 0xf17a2);
  train(model, dataset, pool, grid, loss_cfg, tc, train_cfg.final_epochs,
        /*lr_schedule=*/true);
  return model;
}

LabelMap predict(const SegModel& model, const Tensor& input) {
  const Tensor logits = model_forward(model, input);
  const std::size_t c = logits.extent(0);
  const std::size_t h = logits.extent(1);
  const std::size_t w = logits.extent(2);
  const std::size_t hw = h * w;
  LabelMap out(h, w);
  for (std::size_t p = 0; p < hw; ++p) {
    std::size_t best = 0;
    double best_v = logits[p];
    for (std::size_t k = 1; k < c; ++k) {
      const double v = logits[k * hw + p];
      if (v > best_v) {  // ties keep the smallest class id
        best_v = v;
        best = k;
      }
    }
    out.values[p] = static_cast<std::int32_t>(best);
  }
  return out;
}

EvalResult evaluate_maps(const std::vector<LabelMap>& predictions,
                         const std::vector<LabelMap>& truths, std::size_t num_classes) {
  if (predictions.size() != truths.size()) {
    throw std::invalid_argument("evaluate: prediction/truth count mismatch");
  }
  std::vector<std::size_t> tp(num_classes, 0), fp(num_classes, 0), fn(num_classes, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const LabelMap& pred = predictions[i];
    const LabelMap& truth = truths[i];
    if (pred.height != truth.height || pred.width != truth.width) {
      throw std::invalid_argument("evaluate: map size mismatch at image " +
                                  std::to_string(i));
    }
    for (std::size_t p = 0; p < pred.values.size(); ++p) {
      const auto t = static_cast<std::size_t>(truth.values[p]);
      const auto y = static_cast<std::size_t>(pred.values[p]);
      if (t >= num_classes || y >= num_classes) {
        throw std::invalid_argument("evaluate: class id out of range");
      }
      if (t == y) {
        ++tp[t];
      } else {
        ++fp[y];
        ++fn[t];
      }
    }
  }

  EvalResult res;
  res.iou.resize(num_classes, 0.0);
  res.class_in_truth.resize(num_classes, false);
  double sum = 0.0;
  std::size_t included = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    const std::size_t denom = tp[c] + fp[c] + fn[c];
    res.iou[c] = denom == 0 ? 1.0
                            : static_cast<double>(tp[c]) / static_cast<double>(denom);
    res.class_in_truth[c] = tp[c] + fn[c] > 0;
    if (res.class_in_truth[c]) {
      sum += res.iou[c];
      ++included;
    }
  }
  res.miou = included == 0 ? 0.0 : sum / static_cast<double>(included);
  return res;
}

EvalResult evaluate(const SegModel& model, const std::vector<Sample>& eval_set) {
  std::vector<LabelMap> preds;
  std::vector<LabelMap> truths;
  preds.reserve(eval_set.size());
  truths.reserve(eval_set.size());
  for (const Sample& s : eval_set) {
    preds.push_back(predict(model, s.input));
    truths.push_back(s.truth);
  }
  return evaluate_maps(preds, truths, model.config.num_classes);
}

double inconsistency(const SegModel& model, const std::vector<Sample>& eval_set,
                     const TransformKind& kind) {
  if (eval_set.empty()) return 0.0;
  double sum = 0.0;
  for (const Sample& s : eval_set) {
    PairForward pair = model_forward_pair(model, s.input, kind);
    sum += consistency_loss(pair.logits_direct, pair.logits_roundtrip,
                            ConsistencyNorm::kL2);
  }
  return sum / static_cast<double>(eval_set.size());
}

}  // namespace equal
