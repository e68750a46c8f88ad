#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "equal/data.hpp"
#include "equal/model.hpp"
#include "equal/tensor.hpp"
#include "equal/transforms.hpp"

namespace equal {

enum class StrategyKind { kRandom, kEntropy, kEqual };

// How the paired branches combine into one uncertainty value. kSumEntropy is
// the literal formulation (sum of the two branch entropies); kEntropyOfMean
// scores the entropy of the averaged softmax instead and exists for
// comparison only.
enum class PairMode { kSumEntropy, kEntropyOfMean };

struct Strategy {
  StrategyKind kind = StrategyKind::kEqual;
  TransformKind transform = TransformKind::hflip();
  PairMode pair_mode = PairMode::kSumEntropy;

  static Strategy random() { return {StrategyKind::kRandom, TransformKind::hflip(), PairMode::kSumEntropy}; }
  static Strategy entropy() { return {StrategyKind::kEntropy, TransformKind::hflip(), PairMode::kSumEntropy}; }
  static Strategy equal(TransformKind kind) { return {StrategyKind::kEqual, kind, PairMode::kSumEntropy}; }

  std::string label() const;  // "random" | "entropy" | "equal"
};

StrategyKind parse_strategy_kind(const std::string& text);

// Per-pixel uncertainty for one image: plain softmax entropy for kEntropy,
// combined entropy of the direct and transform-roundtrip branches for
// kEqual. kRandom produces no map.
Tensor uncertainty_map(const SegModel& model, const Sample& sample,
                       const Strategy& strategy);

// Sum of map values inside each region, indexed like the grid.
std::vector<double> region_scores(const Tensor& map, const RegionGrid& grid);

struct ScoredRegion {
  RegionRef region;
  double score = 0.0;
};

struct Selection {
  std::vector<ScoredRegion> picked;  // in pick order
  bool exhausted = false;            // fewer than k unlabeled regions remained
};

// Greedy top-k with deterministic tie-breaking: descending score, ties by
// ascending (image, region).
Selection select_top_k(std::vector<ScoredRegion> candidates, std::size_t k);

// One acquisition round. Scores every unlabeled region of every image (maps
// computed once per image; the model does not change within a round) and
// picks k of them; kRandom picks k distinct unlabeled regions from the seed.
Selection select_regions(const SegModel& model, const std::vector<Sample>& dataset,
                         const PoolState& pool, const RegionGrid& grid,
                         const Strategy& strategy, std::size_t k, std::uint64_t seed);

// Entropy of the ground-truth class distribution over all pixels inside
// labeled regions. Requires at least one labeled region.
double diversity_entropy(const PoolState& pool, const std::vector<Sample>& dataset,
                         const RegionGrid& grid, std::size_t num_classes);

}  // namespace equal
