#include "equal/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "equal/ops.hpp"
#include "equal/rng.hpp"

namespace equal {

std::string Strategy::label() const {
  switch (kind) {
    case StrategyKind::kRandom: return "random";
    case StrategyKind::kEntropy: return "entropy";
    case StrategyKind::kEqual: return "equal";
  }
  return "?";
}

StrategyKind parse_strategy_kind(const std::string& text) {
  if (text == "random") return StrategyKind::kRandom;
  if (text == "entropy") return StrategyKind::kEntropy;
  if (text == "equal") return StrategyKind::kEqual;
  throw std::invalid_argument("unknown strategy '" + text +
                              "' (expected random|entropy|equal)");
}

Tensor uncertainty_map(const SegModel& model, const Sample& sample,
                       const Strategy& strategy) {
  switch (strategy.kind) {
    case StrategyKind::kRandom:
      throw std::invalid_argument("uncertainty_map: random strategy has no map");
    case StrategyKind::kEntropy:
      return entropy_map(model_forward(model, sample.input));
    case StrategyKind::kEqual:
      break;
  }

  PairForward pair = model_forward_pair(model, sample.input, strategy.transform);
  if (strategy.pair_mode == PairMode::kSumEntropy) {
    Tensor h = entropy_map(pair.logits_direct);
    const Tensor h1 = entropy_map(pair.logits_roundtrip);
    for (std::size_t i = 0; i < h.numel(); ++i) h[i] += h1[i];
    return h;
  }

  // entropy of the averaged softmax
  Tensor p = softmax_channel(pair.logits_direct);
  const Tensor p1 = softmax_channel(pair.logits_roundtrip);
  const std::size_t c = p.extent(0);
  const std::size_t hw = p.extent(1) * p.extent(2);
  Tensor out({p.extent(1), p.extent(2)});
  for (std::size_t px = 0; px < hw; ++px) {
    double ent = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      const double v = 0.5 * (p[k * hw + px] + p1[k * hw + px]);
      if (v > 0.0) ent -= v * std::log(v);
    }
    out[px] = ent;
  }
  return out;
}

std::vector<double> region_scores(const Tensor& map, const RegionGrid& grid) {
  if (map.rank() != 2 || map.extent(0) != grid.image_height ||
      map.extent(1) != grid.image_width) {
    throw std::invalid_argument("region_scores: map " + shape_string(map.extents) +
                                " does not match grid");
  }
  std::vector<double> scores(grid.count(), 0.0);
  for (std::size_t m = 0; m < grid.count(); ++m) {
    const RegionGrid::Rect r = grid.rect(m);
    double sum = 0.0;
    for (std::size_t y = r.y0; y < r.y0 + r.height; ++y) {
      for (std::size_t x = r.x0; x < r.x0 + r.width; ++x) {
        sum += map[y * grid.image_width + x];
      }
    }
    scores[m] = sum;
  }
  return scores;
}

Selection select_top_k(std::vector<ScoredRegion> candidates, std::size_t k) {
  std::sort(candidates.begin(), candidates.end(),
            [](const ScoredRegion& a, const ScoredRegion& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.region < b.region;
            });
  Selection sel;
  sel.exhausted = candidates.size() < k;
  const std::size_t take = std::min(k, candidates.size());
  sel.picked.assign(candidates.begin(), candidates.begin() + static_cast<long>(take));
  return sel;
}

Selection select_regions(const SegModel& model, const std::vector<Sample>& dataset,
                         const PoolState& pool, const RegionGrid& grid,
                         const Strategy& strategy, std::size_t k, std::uint64_t seed) {
  if (pool.unlabeled_count() == 0) {
    throw std::invalid_argument("select_regions: no unlabeled regions remain");
  }

  if (strategy.kind == StrategyKind::kRandom) {
    std::vector<ScoredRegion> unlabeled;
    for (const Sample& s : dataset) {
      for (std::size_t m = 0; m < grid.count(); ++m) {
        const RegionRef r{s.id, m};
        if (!pool.labeled(r)) unlabeled.push_back({r, 0.0});
      }
    }
    Rng rng(seed);
    Selection sel;
    sel.exhausted = unlabeled.size() < k;
    const std::size_t take = std::min(k, unlabeled.size());
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + rng.uniform_index(unlabeled.size() - i);
      std::swap(unlabeled[i], unlabeled[j]);
      sel.picked.push_back(unlabeled[i]);
    }
    return sel;
  }

  std::vector<ScoredRegion> candidates;
  for (const Sample& s : dataset) {
    if (pool.image_labeled_count(s.id) == grid.count()) continue;  // fully labeled
    const Tensor map = uncertainty_map(model, s, strategy);
    const std::vector<double> scores = region_scores(map, grid);
    for (std::size_t m = 0; m < grid.count(); ++m) {
      const RegionRef r{s.id, m};
      if (!pool.labeled(r)) candidates.push_back({r, scores[m]});
    }
  }
  return select_top_k(std::move(candidates), k);
}

double diversity_entropy(const PoolState& pool, const std::vector<Sample>& dataset,
                         const RegionGrid& grid, std::size_t num_classes) {
  if (pool.labeled_count() == 0) {
    throw std::invalid_argument("diversity_entropy: no labeled regions");
  }
  std::vector<std::size_t> counts(num_classes, 0);
  std::size_t total = 0;
  for (const Sample& s : dataset) {
    for (std::size_t m = 0; m < grid.count(); ++m) {
      if (!pool.labeled({s.id, m})) continue;
      const RegionGrid::Rect r = grid.rect(m);
      for (std::size_t y = r.y0; y < r.y0 + r.height; ++y) {
        for (std::size_t x = r.x0; x < r.x0 + r.width; ++x) {
          const std::int32_t cls = s.truth.at(y, x);
          if (cls < 0 || static_cast<std::size_t>(cls) >= num_classes) {
            throw std::invalid_argument("diversity_entropy: class " +
                                        std::to_string(cls) + " out of range");
          }
          ++counts[static_cast<std::size_t>(cls)];
          ++total;
        }
      }
    }
  }
  double entropy = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) continue;  // 0 * ln 0 := 0
    const double p = static_cast<double>(counts[c]) / static_cast<double>(total);
    entropy -= p * std::log(p);
  }
  return entropy;
}

}  // namespace equal
