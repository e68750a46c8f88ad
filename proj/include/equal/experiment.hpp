#pragma once

#include <string>
#include <vector>

#include "equal/config.hpp"
#include "equal/results.hpp"

namespace equal {

// Deviations from the reference training recipe that every sidecar records.
std::vector<std::string> standard_metadata_notes(const ExperimentConfig& cfg);

// Runs the configured experiment: per seed, one acquisition loop to the
// largest budget (snapshotting the pool at every budget), then per snapshot a
// fresh final retraining per requested variant ("ce" and/or "sc", the latter
// labeled "<strategy>+"), evaluated on the held-out set. Rows are appended to
// <stem>.csv as they complete; per-region acquisition records go to
// <stem>.acq.csv; aggregates and the JSON sidecar are written at the end.
// A failed seed is recorded in the sidecar and does not abort other seeds.
ResultsTable run_experiment(const ExperimentConfig& cfg, const std::string& stem);

enum class AblationKind { kTransform, kLossNorm, kRegionSize };

AblationKind parse_ablation_kind(const std::string& text);

// Sweeps one axis of the base config, all else fixed:
//   kTransform: entropy baseline + one equal run per transform kind
//   kLossNorm:  the "+" retraining variant under l2 and l1
//   kRegionSize: square region sizes {4,8,16,...} plus whole-image
// Region sizes that do not tile the image are skipped with a warning row.
ResultsTable run_ablation(AblationKind kind, const ExperimentConfig& base,
                          const std::string& stem);

}  // namespace equal
