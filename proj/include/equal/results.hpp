#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace equal {

// One evaluated (strategy, budget, seed) cell.
struct ResultRow {
  std::string strategy;
  double budget = 0.0;
  std::uint64_t seed = 0;
  std::size_t round = 0;
  double miou = 0.0;
  std::vector<double> iou;  // per class, size = num_classes
  double diversity_entropy = 0.0;
  double inconsistency = 0.0;
  double wall_s = 0.0;  // wall clock; excluded from determinism comparisons
};

struct AggregateRow {
  std::string strategy;
  double budget = 0.0;
  std::size_t runs = 0;
  double miou_mean = 0.0;
  double miou_std = 0.0;
  double diversity_mean = 0.0;
  double diversity_std = 0.0;
  double inconsistency_mean = 0.0;
  double inconsistency_std = 0.0;
};

struct ResultsTable {
  std::size_t num_classes = 0;
  std::vector<ResultRow> rows;
  std::vector<AggregateRow> aggregates;

  // Mean and sample stddev per (strategy, budget), in first-appearance order.
  void recompute_aggregates();
};

// CSV column order is fixed:
//   strategy,budget,seed,round,miou,iou_0..iou_{C-1},diversity_entropy,inconsistency,wall_s
// Reals are written with 6 decimals. Lines starting with '#' are warnings
// and are skipped on read.
std::string results_csv_path(const std::string& stem);
std::string aggregates_csv_path(const std::string& stem);
std::string sidecar_json_path(const std::string& stem);
std::string acquisition_log_path(const std::string& stem);

std::string format_csv_row(const ResultRow& row);
std::string results_csv_header(std::size_t num_classes);

// Writes raw rows, aggregates and the JSON sidecar next to `stem`.
// `config_document` is the resolved config text; `metadata_notes` lands in
// the sidecar's deviations list.
void write_results(const ResultsTable& table, const std::string& stem,
                   const std::string& config_document,
                   const std::vector<std::string>& metadata_notes,
                   const std::vector<std::string>& warnings = {},
                   const std::vector<std::string>& errors = {});

// Reads raw rows (tolerating a truncated final line), recomputes aggregates
// and verifies them against the stored aggregate file when present. Malformed
// interior lines report their line number.
ResultsTable read_results(const std::string& stem);

}  // namespace equal
