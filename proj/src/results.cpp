#include "equal/results.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace equal {

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

struct Moments {
  std::size_t n = 0;
  double sum = 0.0;
  double sum_sq = 0.0;
  void add(double v) {
    ++n;
    sum += v;
    sum_sq += v * v;
  }
  double mean() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
  double sample_std() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = (sum_sq - static_cast<double>(n) * m * m) /
                       static_cast<double>(n - 1);
    return var > 0.0 ? std::sqrt(var) : 0.0;
  }
};

// Aggregates are defined over the 6-decimal values that land in the CSV, so
// that a reader recomputing them from raw rows reproduces them exactly.
double quantize6(double v) { return std::stod(fmt6(v)); }

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void ResultsTable::recompute_aggregates() {
  aggregates.clear();
  struct Group {
    Moments miou, diversity, inconsistency;
  };
  std::vector<std::pair<std::pair<std::string, std::string>, Group>> groups;
  for (const ResultRow& r : rows) {
    const std::pair<std::string, std::string> key{r.strategy, fmt6(r.budget)};
    Group* g = nullptr;
    for (auto& [k, v] : groups) {
      if (k == key) {
        g = &v;
        break;
      }
    }
    if (!g) {
      groups.push_back({key, {}});
      g = &groups.back().second;
    }
    g->miou.add(quantize6(r.miou));
    g->diversity.add(quantize6(r.diversity_entropy));
    g->inconsistency.add(quantize6(r.inconsistency));
  }
  for (const auto& [key, g] : groups) {
    AggregateRow a;
    a.strategy = key.first;
    a.budget = std::stod(key.second);
    a.runs = g.miou.n;
    a.miou_mean = g.miou.mean();
    a.miou_std = g.miou.sample_std();
    a.diversity_mean = g.diversity.mean();
    a.diversity_std = g.diversity.sample_std();
    a.inconsistency_mean = g.inconsistency.mean();
    a.inconsistency_std = g.inconsistency.sample_std();
    aggregates.push_back(std::move(a));
  }
}

std::string results_csv_path(const std::string& stem) { return stem + ".csv"; }
std::string aggregates_csv_path(const std::string& stem) { return stem + ".agg.csv"; }
std::string sidecar_json_path(const std::string& stem) { return stem + ".json"; }
std::string acquisition_log_path(const std::string& stem) { return stem + ".acq.csv"; }

std::string results_csv_header(std::size_t num_classes) {
  std::string h = "strategy,budget,seed,round,miou";
  for (std::size_t c = 0; c < num_classes; ++c) h += ",iou_" + std::to_string(c);
  h += ",diversity_entropy,inconsistency,wall_s";
  return h;
}

std::string format_csv_row(const ResultRow& row) {
  std::string s = row.strategy;
  s += "," + fmt6(row.budget);
  s += "," + std::to_string(row.seed);
  s += "," + std::to_string(row.round);
  s += "," + fmt6(row.miou);
  for (double v : row.iou) s += "," + fmt6(v);
  s += "," + fmt6(row.diversity_entropy);
  s += "," + fmt6(row.inconsistency);
  s += "," + fmt6(row.wall_s);
  return s;
}

void write_results(const ResultsTable& table, const std::string& stem,
                   const std::string& config_document,
                   const std::vector<std::string>& metadata_notes,
                   const std::vector<std::string>& warnings,
                   const std::vector<std::string>& errors) {
  {
    std::ofstream os(results_csv_path(stem), std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write results: " + results_csv_path(stem));
    os << results_csv_header(table.num_classes) << "\n";
    for (const std::string& w : warnings) os << "# warning: " << w << "\n";
    for (const ResultRow& r : table.rows) os << format_csv_row(r) << "\n";
  }
  {
    std::ofstream os(aggregates_csv_path(stem), std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write aggregates: " + aggregates_csv_path(stem));
    os << "strategy,budget,runs,miou_mean,miou_std,diversity_entropy_mean,"
          "diversity_entropy_std,inconsistency_mean,inconsistency_std\n";
    for (const AggregateRow& a : table.aggregates) {
      os << a.strategy << "," << fmt6(a.budget) << "," << a.runs << ","
         << fmt6(a.miou_mean) << "," << fmt6(a.miou_std) << ","
         << fmt6(a.diversity_mean) << "," << fmt6(a.diversity_std) << ","
         << fmt6(a.inconsistency_mean) << "," << fmt6(a.inconsistency_std) << "\n";
    }
  }
  {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config"] = config_document;
    j["num_classes"] = table.num_classes;
    j["deviations"] = metadata_notes;
    j["warnings"] = warnings;
    j["errors"] = errors;
    j["row_count"] = table.rows.size();
    std::ofstream os(sidecar_json_path(stem), std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write sidecar: " + sidecar_json_path(stem));
    os << j.dump(2) << "\n";
  }
}

ResultsTable read_results(const std::string& stem) {
  std::ifstream is(results_csv_path(stem));
  if (!is) throw std::runtime_error("cannot open results: " + results_csv_path(stem));

  std::string line;
  if (!std::getline(is, line)) {
    throw std::runtime_error(results_csv_path(stem) + ": empty file");
  }
  const std::vector<std::string> header = split_fields(line);
  std::size_t num_classes = 0;
  for (const std::string& h : header) {
    if (h.rfind("iou_", 0) == 0) ++num_classes;
  }
  if (header.size() != 8 + num_classes || header[0] != "strategy") {
    throw std::runtime_error(results_csv_path(stem) + ": line 1: unrecognized header");
  }

  ResultsTable table;
  table.num_classes = num_classes;
  std::size_t line_no = 1;
  bool truncated = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> f = split_fields(line);
    const bool at_eof = is.peek() == std::char_traits<char>::eof();
    try {
      if (f.size() != 8 + num_classes) {
        throw std::runtime_error("wrong field count");
      }
      ResultRow r;
      r.strategy = f[0];
      r.budget = std::stod(f[1]);
      r.seed = std::stoull(f[2]);
      r.round = std::stoull(f[3]);
      r.miou = std::stod(f[4]);
      for (std::size_t c = 0; c < num_classes; ++c) r.iou.push_back(std::stod(f[5 + c]));
      r.diversity_entropy = std::stod(f[5 + num_classes]);
      r.inconsistency = std::stod(f[6 + num_classes]);
      r.wall_s = std::stod(f[7 + num_classes]);
      table.rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      if (at_eof) {
        // a run cut off mid-write leaves one partial last line; keep what parsed
        truncated = true;
        break;
      }
      throw std::runtime_error(results_csv_path(stem) + ": line " +
                               std::to_string(line_no) + ": " + e.what());
    }
  }
  (void)truncated;

  table.recompute_aggregates();

  // aggregates must be reproducible from the raw rows
  std::ifstream agg(aggregates_csv_path(stem));
  if (agg) {
    std::string agg_line;
    std::getline(agg, agg_line);  // header
    std::size_t idx = 0;
    std::size_t agg_line_no = 1;
    while (std::getline(agg, agg_line)) {
      ++agg_line_no;
      if (agg_line.empty()) continue;
      const std::vector<std::string> f = split_fields(agg_line);
      if (f.size() != 9) {
        throw std::runtime_error(aggregates_csv_path(stem) + ": line " +
                                 std::to_string(agg_line_no) + ": wrong field count");
      }
      if (idx >= table.aggregates.size()) {
        throw std::runtime_error(aggregates_csv_path(stem) +
                                 ": more aggregate rows than raw groups");
      }
      const AggregateRow& a = table.aggregates[idx];
      const bool ok = f[0] == a.strategy && f[1] == fmt6(a.budget) &&
                      std::stoull(f[2]) == a.runs && f[3] == fmt6(a.miou_mean) &&
                      f[4] == fmt6(a.miou_std) && f[5] == fmt6(a.diversity_mean) &&
                      f[6] == fmt6(a.diversity_std) &&
                      f[7] == fmt6(a.inconsistency_mean) &&
                      f[8] == fmt6(a.inconsistency_std);
      if (!ok) {
        throw std::runtime_error(aggregates_csv_path(stem) + ": line " +
                                 std::to_string(agg_line_no) +
                                 ": aggregates do not match raw rows");
      }
      ++idx;
    }
  }
  return table;
}

}  // namespace equal
