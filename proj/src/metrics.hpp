#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orchestrator.hpp"

namespace flsim {

// Shortest round-trip decimal form, '.' separator, locale-independent.
std::string format_double(double v);

// Exact schema: round,aggregator,eval_loss,eval_error,weight_entropy,reward,
// wall_seconds. The reward cell is populated on RL rounds only; wall_seconds
// only when timing emission is enabled (measured time is not reproducible).
void write_metrics_csv(const std::string& path,
                       std::span<const RoundRecord> records, bool emit_timing);

struct CompareRow {
  std::string aggregator;
  std::optional<int> rounds_to_target;
  double final_error = 0.0;
};

// Summary plus a speedup column relative to the first (baseline) row.
void write_compare_csv(const std::string& path,
                       std::span<const CompareRow> rows);

struct CurveSeries {
  std::string label;
  std::vector<double> values;  // eval_error by round, 1-based
};

// Self-contained SVG line chart of eval_error vs round.
void write_convergence_svg(const std::string& path,
                           std::span<const CurveSeries> series);

}  // namespace flsim
