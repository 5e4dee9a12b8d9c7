// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "driftbench/adapt/loop.hpp"

namespace driftbench::bench {

struct Cell {
  double mean_mse = 0.0;
  /// Population standard deviation of the per-seed means.
  double std_mse = 0.0;
  std::size_t seeds = 0;
};

/// Rows are dataset tags, columns "<group>/<backbone>" keys.
///
/// imp(row) = (1 − best_dynamic / best_other) · 100, where best_dynamic is
/// the lowest cell among columns whose group starts with "dynamic" and
/// best_other the lowest among the rest. This rule reproduces all three
/// published rows (71.77, 43.64, 46.46).
struct ResultsTable {
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  std::map<std::pair<std::string, std::string>, Cell> cells;
  std::map<std::string, std::optional<double>> imp;

  const Cell& at(const std::string& row, const std::string& column) const;
};

bool is_dynamic_column(const std::string& column);
std::optional<double> imp_percent(const std::map<std::string, double>& row);

/// Averages reports per (dataset, variant) across seeds. Throws
/// IncompleteError listing every missing (dataset, column) pair of the grid
/// spanned by the reports and `expected_columns`.
ResultsTable build_table(const std::vector<adapt::EvalReport>& reports,
                         const std::vector<std::string>& expected_columns = {});

/// Header "dataset,variant,mean_mse,std_mse,imp_pct", "%.6g" floats, rows
/// sorted by dataset then variant. Throws IncompleteError on an empty table
/// and IoError when the file cannot be written.
std::string table_to_csv(const ResultsTable& t);
void export_csv(const ResultsTable& t, const std::string& path);
ResultsTable parse_csv(const std::string& text);

/// Markdown rendering with a short header stating the imp rule.
std::string table_to_markdown(const ResultsTable& t);

}  // namespace driftbench::bench
