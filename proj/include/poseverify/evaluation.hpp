#pragma once

#include <map>
#include <string>
#include <vector>

#include "poseverify/geometry.hpp"

namespace pv {

struct ThresholdPair {
  double max_pos_m = 0.0;
  double max_rot_deg = 0.0;
};

// Default threshold columns: [0.25,5], [0.50,5], [1.00,10], [2.00,10].
std::vector<ThresholdPair> default_thresholds();

// Parses "0.25,5;0.5,5;1,10;2,10".
std::vector<ThresholdPair> parse_thresholds(const std::string& text);

struct EvalRow {
  std::string method;
  std::vector<double> percent;  // one per threshold, in [0,100]
};

struct EvalReport {
  std::vector<ThresholdPair> thresholds;
  std::vector<EvalRow> rows;
  int query_count = 0;
};

using PoseSelections = std::map<std::string, Pose>;  // query id -> pose

// A query counts at (X,Y) iff position <= X and rotation <= Y (inclusive).
// Queries without a selection count as failures; a selection without a GT
// pose throws.
EvalReport evaluate(const PoseSelections& selected, const PoseSelections& gt,
                    const std::vector<ThresholdPair>& thresholds,
                    const std::string& method_label = "selected");

// One row per method plus an oracle row built by per-query smallest error.
EvalReport compare_with_oracle(
    const std::vector<std::pair<std::string, PoseSelections>>& per_method,
    const PoseSelections& gt, const std::vector<ThresholdPair>& thresholds);

// CSV: method,thr_pos,thr_rot,percent — floats with 6 significant digits.
std::string report_to_csv(const EvalReport& report);
// Aligned plain-text table, one method per row, one threshold per column.
std::string report_to_table(const EvalReport& report);

}  // namespace pv
