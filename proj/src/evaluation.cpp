#include "poseverify/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "poseverify/verification.hpp"

namespace pv {

std::vector<ThresholdPair> default_thresholds() {
  return {{0.25, 5.0}, {0.50, 5.0}, {1.00, 10.0}, {2.00, 10.0}};
}

std::vector<ThresholdPair> parse_thresholds(const std::string& text) {
  std::vector<ThresholdPair> out;
  std::istringstream ss(text);
  std::string pair;
  while (std::getline(ss, pair, ';')) {
    const auto comma = pair.find(',');
    if (comma == std::string::npos) {
      throw std::runtime_error("bad threshold pair: " + pair);
    }
    ThresholdPair t;
    t.max_pos_m = std::stod(pair.substr(0, comma));
    t.max_rot_deg = std::stod(pair.substr(comma + 1));
    if (t.max_pos_m <= 0 || t.max_rot_deg <= 0) {
      throw std::runtime_error("thresholds must be positive: " + pair);
    }
    out.push_back(t);
  }
  if (out.empty()) throw std::runtime_error("no thresholds given");
  return out;
}

EvalReport evaluate(const PoseSelections& selected, const PoseSelections& gt,
                    const std::vector<ThresholdPair>& thresholds,
                    const std::string& method_label) {
  if (gt.empty()) throw std::invalid_argument("evaluate: no GT poses");
  EvalRow row;
  row.method = method_label;
  row.percent.assign(thresholds.size(), 0.0);
  for (const auto& [qid, pose] : selected) {
    if (!gt.count(qid)) throw std::runtime_error("selection without GT pose: " + qid);
  }
  for (const auto& [qid, gt_pose] : gt) {
    auto it = selected.find(qid);
    if (it == selected.end()) continue;  // missing selection = failure
    const PoseError e = pose_error(it->second, gt_pose);
    for (size_t t = 0; t < thresholds.size(); ++t) {
      if (e.position_m <= thresholds[t].max_pos_m &&
          e.rotation_deg <= thresholds[t].max_rot_deg) {
        row.percent[t] += 1.0;
      }
    }
  }
  for (double& p : row.percent) p = 100.0 * p / double(gt.size());
  EvalReport report;
  report.thresholds = thresholds;
  report.query_count = int(gt.size());
  report.rows.push_back(row);
  return report;
}

EvalReport compare_with_oracle(
    const std::vector<std::pair<std::string, PoseSelections>>& per_method,
    const PoseSelections& gt, const std::vector<ThresholdPair>& thresholds) {
  if (per_method.empty()) throw std::invalid_argument("no methods");
  EvalReport report;
  report.thresholds = thresholds;
  report.query_count = int(gt.size());
  for (const auto& [name, selections] : per_method) {
    report.rows.push_back(evaluate(selections, gt, thresholds, name).rows[0]);
  }
  PoseSelections oracle;
  for (const auto& [qid, gt_pose] : gt) {
    std::vector<Pose> choices;
    for (const auto& [name, selections] : per_method) {
      auto it = selections.find(qid);
      if (it != selections.end()) choices.push_back(it->second);
    }
    if (!choices.empty()) oracle[qid] = oracle_select(choices, gt_pose);
  }
  report.rows.push_back(evaluate(oracle, gt, thresholds, "oracle").rows[0]);
  return report;
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "method,thr_pos,thr_rot,percent\n";
  char buf[256];
  for (const auto& row : report.rows) {
    for (size_t t = 0; t < report.thresholds.size(); ++t) {
      std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6g,%.6g\n", row.method.c_str(),
                    report.thresholds[t].max_pos_m,
                    report.thresholds[t].max_rot_deg, row.percent[t]);
      out += buf;
    }
  }
  return out;
}

std::string report_to_table(const EvalReport& report) {
  size_t name_width = 6;
  for (const auto& row : report.rows) name_width = std::max(name_width, row.method.size());
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-*s", int(name_width + 2), "Method");
  out += buf;
  for (const auto& t : report.thresholds) {
    std::snprintf(buf, sizeof(buf), "[%.2f, %g]  ", t.max_pos_m, t.max_rot_deg);
    out += buf;
  }
  out += "\n";
  for (const auto& row : report.rows) {
    std::snprintf(buf, sizeof(buf), "%-*s", int(name_width + 2), row.method.c_str());
    out += buf;
    for (size_t t = 0; t < report.thresholds.size(); ++t) {
      std::snprintf(buf, sizeof(buf), "%-12.1f", row.percent[t]);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace pv
