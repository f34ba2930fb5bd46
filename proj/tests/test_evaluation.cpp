#include "doctest.h"

#include <cmath>

#include "poseverify/evaluation.hpp"

using namespace pv;

namespace {

Pose pose_at(double x, double rot_deg) {
  Pose p;
  p.rotation = Eigen::AngleAxisd(rot_deg * M_PI / 180.0, Eigen::Vector3d::UnitZ())
                   .toRotationMatrix();
  // Camera center at (x, 0, 0): t = -R * c.
  p.translation = -p.rotation * Eigen::Vector3d(x, 0, 0);
  return p;
}

}  // namespace

TEST_CASE("default thresholds match the four Table-1 columns") {
  const auto t = default_thresholds();
  REQUIRE(t.size() == 4);
  CHECK(t[0].max_pos_m == doctest::Approx(0.25));
  CHECK(t[0].max_rot_deg == doctest::Approx(5.0));
  CHECK(t[1].max_pos_m == doctest::Approx(0.50));
  CHECK(t[2].max_pos_m == doctest::Approx(1.00));
  CHECK(t[2].max_rot_deg == doctest::Approx(10.0));
  CHECK(t[3].max_pos_m == doctest::Approx(2.00));
  CHECK(t[3].max_rot_deg == doctest::Approx(10.0));
}

TEST_CASE("parse_thresholds") {
  const auto t = parse_thresholds("0.25,5;0.5,5;1,10;2,10");
  REQUIRE(t.size() == 4);
  CHECK(t[1].max_pos_m == doctest::Approx(0.5));
  CHECK(t[3].max_rot_deg == doctest::Approx(10.0));
  CHECK(parse_thresholds("1,10").size() == 1);
  CHECK_THROWS(parse_thresholds(""));
  CHECK_THROWS(parse_thresholds("0.25;5"));
  CHECK_THROWS(parse_thresholds("-1,5"));
  CHECK_THROWS(parse_thresholds("1,0"));
  CHECK_THROWS(parse_thresholds("a,b"));
}

TEST_CASE("evaluate fixtures") {
  PoseSelections gt;
  gt["q0"] = pose_at(0.0, 0.0);
  gt["q1"] = pose_at(5.0, 90.0);

  PoseSelections exact = gt;
  const auto perfect = evaluate(exact, gt, default_thresholds(), "m");
  REQUIRE(perfect.rows.size() == 1);
  CHECK(perfect.rows[0].method == "m");
  CHECK(perfect.query_count == 2);
  for (double pct : perfect.rows[0].percent) CHECK(pct == doctest::Approx(100.0));

  // q0 off by (0.3 m, 2 deg): fails [0.25,5], passes the rest; q1 exact.
  PoseSelections sel;
  sel["q0"] = pose_at(0.3, 2.0);
  sel["q1"] = gt["q1"];
  const auto mixed = evaluate(sel, gt, default_thresholds());
  CHECK(mixed.rows[0].percent[0] == doctest::Approx(50.0));
  CHECK(mixed.rows[0].percent[1] == doctest::Approx(100.0));
  CHECK(mixed.rows[0].percent[2] == doctest::Approx(100.0));

  // Thresholds are inclusive.
  const auto edge =
      evaluate({{"q0", pose_at(0.25, 5.0)}, {"q1", gt["q1"]}}, gt,
               default_thresholds());
  CHECK(edge.rows[0].percent[0] == doctest::Approx(100.0));

  // Missing selections count as failures.
  PoseSelections partial;
  partial["q0"] = gt["q0"];
  const auto half = evaluate(partial, gt, default_thresholds());
  for (double pct : half.rows[0].percent) CHECK(pct == doctest::Approx(50.0));

  // A selection without a matching GT entry is a data error.
  PoseSelections stray;
  stray["zz"] = pose_at(0, 0);
  CHECK_THROWS(evaluate(stray, gt, default_thresholds()));
}

TEST_CASE("percentages never decrease as thresholds loosen") {
  PoseSelections gt, sel;
  for (int i = 0; i < 12; ++i) {
    const std::string id = "q" + std::to_string(i);
    gt[id] = pose_at(0.0, 0.0);
    sel[id] = pose_at(0.3 * i, 1.5 * i);
  }
  const auto report = evaluate(sel, gt, default_thresholds());
  const auto& pct = report.rows[0].percent;
  for (size_t i = 0; i + 1 < pct.size(); ++i) CHECK(pct[i] <= pct[i + 1]);
}

TEST_CASE("compare_with_oracle appends a per-query best row") {
  PoseSelections gt;
  gt["q0"] = pose_at(0.0, 0.0);
  gt["q1"] = pose_at(3.0, 0.0);

  // Method a nails q0 and misses q1; method b is the reverse. The oracle
  // mixes them and wins both queries at the tight threshold.
  PoseSelections a, b;
  a["q0"] = gt["q0"];
  a["q1"] = pose_at(4.5, 0.0);
  b["q0"] = pose_at(1.5, 0.0);
  b["q1"] = gt["q1"];
  const auto report =
      compare_with_oracle({{"a", a}, {"b", b}}, gt, default_thresholds());
  REQUIRE(report.rows.size() == 3);
  CHECK(report.rows[0].method == "a");
  CHECK(report.rows[1].method == "b");
  CHECK(report.rows[2].method == "oracle");
  CHECK(report.rows[0].percent[0] == doctest::Approx(50.0));
  CHECK(report.rows[1].percent[0] == doctest::Approx(50.0));
  CHECK(report.rows[2].percent[0] == doctest::Approx(100.0));

  // With a single method the oracle row equals that method's row.
  const auto solo = compare_with_oracle({{"a", a}}, gt, default_thresholds());
  CHECK(solo.rows[1].percent == solo.rows[0].percent);

  // The oracle never scores below any method at any threshold.
  for (const auto& row : report.rows) {
    for (size_t i = 0; i < row.percent.size(); ++i) {
      CHECK(report.rows[2].percent[i] >= row.percent[i] - 1e-12);
    }
  }
}

TEST_CASE("report serialization formats") {
  EvalReport report;
  report.thresholds = default_thresholds();
  report.query_count = 1000;
  report.rows.push_back({"densepv", {38.9, 55.6, 69.9, 74.2}});

  const std::string csv = report_to_csv(report);
  CHECK(csv.find("method,thr_pos,thr_rot,percent\n") == 0);
  CHECK(csv.find("densepv,0.25,5,38.9\n") != std::string::npos);
  CHECK(csv.find("densepv,2,10,74.2\n") != std::string::npos);

  const std::string table = report_to_table(report);
  CHECK(table.find("[0.25, 5]") != std::string::npos);
  CHECK(table.find("[2.00, 10]") != std::string::npos);
  CHECK(table.find("densepv") != std::string::npos);
  CHECK(table.find("38.9") != std::string::npos);
  CHECK(table.find("74.2") != std::string::npos);
}
