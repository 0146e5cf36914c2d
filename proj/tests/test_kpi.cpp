#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "mlb/kpi.hpp"

using namespace mlb;

namespace {

StepRecord make_record(double t, std::vector<double> served, std::vector<double> band_totals,
                       int ho = 0, double intr = 0.0) {
  StepRecord r;
  r.timestamp = t;
  r.served_bits = std::move(served);
  r.backlog_bits.assign(r.served_bits.size(), 0.0);
  r.band_totals = std::move(band_totals);
  r.handovers = ho;
  r.interruption_ms = intr;
  return r;
}

KpiReport tiny_report() {
  KpiReport rep;
  rep.scenario = "unit";
  rep.algorithm = "pmlb";
  rep.seed = 3;
  rep.num_bands = 2;
  rep.window_s = 1.0;
  KpiWindow w;
  w.t_end = 1.0;
  w.avg_tput_bps = 2.0e6;
  w.min_tput_bps = 1.0e6;
  w.ho_count = 4;
  w.interruption_ms = 200.0;
  w.lbi = 0.93;
  w.per_band_load = {0.4, 0.3};
  rep.windows.push_back(w);
  w.t_end = 2.0;
  w.ho_count = 1;
  w.interruption_ms = 50.0;
  w.avg_tput_bps = 3.0e6;
  rep.windows.push_back(w);
  return rep;
}

}  // namespace

TEST_CASE("aggregate_window single UE") {
  std::vector<StepRecord> recs{make_record(0.0, {1.2e6}, {0.5, 0.1})};
  KpiWindow w = aggregate_window(recs, 1.0);
  CHECK(w.avg_tput_bps == doctest::Approx(1.2e6));
  CHECK(w.min_tput_bps == doctest::Approx(1.2e6));
  CHECK(w.interruption_ms == 0.0);
  CHECK(w.ho_count == 0);
}

TEST_CASE("aggregate_window averages and minimum") {
  std::vector<StepRecord> recs{make_record(0.0, {0.5e6, 1.5e6}, {0.2, 0.2}),
                               make_record(0.5, {0.5e6, 1.5e6}, {0.2, 0.2}, 2, 100.0)};
  KpiWindow w = aggregate_window(recs, 1.0);
  CHECK(w.avg_tput_bps == doctest::Approx(2.0e6));  // (1 + 3) / 2 Mb/s
  CHECK(w.min_tput_bps == doctest::Approx(1.0e6));
  CHECK(w.ho_count == 2);
  CHECK(w.interruption_ms == doctest::Approx(100.0));
  CHECK(w.lbi == doctest::Approx(1.0));
  CHECK(w.per_band_load[0] == doctest::Approx(0.2));

  CHECK_THROWS_AS(aggregate_window({}, 1.0), std::invalid_argument);
}

TEST_CASE("min throughput never exceeds average") {
  std::vector<StepRecord> recs{make_record(0.0, {1e5, 9e6, 3e6}, {0.1, 0.9})};
  KpiWindow w = aggregate_window(recs, 2.0);
  CHECK(w.min_tput_bps <= w.avg_tput_bps);
}

TEST_CASE("window additivity of handover counts") {
  KpiReport rep = tiny_report();
  long total = 0;
  for (const auto& w : rep.windows) total += w.ho_count;
  CHECK(rep.aggregates().ho_count == total);
  CHECK(rep.aggregates().interruption_ms == doctest::Approx(250.0));
}

TEST_CASE("aggregate means cover exactly the windows") {
  KpiReport rep = tiny_report();
  KpiAggregates agg = rep.aggregates();
  CHECK(agg.lbi == doctest::Approx(0.93));
  CHECK(agg.avg_tput_bps == doctest::Approx(2.5e6));
  CHECK(agg.min_tput_bps == doctest::Approx(1.0e6));

  KpiReport empty = rep;
  empty.windows.clear();
  CHECK(empty.aggregates().lbi == 1.0);
  CHECK(empty.aggregates().avg_tput_bps == 0.0);
}

TEST_CASE("csv schema has 6 + B columns and round-trips numerically") {
  KpiReport rep = tiny_report();
  std::string csv = report_to_csv(rep);
  std::istringstream in(csv);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,avg_tput_bps,min_tput_bps,ho_count,interruption_ms,lbi,load_b0,load_b1");
  std::string row;
  std::getline(in, row);
  double t, avg, mn, intr, lbi_v, l0, l1;
  long ho;
  CHECK(std::sscanf(row.c_str(), "%lf,%lf,%lf,%ld,%lf,%lf,%lf,%lf", &t, &avg, &mn, &ho, &intr,
                    &lbi_v, &l0, &l1) == 8);
  CHECK(std::abs(avg - rep.windows[0].avg_tput_bps) <= 1e-9 * avg);
  CHECK(std::abs(lbi_v - rep.windows[0].lbi) <= 1e-9);
  CHECK(ho == 4);

  KpiReport empty = rep;
  empty.windows.clear();
  std::string header_only = report_to_csv(empty);
  CHECK(header_only ==
        "t,avg_tput_bps,min_tput_bps,ho_count,interruption_ms,lbi,load_b0,load_b1\n");
}

TEST_CASE("json report round-trips exactly") {
  KpiReport rep = tiny_report();
  rep.windows[0].avg_tput_bps = 1234567.891234567;  // awkward mantissa
  std::string text = report_to_json(rep);
  KpiReport back = report_from_json(text);
  CHECK(back.scenario == rep.scenario);
  CHECK(back.algorithm == rep.algorithm);
  CHECK(back.seed == rep.seed);
  CHECK(back.num_bands == rep.num_bands);
  REQUIRE(back.windows.size() == rep.windows.size());
  for (std::size_t i = 0; i < rep.windows.size(); ++i) {
    CHECK(back.windows[i].t_end == rep.windows[i].t_end);
    CHECK(back.windows[i].avg_tput_bps == rep.windows[i].avg_tput_bps);
    CHECK(back.windows[i].min_tput_bps == rep.windows[i].min_tput_bps);
    CHECK(back.windows[i].ho_count == rep.windows[i].ho_count);
    CHECK(back.windows[i].lbi == rep.windows[i].lbi);
    CHECK(back.windows[i].per_band_load == rep.windows[i].per_band_load);
  }
  CHECK(report_to_json(back) == text);
}

TEST_CASE("write_report hits the filesystem and surfaces path errors") {
  KpiReport rep = tiny_report();
  auto path = std::filesystem::temp_directory_path() / "mlb_kpi_test.json";
  write_report(rep, ReportFormat::json, path.string());
  KpiReport back = read_report_json(path.string());
  CHECK(back.windows.size() == rep.windows.size());
  std::filesystem::remove(path);

  CHECK_THROWS_WITH_AS(write_report(rep, ReportFormat::csv, "/nonexistent-dir/x.csv"),
                       "cannot write report to /nonexistent-dir/x.csv", std::runtime_error);
}

TEST_CASE("compare_reports ratios") {
  KpiReport a = tiny_report(), b = tiny_report();
  KpiComparison same = compare_reports(a, b);
  CHECK(same.avg_tput_ratio == doctest::Approx(1.0));
  CHECK(same.ho_ratio == doctest::Approx(1.0));

  for (auto& w : a.windows) w.avg_tput_bps *= 2.0;
  a.algorithm = "no_mlb";  // different algorithm is fine, same scenario
  KpiComparison doubled = compare_reports(a, b);
  CHECK(doubled.avg_tput_ratio == doctest::Approx(2.0));

  KpiReport other = tiny_report();
  other.scenario = "different";
  CHECK_THROWS_AS(compare_reports(a, other), std::invalid_argument);
  other = tiny_report();
  other.seed = 99;
  CHECK_THROWS_AS(compare_reports(a, other), std::invalid_argument);
}

TEST_CASE("merge_windows pools cells") {
  KpiWindow a;
  a.t_end = 1.0;
  a.avg_tput_bps = 2e6;
  a.min_tput_bps = 1e6;
  a.ho_count = 2;
  a.interruption_ms = 100.0;
  a.per_band_load = {0.6, 0.2};
  a.lbi = lbi(a.per_band_load);
  KpiWindow b = a;
  b.avg_tput_bps = 4e6;
  b.min_tput_bps = 0.5e6;
  b.ho_count = 1;
  b.per_band_load = {0.2, 0.6};

  std::vector<KpiWindow> cells{a, b};
  KpiWindow merged = merge_windows(cells);
  CHECK(merged.avg_tput_bps == doctest::Approx(3e6));
  CHECK(merged.min_tput_bps == doctest::Approx(0.5e6));
  CHECK(merged.ho_count == 3);
  CHECK(merged.interruption_ms == doctest::Approx(200.0));
  CHECK(merged.per_band_load[0] == doctest::Approx(0.4));
  CHECK(merged.lbi == doctest::Approx(1.0));
}
