#pragma once

#include <span>
#include <string>
#include <vector>

#include "mlb/sim.hpp"

namespace mlb {

struct KpiWindow {
  double t_end = 0.0;  // window end, seconds
  double avg_tput_bps = 0.0;
  double min_tput_bps = 0.0;
  long ho_count = 0;
  double interruption_ms = 0.0;
  double lbi = 1.0;
  std::vector<double> per_band_load;
};

struct KpiAggregates {
  double avg_tput_bps = 0.0;  // mean over windows
  double min_tput_bps = 0.0;  // mean over windows of the per-window minimum
  double lbi = 1.0;           // mean over windows
  long ho_count = 0;          // total
  double interruption_ms = 0.0;  // total
};

struct KpiReport {
  std::string scenario = "custom";
  std::string algorithm = "pmlb";
  unsigned long seed = 0;
  std::size_t num_bands = 0;
  double window_s = 0.0;
  std::vector<KpiWindow> windows;

  KpiAggregates aggregates() const;
};

// Collapse one delta_t window of step records into a KPI row.
// Throws std::invalid_argument on an empty span.
KpiWindow aggregate_window(std::span<const StepRecord> records, double window_s);

// Pool the same window across cells: throughputs average/min, counts add,
// LBI recomputed from the summed band loads.
KpiWindow merge_windows(std::span<const KpiWindow> per_cell);

enum class ReportFormat { csv, json };

// csv columns: t,avg_tput_bps,min_tput_bps,ho_count,interruption_ms,lbi,
// load_b0..load_b{B-1}. json mirrors the report fields and round-trips.
void write_report(const KpiReport& report, ReportFormat format, const std::string& path);
std::string report_to_csv(const KpiReport& report);
std::string report_to_json(const KpiReport& report);
KpiReport report_from_json(const std::string& text);
KpiReport read_report_json(const std::string& path);

struct KpiComparison {
  double avg_tput_ratio = 1.0;
  double min_tput_ratio = 1.0;
  double ho_ratio = 1.0;
  double interruption_ratio = 1.0;
  double lbi_ratio = 1.0;
};

// Ratios of episode aggregates a/b. Requires matching scenario and seed.
KpiComparison compare_reports(const KpiReport& a, const KpiReport& b);

}  // namespace mlb
