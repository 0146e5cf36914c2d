#include "mlb/kpi.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace mlb {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double ratio(double a, double b) {
  if (b != 0.0) return a / b;
  return a == 0.0 ? 1.0 : kInf;
}

}  // namespace

KpiAggregates KpiReport::aggregates() const {
  KpiAggregates agg;
  if (windows.empty()) return agg;
  agg.lbi = 0.0;
  for (const KpiWindow& w : windows) {
    agg.avg_tput_bps += w.avg_tput_bps;
    agg.min_tput_bps += w.min_tput_bps;
    agg.lbi += w.lbi;
    agg.ho_count += w.ho_count;
    agg.interruption_ms += w.interruption_ms;
  }
  double inv = 1.0 / static_cast<double>(windows.size());
  agg.avg_tput_bps *= inv;
  agg.min_tput_bps *= inv;
  agg.lbi *= inv;
  return agg;
}

KpiWindow aggregate_window(std::span<const StepRecord> records, double window_s) {
  if (records.empty()) throw std::invalid_argument("aggregate_window: no records");
  if (window_s <= 0.0) throw std::invalid_argument("aggregate_window: window must be positive");
  const std::size_t u_count = records.front().served_bits.size();
  const std::size_t b_count = records.front().band_totals.size();

  KpiWindow out;
  out.t_end = records.front().timestamp + window_s;
  out.per_band_load.assign(b_count, 0.0);
  std::vector<double> served(u_count, 0.0);
  std::vector<double> band_sums(b_count, 0.0);
  for (const StepRecord& r : records) {
    for (std::size_t u = 0; u < u_count; ++u) served[u] += r.served_bits[u];
    for (std::size_t b = 0; b < b_count; ++b) band_sums[b] += r.band_totals[b];
    out.ho_count += r.handovers;
    out.interruption_ms += r.interruption_ms;
  }
  double tput_sum = 0.0, tput_min = kInf;
  for (double s : served) {
    double t = s / window_s;
    tput_sum += t;
    tput_min = std::min(tput_min, t);
  }
  out.avg_tput_bps = u_count ? tput_sum / static_cast<double>(u_count) : 0.0;
  out.min_tput_bps = u_count ? tput_min : 0.0;
  out.lbi = lbi(band_sums);
  double inv = 1.0 / static_cast<double>(records.size());
  for (std::size_t b = 0; b < b_count; ++b) out.per_band_load[b] = band_sums[b] * inv;
  return out;
}

KpiWindow merge_windows(std::span<const KpiWindow> per_cell) {
  if (per_cell.empty()) throw std::invalid_argument("merge_windows: no cells");
  KpiWindow out = per_cell.front();
  for (std::size_t c = 1; c < per_cell.size(); ++c) {
    const KpiWindow& w = per_cell[c];
    out.avg_tput_bps += w.avg_tput_bps;
    out.min_tput_bps = std::min(out.min_tput_bps, w.min_tput_bps);
    out.ho_count += w.ho_count;
    out.interruption_ms += w.interruption_ms;
    for (std::size_t b = 0; b < out.per_band_load.size(); ++b)
      out.per_band_load[b] += w.per_band_load[b];
  }
  double inv = 1.0 / static_cast<double>(per_cell.size());
  out.avg_tput_bps *= inv;
  for (auto& v : out.per_band_load) v *= inv;
  out.lbi = lbi(out.per_band_load);
  return out;
}

std::string report_to_csv(const KpiReport& report) {
  std::ostringstream out;
  out << "t,avg_tput_bps,min_tput_bps,ho_count,interruption_ms,lbi";
  for (std::size_t b = 0; b < report.num_bands; ++b) out << ",load_b" << b;
  out << "\n";
  for (const KpiWindow& w : report.windows) {
    out << fmt_double(w.t_end) << ',' << fmt_double(w.avg_tput_bps) << ','
        << fmt_double(w.min_tput_bps) << ',' << w.ho_count << ','
        << fmt_double(w.interruption_ms) << ',' << fmt_double(w.lbi);
    for (double v : w.per_band_load) out << ',' << fmt_double(v);
    out << "\n";
  }
  return out.str();
}

std::string report_to_json(const KpiReport& report) {
  nlohmann::json j;
  j["scenario"] = report.scenario;
  j["algorithm"] = report.algorithm;
  j["seed"] = report.seed;
  j["num_bands"] = report.num_bands;
  j["window_s"] = report.window_s;
  j["windows"] = nlohmann::json::array();
  for (const KpiWindow& w : report.windows) {
    nlohmann::json row;
    row["t_end"] = w.t_end;
    row["avg_tput_bps"] = w.avg_tput_bps;
    row["min_tput_bps"] = w.min_tput_bps;
    row["ho_count"] = w.ho_count;
    row["interruption_ms"] = w.interruption_ms;
    row["lbi"] = w.lbi;
    row["per_band_load"] = w.per_band_load;
    j["windows"].push_back(std::move(row));
  }
  KpiAggregates agg = report.aggregates();
  j["aggregates"] = {{"avg_tput_bps", agg.avg_tput_bps},
                     {"min_tput_bps", agg.min_tput_bps},
                     {"lbi", agg.lbi},
                     {"ho_count", agg.ho_count},
                     {"interruption_ms", agg.interruption_ms}};
  return j.dump(2);
}

KpiReport report_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  KpiReport report;
  report.scenario = j.at("scenario").get<std::string>();
  report.algorithm = j.at("algorithm").get<std::string>();
  report.seed = j.at("seed").get<unsigned long>();
  report.num_bands = j.at("num_bands").get<std::size_t>();
  report.window_s = j.at("window_s").get<double>();
  for (const auto& row : j.at("windows")) {
    KpiWindow w;
    w.t_end = row.at("t_end").get<double>();
    w.avg_tput_bps = row.at("avg_tput_bps").get<double>();
    w.min_tput_bps = row.at("min_tput_bps").get<double>();
    w.ho_count = row.at("ho_count").get<long>();
    w.interruption_ms = row.at("interruption_ms").get<double>();
    w.lbi = row.at("lbi").get<double>();
    w.per_band_load = row.at("per_band_load").get<std::vector<double>>();
    report.windows.push_back(std::move(w));
  }
  return report;
}

KpiReport read_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read report from " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return report_from_json(buf.str());
}

void write_report(const KpiReport& report, ReportFormat format, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report to " + path);
  out << (format == ReportFormat::csv ? report_to_csv(report) : report_to_json(report));
  if (!out) throw std::runtime_error("write failed for " + path);
}

KpiComparison compare_reports(const KpiReport& a, const KpiReport& b) {
  if (a.scenario != b.scenario || a.seed != b.seed || a.num_bands != b.num_bands)
    throw std::invalid_argument("compare_reports: scenario metadata mismatch");
  KpiAggregates aa = a.aggregates(), bb = b.aggregates();
  KpiComparison cmp;
  cmp.avg_tput_ratio = ratio(aa.avg_tput_bps, bb.avg_tput_bps);
  cmp.min_tput_ratio = ratio(aa.min_tput_bps, bb.min_tput_bps);
  cmp.ho_ratio = ratio(static_cast<double>(aa.ho_count), static_cast<double>(bb.ho_count));
  cmp.interruption_ratio = ratio(aa.interruption_ms, bb.interruption_ms);
  cmp.lbi_ratio = ratio(aa.lbi, bb.lbi);
  return cmp;
}

}  // namespace mlb
