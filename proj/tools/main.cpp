#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mlb/kpi.hpp"
#include "mlb/scenario.hpp"
#include "mlb/study.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonOpts {
  std::string scenario;  // named A/B/C
  std::string config;    // scenario file path
  long seed = -1;
  std::string algorithm;
  double w = -1.0;
  double duration = -1.0;
};

mlb::ScenarioConfig resolve_scenario(const CommonOpts& opts) {
  mlb::ScenarioConfig cfg;
  if (!opts.config.empty()) {
    cfg = mlb::load_scenario_file(opts.config);
  } else if (!opts.scenario.empty()) {
    if (opts.scenario.size() != 1)
      throw mlb::ScenarioError("scenario: use one of A, B, C or --config <file>");
    cfg = mlb::named_scenario(opts.scenario[0]);
  } else {
    throw mlb::ScenarioError("scenario: pass --scenario {A,B,C} or --config <file>");
  }
  if (opts.seed >= 0) cfg.seed = static_cast<unsigned long>(opts.seed);
  if (!opts.algorithm.empty()) {
    auto alg = mlb::algorithm_from_string(opts.algorithm);
    if (!alg) throw mlb::ScenarioError("scenario: unknown algorithm '" + opts.algorithm + "'");
    cfg.algorithm = *alg;
  }
  if (opts.w >= 0.0) cfg.balancer.w = opts.w;
  if (opts.duration >= 0.0) cfg.sim_duration = opts.duration;
  cfg.validate();
  return cfg;
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw mlb::ScenarioError("empty weight grid");
  return out;
}

std::vector<std::size_t> parse_counts(const std::string& csv) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    long v = std::stol(item);
    if (v <= 0) throw mlb::ScenarioError("ue counts must be positive");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw mlb::ScenarioError("empty ue count list");
  return out;
}

void print_aggregates(const mlb::KpiReport& report) {
  mlb::KpiAggregates agg = report.aggregates();
  std::printf("scenario=%s algorithm=%s seed=%lu windows=%zu\n", report.scenario.c_str(),
              report.algorithm.c_str(), report.seed, report.windows.size());
  std::printf("avg_tput_bps=%.1f min_tput_bps=%.1f ho_count=%ld interruption_ms=%.1f lbi=%.4f\n",
              agg.avg_tput_bps, agg.min_tput_bps, agg.ho_count, agg.interruption_ms, agg.lbi);
}

int cmd_run(const CommonOpts& opts, const std::string& out_path, const std::string& format) {
  mlb::ScenarioConfig cfg = resolve_scenario(opts);
  mlb::KpiReport report = mlb::run_episode(cfg);
  print_aggregates(report);
  if (!out_path.empty()) {
    auto fmt = format == "json" ? mlb::ReportFormat::json : mlb::ReportFormat::csv;
    mlb::write_report(report, fmt, out_path);
  }
  return kExitOk;
}

int cmd_pareto(const CommonOpts& opts, const std::string& weights_csv,
               const std::string& out_path) {
  mlb::ScenarioConfig cfg = resolve_scenario(opts);
  std::vector<double> weights =
      weights_csv.empty()
          ? std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}
          : parse_grid(weights_csv);
  for (double w : weights)
    if (w < 0.0 || w > 1.0) throw mlb::ScenarioError("pareto: weights must lie in [0,1]");

  mlb::StudyInstance inst = mlb::make_study_instance(
      static_cast<std::size_t>(cfg.n_ues_per_cell), cfg.bands, cfg.balancer, cfg.seed);
  auto points = mlb::pareto_sweep(inst, weights);

  std::ostringstream csv;
  csv << "w,f1,f2\n";
  for (const auto& p : points) {
    char line[96];
    std::snprintf(line, sizeof line, "%.4f,%.9g,%.9g\n", p.w, p.f1, p.f2);
    csv << line;
    std::printf("w=%.2f f1=%.6f f2=%.6f\n", p.w, p.f1, p.f2);
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << csv.str();
  }
  return kExitOk;
}

int cmd_rounding_study(const std::string& counts_csv, std::size_t num_bands, int seeds,
                       int samples, long node_limit, double r_min, double cap_factor,
                       const std::string& out_path) {
  auto counts = parse_counts(counts_csv);
  auto bands = mlb::study_bands(num_bands);
  mlb::BalancerConfig cfg;
  cfg.r_min = r_min;
  cfg.ue_cap_factor = cap_factor;  // tight caps keep the relaxation fractional

  std::ostringstream csv;
  csv << "u,seed,milp_time_ms,lp_time_ms,milp_obj,dlp_obj,plp_obj_mean,milp_status\n";
  for (std::size_t u : counts) {
    for (int seed = 1; seed <= seeds; ++seed) {
      auto inst = mlb::make_study_instance(u, bands, cfg, static_cast<unsigned long>(seed));
      std::mt19937_64 rng(static_cast<unsigned long>(seed) * 977 + u);
      auto row = mlb::rounding_study_row(inst, samples, node_limit, rng);
      char line[200];
      std::snprintf(line, sizeof line, "%zu,%d,%.3f,%.3f,%.9g,%.9g,%.9g,%s\n", u, seed,
                    row.milp_time_s * 1e3, row.lp_time_s * 1e3, row.milp_obj, row.dlp_obj,
                    row.plp_obj_mean, mlb::to_string(row.milp_status));
      csv << line;
      std::printf("%s", line);
    }
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << csv.str();
  }
  return kExitOk;
}

int cmd_validate(const std::string& config_path) {
  mlb::ScenarioConfig cfg = mlb::load_scenario_file(config_path);
  std::printf("ok: %s (scenario '%s', %d UEs, %zu bands, algorithm %s)\n", config_path.c_str(),
              cfg.name.c_str(), cfg.n_ues_per_cell, cfg.bands.size(),
              mlb::to_string(cfg.algorithm));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-band mobility load balancing lab"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string out_path, format = "csv", weights_csv, counts_csv = "10,20,40,80";
  std::string validate_path;
  std::size_t num_bands = 4;
  int seeds = 3, samples = 20;
  long node_limit = 2000;
  double study_r_min = 5e5, study_cap_factor = 1.05;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--scenario", opts.scenario, "named scenario A, B or C");
    cmd->add_option("--config", opts.config, "scenario file path");
    cmd->add_option("--seed", opts.seed, "rng seed override");
    cmd->add_option("--algorithm", opts.algorithm, "pmlb | no_mlb | a2_mlb | rule_based");
    cmd->add_option("--w", opts.w, "objective weight override in [0,1]");
    cmd->add_option("--duration", opts.duration, "simulated seconds override");
  };

  CLI::App* run = app.add_subcommand("run", "run one episode and report KPIs");
  add_common(run);
  run->add_option("--out", out_path, "report output path");
  run->add_option("--format", format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI::App* pareto = app.add_subcommand("pareto", "sweep w on a frozen load snapshot");
  add_common(pareto);
  pareto->add_option("--weights", weights_csv, "comma list, default 0,0.1,...,1");
  pareto->add_option("--out", out_path, "csv output path");

  CLI::App* study = app.add_subcommand("rounding-study", "MILP vs D-LP vs P-LP comparison");
  study->add_option("--ue-counts", counts_csv, "comma list of UE counts");
  study->add_option("--bands", num_bands, "number of bands");
  study->add_option("--seeds", seeds, "instances per UE count");
  study->add_option("--samples", samples, "probabilistic rounding draws");
  study->add_option("--node-limit", node_limit, "branch and bound node budget");
  study->add_option("--r-min", study_r_min, "minimum rate for generated instances, bits/s");
  study->add_option("--cap-factor", study_cap_factor, "per-band UE cap factor for instances");
  study->add_option("--out", out_path, "csv output path");

  CLI::App* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("--config", validate_path, "scenario file path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(opts, out_path, format);
    if (pareto->parsed()) return cmd_pareto(opts, weights_csv, out_path);
    if (study->parsed())
      return cmd_rounding_study(counts_csv, num_bands, seeds, samples, node_limit, study_r_min,
                                study_cap_factor, out_path);
    if (validate->parsed()) return cmd_validate(validate_path);
  } catch (const mlb::ScenarioError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
