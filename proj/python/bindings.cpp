#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mlb/kpi.hpp"
#include "mlb/scenario.hpp"
#include "mlb/study.hpp"

namespace py = pybind11;

namespace {

mlb::Mat mat_from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  mlb::Mat m(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows.front().size())
      throw std::invalid_argument("ragged matrix rows");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

mlb::LinearProgram program_from_args(const std::vector<double>& objective,
                                     const std::vector<std::pair<std::vector<double>, double>>& eq,
                                     const std::vector<std::pair<std::vector<double>, double>>& ineq,
                                     const std::vector<double>& lower,
                                     const std::vector<double>& upper) {
  mlb::LinearProgram p;
  p.num_vars = objective.size();
  p.objective = objective;
  p.lower = lower;
  p.upper = upper;
  for (auto& [coeffs, rhs] : eq) p.eq_constraints.push_back({coeffs, rhs});
  for (auto& [coeffs, rhs] : ineq) p.ineq_constraints.push_back({coeffs, rhs});
  return p;
}

py::dict solution_to_dict(const mlb::LpSolution& s) {
  py::dict d;
  d["values"] = s.values;
  d["objective_value"] = s.objective_value;
  d["status"] = std::string(mlb::to_string(s.status));
  d["iterations"] = s.iterations;
  d["solve_time_s"] = s.solve_time_s;
  return d;
}

py::dict report_to_dict(const mlb::KpiReport& r) {
  py::dict d;
  d["scenario"] = r.scenario;
  d["algorithm"] = r.algorithm;
  d["seed"] = r.seed;
  d["num_bands"] = r.num_bands;
  d["window_s"] = r.window_s;
  py::list windows;
  for (const auto& w : r.windows) {
    py::dict row;
    row["t_end"] = w.t_end;
    row["avg_tput_bps"] = w.avg_tput_bps;
    row["min_tput_bps"] = w.min_tput_bps;
    row["ho_count"] = w.ho_count;
    row["interruption_ms"] = w.interruption_ms;
    row["lbi"] = w.lbi;
    row["per_band_load"] = w.per_band_load;
    windows.append(row);
  }
  d["windows"] = windows;
  mlb::KpiAggregates agg = r.aggregates();
  py::dict a;
  a["avg_tput_bps"] = agg.avg_tput_bps;
  a["min_tput_bps"] = agg.min_tput_bps;
  a["lbi"] = agg.lbi;
  a["ho_count"] = agg.ho_count;
  a["interruption_ms"] = agg.interruption_ms;
  d["aggregates"] = a;
  return d;
}

mlb::ScenarioConfig scenario_from_args(const std::string& name, const std::string& path,
                                       long seed, const std::string& algorithm, double w,
                                       double duration) {
  mlb::ScenarioConfig cfg;
  if (!path.empty())
    cfg = mlb::load_scenario_file(path);
  else if (!name.empty())
    cfg = mlb::named_scenario(name[0]);
  else
    throw std::invalid_argument("pass scenario name ('A') or a config path");
  if (seed >= 0) cfg.seed = static_cast<unsigned long>(seed);
  if (!algorithm.empty()) {
    auto alg = mlb::algorithm_from_string(algorithm);
    if (!alg) throw std::invalid_argument("unknown algorithm '" + algorithm + "'");
    cfg.algorithm = *alg;
  }
  if (w >= 0.0) cfg.balancer.w = w;
  if (duration >= 0.0) cfg.sim_duration = duration;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(mlblab, m) {
  m.doc() = "Multi-band mobility load balancing lab: load model, LP/MILP core, "
            "probabilistic rebalancing and the cell simulator.";

  m.def("lbi", [](const std::vector<double>& loads) { return mlb::lbi(loads); },
        py::arg("band_total_loads"),
        "Jain's fairness index over band loads, in [1/B, 1].");

  m.def("load_vector",
        [](const std::vector<double>& demands, const std::vector<double>& rates) {
          return mlb::load_vector(demands, rates);
        },
        py::arg("demands_bits"), py::arg("band_rates_bps"));

  m.def("band_load",
        [](const std::vector<double>& col, const std::vector<double>& loads) {
          return mlb::band_load(col, loads);
        },
        py::arg("assignment_col"), py::arg("loads"));

  m.def("objective_f1",
        [](const std::vector<std::vector<double>>& assignment,
           const std::vector<std::vector<double>>& loads, std::vector<double> incurred) {
          mlb::AssignmentMatrix a{mat_from_rows(assignment), mlb::AssignMode::stochastic};
          mlb::LoadSample s;
          s.per_band_loads = mat_from_rows(loads);
          if (incurred.empty()) incurred.assign(s.num_bands(), 0.0);
          s.incurred_loads = std::move(incurred);
          return mlb::objective_f1(a, s);
        },
        py::arg("assignment"), py::arg("loads"), py::arg("incurred") = std::vector<double>{});

  m.def("objective_f2",
        [](const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
          mlb::AssignmentMatrix x{mat_from_rows(a), mlb::AssignMode::stochastic};
          mlb::AssignmentMatrix y{mat_from_rows(b), mlb::AssignMode::stochastic};
          return mlb::objective_f2(x, y);
        },
        py::arg("assignment"), py::arg("previous"));

  m.def("sample_demand",
        [](double arrival_rate, double packet_bits, double dt, unsigned long seed) {
          mlb::UeState ue;
          ue.mean_arrival_rate = arrival_rate;
          ue.packet_size_bits = packet_bits;
          std::mt19937_64 rng(seed);
          return mlb::sample_demand(ue, rng, dt);
        },
        py::arg("arrival_rate"), py::arg("packet_bits"), py::arg("dt"), py::arg("seed") = 1);

  m.def("cqi_efficiency", &mlb::cqi_efficiency, py::arg("cqi"));

  m.def("solve_lp",
        [](const std::vector<double>& objective,
           const std::vector<std::pair<std::vector<double>, double>>& eq,
           const std::vector<std::pair<std::vector<double>, double>>& ineq,
           const std::vector<double>& lower, const std::vector<double>& upper) {
          return solution_to_dict(
              mlb::solve_lp(program_from_args(objective, eq, ineq, lower, upper)));
        },
        py::arg("objective"), py::arg("eq_constraints"), py::arg("ineq_constraints"),
        py::arg("lower"), py::arg("upper"),
        "Minimize objective . x subject to eq rows, <= rows and box bounds.");

  m.def("solve_milp",
        [](const std::vector<double>& objective,
           const std::vector<std::pair<std::vector<double>, double>>& eq,
           const std::vector<std::pair<std::vector<double>, double>>& ineq,
           const std::vector<double>& lower, const std::vector<double>& upper,
           const std::vector<std::size_t>& integer_vars, long node_limit) {
          return solution_to_dict(mlb::solve_milp(
              program_from_args(objective, eq, ineq, lower, upper), integer_vars, node_limit));
        },
        py::arg("objective"), py::arg("eq_constraints"), py::arg("ineq_constraints"),
        py::arg("lower"), py::arg("upper"), py::arg("integer_vars"),
        py::arg("node_limit") = 1'000'000);

  m.def("run_scenario",
        [](const std::string& name, const std::string& path, long seed,
           const std::string& algorithm, double w, double duration) {
          return report_to_dict(
              mlb::run_episode(scenario_from_args(name, path, seed, algorithm, w, duration)));
        },
        py::arg("name") = std::string(), py::arg("path") = std::string(), py::arg("seed") = -1,
        py::arg("algorithm") = std::string(), py::arg("w") = -1.0, py::arg("duration") = -1.0,
        "Run one episode; returns the KPI report as a dict.");

  m.def("validate_scenario",
        [](const std::string& path) {
          mlb::load_scenario_file(path);
          return true;
        },
        py::arg("path"), "Parse and validate a scenario file; raises on errors.");

  m.def("pareto_sweep",
        [](std::size_t num_ues, std::vector<double> weights, unsigned long seed) {
          mlb::BalancerConfig cfg;
          auto inst = mlb::make_study_instance(num_ues, mlb::study_bands(4), cfg, seed);
          std::vector<std::tuple<double, double, double>> out;
          for (const auto& p : mlb::pareto_sweep(inst, std::move(weights)))
            out.emplace_back(p.w, p.f1, p.f2);
          return out;
        },
        py::arg("num_ues"), py::arg("weights"), py::arg("seed") = 1,
        "One LP per weight on a frozen snapshot; returns (w, f1, f2) tuples.");

  m.def("rounding_study_row",
        [](std::size_t num_ues, unsigned long seed, int samples, long node_limit) {
          mlb::BalancerConfig cfg;
          cfg.r_min = 5e5;
          cfg.ue_cap_factor = 1.05;
          auto inst = mlb::make_study_instance(num_ues, mlb::study_bands(4), cfg, seed);
          std::mt19937_64 rng(seed * 977 + num_ues);
          auto row = mlb::rounding_study_row(inst, samples, node_limit, rng);
          py::dict d;
          d["num_ues"] = row.num_ues;
          d["milp_time_s"] = row.milp_time_s;
          d["lp_time_s"] = row.lp_time_s;
          d["milp_obj"] = row.milp_obj;
          d["dlp_obj"] = row.dlp_obj;
          d["plp_obj_mean"] = row.plp_obj_mean;
          d["milp_status"] = std::string(mlb::to_string(row.milp_status));
          return d;
        },
        py::arg("num_ues"), py::arg("seed") = 1, py::arg("samples") = 20,
        py::arg("node_limit") = 2000);

  py::register_exception<mlb::ScenarioError>(m, "ScenarioError", PyExc_ValueError);
}
