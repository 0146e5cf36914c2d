#include "mlb/study.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mlb/sim.hpp"

namespace mlb {

namespace {

double instance_t_max(const StudyInstance& inst) {
  double t_max = 0.0;
  for (std::size_t u = 0; u < inst.ues.size(); ++u) {
    double row = 0.0;
    for (std::size_t b = 0; b < inst.bands.size(); ++b)
      row = std::max(row, inst.expected.per_band_loads(u, b));
    t_max += row;
  }
  return std::max(t_max, 1e-12);
}

}  // namespace

std::vector<Band> study_bands(std::size_t num_bands) {
  const double mhz[] = {20.0, 10.0, 5.0, 10.0};
  const int prb[] = {100, 50, 25, 50};
  std::vector<Band> bands;
  for (std::size_t b = 0; b < num_bands; ++b)
    bands.push_back({static_cast<int>(b), mhz[b % 4] * 1e6, prb[b % 4], 1});
  return bands;
}

StudyInstance make_study_instance(std::size_t num_ues, const std::vector<Band>& bands,
                                  const BalancerConfig& cfg, unsigned long seed) {
  std::mt19937_64 rng(seed);

  StudyInstance inst;
  inst.bands = bands;
  inst.cfg = cfg;
  inst.caps = band_ue_caps(bands, num_ues, cfg.ue_cap_factor);
  for (std::size_t b = 0; b < bands.size(); ++b) inst.bands[b].ue_cap = inst.caps[b];

  const std::size_t b_count = bands.size();
  inst.rates.rates = Mat(num_ues, b_count);
  inst.expected.per_band_loads = Mat(num_ues, b_count);
  inst.expected.incurred_loads.assign(b_count, 0.0);
  std::vector<int> camp(num_ues);

  Mat sinr_field = draw_mean_sinr(num_ues, b_count, rng);

  // log-uniform demand spread around the heavy-traffic mix; heterogeneous
  // demands are what give the assignment problem its tension
  const double packet_bits = 12000.0;  // 1500 bytes
  std::uniform_real_distribution<double> log_lambda(std::log(25.0), std::log(100.0));
  for (std::size_t u = 0; u < num_ues; ++u) {
    UeState ue;
    ue.id = static_cast<int>(u);
    ue.mean_arrival_rate = std::exp(log_lambda(rng));
    ue.packet_size_bits = packet_bits;
    for (std::size_t b = 0; b < b_count; ++b) {
      double sinr = sinr_field(u, b);
      int cqi = 1 + static_cast<int>(std::floor((sinr - 30.0) / 3.0));
      cqi = std::clamp(cqi, 3, kNumCqiLevels);  // keep every band above r_min
      inst.rates.rates(u, b) = cqi_efficiency(cqi) * bands[b].bandwidth_hz;
      inst.expected.per_band_loads(u, b) =
          ue.mean_arrival_rate * packet_bits / inst.rates.rates(u, b);
      ue.channel_quality_db.push_back(sinr_to_quality_db(sinr));
    }
    inst.ues.push_back(std::move(ue));
  }
  // camp on the better of the first two bands, spilling to the best band
  // with spare capacity once a cap fills: the previous assignment must be
  // feasible so that w=0 can keep every UE in place
  std::vector<int> counts(b_count, 0);
  for (std::size_t u = 0; u < num_ues; ++u) {
    const auto& q = inst.ues[u].channel_quality_db;
    std::size_t best = b_count > 1 && q[1] > q[0] ? 1 : 0;
    if (counts[best] >= inst.caps[best]) {
      double best_q = -kInf;
      std::size_t pick = best;
      for (std::size_t b = 0; b < b_count; ++b) {
        if (counts[b] >= inst.caps[b]) continue;
        if (q[b] > best_q) {
          best_q = q[b];
          pick = b;
        }
      }
      best = pick;
    }
    ++counts[best];
    camp[u] = static_cast<int>(best);
    inst.ues[u].current_band = camp[u];
  }
  inst.previous = AssignmentMatrix::hard_from_bands(camp, b_count);
  return inst;
}

double hard_objective(const StudyInstance& inst, const AssignmentMatrix& hard) {
  double f1 = objective_f1(hard, inst.expected);
  double f2 = objective_f2(hard, inst.previous);
  double y_max = 2.0 * static_cast<double>(inst.ues.size());
  return inst.cfg.w * f1 / instance_t_max(inst) + (1.0 - inst.cfg.w) * f2 / y_max;
}

std::vector<ParetoPoint> pareto_sweep(const StudyInstance& inst, std::vector<double> weights) {
  std::sort(weights.begin(), weights.end());
  std::vector<ParetoPoint> points;
  for (double w : weights) {
    if (w < 0.0 || w > 1.0) throw std::invalid_argument("pareto: weights must lie in [0,1]");
    BalancerConfig cfg = inst.cfg;
    cfg.w = w;
    BuiltLp built =
        build_lp(inst.expected, inst.expected.incurred_loads, inst.rates, inst.previous,
                 inst.caps, cfg);
    LpSolution sol = solve_lp(built.prog);
    if (sol.status != SolveStatus::optimal)
      throw std::runtime_error(std::string("pareto: LP not optimal: ") + to_string(sol.status));
    // evaluate both objectives from the x block; the slack variables are not
    // pinned when their weight is zero
    ParetoPoint p;
    p.w = w;
    for (std::size_t b = 0; b < inst.bands.size(); ++b) {
      double load = inst.expected.incurred_loads[b];
      for (std::size_t u = 0; u < inst.ues.size(); ++u)
        load += sol.values[built.x_index(u, b)] * inst.expected.per_band_loads(u, b);
      p.f1 = std::max(p.f1, load);
    }
    for (std::size_t u = 0; u < inst.ues.size(); ++u)
      for (std::size_t b = 0; b < inst.bands.size(); ++b)
        p.f2 += std::abs(sol.values[built.x_index(u, b)] - inst.previous.entries(u, b));
    points.push_back(p);
  }
  return points;
}

RoundingRow rounding_study_row(const StudyInstance& inst, int prob_samples, long node_limit,
                               std::mt19937_64& rng) {
  RoundingRow row;
  row.num_ues = inst.ues.size();
  const std::size_t b_count = inst.bands.size();

  BuiltLp built = build_lp(inst.expected, inst.expected.incurred_loads, inst.rates,
                           inst.previous, inst.caps, inst.cfg);

  std::vector<std::size_t> ints(inst.ues.size() * b_count);
  std::iota(ints.begin(), ints.end(), 0);
  LpSolution milp = solve_milp(built.prog, ints, node_limit);
  row.milp_status = milp.status;
  row.milp_time_s = milp.solve_time_s;
  if (!milp.values.empty()) {
    std::vector<int> bands_of(inst.ues.size());
    for (std::size_t u = 0; u < inst.ues.size(); ++u) {
      std::size_t best = 0;
      for (std::size_t b = 1; b < b_count; ++b)
        if (milp.values[built.x_index(u, b)] > milp.values[built.x_index(u, best)]) best = b;
      bands_of[u] = static_cast<int>(best);
    }
    row.milp_obj = hard_objective(inst, AssignmentMatrix::hard_from_bands(bands_of, b_count));
  }

  LpSolution lp = solve_lp(built.prog);
  row.lp_status = lp.status;
  row.lp_time_s = lp.solve_time_s;
  if (lp.status != SolveStatus::optimal) return row;

  AssignmentMatrix dist;
  dist.mode = AssignMode::stochastic;
  dist.entries = Mat(inst.ues.size(), b_count, 0.0);
  for (std::size_t u = 0; u < inst.ues.size(); ++u) {
    double sum = 0.0;
    for (std::size_t b = 0; b < b_count; ++b) {
      double v = std::clamp(lp.values[built.x_index(u, b)], 0.0, 1.0);
      dist.entries(u, b) = v;
      sum += v;
    }
    for (std::size_t b = 0; b < b_count; ++b) dist.entries(u, b) /= sum;
  }

  row.dlp_obj = hard_objective(
      inst, round_deterministic(dist, inst.rates, inst.caps, inst.cfg));

  double acc = 0.0;
  int valid = 0;
  for (int s = 0; s < prob_samples; ++s) {
    try {
      acc += hard_objective(inst,
                            round_probabilistic(dist, inst.rates, inst.caps, inst.cfg, rng));
      ++valid;
    } catch (const RoundingError&) {
      // generous caps make this rare; skip the failed draw
    }
  }
  row.plp_obj_mean = valid ? acc / valid : std::nan("");
  return row;
}

}  // namespace mlb
