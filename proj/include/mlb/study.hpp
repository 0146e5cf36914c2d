#pragma once

#include <random>

#include "mlb/balancer.hpp"

namespace mlb {

// A frozen balancing instant: expected loads, rate estimates and the camped
// previous assignment, ready for one optimization pass.
struct StudyInstance {
  std::vector<UeState> ues;
  std::vector<Band> bands;
  RateMatrix rates;
  LoadSample expected;
  AssignmentMatrix previous;
  std::vector<int> caps;
  BalancerConfig cfg;
};

// Synthesizes an instance with the standard placement and channel model.
// Base CQI is clamped so every UE clears r_min somewhere (the rounding and
// Pareto studies assume no prefiltering).
StudyInstance make_study_instance(std::size_t num_ues, const std::vector<Band>& bands,
                                  const BalancerConfig& cfg, unsigned long seed);

// Bands for B columns, cycling the default widths when B > 4.
std::vector<Band> study_bands(std::size_t num_bands);

// Scalarized objective of a hard assignment: w*f1/t_max + (1-w)*f2/y_max.
double hard_objective(const StudyInstance& inst, const AssignmentMatrix& hard);

struct ParetoPoint {
  double w = 0.0;
  double f1 = 0.0;  // relaxed max band load at the optimum
  double f2 = 0.0;  // relaxed L1 movement at the optimum
};

// One LP per weight; f1/f2 evaluated from the x block of the solution.
// Output sorted by w. Throws std::runtime_error if any LP fails.
std::vector<ParetoPoint> pareto_sweep(const StudyInstance& inst, std::vector<double> weights);

struct RoundingRow {
  std::size_t num_ues = 0;
  unsigned long seed = 0;
  double milp_time_s = 0.0;
  double lp_time_s = 0.0;
  double milp_obj = 0.0;
  double dlp_obj = 0.0;
  double plp_obj_mean = 0.0;
  SolveStatus milp_status = SolveStatus::optimal;
  SolveStatus lp_status = SolveStatus::optimal;
};

// MILP vs relaxed-plus-rounding comparison on one instance. plp_obj_mean
// averages prob_samples rounding draws from rng.
RoundingRow rounding_study_row(const StudyInstance& inst, int prob_samples, long node_limit,
                               std::mt19937_64& rng);

}  // namespace mlb
