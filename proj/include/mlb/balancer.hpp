#pragma once

#include <deque>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mlb/lp.hpp"
#include "mlb/model.hpp"

namespace mlb {

enum class Rounding { probabilistic, deterministic, milp };

struct BalancerConfig {
  double w = 0.4;              // load-vs-handover objective weight
  double delta_t = 120.0;      // seconds between optimization checks
  double lbi_threshold = 0.8;  // rebalance when LBI drops below this
  double r_min = 1e6;          // bits/s minimum granted rate
  double ue_cap_factor = 1.2;  // beta; n_max scales with band resources
  Rounding rounding = Rounding::probabilistic;

  void validate() const;
};

// Per-band UE cap: ceil(beta * U * N_b / sum N_b).
std::vector<int> band_ue_caps(const std::vector<Band>& bands, std::size_t num_ues, double beta);

// Rolling store of the last delta_t worth of load samples.
class LoadWindow {
 public:
  explicit LoadWindow(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  void push(LoadSample sample);
  void clear() { samples_.clear(); }
  bool empty() const { return samples_.empty(); }
  std::size_t size() const { return samples_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::deque<LoadSample>& samples() const { return samples_; }

 private:
  std::size_t capacity_;
  std::deque<LoadSample> samples_;
};

struct PrefilterResult {
  std::vector<std::pair<int, int>> fixed;  // (ue index, band) pairs set by the quality rule
  std::vector<double> incurred;            // load added to each band by fixed UEs
  std::vector<int> remaining;              // UE indices that stay in the optimization
};

struct BalanceDecision {
  AssignmentMatrix new_assignment;              // hard
  AssignmentMatrix distributions;               // relaxed solution (rows are p_u)
  std::vector<std::pair<int, int>> prefiltered;
  int handover_count = 0;
  bool triggered = false;
  bool lp_feasible = true;
  std::pair<double, double> objective_parts{0.0, 0.0};  // (f1_norm, f2_norm)
};

// Thrown when rounding repair cannot restore feasibility.
struct RoundingError : std::runtime_error {
  explicit RoundingError(const std::string& msg, std::vector<int> bands)
      : std::runtime_error(msg), violating_bands(std::move(bands)) {}
  std::vector<int> violating_bands;
};

// UEs whose best achievable rate is below r_min are pinned to their
// best-quality band (lowest index wins ties) and leave the optimization set.
PrefilterResult prefilter_infeasible(const std::vector<UeState>& ues,
                                     const RateMatrix& rate_estimates,
                                     const LoadSample& expected_loads, double r_min);

// Arithmetic mean over the window. Throws on an empty window.
LoadSample estimate_expected_loads(const LoadWindow& window);

struct BuiltLp {
  LinearProgram prog;
  double t_max = 1.0;  // objective normalizer for the max-load slack
  double y_max = 1.0;  // objective normalizer for the movement slack
  std::size_t num_ues = 0, num_bands = 0;

  std::size_t x_index(std::size_t u, std::size_t b) const { return u * num_bands + b; }
  std::size_t t_index() const { return 2 * num_ues * num_bands; }
  std::size_t y_index() const { return 2 * num_ues * num_bands + 1; }
};

// Epigraph LP over the remaining UEs: variables x_ub, movement slacks y_ub,
// max-load slack t and total movement y; objective w*t/t_max + (1-w)*y/y_max.
// caps are the effective per-band UE limits after prefiltering.
BuiltLp build_lp(const LoadSample& expected, const std::vector<double>& incurred,
                 const RateMatrix& rates, const AssignmentMatrix& previous,
                 const std::vector<int>& caps, const BalancerConfig& cfg);

// Sample each UE's band from its distribution row, then repair n_max / r_min
// violations (smallest-mass UE moves to its best feasible alternative).
AssignmentMatrix round_probabilistic(const AssignmentMatrix& distributions,
                                     const RateMatrix& rates, const std::vector<int>& caps,
                                     const BalancerConfig& cfg, std::mt19937_64& rng);

// Per-row argmax; exact ties alternate with UE index parity. Same repair pass.
AssignmentMatrix round_deterministic(const AssignmentMatrix& distributions,
                                     const RateMatrix& rates, const std::vector<int>& caps,
                                     const BalancerConfig& cfg);

// One event-gated rebalancing pass: LBI check, prefilter, estimation, LP,
// rounding. Solver or repair failure falls back to the previous assignment
// with lp_feasible = false.
BalanceDecision pmlb_step(const LoadWindow& window, const AssignmentMatrix& previous,
                          const std::vector<UeState>& ues, const RateMatrix& rates,
                          const std::vector<Band>& bands, const BalancerConfig& cfg,
                          std::mt19937_64& rng);

// Camp on the better of the first two bands, never move.
AssignmentMatrix baseline_no_mlb(const std::vector<UeState>& ues, const RateMatrix& rates);

// Move a UE to its best other band when serving-band quality drops below the
// A2 threshold.
AssignmentMatrix baseline_a2_mlb(const std::vector<UeState>& ues, const RateMatrix& rates,
                                 const AssignmentMatrix& previous, double a2_threshold_db);

struct RuleBasedParams {
  double gap = 0.2;        // max-min band load spread that triggers moves
  int pool_size = -1;      // negative: ceil(0.05 * U)
  double q_min_db = -12.0; // A4-style target quality gate
};

// Random-pool rebalancing from the most loaded band toward lighter bands.
AssignmentMatrix baseline_rule_based(const std::vector<UeState>& ues, const LoadSample& loads,
                                     const RateMatrix& rates, const AssignmentMatrix& previous,
                                     std::mt19937_64& rng, const RuleBasedParams& params);

}  // namespace mlb
