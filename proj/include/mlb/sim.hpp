#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "mlb/balancer.hpp"
#include "mlb/model.hpp"

namespace mlb {

enum class Algorithm { pmlb, no_mlb, a2_mlb, rule_based };

const char* to_string(Algorithm a);
std::optional<Algorithm> algorithm_from_string(std::string_view name);

// Optional activity churn: UEs from a fixed pool detach (exponential dwell)
// and re-attach (Poisson). Disabled while arrival_per_s == 0.
struct ChurnConfig {
  double arrival_per_s = 0.0;
  double mean_dwell_s = 600.0;
};

struct ScenarioConfig {
  std::string name = "custom";
  int n_cells = 1;
  std::vector<Band> bands;
  int n_ues_per_cell = 100;
  double inter_arrival_ms = 20.0;    // 1 / lambda_u
  double packet_size_bytes = 1500.0;
  double sim_duration = 7200.0;      // seconds
  double step = 0.1;                 // seconds
  unsigned long seed = 1;
  BalancerConfig balancer;
  Algorithm algorithm = Algorithm::pmlb;
  double ho_interruption_ms = 50.0;
  ChurnConfig churn;

  void validate() const;  // throws std::invalid_argument naming the bad field
};

// Table-style defaults: bandwidths [20,10,5,10] MHz, PRBs [100,50,25,50].
std::vector<Band> default_bands();

// Named traffic mixes: A = (400 UEs, 20 ms), B = (400, 50 ms), C = (200, 50 ms).
ScenarioConfig named_scenario(char which);

// Uniform disc placement, log-distance path loss, shadowing that is mostly
// common across bands (correlated) plus fixed per-band propagation penalties.
// One row per UE, one column per band, dB.
Mat draw_mean_sinr(std::size_t u_count, std::size_t b_count, std::mt19937_64& rng);

// SINR to the RSRQ-like quality proxy the baselines and prefilter consume.
double sinr_to_quality_db(double sinr_db);

// Large-scale SINR fixed per episode; small-scale variation is a lazy +-1
// CQI random walk reflected inside [base-2, base+2] clipped to [1,15], whose
// stationary marginal is uniform over that window.
struct ChannelState {
  Mat mean_sinr_db;           // U x B
  std::vector<int> base_cqi;  // U*B, row-major
  std::vector<int> cur_cqi;   // U*B, row-major

  int cqi_at(std::size_t u, std::size_t b) const {
    return cur_cqi[u * mean_sinr_db.cols() + b];
  }
};

inline constexpr int kCqiJitterRadius = 2;

// One step of the CQI walk for every UE-band pair, then rate lookup.
RateMatrix realize_rates(ChannelState& channel, const std::vector<Band>& bands,
                         std::mt19937_64& rng);

struct StepRecord {
  double timestamp = 0.0;
  std::vector<double> served_bits;   // per UE
  std::vector<double> backlog_bits;  // per UE, after service
  std::vector<double> band_totals;   // assignment-masked arrival load fractions
  int handovers = 0;
  double interruption_ms = 0.0;
};

struct HandoverResult {
  int count = 0;
  std::vector<int> moved;  // UE indices that changed band
};

HandoverResult apply_handovers(const AssignmentMatrix& previous, const AssignmentMatrix& next);

// Proportional-fair split of one band-step: weights rate/ema, allocations
// capped by backlog, freed time redistributed. Returns served bits per pool
// entry.
std::vector<double> pf_serve_band(const std::vector<double>& rates_bps,
                                  const std::vector<double>& ema_bps,
                                  const std::vector<double>& backlog_bits, double step_s);

// Single-cell time-stepped simulator; proportional-fair service per band.
class CellSim {
 public:
  CellSim(const ScenarioConfig& cfg, unsigned long seed);

  // Advance one step: balance at delta_t boundaries, realize channel, draw
  // arrivals, serve, record.
  StepRecord step();

  const AssignmentMatrix& assignment() const { return assignment_; }
  const std::vector<UeState>& ues() const { return ues_; }
  const Mat& last_rates() const { return last_rates_; }

 private:
  void balance();
  RateMatrix rate_estimate() const;

  ScenarioConfig cfg_;
  std::vector<UeState> ues_;
  ChannelState channel_;
  AssignmentMatrix assignment_;
  LoadWindow window_;
  Mat rate_sum_;  // rolling sum aligned with window_
  std::deque<Mat> rate_window_;
  Mat last_rates_;
  std::vector<double> ema_bps_;
  std::vector<double> interruption_s_;
  std::vector<char> active_;
  std::mt19937_64 rng_;
  long step_index_ = 0;
  long steps_per_dt_ = 1;
  int pending_handovers_ = 0;
  double pending_interruption_ms_ = 0.0;
};

struct KpiReport;
KpiReport run_episode(const ScenarioConfig& cfg);

}  // namespace mlb
