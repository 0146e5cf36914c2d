#include "mlb/sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mlb/kpi.hpp"

namespace mlb {

namespace {

constexpr double kA2ThresholdDb = -14.0;
constexpr double kEmaAlpha = 0.1;
constexpr double kEmaInitBps = 1e5;
constexpr double kEmaFloorBps = 1e3;
constexpr double kQualityOffsetDb = -50.0;  // SINR -> RSRQ-like proxy
constexpr double kJitterDbPerCqi = 1.5;
// per-band propagation penalty on top of distance loss, dB
constexpr double kBandPenaltyDb[4] = {0.0, -4.0, -8.0, -4.0};
constexpr double kShadowCommonDb = 7.0;  // shared across bands
constexpr double kShadowBandDb = 3.0;    // per-band component

int sinr_to_cqi(double sinr_db) {
  int cqi = 1 + static_cast<int>(std::floor((sinr_db - 30.0) / 3.0));
  return std::clamp(cqi, 1, kNumCqiLevels);
}

}  // namespace

Mat draw_mean_sinr(std::size_t u_count, std::size_t b_count, std::mt19937_64& rng) {
  Mat sinr(u_count, b_count);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> common(0.0, kShadowCommonDb);
  std::normal_distribution<double> per_band(0.0, kShadowBandDb);
  for (std::size_t u = 0; u < u_count; ++u) {
    double dist_m = 10.0 + 90.0 * std::sqrt(unit(rng));
    double path_loss = 60.0 + 35.0 * std::log10(dist_m / 10.0);
    double shadow = common(rng);
    for (std::size_t b = 0; b < b_count; ++b)
      sinr(u, b) = 46.0 - path_loss + 85.0 + kBandPenaltyDb[b % 4] + shadow + per_band(rng);
  }
  return sinr;
}

double sinr_to_quality_db(double sinr_db) { return sinr_db + kQualityOffsetDb; }

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::pmlb: return "pmlb";
    case Algorithm::no_mlb: return "no_mlb";
    case Algorithm::a2_mlb: return "a2_mlb";
    case Algorithm::rule_based: return "rule_based";
  }
  return "unknown";
}

std::optional<Algorithm> algorithm_from_string(std::string_view name) {
  if (name == "pmlb") return Algorithm::pmlb;
  if (name == "no_mlb") return Algorithm::no_mlb;
  if (name == "a2_mlb") return Algorithm::a2_mlb;
  if (name == "rule_based") return Algorithm::rule_based;
  return std::nullopt;
}

void ScenarioConfig::validate() const {
  if (step <= 0.0) throw std::invalid_argument("scenario: step must be positive");
  if (sim_duration < 0.0) throw std::invalid_argument("scenario: sim_duration must be nonnegative");
  if (bands.empty()) throw std::invalid_argument("scenario: bands must be non-empty");
  for (const Band& b : bands) {
    if (b.bandwidth_hz <= 0.0) throw std::invalid_argument("scenario: bands.bandwidth_mhz must be positive");
    if (b.n_prb < 1) throw std::invalid_argument("scenario: bands.n_prb must be at least 1");
  }
  if (n_cells < 1) throw std::invalid_argument("scenario: n_cells must be at least 1");
  if (n_ues_per_cell < 1) throw std::invalid_argument("scenario: n_ues_per_cell must be at least 1");
  if (inter_arrival_ms <= 0.0) throw std::invalid_argument("scenario: inter_arrival_ms must be positive");
  if (packet_size_bytes <= 0.0) throw std::invalid_argument("scenario: packet_size_bytes must be positive");
  if (ho_interruption_ms < 0.0) throw std::invalid_argument("scenario: ho_interruption_ms must be nonnegative");
  if (churn.arrival_per_s < 0.0) throw std::invalid_argument("scenario: churn.arrival_per_s must be nonnegative");
  if (churn.mean_dwell_s <= 0.0) throw std::invalid_argument("scenario: churn.mean_dwell_s must be positive");
  try {
    balancer.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("scenario: ") + e.what());
  }
}

std::vector<Band> default_bands() {
  const double mhz[] = {20.0, 10.0, 5.0, 10.0};
  const int prb[] = {100, 50, 25, 50};
  std::vector<Band> bands;
  for (int i = 0; i < 4; ++i) bands.push_back({i, mhz[i] * 1e6, prb[i], 1});
  return bands;
}

ScenarioConfig named_scenario(char which) {
  ScenarioConfig cfg;
  cfg.bands = default_bands();
  switch (which) {
    case 'A':
    case 'a':
      cfg.name = "A";
      cfg.n_ues_per_cell = 400;
      cfg.inter_arrival_ms = 20.0;
      break;
    case 'B':
    case 'b':
      cfg.name = "B";
      cfg.n_ues_per_cell = 400;
      cfg.inter_arrival_ms = 50.0;
      break;
    case 'C':
    case 'c':
      cfg.name = "C";
      cfg.n_ues_per_cell = 200;
      cfg.inter_arrival_ms = 50.0;
      break;
    default:
      throw std::invalid_argument("scenario: unknown named scenario (use A, B or C)");
  }
  return cfg;
}

RateMatrix realize_rates(ChannelState& channel, const std::vector<Band>& bands,
                         std::mt19937_64& rng) {
  const std::size_t u_count = channel.mean_sinr_db.rows();
  const std::size_t b_count = channel.mean_sinr_db.cols();
  RateMatrix out{Mat(u_count, b_count)};
  std::uniform_int_distribution<int> move(0, 3);  // 1/4 down, 1/4 up, 1/2 stay
  for (std::size_t u = 0; u < u_count; ++u) {
    for (std::size_t b = 0; b < b_count; ++b) {
      std::size_t idx = u * b_count + b;
      int base = channel.base_cqi[idx];
      int lo = std::max(1, base - kCqiJitterRadius);
      int hi = std::min(kNumCqiLevels, base + kCqiJitterRadius);
      int cur = channel.cur_cqi[idx];
      int draw = move(rng);
      if (draw == 0 && cur > lo) --cur;
      if (draw == 1 && cur < hi) ++cur;
      channel.cur_cqi[idx] = cur;
      out.rates(u, b) = cqi_efficiency(cur) * bands[b].bandwidth_hz;
    }
  }
  return out;
}

HandoverResult apply_handovers(const AssignmentMatrix& previous, const AssignmentMatrix& next) {
  if (previous.num_ues() != next.num_ues() || previous.num_bands() != next.num_bands())
    throw std::invalid_argument("apply_handovers: dimension mismatch");
  HandoverResult res;
  for (std::size_t u = 0; u < previous.num_ues(); ++u) {
    if (previous.band_of(u) != next.band_of(u)) {
      ++res.count;
      res.moved.push_back(static_cast<int>(u));
    }
  }
  return res;
}

std::vector<double> pf_serve_band(const std::vector<double>& rates_bps,
                                  const std::vector<double>& ema_bps,
                                  const std::vector<double>& backlog_bits, double step_s) {
  const std::size_t n = rates_bps.size();
  if (ema_bps.size() != n || backlog_bits.size() != n)
    throw std::invalid_argument("pf_serve_band: length mismatch");
  std::vector<double> served(n, 0.0);
  std::vector<double> backlog = backlog_bits;
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < n; ++i)
    if (backlog[i] > 0.0 && rates_bps[i] > 0.0) pool.push_back(i);

  double remaining = step_s;
  while (!pool.empty() && remaining > 1e-12) {
    double weight_sum = 0.0;
    for (std::size_t i : pool) weight_sum += rates_bps[i] / std::max(ema_bps[i], kEmaFloorBps);
    double used = 0.0;
    std::vector<std::size_t> still_hungry;
    for (std::size_t i : pool) {
      double weight = rates_bps[i] / std::max(ema_bps[i], kEmaFloorBps);
      double alloc = remaining * weight / weight_sum;
      double bits = std::min(backlog[i], rates_bps[i] * alloc);
      served[i] += bits;
      backlog[i] -= bits;
      used += bits / rates_bps[i];
      if (backlog[i] > 1e-9) still_hungry.push_back(i);
    }
    remaining -= used;
    if (still_hungry.size() == pool.size()) break;  // band time fully consumed
    pool = std::move(still_hungry);
  }
  return served;
}

CellSim::CellSim(const ScenarioConfig& cfg, unsigned long seed)
    : cfg_(cfg), window_(1), rng_(seed) {
  cfg_.validate();
  const std::size_t u_count = static_cast<std::size_t>(cfg_.n_ues_per_cell);
  const std::size_t b_count = cfg_.bands.size();
  auto caps = band_ue_caps(cfg_.bands, u_count, cfg_.balancer.ue_cap_factor);
  for (std::size_t b = 0; b < b_count; ++b) cfg_.bands[b].ue_cap = caps[b];

  steps_per_dt_ = std::max(1l, std::lround(cfg_.balancer.delta_t / cfg_.step));
  window_ = LoadWindow(static_cast<std::size_t>(steps_per_dt_));

  channel_.mean_sinr_db = draw_mean_sinr(u_count, b_count, rng_);
  channel_.base_cqi.resize(u_count * b_count);
  channel_.cur_cqi.resize(u_count * b_count);
  const double lambda = 1000.0 / cfg_.inter_arrival_ms;
  for (std::size_t u = 0; u < u_count; ++u) {
    UeState ue;
    ue.id = static_cast<int>(u);
    ue.mean_arrival_rate = lambda;
    ue.packet_size_bits = cfg_.packet_size_bytes * 8.0;
    for (std::size_t b = 0; b < b_count; ++b) {
      double sinr = channel_.mean_sinr_db(u, b);
      std::size_t idx = u * b_count + b;
      channel_.base_cqi[idx] = sinr_to_cqi(sinr);
      channel_.cur_cqi[idx] = channel_.base_cqi[idx];
      ue.channel_quality_db.push_back(sinr_to_quality_db(sinr));
    }
    ues_.push_back(std::move(ue));
  }

  RateMatrix unused{Mat(u_count, b_count, 1.0)};
  assignment_ = baseline_no_mlb(ues_, unused);  // initial attach on the first two bands
  for (std::size_t u = 0; u < u_count; ++u) ues_[u].current_band = assignment_.band_of(u);

  rate_sum_ = Mat(u_count, b_count, 0.0);
  ema_bps_.assign(u_count, kEmaInitBps);
  interruption_s_.assign(u_count, 0.0);
  active_.assign(u_count, 1);
}

RateMatrix CellSim::rate_estimate() const {
  RateMatrix est{Mat(rate_sum_.rows(), rate_sum_.cols())};
  double inv = rate_window_.empty() ? 0.0 : 1.0 / static_cast<double>(rate_window_.size());
  for (std::size_t i = 0; i < rate_sum_.data().size(); ++i)
    est.rates.data()[i] = rate_sum_.data()[i] * inv;
  return est;
}

void CellSim::balance() {
  const std::size_t b_count = cfg_.bands.size();
  // refresh the measurement proxy with the current small-scale state
  for (std::size_t u = 0; u < ues_.size(); ++u) {
    for (std::size_t b = 0; b < b_count; ++b) {
      std::size_t idx = u * b_count + b;
      double jitter = kJitterDbPerCqi * (channel_.cur_cqi[idx] - channel_.base_cqi[idx]);
      ues_[u].channel_quality_db[b] = sinr_to_quality_db(channel_.mean_sinr_db(u, b) + jitter);
    }
  }
  RateMatrix est = rate_estimate();
  AssignmentMatrix next = assignment_;
  switch (cfg_.algorithm) {
    case Algorithm::pmlb: {
      BalanceDecision d =
          pmlb_step(window_, assignment_, ues_, est, cfg_.bands, cfg_.balancer, rng_);
      next = d.new_assignment;
      break;
    }
    case Algorithm::no_mlb:
      return;  // camp forever
    case Algorithm::a2_mlb:
      next = baseline_a2_mlb(ues_, est, assignment_, kA2ThresholdDb);
      break;
    case Algorithm::rule_based: {
      LoadSample expected = estimate_expected_loads(window_);
      next = baseline_rule_based(ues_, expected, est, assignment_, rng_, {});
      break;
    }
  }
  HandoverResult ho = apply_handovers(assignment_, next);
  assignment_ = next;
  for (int u : ho.moved) {
    interruption_s_[static_cast<std::size_t>(u)] = cfg_.ho_interruption_ms / 1000.0;
    ues_[static_cast<std::size_t>(u)].current_band = assignment_.band_of(static_cast<std::size_t>(u));
  }
  pending_handovers_ = ho.count;
  pending_interruption_ms_ = static_cast<double>(ho.count) * cfg_.ho_interruption_ms;
}

StepRecord CellSim::step() {
  const std::size_t u_count = ues_.size();
  const std::size_t b_count = cfg_.bands.size();
  const double now = static_cast<double>(step_index_) * cfg_.step;

  if (step_index_ > 0 && step_index_ % steps_per_dt_ == 0 && !window_.empty()) balance();

  StepRecord rec;
  rec.timestamp = now;
  rec.handovers = pending_handovers_;
  rec.interruption_ms = pending_interruption_ms_;
  pending_handovers_ = 0;
  pending_interruption_ms_ = 0.0;

  if (cfg_.churn.arrival_per_s > 0.0) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double leave_p = cfg_.step / cfg_.churn.mean_dwell_s;
    for (std::size_t u = 0; u < u_count; ++u) {
      if (active_[u] && unit(rng_) < leave_p) {
        active_[u] = 0;
        ues_[u].backlog_bits = 0.0;
      }
    }
    std::poisson_distribution<int> arrivals(cfg_.churn.arrival_per_s * cfg_.step);
    int joins = arrivals(rng_);
    for (int k = 0; k < joins; ++k) {
      std::vector<std::size_t> inactive;
      for (std::size_t u = 0; u < u_count; ++u)
        if (!active_[u]) inactive.push_back(u);
      if (inactive.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, inactive.size() - 1);
      std::size_t u = inactive[pick(rng_)];
      active_[u] = 1;
      ues_[u].backlog_bits = 0.0;
      ema_bps_[u] = kEmaInitBps;
    }
  }

  RateMatrix rates = realize_rates(channel_, cfg_.bands, rng_);
  last_rates_ = rates.rates;
  rate_window_.push_back(rates.rates);
  for (std::size_t i = 0; i < rate_sum_.data().size(); ++i)
    rate_sum_.data()[i] += rates.rates.data()[i];
  while (rate_window_.size() > static_cast<std::size_t>(steps_per_dt_)) {
    for (std::size_t i = 0; i < rate_sum_.data().size(); ++i)
      rate_sum_.data()[i] -= rate_window_.front().data()[i];
    rate_window_.pop_front();
  }

  LoadSample sample;
  sample.per_band_loads = Mat(u_count, b_count, 0.0);
  sample.incurred_loads.assign(b_count, 0.0);
  sample.timestamp = now;
  for (std::size_t u = 0; u < u_count; ++u) {
    if (!active_[u]) continue;
    double demand = sample_demand(ues_[u], rng_, cfg_.step);
    ues_[u].backlog_bits += demand;
    if (demand > 0.0)
      for (std::size_t b = 0; b < b_count; ++b)
        sample.per_band_loads(u, b) = demand / (rates.rates(u, b) * cfg_.step);
  }
  window_.push(sample);

  // proportional fair per band over schedulable backlogged UEs
  rec.served_bits.assign(u_count, 0.0);
  for (std::size_t b = 0; b < b_count; ++b) {
    std::vector<std::size_t> pool;
    for (std::size_t u = 0; u < u_count; ++u) {
      if (!active_[u] || interruption_s_[u] > 0.0) continue;
      if (assignment_.band_of(u) != static_cast<int>(b)) continue;
      if (ues_[u].backlog_bits <= 0.0) continue;
      pool.push_back(u);
    }
    if (pool.empty()) continue;
    std::vector<double> pool_rates, pool_ema, pool_backlog;
    for (std::size_t u : pool) {
      pool_rates.push_back(rates.rates(u, b));
      pool_ema.push_back(ema_bps_[u]);
      pool_backlog.push_back(ues_[u].backlog_bits);
    }
    std::vector<double> served = pf_serve_band(pool_rates, pool_ema, pool_backlog, cfg_.step);
    for (std::size_t k = 0; k < pool.size(); ++k) {
      rec.served_bits[pool[k]] += served[k];
      ues_[pool[k]].backlog_bits -= served[k];
    }
  }

  for (std::size_t u = 0; u < u_count; ++u) {
    if (!active_[u]) continue;
    ema_bps_[u] = (1.0 - kEmaAlpha) * ema_bps_[u] + kEmaAlpha * (rec.served_bits[u] / cfg_.step);
  }
  for (auto& s : interruption_s_) s = std::max(0.0, s - cfg_.step);

  rec.backlog_bits.resize(u_count);
  for (std::size_t u = 0; u < u_count; ++u) rec.backlog_bits[u] = ues_[u].backlog_bits;
  rec.band_totals.assign(b_count, 0.0);
  for (std::size_t u = 0; u < u_count; ++u)
    rec.band_totals[static_cast<std::size_t>(assignment_.band_of(u))] +=
        sample.per_band_loads(u, static_cast<std::size_t>(assignment_.band_of(u)));

  ++step_index_;
  return rec;
}

KpiReport run_episode(const ScenarioConfig& cfg) {
  cfg.validate();
  const long total_steps = static_cast<long>(std::floor(cfg.sim_duration / cfg.step + 1e-9));
  const long steps_per_window = std::max(1l, std::lround(cfg.balancer.delta_t / cfg.step));

  std::vector<std::vector<KpiWindow>> per_cell;
  for (int cell = 0; cell < cfg.n_cells; ++cell) {
    CellSim sim(cfg, cfg.seed + 7919ul * static_cast<unsigned long>(cell));
    std::vector<KpiWindow> windows;
    std::vector<StepRecord> buffer;
    for (long s = 0; s < total_steps; ++s) {
      buffer.push_back(sim.step());
      if (static_cast<long>(buffer.size()) == steps_per_window || s + 1 == total_steps) {
        windows.push_back(
            aggregate_window(buffer, static_cast<double>(buffer.size()) * cfg.step));
        buffer.clear();
      }
    }
    per_cell.push_back(std::move(windows));
  }

  KpiReport report;
  report.scenario = cfg.name;
  report.algorithm = to_string(cfg.algorithm);
  report.seed = cfg.seed;
  report.num_bands = cfg.bands.size();
  report.window_s = cfg.balancer.delta_t;
  if (!per_cell.empty()) {
    for (std::size_t w = 0; w < per_cell.front().size(); ++w) {
      std::vector<KpiWindow> same_window;
      for (const auto& cell : per_cell) same_window.push_back(cell[w]);
      report.windows.push_back(merge_windows(same_window));
    }
  }
  return report;
}

}  // namespace mlb
