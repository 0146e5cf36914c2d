#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "mlb/kpi.hpp"
#include "mlb/sim.hpp"

using namespace mlb;

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig cfg;
  cfg.name = "unit";
  cfg.bands = default_bands();
  cfg.n_ues_per_cell = 24;
  cfg.inter_arrival_ms = 20.0;
  cfg.sim_duration = 60.0;
  cfg.step = 0.1;
  cfg.seed = 11;
  cfg.balancer.delta_t = 10.0;
  cfg.balancer.r_min = 5e5;
  return cfg;
}

ChannelState flat_channel(std::size_t u, std::size_t b, int base) {
  ChannelState ch;
  ch.mean_sinr_db = Mat(u, b, 40.0);
  ch.base_cqi.assign(u * b, base);
  ch.cur_cqi.assign(u * b, base);
  return ch;
}

}  // namespace

TEST_CASE("rates are discrete table values times bandwidth") {
  CHECK(cqi_efficiency(15) * 20e6 == doctest::Approx(111.094e6).epsilon(1e-3));

  auto bands = default_bands();
  ChannelState ch = flat_channel(6, bands.size(), 8);
  std::mt19937_64 rng(3);
  for (int step = 0; step < 200; ++step) {
    RateMatrix r = realize_rates(ch, bands, rng);
    for (std::size_t u = 0; u < 6; ++u) {
      for (std::size_t b = 0; b < bands.size(); ++b) {
        bool member = false;
        for (int cqi = 1; cqi <= kNumCqiLevels; ++cqi)
          member |= r.rates(u, b) == cqi_efficiency(cqi) * bands[b].bandwidth_hz;
        CHECK(member);
      }
    }
  }
}

TEST_CASE("realize_rates deterministic for equal seeds") {
  auto bands = default_bands();
  ChannelState a = flat_channel(4, bands.size(), 9), b = flat_channel(4, bands.size(), 9);
  std::mt19937_64 ra(42), rb(42);
  for (int i = 0; i < 50; ++i) {
    RateMatrix ma = realize_rates(a, bands, ra);
    RateMatrix mb = realize_rates(b, bands, rb);
    CHECK(ma.rates == mb.rates);
  }
}

TEST_CASE("cqi walk marginal is uniform over its reflected window") {
  auto bands = std::vector<Band>{{0, 20e6, 100, 1}};
  ChannelState ch = flat_channel(1, 1, 8);  // window [6,10], five states
  std::mt19937_64 rng(17);
  std::map<int, long> hist;
  const long steps = 200000;
  for (long i = 0; i < steps; ++i) {
    realize_rates(ch, bands, rng);
    ++hist[ch.cur_cqi[0]];
  }
  CHECK(hist.size() == 5);
  double tv = 0.0;
  for (auto [cqi, count] : hist) {
    CHECK(cqi >= 6);
    CHECK(cqi <= 10);
    tv += std::abs(static_cast<double>(count) / steps - 0.2);
  }
  CHECK(tv / 2.0 <= 0.02);

  // window clipped at the table edge
  ChannelState edge = flat_channel(1, 1, 15);
  std::map<int, long> edge_hist;
  for (long i = 0; i < 50000; ++i) {
    realize_rates(edge, bands, rng);
    ++edge_hist[edge.cur_cqi[0]];
  }
  for (auto [cqi, count] : edge_hist) {
    CHECK(cqi >= 13);
    CHECK(cqi <= 15);
  }
}

TEST_CASE("apply_handovers counts changed rows") {
  auto a = AssignmentMatrix::hard_from_bands({0, 1, 2, 3}, 4);
  auto same = apply_handovers(a, a);
  CHECK(same.count == 0);
  CHECK(same.moved.empty());

  auto b = AssignmentMatrix::hard_from_bands({1, 1, 2, 0}, 4);
  auto res = apply_handovers(a, b);
  CHECK(res.count == 2);
  CHECK(res.moved == std::vector<int>{0, 3});
  CHECK(res.count * 50.0 == 100.0);  // 50 ms per move
}

TEST_CASE("pf gives a lone UE min(backlog, rate*step)") {
  auto served = pf_serve_band({1e6}, {1e5}, {30000.0}, 0.1);
  CHECK(served[0] == doctest::Approx(30000.0));  // backlog-limited
  served = pf_serve_band({1e6}, {1e5}, {500000.0}, 0.1);
  CHECK(served[0] == doctest::Approx(1e5));  // capacity-limited
}

TEST_CASE("pf splits equally between identical UEs and fills leftover time") {
  auto served = pf_serve_band({2e6, 2e6}, {1e5, 1e5}, {1e6, 1e6}, 0.1);
  CHECK(served[0] == doctest::Approx(served[1]));
  CHECK(served[0] + served[1] == doctest::Approx(2e6 * 0.1 / 2 * 2).epsilon(1e-9));

  // one tiny backlog frees time for the other
  served = pf_serve_band({2e6, 2e6}, {1e5, 1e5}, {1000.0, 1e9}, 0.1);
  CHECK(served[0] == doctest::Approx(1000.0));
  CHECK(served[1] == doctest::Approx(2e6 * 0.1 - 1000.0 * 1.0).epsilon(1e-6));

  // higher historical throughput lowers priority
  served = pf_serve_band({2e6, 2e6}, {1e6, 1e5}, {1e9, 1e9}, 0.1);
  CHECK(served[0] < served[1]);

  CHECK(pf_serve_band({}, {}, {}, 0.1).empty());
}

TEST_CASE("no arrivals and no backlog serve nothing") {
  ScenarioConfig cfg = small_scenario();
  cfg.inter_arrival_ms = 1e9;  // effectively no traffic
  CellSim sim(cfg, 1);
  for (int i = 0; i < 20; ++i) {
    StepRecord rec = sim.step();
    for (double s : rec.served_bits) CHECK(s == 0.0);
  }
}

TEST_CASE("conservation and capacity invariants hold over an episode") {
  ScenarioConfig cfg = small_scenario();
  CellSim sim(cfg, 5);
  const std::size_t u_count = static_cast<std::size_t>(cfg.n_ues_per_cell);
  std::vector<double> prev_backlog(u_count, 0.0);
  for (int i = 0; i < 400; ++i) {
    StepRecord rec = sim.step();
    const auto& asn = sim.assignment();
    std::vector<double> band_served(cfg.bands.size(), 0.0);
    std::vector<double> band_max_rate(cfg.bands.size(), 0.0);
    for (std::size_t u = 0; u < u_count; ++u) {
      CHECK(rec.served_bits[u] >= 0.0);
      CHECK(rec.backlog_bits[u] >= -1e-9);
      // arrivals reconstructed from the backlog recursion are nonnegative
      double arrivals = rec.backlog_bits[u] - prev_backlog[u] + rec.served_bits[u];
      CHECK(arrivals >= -1e-6);
      prev_backlog[u] = rec.backlog_bits[u];
      std::size_t b = static_cast<std::size_t>(asn.band_of(u));
      band_served[b] += rec.served_bits[u];
      band_max_rate[b] = std::max(band_max_rate[b], sim.last_rates()(u, b));
    }
    for (std::size_t b = 0; b < cfg.bands.size(); ++b)
      CHECK(band_served[b] <= band_max_rate[b] * cfg.step + 1e-6);
  }
}

TEST_CASE("interruption accounting is exact and moved UEs sit out") {
  ScenarioConfig cfg = small_scenario();
  cfg.ho_interruption_ms = 200.0;  // spans two steps
  CellSim sim(cfg, 9);
  long total_steps = static_cast<long>(cfg.sim_duration / cfg.step);
  long boundary = std::lround(cfg.balancer.delta_t / cfg.step);
  long ho_total = 0;
  double interruption_total = 0.0;
  std::vector<int> prev_bands;
  for (long i = 0; i < total_steps; ++i) {
    std::vector<int> before;
    for (std::size_t u = 0; u < sim.ues().size(); ++u)
      before.push_back(sim.assignment().band_of(u));
    StepRecord rec = sim.step();
    ho_total += rec.handovers;
    interruption_total += rec.interruption_ms;
    CHECK(rec.interruption_ms == rec.handovers * cfg.ho_interruption_ms);
    if (i % boundary == 0 && i > 0 && rec.handovers > 0) {
      for (std::size_t u = 0; u < before.size(); ++u) {
        if (sim.assignment().band_of(u) != before[u]) CHECK(rec.served_bits[u] == 0.0);
      }
    }
  }
  CHECK(interruption_total == static_cast<double>(ho_total) * cfg.ho_interruption_ms);
  CHECK(ho_total > 0);  // the unbalanced start must trigger at least one move
}

TEST_CASE("run_episode with zero duration yields an empty report") {
  ScenarioConfig cfg = small_scenario();
  cfg.sim_duration = 0.0;
  KpiReport r = run_episode(cfg);
  CHECK(r.windows.empty());
  CHECK(r.aggregates().ho_count == 0);
}

TEST_CASE("no_mlb episode never hands over") {
  ScenarioConfig cfg = small_scenario();
  cfg.algorithm = Algorithm::no_mlb;
  KpiReport r = run_episode(cfg);
  CHECK(r.aggregates().ho_count == 0);
  for (const auto& w : r.windows) CHECK(w.ho_count == 0);
}

TEST_CASE("episodes are deterministic given the seed") {
  ScenarioConfig cfg = small_scenario();
  cfg.sim_duration = 30.0;
  KpiReport a = run_episode(cfg);
  KpiReport b = run_episode(cfg);
  CHECK(report_to_json(a) == report_to_json(b));
  CHECK(report_to_csv(a) == report_to_csv(b));

  cfg.seed = 999;
  KpiReport c = run_episode(cfg);
  CHECK(report_to_json(a) != report_to_json(c));
}

TEST_CASE("churn toggles activity without breaking the run") {
  ScenarioConfig cfg = small_scenario();
  cfg.sim_duration = 30.0;
  cfg.churn.arrival_per_s = 0.5;
  cfg.churn.mean_dwell_s = 10.0;
  KpiReport r = run_episode(cfg);
  CHECK_FALSE(r.windows.empty());
  for (const auto& w : r.windows) {
    CHECK(w.lbi >= 1.0 / static_cast<double>(cfg.bands.size()) - 1e-12);
    CHECK(w.lbi <= 1.0 + 1e-12);
  }
}

TEST_CASE("scenario validation names the offending field") {
  ScenarioConfig cfg = small_scenario();
  cfg.step = 0.0;
  CHECK_THROWS_WITH_AS(cfg.validate(), "scenario: step must be positive", std::invalid_argument);
  cfg = small_scenario();
  cfg.bands.clear();
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = small_scenario();
  cfg.balancer.w = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
