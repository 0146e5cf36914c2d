#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mlb/balancer.hpp"

using namespace mlb;

namespace {

struct Instance {
  std::vector<UeState> ues;
  std::vector<Band> bands;
  RateMatrix rates;
  LoadSample expected;
  AssignmentMatrix previous;
  BalancerConfig cfg;
};

// Deterministic synthetic cell: camped on the first two bands, loads heavy
// enough that camping leaves the remaining bands idle (LBI well below 0.8).
Instance make_instance(std::size_t u_count, std::size_t b_count, unsigned seed,
                       double r_min = 5e5) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cqi(3, 15);
  std::uniform_real_distribution<double> qual(-15.0, -3.0);
  const double widths[] = {20e6, 10e6, 5e6, 10e6};
  const int prbs[] = {100, 50, 25, 50};

  Instance inst;
  for (std::size_t b = 0; b < b_count; ++b)
    inst.bands.push_back({static_cast<int>(b), widths[b % 4], prbs[b % 4], 1});
  auto caps = band_ue_caps(inst.bands, u_count, 1.2);
  for (std::size_t b = 0; b < b_count; ++b) inst.bands[b].ue_cap = caps[b];

  inst.rates.rates = Mat(u_count, b_count);
  inst.expected.per_band_loads = Mat(u_count, b_count);
  inst.expected.incurred_loads.assign(b_count, 0.0);
  std::vector<int> camp(u_count);
  for (std::size_t u = 0; u < u_count; ++u) {
    UeState ue;
    ue.id = static_cast<int>(u);
    ue.mean_arrival_rate = 50.0;
    ue.packet_size_bits = 12000.0;
    for (std::size_t b = 0; b < b_count; ++b) ue.channel_quality_db.push_back(qual(rng));
    for (std::size_t b = 0; b < b_count; ++b) {
      double rate = cqi_efficiency(cqi(rng)) * inst.bands[b].bandwidth_hz;
      inst.rates.rates(u, b) = rate;
      inst.expected.per_band_loads(u, b) =
          ue.mean_arrival_rate * ue.packet_size_bits / rate;
    }
    camp[u] = ue.channel_quality_db[1] > ue.channel_quality_db[0] ? 1 : 0;
    ue.current_band = camp[u];
    inst.ues.push_back(std::move(ue));
  }
  inst.previous = AssignmentMatrix::hard_from_bands(camp, b_count);
  inst.cfg.r_min = r_min;
  inst.cfg.w = 0.4;
  return inst;
}

LoadWindow single_sample_window(const LoadSample& s) {
  LoadWindow w(8);
  w.push(s);
  return w;
}

// Exhaustive oracle over all B^U hard assignments for the scalarized
// objective pmlb_step optimizes.
double brute_force_pmlb(const Instance& inst, const std::vector<int>& caps) {
  const std::size_t u_count = inst.ues.size(), b_count = inst.bands.size();
  double t_max = 0.0;
  for (std::size_t u = 0; u < u_count; ++u) {
    double m = 0.0;
    for (std::size_t b = 0; b < b_count; ++b)
      m = std::max(m, inst.expected.per_band_loads(u, b));
    t_max += m;
  }
  double best = kInf;
  std::vector<std::size_t> assign(u_count, 0);
  while (true) {
    bool ok = true;
    std::vector<int> counts(b_count, 0);
    for (std::size_t u = 0; u < u_count && ok; ++u) {
      ++counts[assign[u]];
      if (inst.rates.rates(u, assign[u]) < inst.cfg.r_min) ok = false;
    }
    for (std::size_t b = 0; b < b_count && ok; ++b)
      if (counts[b] > caps[b]) ok = false;
    if (ok) {
      double worst = 0.0;
      for (std::size_t b = 0; b < b_count; ++b) {
        double acc = 0.0;
        for (std::size_t u = 0; u < u_count; ++u)
          if (assign[u] == b) acc += inst.expected.per_band_loads(u, b);
        worst = std::max(worst, acc);
      }
      double moved = 0.0;
      for (std::size_t u = 0; u < u_count; ++u)
        if (inst.previous.entries(u, assign[u]) < 0.5) moved += 2.0;
      double obj = inst.cfg.w * worst / t_max +
                   (1.0 - inst.cfg.w) * moved / (2.0 * static_cast<double>(u_count));
      best = std::min(best, obj);
    }
    std::size_t k = 0;
    while (k < u_count && ++assign[k] == b_count) assign[k++] = 0;
    if (k == u_count) break;
  }
  return best;
}

}  // namespace

TEST_CASE("prefilter keeps satisfiable UEs") {
  auto inst = make_instance(5, 3, 1);
  auto res = prefilter_infeasible(inst.ues, inst.rates, inst.expected, inst.cfg.r_min);
  CHECK(res.fixed.empty());
  CHECK(res.remaining.size() == 5);
  for (double v : res.incurred) CHECK(v == 0.0);
}

TEST_CASE("prefilter pins a hopeless UE to its best-quality band") {
  auto inst = make_instance(4, 3, 2);
  double r_min = inst.cfg.r_min;
  for (std::size_t b = 0; b < 3; ++b) inst.rates.rates(1, b) = 0.5 * r_min;
  inst.ues[1].channel_quality_db = {-12.0, -9.0, -4.0};  // band 2 best
  auto res = prefilter_infeasible(inst.ues, inst.rates, inst.expected, r_min);
  REQUIRE(res.fixed.size() == 1);
  CHECK(res.fixed[0].first == 1);
  CHECK(res.fixed[0].second == 2);
  CHECK(res.incurred[2] == doctest::Approx(inst.expected.per_band_loads(1, 2)));
  CHECK(res.remaining.size() == 3);
}

TEST_CASE("prefilter quality ties pick the lowest band index") {
  auto inst = make_instance(3, 3, 3);
  for (std::size_t b = 0; b < 3; ++b) inst.rates.rates(0, b) = 0.1 * inst.cfg.r_min;
  inst.ues[0].channel_quality_db = {-7.0, -7.0, -7.0};
  auto res = prefilter_infeasible(inst.ues, inst.rates, inst.expected, inst.cfg.r_min);
  REQUIRE(res.fixed.size() == 1);
  CHECK(res.fixed[0].second == 0);
}

TEST_CASE("prefilter conservation of incurred load") {
  auto inst = make_instance(8, 4, 4);
  for (std::size_t b = 0; b < 4; ++b) {
    inst.rates.rates(2, b) = 0.3 * inst.cfg.r_min;
    inst.rates.rates(5, b) = 0.4 * inst.cfg.r_min;
  }
  auto res = prefilter_infeasible(inst.ues, inst.rates, inst.expected, inst.cfg.r_min);
  REQUIRE(res.fixed.size() == 2);
  double incurred_total = 0.0;
  for (double v : res.incurred) incurred_total += v;
  double expected_total = 0.0;
  for (auto& [u, b] : res.fixed)
    expected_total += inst.expected.per_band_loads(static_cast<std::size_t>(u), static_cast<std::size_t>(b));
  CHECK(incurred_total == doctest::Approx(expected_total).epsilon(1e-12));
}

TEST_CASE("estimate_expected_loads averages the window") {
  LoadSample a;
  a.per_band_loads = Mat(1, 1, 0.2);
  a.incurred_loads = {0.0};
  a.timestamp = 0.0;
  LoadSample b = a;
  b.per_band_loads(0, 0) = 0.4;
  b.timestamp = 1.0;

  LoadWindow w(4);
  w.push(a);
  LoadSample single = estimate_expected_loads(w);
  CHECK(single.per_band_loads(0, 0) == doctest::Approx(0.2));

  w.push(b);
  LoadSample mean = estimate_expected_loads(w);
  CHECK(mean.per_band_loads(0, 0) == doctest::Approx(0.3));

  LoadWindow constant(8);
  for (int i = 0; i < 5; ++i) {
    LoadSample s = a;
    s.timestamp = i;
    constant.push(s);
  }
  CHECK(estimate_expected_loads(constant).per_band_loads(0, 0) == doctest::Approx(0.2));

  LoadWindow empty(4);
  CHECK_THROWS_AS(estimate_expected_loads(empty), std::invalid_argument);
}

TEST_CASE("load window honors capacity and time order") {
  LoadWindow w(2);
  for (int i = 0; i < 5; ++i) {
    LoadSample s;
    s.per_band_loads = Mat(1, 1, static_cast<double>(i));
    s.incurred_loads = {0.0};
    s.timestamp = i;
    w.push(s);
  }
  CHECK(w.size() == 2);
  CHECK(w.samples().front().timestamp == 3.0);
  LoadSample stale;
  stale.per_band_loads = Mat(1, 1, 0.0);
  stale.incurred_loads = {0.0};
  stale.timestamp = 0.0;
  CHECK_THROWS_AS(w.push(stale), std::invalid_argument);
}

TEST_CASE("build_lp census for U=2 B=2") {
  auto inst = make_instance(2, 2, 5);
  auto caps = band_ue_caps(inst.bands, 2, inst.cfg.ue_cap_factor);
  auto built = build_lp(inst.expected, {0.0, 0.0}, inst.rates, inst.previous, caps, inst.cfg);
  CHECK(built.prog.num_vars == 10);  // 4 x, 4 y, t, y
  CHECK(built.prog.eq_constraints.size() == 3);        // 2 simplex + tie
  CHECK(built.prog.ineq_constraints.size() == 14);     // 2 rate + 2 cap + 2 epigraph + 8 abs
  CHECK(built.prog.lower[built.x_index(1, 1)] == 0.0);
  CHECK(built.prog.upper[built.x_index(1, 1)] == 1.0);
  CHECK(built.prog.upper[built.t_index()] == kInf);

  // epigraph rows with zero incurred load have rhs 0
  for (std::size_t b = 0; b < 2; ++b)
    CHECK(built.prog.ineq_constraints[4 + b].rhs == 0.0);
}

TEST_CASE("build_lp weight extremes shape the objective") {
  auto inst = make_instance(3, 2, 6);
  auto caps = band_ue_caps(inst.bands, 3, inst.cfg.ue_cap_factor);
  inst.cfg.w = 1.0;
  auto built = build_lp(inst.expected, {0.0, 0.0}, inst.rates, inst.previous, caps, inst.cfg);
  CHECK(built.prog.objective[built.y_index()] == 0.0);
  CHECK(built.prog.objective[built.t_index()] > 0.0);
  inst.cfg.w = 0.0;
  auto built0 = build_lp(inst.expected, {0.0, 0.0}, inst.rates, inst.previous, caps, inst.cfg);
  CHECK(built0.prog.objective[built0.t_index()] == 0.0);
}

TEST_CASE("probabilistic rounding of degenerate rows is the argmax") {
  auto inst = make_instance(4, 3, 7);
  AssignmentMatrix dist;
  dist.mode = AssignMode::stochastic;
  dist.entries = Mat(4, 3, 0.0);
  dist.entries(0, 2) = 1.0;
  dist.entries(1, 0) = 1.0;
  dist.entries(2, 1) = 1.0;
  dist.entries(3, 2) = 1.0;
  std::vector<int> caps{2, 2, 2};  // admits the sampled assignment outright
  std::mt19937_64 rng(1);
  auto hard = round_probabilistic(dist, inst.rates, caps, inst.cfg, rng);
  CHECK(hard.band_of(0) == 2);
  CHECK(hard.band_of(1) == 0);
  CHECK(hard.band_of(2) == 1);
  CHECK(hard.band_of(3) == 2);
}

TEST_CASE("probabilistic rounding follows the distribution") {
  auto inst = make_instance(1, 2, 8);
  AssignmentMatrix dist;
  dist.mode = AssignMode::stochastic;
  dist.entries = Mat(1, 2, 0.5);
  std::vector<int> caps{2, 2};
  std::mt19937_64 rng(42);
  int band1 = 0;
  const int trials = 100000;
  for (int i = 0; i < trials; ++i) {
    auto hard = round_probabilistic(dist, inst.rates, caps, inst.cfg, rng);
    band1 += hard.band_of(0) == 1;
  }
  // within 1% of one half
  CHECK(static_cast<double>(band1) / trials == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("rounding repair moves exactly one UE off an overfull band") {
  auto inst = make_instance(3, 2, 9);
  AssignmentMatrix dist;
  dist.mode = AssignMode::stochastic;
  dist.entries = Mat(3, 2, 0.0);
  for (std::size_t u = 0; u < 3; ++u) dist.entries(u, 1) = 1.0;  // every sample lands on band 1
  std::vector<int> caps{3, 2};
  std::mt19937_64 rng(5);
  auto hard = round_probabilistic(dist, inst.rates, caps, inst.cfg, rng);
  auto counts = hard.band_counts();
  CHECK(counts[1] == 2);
  CHECK(counts[0] == 1);
  for (std::size_t u = 0; u < 3; ++u)
    CHECK(inst.rates.rates(u, static_cast<std::size_t>(hard.band_of(u))) >= inst.cfg.r_min);
}

TEST_CASE("rounding repair failure carries the violating band") {
  auto inst = make_instance(3, 2, 10);
  AssignmentMatrix dist;
  dist.mode = AssignMode::stochastic;
  dist.entries = Mat(3, 2, 0.0);
  for (std::size_t u = 0; u < 3; ++u) dist.entries(u, 1) = 1.0;
  std::vector<int> caps{0, 2};  // nowhere to push the third UE
  std::mt19937_64 rng(5);
  CHECK_THROWS_AS(round_probabilistic(dist, inst.rates, caps, inst.cfg, rng), RoundingError);
}

TEST_CASE("deterministic rounding argmax and parity ties") {
  auto inst = make_instance(4, 2, 11);
  AssignmentMatrix dist;
  dist.mode = AssignMode::stochastic;
  dist.entries = Mat(4, 2, 0.5);
  auto caps = std::vector<int>{4, 4};
  auto hard = round_deterministic(dist, inst.rates, caps, inst.cfg);
  CHECK(hard.band_of(0) == 0);
  CHECK(hard.band_of(1) == 1);
  CHECK(hard.band_of(2) == 0);
  CHECK(hard.band_of(3) == 1);

  AssignmentMatrix skew;
  skew.mode = AssignMode::stochastic;
  skew.entries = Mat(1, 2, 0.0);
  skew.entries(0, 0) = 0.9;
  skew.entries(0, 1) = 0.1;
  CHECK(round_deterministic(skew, make_instance(1, 2, 12).rates, caps, inst.cfg).band_of(0) == 0);

  auto already = AssignmentMatrix::hard_from_bands({1, 0, 1}, 2);
  auto as_dist = already;
  as_dist.mode = AssignMode::stochastic;
  auto rehard = round_deterministic(as_dist, make_instance(3, 2, 13).rates, caps, inst.cfg);
  CHECK(rehard.entries == already.entries);
}

TEST_CASE("pmlb_step does nothing when loads are balanced") {
  auto inst = make_instance(4, 2, 14);
  for (auto& v : inst.expected.per_band_loads.data()) v = 0.1;
  inst.previous = AssignmentMatrix::hard_from_bands({0, 1, 0, 1}, 2);  // equal split
  std::mt19937_64 rng(1);
  auto window = single_sample_window(inst.expected);
  auto d = pmlb_step(window, inst.previous, inst.ues, inst.rates, inst.bands, inst.cfg, rng);
  CHECK_FALSE(d.triggered);
  CHECK(d.handover_count == 0);
  CHECK(d.new_assignment.entries == inst.previous.entries);
}

TEST_CASE("pmlb_step with milp rounding matches exhaustive enumeration") {
  for (unsigned seed : {21u, 22u, 23u}) {
    auto inst = make_instance(6, 3, seed);
    inst.cfg.rounding = Rounding::milp;
    auto caps = band_ue_caps(inst.bands, 6, inst.cfg.ue_cap_factor);
    std::mt19937_64 rng(3);
    auto window = single_sample_window(inst.expected);
    auto d = pmlb_step(window, inst.previous, inst.ues, inst.rates, inst.bands, inst.cfg, rng);
    REQUIRE(d.triggered);
    REQUIRE(d.lp_feasible);
    REQUIRE(d.prefiltered.empty());
    double got = inst.cfg.w * d.objective_parts.first +
                 (1.0 - inst.cfg.w) * d.objective_parts.second;
    double oracle = brute_force_pmlb(inst, caps);
    CHECK(got == doctest::Approx(oracle).epsilon(1e-9));
  }
}

TEST_CASE("pmlb_step with w=0 keeps everyone in place") {
  auto inst = make_instance(6, 3, 24);
  inst.cfg.w = 0.0;
  std::mt19937_64 rng(9);
  auto window = single_sample_window(inst.expected);
  auto d = pmlb_step(window, inst.previous, inst.ues, inst.rates, inst.bands, inst.cfg, rng);
  REQUIRE(d.triggered);
  CHECK(d.handover_count == 0);
  CHECK(d.new_assignment.entries == inst.previous.entries);
}

TEST_CASE("pmlb_step output satisfies every hard constraint") {
  for (unsigned seed : {31u, 32u, 33u, 34u}) {
    auto inst = make_instance(12, 4, seed);
    std::mt19937_64 rng(seed);
    auto window = single_sample_window(inst.expected);
    auto d = pmlb_step(window, inst.previous, inst.ues, inst.rates, inst.bands, inst.cfg, rng);
    REQUIRE(d.lp_feasible);
    d.new_assignment.validate();
    d.distributions.validate();
    auto caps = band_ue_caps(inst.bands, 12, inst.cfg.ue_cap_factor);
    auto counts = d.new_assignment.band_counts();
    std::vector<bool> is_prefiltered(12, false);
    for (auto& [u, b] : d.prefiltered) is_prefiltered[static_cast<std::size_t>(u)] = true;
    for (std::size_t b = 0; b < 4; ++b) CHECK(counts[b] <= caps[b]);
    for (std::size_t u = 0; u < 12; ++u) {
      if (is_prefiltered[u]) continue;
      CHECK(inst.rates.rates(u, static_cast<std::size_t>(d.new_assignment.band_of(u))) >=
            inst.cfg.r_min);
    }
    CHECK(d.handover_count ==
          static_cast<int>(objective_f2(d.new_assignment, inst.previous) / 2.0));
  }
}

TEST_CASE("no-mlb baseline camps on the first two bands") {
  auto inst = make_instance(6, 4, 41);
  auto a = baseline_no_mlb(inst.ues, inst.rates);
  for (std::size_t u = 0; u < 6; ++u) {
    CHECK(a.entries(u, 2) == 0.0);
    CHECK(a.entries(u, 3) == 0.0);
  }
  inst.ues[0].channel_quality_db = {10.0, 3.0, 99.0, 99.0};
  auto b = baseline_no_mlb(inst.ues, inst.rates);
  CHECK(b.band_of(0) == 0);
  auto c = baseline_no_mlb(inst.ues, inst.rates);
  CHECK(b.entries == c.entries);
}

TEST_CASE("a2 baseline moves only UEs below threshold") {
  auto inst = make_instance(5, 3, 42);
  for (auto& ue : inst.ues) ue.channel_quality_db = {-5.0, -6.0, -7.0};
  auto prev = AssignmentMatrix::hard_from_bands({0, 0, 1, 1, 2}, 3);
  auto same = baseline_a2_mlb(inst.ues, inst.rates, prev, -14.0);
  CHECK(same.entries == prev.entries);

  inst.ues[2].channel_quality_db = {-9.0, -18.0, -4.0};  // serving band 1 below -14
  auto moved = baseline_a2_mlb(inst.ues, inst.rates, prev, -14.0);
  CHECK(moved.band_of(2) == 2);  // best other band
  for (std::size_t u : {0ul, 1ul, 3ul, 4ul}) CHECK(moved.band_of(u) == prev.band_of(u));

  auto never = baseline_a2_mlb(inst.ues, inst.rates, prev, -kInf);
  CHECK(never.entries == prev.entries);
}

TEST_CASE("rule-based baseline gates on the load gap") {
  auto inst = make_instance(8, 3, 43);
  std::mt19937_64 rng(1);

  LoadSample flat;
  flat.per_band_loads = Mat(8, 3, 0.01);
  flat.incurred_loads = {0.0, 0.0, 0.0};
  auto balanced = baseline_rule_based(inst.ues, flat, inst.rates, inst.previous, rng, {});
  CHECK(balanced.entries == inst.previous.entries);

  RuleBasedParams zero_pool;
  zero_pool.pool_size = 0;
  auto untouched =
      baseline_rule_based(inst.ues, inst.expected, inst.rates, inst.previous, rng, zero_pool);
  CHECK(untouched.entries == inst.previous.entries);

  std::mt19937_64 r1(7), r2(7);
  auto a = baseline_rule_based(inst.ues, inst.expected, inst.rates, inst.previous, r1, {});
  auto b = baseline_rule_based(inst.ues, inst.expected, inst.rates, inst.previous, r2, {});
  CHECK(a.entries == b.entries);
}

TEST_CASE("lp optimum at w=0 has zero movement slack") {
  auto inst = make_instance(5, 3, 44);
  inst.cfg.w = 0.0;
  auto caps = band_ue_caps(inst.bands, 5, inst.cfg.ue_cap_factor);
  auto built = build_lp(inst.expected, {0.0, 0.0, 0.0}, inst.rates, inst.previous, caps, inst.cfg);
  auto sol = solve_lp(built.prog);
  REQUIRE(sol.status == SolveStatus::optimal);
  CHECK(sol.values[built.y_index()] <= 1e-6);
  for (std::size_t u = 0; u < 5; ++u)
    for (std::size_t b = 0; b < 3; ++b)
      CHECK(std::abs(sol.values[built.x_index(u, b)] - inst.previous.entries(u, b)) <= 1e-6);
}
