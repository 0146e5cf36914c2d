#include "mlb/balancer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mlb {

namespace {

std::vector<double> band_totals(const AssignmentMatrix& assignment, const LoadSample& loads) {
  std::vector<double> totals(loads.num_bands(), 0.0);
  for (std::size_t b = 0; b < loads.num_bands(); ++b) {
    double acc = loads.incurred_loads.empty() ? 0.0 : loads.incurred_loads[b];
    for (std::size_t u = 0; u < loads.num_ues(); ++u)
      acc += assignment.entries(u, b) * loads.per_band_loads(u, b);
    totals[b] = acc;
  }
  return totals;
}

// Shared rounding repair. bands_of is mutated in place.
void repair_assignment(std::vector<int>& bands_of, const AssignmentMatrix& distributions,
                       const RateMatrix& rates, const std::vector<int>& caps,
                       const BalancerConfig& cfg, std::mt19937_64* rng) {
  const std::size_t u_count = bands_of.size();
  const std::size_t b_count = rates.num_bands();

  // minimum-rate violations first: move to a feasible band by mass
  for (std::size_t u = 0; u < u_count; ++u) {
    int b = bands_of[u];
    if (rates.rates(u, static_cast<std::size_t>(b)) >= cfg.r_min) continue;
    std::vector<std::size_t> feasible;
    for (std::size_t k = 0; k < b_count; ++k)
      if (rates.rates(u, k) >= cfg.r_min) feasible.push_back(k);
    if (feasible.empty()) throw RoundingError("no band satisfies r_min for ue", {b});
    if (rng) {
      double total = 0.0;
      for (std::size_t k : feasible) total += distributions.entries(u, k);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      double roll = unit(*rng) * total;
      std::size_t pick = feasible.back();
      for (std::size_t k : feasible) {
        roll -= distributions.entries(u, k);
        if (roll <= 0.0 || total == 0.0) {
          pick = k;
          break;
        }
      }
      bands_of[u] = static_cast<int>(pick);
    } else {
      std::size_t pick = feasible[0];
      for (std::size_t k : feasible)
        if (distributions.entries(u, k) > distributions.entries(u, pick)) pick = k;
      bands_of[u] = static_cast<int>(pick);
    }
  }

  // cardinality repair: lightest-mass UE leaves the overfull band
  std::vector<int> counts(b_count, 0);
  for (int b : bands_of) ++counts[static_cast<std::size_t>(b)];
  for (std::size_t b = 0; b < b_count; ++b) {
    while (counts[b] > caps[b]) {
      int pick_ue = -1;
      double pick_mass = kInf;
      for (std::size_t u = 0; u < u_count; ++u) {
        if (bands_of[u] != static_cast<int>(b)) continue;
        double mass = distributions.entries(u, b);
        if (mass < pick_mass) {
          pick_mass = mass;
          pick_ue = static_cast<int>(u);
        }
      }
      if (pick_ue < 0) throw RoundingError("band over cap with no movable ue", {static_cast<int>(b)});
      int target = -1;
      double target_mass = -1.0;
      for (std::size_t k = 0; k < b_count; ++k) {
        if (k == b || counts[k] >= caps[k]) continue;
        if (rates.rates(static_cast<std::size_t>(pick_ue), k) < cfg.r_min) continue;
        double mass = distributions.entries(static_cast<std::size_t>(pick_ue), k);
        if (mass > target_mass) {
          target_mass = mass;
          target = static_cast<int>(k);
        }
      }
      if (target < 0)
        throw RoundingError("no feasible band below cap for displaced ue", {static_cast<int>(b)});
      bands_of[static_cast<std::size_t>(pick_ue)] = target;
      --counts[b];
      ++counts[static_cast<std::size_t>(target)];
    }
  }
}

AssignmentMatrix copy_as_stochastic(const AssignmentMatrix& a) {
  AssignmentMatrix out = a;
  out.mode = AssignMode::stochastic;
  return out;
}

}  // namespace

void BalancerConfig::validate() const {
  if (w < 0.0 || w > 1.0) throw std::invalid_argument("balancer: w outside [0,1]");
  if (lbi_threshold <= 0.0 || lbi_threshold > 1.0)
    throw std::invalid_argument("balancer: lbi_threshold outside (0,1]");
  if (delta_t <= 0.0) throw std::invalid_argument("balancer: delta_t must be positive");
  if (r_min < 0.0) throw std::invalid_argument("balancer: r_min must be nonnegative");
  if (ue_cap_factor <= 0.0) throw std::invalid_argument("balancer: ue_cap_factor must be positive");
}

std::vector<int> band_ue_caps(const std::vector<Band>& bands, std::size_t num_ues, double beta) {
  double total_prb = 0.0;
  for (const Band& b : bands) total_prb += b.n_prb;
  std::vector<int> caps(bands.size(), 1);
  for (std::size_t i = 0; i < bands.size(); ++i) {
    double share = total_prb > 0.0 ? bands[i].n_prb / total_prb : 1.0 / bands.size();
    caps[i] = std::max(1, static_cast<int>(std::ceil(beta * static_cast<double>(num_ues) * share)));
  }
  return caps;
}

void LoadWindow::push(LoadSample sample) {
  if (!samples_.empty() && sample.timestamp < samples_.back().timestamp)
    throw std::invalid_argument("load window: samples must arrive in time order");
  samples_.push_back(std::move(sample));
  while (samples_.size() > capacity_) samples_.pop_front();
}

PrefilterResult prefilter_infeasible(const std::vector<UeState>& ues,
                                     const RateMatrix& rate_estimates,
                                     const LoadSample& expected_loads, double r_min) {
  const std::size_t b_count = rate_estimates.num_bands();
  PrefilterResult res;
  res.incurred.assign(b_count, 0.0);
  for (std::size_t u = 0; u < ues.size(); ++u) {
    double best_rate = 0.0;
    for (std::size_t b = 0; b < b_count; ++b)
      best_rate = std::max(best_rate, rate_estimates.rates(u, b));
    if (best_rate >= r_min) {
      res.remaining.push_back(static_cast<int>(u));
      continue;
    }
    std::size_t best_band = 0;  // argmax quality, lowest index wins ties
    for (std::size_t b = 1; b < b_count; ++b)
      if (ues[u].channel_quality_db[b] > ues[u].channel_quality_db[best_band]) best_band = b;
    res.fixed.push_back({static_cast<int>(u), static_cast<int>(best_band)});
    res.incurred[best_band] += expected_loads.per_band_loads(u, best_band);
  }
  return res;
}

LoadSample estimate_expected_loads(const LoadWindow& window) {
  if (window.empty())
    throw std::invalid_argument("estimate_expected_loads: no observations in window");
  const auto& samples = window.samples();
  LoadSample mean;
  mean.per_band_loads = Mat(samples.front().num_ues(), samples.front().num_bands(), 0.0);
  mean.incurred_loads.assign(samples.front().num_bands(), 0.0);
  mean.timestamp = samples.back().timestamp;
  for (const LoadSample& s : samples) {
    for (std::size_t i = 0; i < mean.per_band_loads.data().size(); ++i)
      mean.per_band_loads.data()[i] += s.per_band_loads.data()[i];
    for (std::size_t b = 0; b < mean.incurred_loads.size(); ++b)
      mean.incurred_loads[b] += s.incurred_loads[b];
  }
  double inv = 1.0 / static_cast<double>(samples.size());
  for (auto& v : mean.per_band_loads.data()) v *= inv;
  for (auto& v : mean.incurred_loads) v *= inv;
  return mean;
}

BuiltLp build_lp(const LoadSample& expected, const std::vector<double>& incurred,
                 const RateMatrix& rates, const AssignmentMatrix& previous,
                 const std::vector<int>& caps, const BalancerConfig& cfg) {
  const std::size_t u_count = previous.num_ues();
  const std::size_t b_count = previous.num_bands();
  const std::size_t nx = u_count * b_count;

  BuiltLp out;
  out.num_ues = u_count;
  out.num_bands = b_count;
  // worst stacking of expected loads; movement norm is 2 per moved UE
  double t_max = 0.0;
  for (std::size_t u = 0; u < u_count; ++u) {
    double row_max = 0.0;
    for (std::size_t b = 0; b < b_count; ++b)
      row_max = std::max(row_max, expected.per_band_loads(u, b));
    t_max += row_max;
  }
  out.t_max = std::max(t_max, 1e-12);
  out.y_max = std::max(2.0 * static_cast<double>(u_count), 1e-12);

  LinearProgram& p = out.prog;
  p.num_vars = 2 * nx + 2;
  const std::size_t ti = out.t_index(), yi = out.y_index();
  p.objective.assign(p.num_vars, 0.0);
  p.objective[ti] = cfg.w / out.t_max;
  p.objective[yi] = (1.0 - cfg.w) / out.y_max;
  p.lower.assign(p.num_vars, 0.0);
  p.upper.assign(p.num_vars, 1.0);
  for (std::size_t k = nx; k < p.num_vars; ++k) p.upper[k] = kInf;

  // one band per UE
  for (std::size_t u = 0; u < u_count; ++u) {
    LinearProgram::Row r;
    r.coeffs.assign(p.num_vars, 0.0);
    for (std::size_t b = 0; b < b_count; ++b) r.coeffs[out.x_index(u, b)] = 1.0;
    r.rhs = 1.0;
    p.eq_constraints.push_back(std::move(r));
  }
  // total movement ties the per-entry slacks together
  {
    LinearProgram::Row r;
    r.coeffs.assign(p.num_vars, 0.0);
    for (std::size_t k = 0; k < nx; ++k) r.coeffs[nx + k] = 1.0;
    r.coeffs[yi] = -1.0;
    r.rhs = 0.0;
    p.eq_constraints.push_back(std::move(r));
  }
  // minimum rate rows, normalized by the UE's best rate to keep coefficients O(1)
  for (std::size_t u = 0; u < u_count; ++u) {
    LinearProgram::Row r;
    r.coeffs.assign(p.num_vars, 0.0);
    double scale = 0.0;
    for (std::size_t b = 0; b < b_count; ++b) scale = std::max(scale, rates.rates(u, b));
    scale = std::max(scale, 1.0);
    for (std::size_t b = 0; b < b_count; ++b)
      r.coeffs[out.x_index(u, b)] = -rates.rates(u, b) / scale;
    r.rhs = -cfg.r_min / scale;
    p.ineq_constraints.push_back(std::move(r));
  }
  // per-band cardinality caps
  for (std::size_t b = 0; b < b_count; ++b) {
    LinearProgram::Row r;
    r.coeffs.assign(p.num_vars, 0.0);
    for (std::size_t u = 0; u < u_count; ++u) r.coeffs[out.x_index(u, b)] = 1.0;
    r.rhs = static_cast<double>(caps[b]);
    p.ineq_constraints.push_back(std::move(r));
  }
  // epigraph rows: band load plus incurred load stays below t
  for (std::size_t b = 0; b < b_count; ++b) {
    LinearProgram::Row r;
    r.coeffs.assign(p.num_vars, 0.0);
    for (std::size_t u = 0; u < u_count; ++u)
      r.coeffs[out.x_index(u, b)] = expected.per_band_loads(u, b);
    r.coeffs[ti] = -1.0;
    r.rhs = -(b < incurred.size() ? incurred[b] : 0.0);
    p.ineq_constraints.push_back(std::move(r));
  }
  // absolute-value linearization of the movement term
  for (std::size_t u = 0; u < u_count; ++u) {
    for (std::size_t b = 0; b < b_count; ++b) {
      double prev = previous.entries(u, b);
      LinearProgram::Row plus;
      plus.coeffs.assign(p.num_vars, 0.0);
      plus.coeffs[out.x_index(u, b)] = 1.0;
      plus.coeffs[nx + out.x_index(u, b)] = -1.0;
      plus.rhs = prev;
      p.ineq_constraints.push_back(std::move(plus));
      LinearProgram::Row minus;
      minus.coeffs.assign(p.num_vars, 0.0);
      minus.coeffs[out.x_index(u, b)] = -1.0;
      minus.coeffs[nx + out.x_index(u, b)] = -1.0;
      minus.rhs = -prev;
      p.ineq_constraints.push_back(std::move(minus));
    }
  }
  return out;
}

AssignmentMatrix round_probabilistic(const AssignmentMatrix& distributions,
                                     const RateMatrix& rates, const std::vector<int>& caps,
                                     const BalancerConfig& cfg, std::mt19937_64& rng) {
  const std::size_t u_count = distributions.num_ues();
  const std::size_t b_count = distributions.num_bands();
  std::vector<int> bands_of(u_count, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t u = 0; u < u_count; ++u) {
    double roll = unit(rng);
    std::size_t pick = b_count - 1;
    for (std::size_t b = 0; b < b_count; ++b) {
      roll -= distributions.entries(u, b);
      if (roll <= 0.0) {
        pick = b;
        break;
      }
    }
    bands_of[u] = static_cast<int>(pick);
  }
  repair_assignment(bands_of, distributions, rates, caps, cfg, &rng);
  return AssignmentMatrix::hard_from_bands(bands_of, b_count);
}

AssignmentMatrix round_deterministic(const AssignmentMatrix& distributions,
                                     const RateMatrix& rates, const std::vector<int>& caps,
                                     const BalancerConfig& cfg) {
  const std::size_t u_count = distributions.num_ues();
  const std::size_t b_count = distributions.num_bands();
  std::vector<int> bands_of(u_count, 0);
  for (std::size_t u = 0; u < u_count; ++u) {
    double best = -1.0;
    std::vector<std::size_t> tied;
    for (std::size_t b = 0; b < b_count; ++b) {
      double v = distributions.entries(u, b);
      if (v > best + 1e-12) {
        best = v;
        tied.assign(1, b);
      } else if (std::abs(v - best) <= 1e-12) {
        tied.push_back(b);
      }
    }
    // ties broken evenly: cycle through the tied set by UE index
    bands_of[u] = static_cast<int>(tied[u % tied.size()]);
  }
  repair_assignment(bands_of, distributions, rates, caps, cfg, nullptr);
  return AssignmentMatrix::hard_from_bands(bands_of, b_count);
}

BalanceDecision pmlb_step(const LoadWindow& window, const AssignmentMatrix& previous,
                          const std::vector<UeState>& ues, const RateMatrix& rates,
                          const std::vector<Band>& bands, const BalancerConfig& cfg,
                          std::mt19937_64& rng) {
  cfg.validate();
  const std::size_t u_count = previous.num_ues();
  const std::size_t b_count = previous.num_bands();

  LoadSample expected = estimate_expected_loads(window);
  std::vector<double> totals = band_totals(previous, expected);

  double t_max_full = 0.0;
  for (std::size_t u = 0; u < u_count; ++u) {
    double row_max = 0.0;
    for (std::size_t b = 0; b < b_count; ++b)
      row_max = std::max(row_max, expected.per_band_loads(u, b));
    t_max_full += row_max;
  }
  t_max_full = std::max(t_max_full, 1e-12);

  BalanceDecision decision;
  decision.new_assignment = previous;
  decision.distributions = copy_as_stochastic(previous);

  double current_lbi = lbi(totals);
  if (current_lbi >= cfg.lbi_threshold) {
    decision.triggered = false;
    decision.objective_parts = {*std::max_element(totals.begin(), totals.end()) / t_max_full, 0.0};
    return decision;
  }
  decision.triggered = true;

  PrefilterResult pre = prefilter_infeasible(ues, rates, expected, cfg.r_min);
  decision.prefiltered = pre.fixed;

  std::vector<int> caps = band_ue_caps(bands, u_count, cfg.ue_cap_factor);
  std::vector<int> eff_caps = caps;
  for (auto& [u, b] : pre.fixed) eff_caps[static_cast<std::size_t>(b)] = std::max(0, eff_caps[static_cast<std::size_t>(b)] - 1);

  std::vector<int> final_bands(u_count, 0);
  for (auto& [u, b] : pre.fixed) final_bands[static_cast<std::size_t>(u)] = b;

  AssignmentMatrix distributions_full = copy_as_stochastic(previous);

  if (!pre.remaining.empty()) {
    const std::size_t r_count = pre.remaining.size();
    LoadSample sub_expected;
    sub_expected.per_band_loads = Mat(r_count, b_count);
    sub_expected.incurred_loads.assign(b_count, 0.0);
    RateMatrix sub_rates{Mat(r_count, b_count)};
    AssignmentMatrix sub_previous;
    sub_previous.mode = AssignMode::hard;
    sub_previous.entries = Mat(r_count, b_count, 0.0);
    for (std::size_t i = 0; i < r_count; ++i) {
      std::size_t u = static_cast<std::size_t>(pre.remaining[i]);
      for (std::size_t b = 0; b < b_count; ++b) {
        sub_expected.per_band_loads(i, b) = expected.per_band_loads(u, b);
        sub_rates.rates(i, b) = rates.rates(u, b);
        sub_previous.entries(i, b) = previous.entries(u, b);
      }
    }
    std::vector<double> incurred = pre.incurred;
    for (std::size_t b = 0; b < b_count; ++b) incurred[b] += expected.incurred_loads[b];

    BuiltLp built = build_lp(sub_expected, incurred, sub_rates, sub_previous, eff_caps, cfg);

    LpSolution sol;
    if (cfg.rounding == Rounding::milp) {
      std::vector<std::size_t> ints(r_count * b_count);
      std::iota(ints.begin(), ints.end(), 0);
      sol = solve_milp(built.prog, ints, 200'000);
    } else {
      sol = solve_lp(built.prog);
    }
    bool usable = (sol.status == SolveStatus::optimal ||
                   (sol.status == SolveStatus::node_limit && !sol.values.empty()));
    if (!usable) {
      decision.lp_feasible = false;
      return decision;  // keep the previous assignment, flag the cycle
    }

    AssignmentMatrix sub_dist;
    sub_dist.mode = AssignMode::stochastic;
    sub_dist.entries = Mat(r_count, b_count, 0.0);
    for (std::size_t i = 0; i < r_count; ++i) {
      double row_sum = 0.0;
      for (std::size_t b = 0; b < b_count; ++b) {
        double v = std::clamp(sol.values[built.x_index(i, b)], 0.0, 1.0);
        sub_dist.entries(i, b) = v;
        row_sum += v;
      }
      if (row_sum <= 0.0) {  // defensive: fall back to the previous band
        sub_dist.entries(i, static_cast<std::size_t>(sub_previous.band_of(i))) = 1.0;
      } else {
        for (std::size_t b = 0; b < b_count; ++b) sub_dist.entries(i, b) /= row_sum;
      }
    }

    AssignmentMatrix sub_hard;
    try {
      switch (cfg.rounding) {
        case Rounding::probabilistic:
          sub_hard = round_probabilistic(sub_dist, sub_rates, eff_caps, cfg, rng);
          break;
        case Rounding::deterministic:
          sub_hard = round_deterministic(sub_dist, sub_rates, eff_caps, cfg);
          break;
        case Rounding::milp: {
          std::vector<int> bands_of(r_count, 0);
          for (std::size_t i = 0; i < r_count; ++i) bands_of[i] = sub_dist.band_of(i);
          sub_hard = AssignmentMatrix::hard_from_bands(bands_of, b_count);
          break;
        }
      }
    } catch (const RoundingError&) {
      decision.lp_feasible = false;
      return decision;
    }

    for (std::size_t i = 0; i < r_count; ++i) {
      std::size_t u = static_cast<std::size_t>(pre.remaining[i]);
      final_bands[u] = sub_hard.band_of(i);
      for (std::size_t b = 0; b < b_count; ++b)
        distributions_full.entries(u, b) = sub_dist.entries(i, b);
    }
  }

  for (auto& [u, b] : pre.fixed) {
    for (std::size_t k = 0; k < b_count; ++k) distributions_full.entries(static_cast<std::size_t>(u), k) = 0.0;
    distributions_full.entries(static_cast<std::size_t>(u), static_cast<std::size_t>(b)) = 1.0;
  }

  decision.new_assignment = AssignmentMatrix::hard_from_bands(final_bands, b_count);
  decision.distributions = distributions_full;
  double f2 = objective_f2(decision.new_assignment, previous);
  decision.handover_count = static_cast<int>(std::lround(f2 / 2.0));
  decision.objective_parts = {
      objective_f1(decision.new_assignment, expected) / t_max_full,
      f2 / (2.0 * static_cast<double>(u_count))};
  return decision;
}

AssignmentMatrix baseline_no_mlb(const std::vector<UeState>& ues, const RateMatrix& rates) {
  const std::size_t b_count = rates.num_bands();
  const std::size_t camp_bands = std::min<std::size_t>(2, b_count);
  std::vector<int> bands_of(ues.size(), 0);
  for (std::size_t u = 0; u < ues.size(); ++u) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < camp_bands; ++b)
      if (ues[u].channel_quality_db[b] > ues[u].channel_quality_db[best]) best = b;
    bands_of[u] = static_cast<int>(best);
  }
  return AssignmentMatrix::hard_from_bands(bands_of, b_count);
}

AssignmentMatrix baseline_a2_mlb(const std::vector<UeState>& ues, const RateMatrix& rates,
                                 const AssignmentMatrix& previous, double a2_threshold_db) {
  (void)rates;
  const std::size_t b_count = previous.num_bands();
  std::vector<int> bands_of(ues.size(), 0);
  for (std::size_t u = 0; u < ues.size(); ++u) {
    int serving = previous.band_of(u);
    bands_of[u] = serving;
    if (ues[u].channel_quality_db[static_cast<std::size_t>(serving)] >= a2_threshold_db) continue;
    std::size_t best = serving == 0 ? 1 : 0;
    for (std::size_t b = 0; b < b_count; ++b) {
      if (static_cast<int>(b) == serving) continue;
      if (ues[u].channel_quality_db[b] > ues[u].channel_quality_db[best]) best = b;
    }
    if (b_count > 1) bands_of[u] = static_cast<int>(best);
  }
  return AssignmentMatrix::hard_from_bands(bands_of, b_count);
}

AssignmentMatrix baseline_rule_based(const std::vector<UeState>& ues, const LoadSample& loads,
                                     const RateMatrix& rates, const AssignmentMatrix& previous,
                                     std::mt19937_64& rng, const RuleBasedParams& params) {
  (void)rates;
  const std::size_t b_count = previous.num_bands();
  std::vector<double> totals = band_totals(previous, loads);
  auto [min_it, max_it] = std::minmax_element(totals.begin(), totals.end());
  std::vector<int> bands_of(ues.size(), 0);
  for (std::size_t u = 0; u < ues.size(); ++u) bands_of[u] = previous.band_of(u);
  if (*max_it - *min_it <= params.gap) return previous;

  std::size_t src = static_cast<std::size_t>(max_it - totals.begin());
  int pool = params.pool_size >= 0
                 ? params.pool_size
                 : static_cast<int>(std::ceil(0.05 * static_cast<double>(ues.size())));
  std::vector<std::size_t> candidates;
  for (std::size_t u = 0; u < ues.size(); ++u)
    if (bands_of[u] == static_cast<int>(src)) candidates.push_back(u);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  if (candidates.size() > static_cast<std::size_t>(pool)) candidates.resize(static_cast<std::size_t>(pool));

  for (std::size_t u : candidates) {
    // least-loaded target whose quality clears the A4-style gate
    int target = -1;
    double target_load = kInf;
    for (std::size_t b = 0; b < b_count; ++b) {
      if (b == src) continue;
      if (ues[u].channel_quality_db[b] < params.q_min_db) continue;
      if (totals[b] < target_load) {
        target_load = totals[b];
        target = static_cast<int>(b);
      }
    }
    if (target < 0) continue;
    bands_of[u] = target;
    double moved = loads.per_band_loads(u, static_cast<std::size_t>(target));
    totals[src] -= loads.per_band_loads(u, src);
    totals[static_cast<std::size_t>(target)] += moved;
  }
  return AssignmentMatrix::hard_from_bands(bands_of, b_count);
}

}  // namespace mlb
