#include "mlb/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlb {

namespace {
constexpr double kRowSumTol = 1e-9;

// 4-bit CQI spectral efficiencies, bits/s/Hz.
constexpr double kCqiEfficiency[kNumCqiLevels] = {
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141,
    2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547};
}  // namespace

double cqi_efficiency(int cqi) {
  if (cqi < 1 || cqi > kNumCqiLevels) throw std::invalid_argument("cqi out of range 1..15");
  return kCqiEfficiency[cqi - 1];
}

AssignmentMatrix AssignmentMatrix::hard_from_bands(const std::vector<int>& band_of,
                                                   std::size_t num_bands) {
  AssignmentMatrix a;
  a.mode = AssignMode::hard;
  a.entries = Mat(band_of.size(), num_bands, 0.0);
  for (std::size_t u = 0; u < band_of.size(); ++u) {
    int b = band_of[u];
    if (b < 0 || static_cast<std::size_t>(b) >= num_bands)
      throw std::invalid_argument("band index out of range");
    a.entries(u, static_cast<std::size_t>(b)) = 1.0;
  }
  return a;
}

int AssignmentMatrix::band_of(std::size_t ue) const {
  auto r = entries.row(ue);
  return static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
}

std::vector<int> AssignmentMatrix::band_counts() const {
  std::vector<int> counts(num_bands(), 0);
  for (std::size_t u = 0; u < num_ues(); ++u) ++counts[static_cast<std::size_t>(band_of(u))];
  return counts;
}

void AssignmentMatrix::validate() const {
  for (std::size_t u = 0; u < num_ues(); ++u) {
    double sum = 0.0;
    for (std::size_t b = 0; b < num_bands(); ++b) {
      double v = entries(u, b);
      if (v < -kRowSumTol || v > 1.0 + kRowSumTol)
        throw std::invalid_argument("assignment entry outside [0,1]");
      if (mode == AssignMode::hard && std::abs(v) > kRowSumTol && std::abs(v - 1.0) > kRowSumTol)
        throw std::invalid_argument("hard assignment entry not 0/1");
      sum += v;
    }
    if (std::abs(sum - 1.0) > kRowSumTol)
      throw std::invalid_argument("assignment row does not sum to 1");
  }
}

double sample_demand(const UeState& ue, std::mt19937_64& rng, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  double mean = ue.mean_arrival_rate * dt;
  if (mean <= 0.0) return 0.0;
  std::poisson_distribution<long long> arrivals(mean);
  return static_cast<double>(arrivals(rng)) * ue.packet_size_bits;
}

std::vector<double> load_vector(std::span<const double> demands,
                                std::span<const double> band_rates) {
  if (demands.size() != band_rates.size())
    throw std::invalid_argument("load_vector: length mismatch");
  std::vector<double> out(demands.size());
  for (std::size_t i = 0; i < demands.size(); ++i) {
    if (band_rates[i] <= 0.0)
      throw std::invalid_argument("load_vector: non-positive rate (invalid channel state)");
    out[i] = demands[i] / band_rates[i];
  }
  return out;
}

double band_load(std::span<const double> assignment_col, std::span<const double> loads) {
  if (assignment_col.size() != loads.size())
    throw std::invalid_argument("band_load: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < loads.size(); ++i) acc += assignment_col[i] * loads[i];
  return acc;
}

double objective_f1(const AssignmentMatrix& assignment, const LoadSample& loads) {
  if (assignment.num_ues() != loads.num_ues() || assignment.num_bands() != loads.num_bands())
    throw std::invalid_argument("objective_f1: dimension mismatch");
  if (loads.incurred_loads.size() != loads.num_bands())
    throw std::invalid_argument("objective_f1: incurred_loads length mismatch");
  double worst = 0.0;
  for (std::size_t b = 0; b < assignment.num_bands(); ++b) {
    double acc = loads.incurred_loads[b];
    for (std::size_t u = 0; u < assignment.num_ues(); ++u)
      acc += assignment.entries(u, b) * loads.per_band_loads(u, b);
    worst = std::max(worst, acc);
  }
  return worst;
}

double objective_f2(const AssignmentMatrix& assignment, const AssignmentMatrix& previous) {
  if (assignment.num_ues() != previous.num_ues() ||
      assignment.num_bands() != previous.num_bands())
    throw std::invalid_argument("objective_f2: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < assignment.entries.data().size(); ++i)
    acc += std::abs(assignment.entries.data()[i] - previous.entries.data()[i]);
  return acc;
}

double lbi(std::span<const double> band_total_loads) {
  if (band_total_loads.empty()) throw std::invalid_argument("lbi: empty load vector");
  double sum = 0.0, sumsq = 0.0;
  for (double v : band_total_loads) {
    if (v < 0.0) throw std::invalid_argument("lbi: negative band load");
    sum += v;
    sumsq += v * v;
  }
  if (sumsq == 0.0) return 1.0;  // no traffic anywhere, nothing to balance
  return (sum * sum) / (static_cast<double>(band_total_loads.size()) * sumsq);
}

}  // namespace mlb
