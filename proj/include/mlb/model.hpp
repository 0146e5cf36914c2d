#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mlb {

// Dense row-major matrix. UE-band data is U rows by B columns throughout.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::vector<double> col(std::size_t c) const {
    std::vector<double> out(rows_);
    for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
    return out;
  }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Mat&) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

// One carrier frequency range inside a cell.
struct Band {
  int id = 0;
  double bandwidth_hz = 0.0;
  int n_prb = 1;    // resource blocks, drives the cardinality cap
  int ue_cap = 1;   // n_max for this band
};

// Per-UE traffic and channel state. channel_quality_db has one entry per band
// (RSRQ proxy, dB).
struct UeState {
  int id = 0;
  double mean_arrival_rate = 0.0;  // packets per second
  double packet_size_bits = 12000.0;
  std::vector<double> channel_quality_db;
  int current_band = 0;
  double backlog_bits = 0.0;
};

// U x B bits-per-second rates; every entry belongs to the discrete rate set
// efficiency(cqi) * bandwidth of its band.
struct RateMatrix {
  Mat rates;

  std::size_t num_ues() const { return rates.rows(); }
  std::size_t num_bands() const { return rates.cols(); }
};

enum class AssignMode { hard, stochastic };

// UE-band assignment. Rows are probability distributions over bands; in hard
// mode every row is a unit vector.
struct AssignmentMatrix {
  Mat entries;
  AssignMode mode = AssignMode::hard;

  static AssignmentMatrix hard_from_bands(const std::vector<int>& band_of, std::size_t num_bands);

  std::size_t num_ues() const { return entries.rows(); }
  std::size_t num_bands() const { return entries.cols(); }

  // Band carrying the largest entry for a UE (the assigned band in hard mode).
  int band_of(std::size_t ue) const;
  std::vector<int> band_counts() const;

  // Throws std::invalid_argument when a row does not sum to 1 within 1e-9, or
  // when a hard entry is not 0/1.
  void validate() const;
};

// Potential load each UE would put on each band (dimensionless fractions of
// the reporting window), plus loads already incurred by prefiltered UEs.
struct LoadSample {
  Mat per_band_loads;                  // U x B
  std::vector<double> incurred_loads;  // length B
  double timestamp = 0.0;

  std::size_t num_ues() const { return per_band_loads.rows(); }
  std::size_t num_bands() const { return per_band_loads.cols(); }
};

// --- operations ---------------------------------------------------------

// Poisson packet arrivals over dt seconds, in bits. Zero arrival rate gives 0.
double sample_demand(const UeState& ue, std::mt19937_64& rng, double dt);

// Element-wise demands / rates. Throws on length mismatch or non-positive rate.
std::vector<double> load_vector(std::span<const double> demands, std::span<const double> band_rates);

// Inner product of an assignment column with a band's load vector.
double band_load(std::span<const double> assignment_col, std::span<const double> loads);

// Max over bands of assignment-weighted expected load plus incurred load.
double objective_f1(const AssignmentMatrix& assignment, const LoadSample& loads);

// L1 distance between two assignments; 2x the moved-UE count for hard inputs.
double objective_f2(const AssignmentMatrix& assignment, const AssignmentMatrix& previous);

// Jain's fairness index over band totals, in [1/B, 1]. All-zero input is
// treated as perfectly balanced and yields 1.
double lbi(std::span<const double> band_total_loads);

// Spectral efficiency (bits/s/Hz) for CQI 1..15.
double cqi_efficiency(int cqi);
inline constexpr int kNumCqiLevels = 15;

}  // namespace mlb
