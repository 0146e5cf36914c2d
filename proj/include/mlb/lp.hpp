#pragma once

#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

namespace mlb {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense minimization LP:
//   min objective . x
//   s.t. eq row . x == rhs, ineq row . x <= rhs, lower <= x <= upper.
struct LinearProgram {
  struct Row {
    std::vector<double> coeffs;
    double rhs = 0.0;
  };

  std::size_t num_vars = 0;
  std::vector<double> objective;
  std::vector<Row> eq_constraints;
  std::vector<Row> ineq_constraints;
  std::vector<double> lower, upper;

  // Throws std::invalid_argument on ragged rows, crossed bounds or
  // non-finite coefficients.
  void validate() const;
};

enum class SolveStatus { optimal, infeasible, unbounded, node_limit, iteration_limit };

const char* to_string(SolveStatus s);

struct LpSolution {
  std::vector<double> values;
  double objective_value = 0.0;
  SolveStatus status = SolveStatus::infeasible;
  long iterations = 0;
  double solve_time_s = 0.0;
};

// Bounded-variable revised simplex over a sparse copy of the program.
// Bland's rule kicks in as the anti-cycling safeguard after a run of
// degenerate pivots. Holds no global state; one instance per program.
class SimplexSolver {
 public:
  explicit SimplexSolver(const LinearProgram& prog);

  LpSolution solve() const;
  // Same program with per-variable bounds overridden (branch-and-bound nodes).
  LpSolution solve_with_bounds(const std::vector<double>& lower,
                               const std::vector<double>& upper) const;

 private:
  struct Impl;
  std::size_t n_ = 0;
  std::vector<double> base_lower_, base_upper_;
  // Sparse columns of [A_eq; A_ineq], row-scaled.
  std::vector<std::vector<std::pair<int, double>>> cols_;
  std::vector<double> rhs_;        // scaled
  std::vector<double> row_scale_;  // applied scale per row
  std::vector<double> cost_;
  std::size_t num_eq_ = 0, num_rows_ = 0;

  friend struct Impl;
};

LpSolution solve_lp(const LinearProgram& prog);

// Best-bound branch and bound, branching on the most fractional variable.
// integer_vars index into the program's variables. Returns node_limit status
// when the node budget runs out (best incumbent so far, when one exists).
LpSolution solve_milp(const LinearProgram& prog, const std::vector<std::size_t>& integer_vars,
                      long node_limit = 1'000'000);

enum class SolveMode { lp, milp };

struct SolveStats {
  double objective_value = 0.0;
  double solve_time_s = 0.0;
  SolveStatus status = SolveStatus::infeasible;
};

// One timed solve; integer_vars only consulted in milp mode.
SolveStats solve_stats(const LinearProgram& prog, SolveMode mode,
                       const std::vector<std::size_t>& integer_vars = {},
                       long node_limit = 1'000'000);

}  // namespace mlb
