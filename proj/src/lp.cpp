#include "mlb/lp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <span>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace mlb {

namespace {

constexpr double kFeasTol = 1e-9;    // scaled-system feasibility
constexpr double kPriceTol = 1e-9;   // reduced-cost threshold
constexpr double kPivotTol = 1e-9;   // minimum ratio-test pivot magnitude
constexpr double kEtaDrop = 1e-13;
constexpr double kVerifyTol = 1e-7;  // residual bound promised on optimal
constexpr int kDegenerateBlandTrigger = 64;
constexpr std::size_t kRefactorEtaCount = 96;

enum class VStat : unsigned char { basic, at_lower, at_upper, free_zero };

struct Eta {
  int row;
  double pivot_mult;                          // 1 / w[row]
  std::vector<std::pair<int, double>> off;    // (-w[i] / w[row]) for i != row
};

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::node_limit: return "node_limit";
    case SolveStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

void LinearProgram::validate() const {
  if (objective.size() != num_vars) throw std::invalid_argument("lp: objective length != num_vars");
  if (lower.size() != num_vars || upper.size() != num_vars)
    throw std::invalid_argument("lp: bounds length != num_vars");
  for (std::size_t j = 0; j < num_vars; ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j])
      throw std::invalid_argument("lp: crossed or NaN bounds");
    if (!std::isfinite(objective[j])) throw std::invalid_argument("lp: non-finite objective");
  }
  auto check_rows = [&](const std::vector<Row>& rows) {
    for (const Row& r : rows) {
      if (r.coeffs.size() != num_vars) throw std::invalid_argument("lp: ragged constraint row");
      for (double v : r.coeffs)
        if (!std::isfinite(v)) throw std::invalid_argument("lp: non-finite coefficient");
      if (!std::isfinite(r.rhs)) throw std::invalid_argument("lp: non-finite rhs");
    }
  };
  check_rows(eq_constraints);
  check_rows(ineq_constraints);
}

SimplexSolver::SimplexSolver(const LinearProgram& prog) {
  prog.validate();
  n_ = prog.num_vars;
  num_eq_ = prog.eq_constraints.size();
  num_rows_ = num_eq_ + prog.ineq_constraints.size();
  base_lower_ = prog.lower;
  base_upper_ = prog.upper;
  cost_ = prog.objective;

  cols_.assign(n_, {});
  rhs_.resize(num_rows_);
  row_scale_.assign(num_rows_, 1.0);

  auto ingest = [&](const LinearProgram::Row& row, std::size_t r) {
    double amax = 0.0;
    for (double v : row.coeffs) amax = std::max(amax, std::abs(v));
    double s = amax > 0.0 ? 1.0 / amax : 1.0;
    row_scale_[r] = s;
    rhs_[r] = row.rhs * s;
    for (std::size_t j = 0; j < n_; ++j)
      if (row.coeffs[j] != 0.0) cols_[j].push_back({static_cast<int>(r), row.coeffs[j] * s});
  };
  for (std::size_t i = 0; i < prog.eq_constraints.size(); ++i) ingest(prog.eq_constraints[i], i);
  for (std::size_t i = 0; i < prog.ineq_constraints.size(); ++i)
    ingest(prog.ineq_constraints[i], num_eq_ + i);
}

// All mutable solve state lives here; the SimplexSolver itself stays const.
struct SimplexSolver::Impl {
  const SimplexSolver& S;
  std::size_t n, m, ncols;  // structural, rows, structural + slacks
  std::vector<double> lo, up;
  std::vector<VStat> vstat;
  std::vector<int> basic;      // basic variable per row
  std::vector<double> xval;    // current value per column
  std::vector<Eta> etas;
  std::size_t eta_nnz = 0;
  std::size_t etas_base = 0, eta_nnz_base = 0;  // state right after last refactor
  long iterations = 0;
  long max_iterations;
  bool bland = false;
  int degenerate_run = 0;

  Impl(const SimplexSolver& solver, const std::vector<double>& lower,
       const std::vector<double>& upper)
      : S(solver), n(solver.n_), m(solver.num_rows_), ncols(n + m) {
    lo = lower;
    up = upper;
    lo.resize(ncols);
    up.resize(ncols);
    for (std::size_t i = 0; i < m; ++i) {
      lo[n + i] = 0.0;
      up[n + i] = i < S.num_eq_ ? 0.0 : kInf;  // eq slack fixed at zero
    }
    max_iterations = 20 * static_cast<long>(m + ncols) + 2000;
  }

  bool is_slack(int j) const { return static_cast<std::size_t>(j) >= n; }

  std::span<const std::pair<int, double>> column(int j) const {
    if (is_slack(j)) return {};  // handled specially
    return S.cols_[static_cast<std::size_t>(j)];
  }

  void ftran(std::vector<double>& u) const {
    for (const Eta& e : etas) {
      double t = u[e.row];
      if (t == 0.0) continue;
      u[e.row] = e.pivot_mult * t;
      for (auto [i, v] : e.off) u[i] += v * t;
    }
  }

  void btran(std::vector<double>& y) const {
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      double t = it->pivot_mult * y[it->row];
      for (auto [i, v] : it->off) t += v * y[i];
      y[it->row] = t;
    }
  }

  // Dense copy of column j (slack columns are unit vectors).
  void load_column(int j, std::vector<double>& w) const {
    std::fill(w.begin(), w.end(), 0.0);
    if (is_slack(j)) {
      w[static_cast<std::size_t>(j) - n] = 1.0;
    } else {
      for (auto [i, v] : column(j)) w[i] = v;
    }
  }

  // Rebuild the eta file from the current basis set. A row-singleton peel
  // orders the triangularizable part so its FTRANs touch no earlier eta
  // (cost O(nnz)); only the small non-triangular kernel pays for elimination.
  // Returns false when the basis turns out singular.
  bool refactor() {
    etas.clear();
    eta_nnz = 0;
    std::vector<int> cols(basic);
    std::vector<char> row_done(m, 0), col_done(cols.size(), 0);
    std::vector<int> new_basic(m, -1);

    // row -> positions of basis columns touching it
    std::vector<std::vector<int>> row_cols(m);
    std::vector<int> row_nnz(m, 0);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      int j = cols[k];
      if (is_slack(j)) {
        row_cols[static_cast<std::size_t>(j) - n].push_back(static_cast<int>(k));
        ++row_nnz[static_cast<std::size_t>(j) - n];
      } else {
        for (auto [i, v] : column(j)) {
          (void)v;
          row_cols[i].push_back(static_cast<int>(k));
          ++row_nnz[i];
        }
      }
    }
    std::vector<int> queue;
    for (std::size_t r = 0; r < m; ++r)
      if (row_nnz[r] == 1) queue.push_back(static_cast<int>(r));

    auto remove_col = [&](int k) {
      col_done[k] = 1;
      int j = cols[static_cast<std::size_t>(k)];
      if (is_slack(j)) {
        std::size_t r = static_cast<std::size_t>(j) - n;
        if (--row_nnz[r] == 1 && !row_done[r]) queue.push_back(static_cast<int>(r));
      } else {
        for (auto [i, v] : column(j)) {
          (void)v;
          if (--row_nnz[i] == 1 && !row_done[i]) queue.push_back(static_cast<int>(i));
        }
      }
    };

    while (!queue.empty()) {
      int r = queue.back();
      queue.pop_back();
      if (row_done[r] || row_nnz[r] != 1) continue;
      int pos = -1;
      for (int k : row_cols[r])
        if (!col_done[k]) pos = k;
      if (pos < 0) continue;
      int j = cols[static_cast<std::size_t>(pos)];
      double pivot = 0.0;
      if (is_slack(j)) {
        pivot = 1.0;
      } else {
        for (auto [i, v] : column(j))
          if (i == r) pivot = v;
      }
      if (std::abs(pivot) < 1e-11) continue;  // leave for the kernel pass
      row_done[r] = 1;
      new_basic[r] = j;
      remove_col(pos);
      // triangular order: prior pivot rows are zero in this column, no ftran needed
      if (!is_slack(j)) {
        Eta e;
        e.row = r;
        e.pivot_mult = 1.0 / pivot;
        for (auto [i, v] : column(j))
          if (i != r && std::abs(v) > kEtaDrop) e.off.push_back({i, -v * e.pivot_mult});
        if (!e.off.empty() || e.pivot_mult != 1.0) {
          eta_nnz += e.off.size();
          etas.push_back(std::move(e));
        }
      }
    }

    // kernel: whatever the peel could not order, eliminated with full FTRANs
    std::vector<int> kernel;
    for (std::size_t k = 0; k < cols.size(); ++k)
      if (!col_done[k]) kernel.push_back(cols[k]);
    std::sort(kernel.begin(), kernel.end(), [&](int a, int b) {
      auto na = is_slack(a) ? 1 : column(a).size();
      auto nb = is_slack(b) ? 1 : column(b).size();
      return na != nb ? na < nb : a < b;
    });
    std::vector<double> w(m);
    for (int j : kernel) {
      load_column(j, w);
      ftran(w);
      int prow = -1;
      double pbest = 1e-10;
      for (std::size_t r = 0; r < m; ++r) {
        if (!row_done[r] && std::abs(w[r]) > pbest) {
          pbest = std::abs(w[r]);
          prow = static_cast<int>(r);
        }
      }
      if (prow < 0) return false;
      Eta e;
      e.row = prow;
      e.pivot_mult = 1.0 / w[prow];
      for (std::size_t i = 0; i < m; ++i)
        if (static_cast<int>(i) != prow && std::abs(w[i]) > kEtaDrop)
          e.off.push_back({static_cast<int>(i), -w[i] * e.pivot_mult});
      eta_nnz += e.off.size();
      etas.push_back(std::move(e));
      row_done[prow] = 1;
      new_basic[prow] = j;
    }
    for (std::size_t r = 0; r < m; ++r)
      if (new_basic[r] < 0) return false;
    basic = std::move(new_basic);
    etas_base = etas.size();
    eta_nnz_base = eta_nnz;
    if (getenv("MLB_LP_DEBUG"))
      std::fprintf(stderr, "refactor: kernel=%zu etas=%zu nnz=%zu\n", kernel.size(), etas.size(), eta_nnz);
    return true;
  }

  // x_B = B^-1 (rhs - N x_N).
  void compute_basics() {
    std::vector<double> r(S.rhs_.begin(), S.rhs_.end());
    for (std::size_t j = 0; j < ncols; ++j) {
      if (vstat[j] == VStat::basic || xval[j] == 0.0) continue;
      if (is_slack(static_cast<int>(j)))
        r[j - n] -= xval[j];
      else
        for (auto [i, v] : column(static_cast<int>(j))) r[i] -= v * xval[j];
    }
    ftran(r);
    for (std::size_t i = 0; i < m; ++i) xval[static_cast<std::size_t>(basic[i])] = r[i];
  }

  double nonbasic_start(std::size_t j) const {
    if (lo[j] > -kInf) return lo[j];
    if (up[j] < kInf) return up[j];
    return 0.0;
  }

  // Greedy triangular crash: give each equality row a structural basic column
  // whose remaining nonzeros all sit in inequality rows, preferring a value
  // assignment that keeps every touched inequality slack feasible.
  void crash() {
    std::vector<double> acc(m, 0.0);  // running a.x with current values
    for (std::size_t j = 0; j < ncols; ++j) {
      if (vstat[j] != VStat::basic && xval[j] != 0.0) {
        if (is_slack(static_cast<int>(j)))
          acc[j - n] += xval[j];
        else
          for (auto [i, v] : column(static_cast<int>(j))) acc[i] += v * xval[j];
      }
    }
    std::vector<char> used(ncols, 0);
    // eq-row nonzero census per structural column
    std::vector<int> eq_count(n, 0), eq_row(n, -1);
    for (std::size_t j = 0; j < n; ++j) {
      for (auto [i, v] : column(static_cast<int>(j))) {
        if (static_cast<std::size_t>(i) < S.num_eq_) {
          ++eq_count[j];
          eq_row[j] = i;
        }
      }
    }
    std::vector<std::vector<int>> row_cands(S.num_eq_);
    for (std::size_t j = 0; j < n; ++j)
      if (eq_count[j] == 1) row_cands[static_cast<std::size_t>(eq_row[j])].push_back(static_cast<int>(j));

    for (std::size_t i = 0; i < S.num_eq_; ++i) {
      int pick = -1;
      double pick_val = 0.0;
      for (int pass = 0; pass < 2 && pick < 0; ++pass) {
        for (int j : row_cands[i]) {
          if (used[j]) continue;
          double aij = 0.0;
          for (auto [r, v] : column(j))
            if (r == static_cast<int>(i)) aij = v;
          if (std::abs(aij) < 1e-9) continue;
          double v = (S.rhs_[i] - acc[i]) / aij;
          if (v < lo[j] - kFeasTol || v > up[j] + kFeasTol) continue;
          if (pass == 0) {  // strict pass: keep touched inequality rows feasible
            bool ok = true;
            for (auto [r, av] : column(j)) {
              if (static_cast<std::size_t>(r) >= S.num_eq_ &&
                  acc[r] + av * v > S.rhs_[r] + kFeasTol) {
                ok = false;
                break;
              }
            }
            if (!ok) continue;
          }
          pick = j;
          pick_val = v;
          break;
        }
      }
      if (pick < 0) continue;  // slack stays basic, phase 1 cleans up
      used[pick] = 1;
      double delta = pick_val - xval[pick];
      xval[pick] = pick_val;
      vstat[pick] = VStat::basic;
      vstat[n + i] = VStat::at_lower;
      xval[n + i] = 0.0;
      basic[i] = pick;
      if (delta != 0.0)
        for (auto [r, av] : column(pick)) acc[r] += av * delta;
    }
  }

  double max_violation() const {
    double worst = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
      std::size_t j = static_cast<std::size_t>(basic[r]);
      double v = xval[j];
      if (v < lo[j]) worst = std::max(worst, lo[j] - v);
      if (v > up[j]) worst = std::max(worst, v - up[j]);
    }
    return worst;
  }

  // Tiny leftover bound violations are numeric dust; clamp them so phase 2
  // starts from a nominally feasible basis.
  void clamp_basics() {
    for (std::size_t r = 0; r < m; ++r) {
      std::size_t j = static_cast<std::size_t>(basic[r]);
      xval[j] = std::clamp(xval[j], lo[j], up[j]);
    }
  }

  // One simplex phase. phase1 prices the composite infeasibility objective.
  // Returns optimal (phase goal reached), unbounded, or iteration_limit.
  SolveStatus run_phase(bool phase1) {
    std::vector<double> y(m), w(m);
    int stall_refactors = 0;
    while (true) {
      if (iterations >= max_iterations) return SolveStatus::iteration_limit;
      if (etas.size() - etas_base > kRefactorEtaCount ||
          eta_nnz - eta_nnz_base > 4 * m) {
        if (!refactor()) return SolveStatus::iteration_limit;
        compute_basics();
      }
      if (phase1 && max_violation() <= kFeasTol) return SolveStatus::optimal;

      // duals for the active cost vector
      std::fill(y.begin(), y.end(), 0.0);
      bool any_cost = false;
      for (std::size_t r = 0; r < m; ++r) {
        std::size_t j = static_cast<std::size_t>(basic[r]);
        double c;
        if (phase1) {
          double v = xval[j];
          c = v < lo[j] - kFeasTol ? -1.0 : (v > up[j] + kFeasTol ? 1.0 : 0.0);
        } else {
          c = j < n ? S.cost_[j] : 0.0;
        }
        if (c != 0.0) {
          y[r] = c;
          any_cost = true;
        }
      }
      if (any_cost) btran(y);

      // pricing
      int enter = -1, dir = 0;
      double best = kPriceTol;
      for (std::size_t j = 0; j < ncols; ++j) {
        VStat st = vstat[j];
        if (st == VStat::basic) continue;
        if (lo[j] == up[j]) continue;  // fixed, never enters
        double d = (!phase1 && j < n) ? S.cost_[j] : 0.0;
        if (any_cost) {
          if (is_slack(static_cast<int>(j)))
            d -= y[j - n];
          else
            for (auto [i, v] : column(static_cast<int>(j))) d -= y[i] * v;
        }
        int cand_dir = 0;
        double viol = 0.0;
        if ((st == VStat::at_lower || st == VStat::free_zero) && d < -kPriceTol) {
          cand_dir = +1;
          viol = -d;
        } else if ((st == VStat::at_upper || st == VStat::free_zero) && d > kPriceTol) {
          cand_dir = -1;
          viol = d;
        }
        if (cand_dir == 0) continue;
        if (bland) {  // first eligible index
          enter = static_cast<int>(j);
          dir = cand_dir;
          break;
        }
        if (viol > best) {
          best = viol;
          enter = static_cast<int>(j);
          dir = cand_dir;
        }
      }
      if (enter < 0) {
        if (phase1) {
          double viol = max_violation();
          if (viol > kFeasTol) {
            // stale arithmetic can hide progress; refactor once before deciding
            if (stall_refactors++ < 1 && !etas.empty()) {
              if (!refactor()) return SolveStatus::iteration_limit;
              compute_basics();
              continue;
            }
            if (viol > 2e-8) return SolveStatus::infeasible;
            clamp_basics();
          }
        }
        return SolveStatus::optimal;
      }

      load_column(enter, w);
      ftran(w);

      // ratio test; basics move by -dir * w[r] per unit of entering movement
      double limit = up[static_cast<std::size_t>(enter)] - lo[static_cast<std::size_t>(enter)];
      int leave_row = -1;  // -1 with finite limit means bound flip
      bool leave_to_upper = false;
      double best_pivot = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        if (std::abs(w[r]) <= kPivotTol) continue;
        std::size_t j = static_cast<std::size_t>(basic[r]);
        double rate = -static_cast<double>(dir) * w[r];
        double v = xval[j], cap = kInf;
        bool to_upper = false;
        if (rate > 0.0) {
          if (phase1 && v < lo[j] - kFeasTol)
            cap = (lo[j] - v) / rate;  // crossing its violated lower bound
          else if (up[j] < kInf) {
            cap = (up[j] - v) / rate;
            to_upper = true;
          }
        } else {
          if (phase1 && v > up[j] + kFeasTol) {
            cap = (up[j] - v) / rate;
            to_upper = true;
          } else if (lo[j] > -kInf)
            cap = (lo[j] - v) / rate;
        }
        if (cap == kInf) continue;
        cap = std::max(cap, 0.0);
        bool better;
        if (cap < limit - 1e-12)
          better = true;
        else if (cap > limit + 1e-12)
          better = false;
        else if (bland)
          better = leave_row >= 0 && static_cast<std::size_t>(basic[leave_row]) > j;
        else
          better = std::abs(w[r]) > best_pivot;  // stability tie-break
        if (better) {
          limit = cap;
          leave_row = static_cast<int>(r);
          leave_to_upper = to_upper;
          best_pivot = std::abs(w[r]);
        }
      }

      if (limit == kInf) {
        if (phase1) return SolveStatus::iteration_limit;  // cannot happen with exact arithmetic
        return SolveStatus::unbounded;
      }

      ++iterations;
      if (limit <= 1e-10) {
        if (++degenerate_run >= kDegenerateBlandTrigger) bland = true;
      } else {
        degenerate_run = 0;
        bland = false;
      }

      double step = static_cast<double>(dir) * limit;
      if (step != 0.0)
        for (std::size_t r = 0; r < m; ++r)
          if (w[r] != 0.0) xval[static_cast<std::size_t>(basic[r])] -= w[r] * step;
      xval[static_cast<std::size_t>(enter)] += step;

      if (leave_row < 0) {
        // bound flip, basis unchanged; snap to the exact bound
        std::size_t q = static_cast<std::size_t>(enter);
        vstat[q] = dir > 0 ? VStat::at_upper : VStat::at_lower;
        xval[q] = dir > 0 ? up[q] : lo[q];
        continue;
      }
      std::size_t leave = static_cast<std::size_t>(basic[leave_row]);
      vstat[leave] = leave_to_upper ? VStat::at_upper : VStat::at_lower;
      xval[leave] = leave_to_upper ? up[leave] : lo[leave];
      vstat[static_cast<std::size_t>(enter)] = VStat::basic;
      basic[leave_row] = enter;

      Eta e;
      e.row = leave_row;
      e.pivot_mult = 1.0 / w[leave_row];
      for (std::size_t i = 0; i < m; ++i)
        if (static_cast<int>(i) != leave_row && std::abs(w[i]) > kEtaDrop)
          e.off.push_back({static_cast<int>(i), -w[i] * e.pivot_mult});
      eta_nnz += e.off.size();
      etas.push_back(std::move(e));
    }
  }

  LpSolution run() {
    Timer timer;
    LpSolution sol;
    xval.assign(ncols, 0.0);
    vstat.assign(ncols, VStat::at_lower);
    basic.assign(m, 0);
    for (std::size_t j = 0; j < ncols; ++j) {
      xval[j] = nonbasic_start(j);
      vstat[j] = lo[j] <= -kInf && up[j] >= kInf ? VStat::free_zero
                 : xval[j] == lo[j]              ? VStat::at_lower
                                                 : VStat::at_upper;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (lo[j] > up[j]) {  // crossed node bounds: trivially infeasible
        sol.status = SolveStatus::infeasible;
        sol.solve_time_s = timer.seconds();
        return sol;
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      basic[i] = static_cast<int>(n + i);
      vstat[n + i] = VStat::basic;
    }
    crash();
    if (!refactor()) {  // degenerate crash, fall back to the slack basis
      for (std::size_t j = 0; j < ncols; ++j) {
        if (vstat[j] == VStat::basic) {
          xval[j] = nonbasic_start(j);
          vstat[j] = lo[j] <= -kInf && up[j] >= kInf ? VStat::free_zero
                     : xval[j] == lo[j]              ? VStat::at_lower
                                                     : VStat::at_upper;
        }
      }
      for (std::size_t i = 0; i < m; ++i) {
        basic[i] = static_cast<int>(n + i);
        vstat[n + i] = VStat::basic;
      }
      etas.clear();
    }
    compute_basics();

    SolveStatus st = run_phase(true);
    if (st == SolveStatus::optimal) {
      // clean tiny residual infeasibilities before pricing with real costs
      if (!refactor()) st = SolveStatus::iteration_limit;
      if (st == SolveStatus::optimal) {
        compute_basics();
        st = run_phase(false);
      }
    }

    sol.iterations = iterations;
    if (st == SolveStatus::optimal) {
      // residual repair: refactor and replay both phases on fresh numerics
      for (int attempt = 0; attempt < 2 && !verify(); ++attempt) {
        if (!refactor()) {
          st = SolveStatus::iteration_limit;
          break;
        }
        compute_basics();
        st = run_phase(true);
        if (st != SolveStatus::optimal) break;
        st = run_phase(false);
        if (st != SolveStatus::optimal) break;
      }
      if (st == SolveStatus::optimal && !verify()) st = SolveStatus::iteration_limit;
    }

    sol.status = st;
    sol.values.assign(xval.begin(), xval.begin() + static_cast<long>(n));
    for (std::size_t j = 0; j < n; ++j) {  // snap to bounds within tolerance
      if (lo[j] > -kInf && std::abs(sol.values[j] - lo[j]) < 1e-9) sol.values[j] = lo[j];
      if (up[j] < kInf && std::abs(sol.values[j] - up[j]) < 1e-9) sol.values[j] = up[j];
    }
    if (st == SolveStatus::unbounded) {
      sol.objective_value = -kInf;
    } else {
      double obj = 0.0;
      for (std::size_t j = 0; j < n; ++j) obj += S.cost_[j] * sol.values[j];
      sol.objective_value = obj;
    }
    sol.iterations = iterations;
    sol.solve_time_s = timer.seconds();
    return sol;
  }

  // Residual check against the original (unscaled) rows and bounds.
  bool verify() {
    std::vector<double> resid(S.rhs_.begin(), S.rhs_.end());
    for (std::size_t j = 0; j < ncols; ++j) {
      double v = xval[j];
      if (v == 0.0) continue;
      if (is_slack(static_cast<int>(j)))
        resid[j - n] -= v;
      else
        for (auto [i, av] : column(static_cast<int>(j))) resid[i] -= av * v;
    }
    for (std::size_t i = 0; i < m; ++i)
      if (std::abs(resid[i]) / S.row_scale_[i] > kVerifyTol) return false;
    for (std::size_t j = 0; j < ncols; ++j) {
      if (xval[j] < lo[j] - kVerifyTol || xval[j] > up[j] + kVerifyTol) return false;
    }
    return true;
  }
};

LpSolution SimplexSolver::solve() const { return solve_with_bounds(base_lower_, base_upper_); }

LpSolution SimplexSolver::solve_with_bounds(const std::vector<double>& lower,
                                            const std::vector<double>& upper) const {
  Impl impl(*this, lower, upper);
  return impl.run();
}

LpSolution solve_lp(const LinearProgram& prog) { return SimplexSolver(prog).solve(); }

namespace {

struct BnbNode {
  double bound;
  long id;
  std::vector<std::pair<std::size_t, std::pair<double, double>>> fixes;
  std::vector<double> values;  // LP solution at this node
  bool operator>(const BnbNode& o) const {
    return bound != o.bound ? bound > o.bound : id > o.id;
  }
};

}  // namespace

LpSolution solve_milp(const LinearProgram& prog, const std::vector<std::size_t>& integer_vars,
                      long node_limit) {
  Timer timer;
  for (std::size_t j : integer_vars)
    if (j >= prog.num_vars) throw std::invalid_argument("milp: integer index out of range");

  SimplexSolver solver(prog);
  const double int_tol = 1e-6;

  auto solve_node = [&](const std::vector<std::pair<std::size_t, std::pair<double, double>>>& fixes) {
    std::vector<double> lo = prog.lower, hi = prog.upper;
    for (auto& [j, b] : fixes) {
      lo[j] = std::max(lo[j], b.first);
      hi[j] = std::min(hi[j], b.second);
    }
    return solver.solve_with_bounds(lo, hi);
  };

  auto most_fractional = [&](const std::vector<double>& x) {
    int pick = -1;
    double best = int_tol;
    for (std::size_t j : integer_vars) {
      double f = x[j] - std::floor(x[j]);
      double dist = std::min(f, 1.0 - f);
      if (dist > best) {
        best = dist;
        pick = static_cast<int>(j);
      }
    }
    return pick;
  };

  LpSolution root = solve_node({});
  LpSolution out;
  out.iterations = root.iterations;
  if (root.status == SolveStatus::infeasible || root.status == SolveStatus::unbounded) {
    out.status = root.status;
    out.solve_time_s = timer.seconds();
    return out;
  }

  double incumbent_obj = kInf;
  std::vector<double> incumbent;
  bool lp_trouble = root.status == SolveStatus::iteration_limit;
  long next_id = 0, nodes = 0;
  std::priority_queue<BnbNode, std::vector<BnbNode>, std::greater<BnbNode>> heap;
  if (root.status == SolveStatus::optimal)
    heap.push({root.objective_value, next_id++, {}, root.values});

  // round-and-fix heuristic: an early incumbent makes best-bound pruning bite
  auto try_heuristic = [&](const BnbNode& node) {
    auto fixes = node.fixes;
    for (std::size_t j : integer_vars) {
      double r = std::round(node.values[j]);
      fixes.push_back({j, {r, r}});
    }
    LpSolution h = solve_node(fixes);
    if (h.status == SolveStatus::optimal && h.objective_value < incumbent_obj - 1e-12) {
      incumbent_obj = h.objective_value;
      incumbent = h.values;
    }
  };

  bool hit_node_limit = false;
  while (!heap.empty()) {
    BnbNode node = heap.top();
    heap.pop();
    if (node.bound >= incumbent_obj - 1e-9) break;  // best-bound: rest is pruned
    if (++nodes > node_limit) {
      hit_node_limit = true;
      break;
    }
    int frac = most_fractional(node.values);
    if (frac < 0) {
      if (node.bound < incumbent_obj - 1e-12) {
        incumbent_obj = node.bound;
        incumbent = node.values;
      }
      continue;
    }
    if (nodes == 1 || nodes % 64 == 0) try_heuristic(node);
    double base = std::floor(node.values[static_cast<std::size_t>(frac)]);
    for (int side = 0; side < 2; ++side) {
      auto fixes = node.fixes;
      if (side == 0)
        fixes.push_back({static_cast<std::size_t>(frac), {-kInf, base}});
      else
        fixes.push_back({static_cast<std::size_t>(frac), {base + 1.0, kInf}});
      LpSolution child = solve_node(fixes);
      out.iterations += child.iterations;
      if (child.status == SolveStatus::iteration_limit) {
        lp_trouble = true;
        if (getenv("MLB_LP_DEBUG"))
          std::fprintf(stderr, "child LP iteration_limit: %ld iters, %zu fixes\n",
                       child.iterations, fixes.size());
      }
      if (child.status != SolveStatus::optimal) continue;
      if (child.objective_value >= incumbent_obj - 1e-9) continue;
      heap.push({child.objective_value, next_id++, std::move(fixes), child.values});
    }
  }

  if (incumbent.empty()) {
    out.status = hit_node_limit || lp_trouble ? SolveStatus::node_limit : SolveStatus::infeasible;
  } else {
    out.values = incumbent;
    out.objective_value = incumbent_obj;
    out.status = hit_node_limit          ? SolveStatus::node_limit
                 : lp_trouble            ? SolveStatus::node_limit
                                         : SolveStatus::optimal;
  }
  out.solve_time_s = timer.seconds();
  return out;
}

SolveStats solve_stats(const LinearProgram& prog, SolveMode mode,
                       const std::vector<std::size_t>& integer_vars, long node_limit) {
  LpSolution sol = mode == SolveMode::lp ? solve_lp(prog) : solve_milp(prog, integer_vars, node_limit);
  return {sol.objective_value, sol.solve_time_s, sol.status};
}

}  // namespace mlb
