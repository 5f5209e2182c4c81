// SPDX-License-Identifier: Apache-2.0
//
// Dense two-phase revised simplex for small linear programs in standard form
//   min c.x  s.t.  A x = b, x >= 0.
// Bland's rule throughout, so the iteration terminates on degenerate
// problems. Infeasible problems return a Farkas certificate y with
// A^T y <= 0 and b.y > 0.

#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace avgbench {

struct LpProblem {
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  Eigen::VectorXd x;     // primal solution when optimal
  double objective = 0.0;
  Eigen::VectorXd dual;  // optimal duals, or the Farkas vector when infeasible
  int iterations = 0;
};

namespace simplex_detail {

constexpr double pivot_tol = 1e-9;
constexpr double cost_tol = 1e-9;

struct Tableau {
  Eigen::MatrixXd a;       // m x n, includes artificial columns
  Eigen::VectorXd b;       // >= 0
  std::vector<int> basis;  // m basic column indices
  int iterations = 0;

  Eigen::PartialPivLU<Eigen::MatrixXd> factor_basis() const {
    const int m = int(a.rows());
    Eigen::MatrixXd bm(m, m);
    for (int i = 0; i < m; ++i) bm.col(i) = a.col(basis[i]);
    return Eigen::PartialPivLU<Eigen::MatrixXd>(bm);
  }

  // returns false when unbounded in the pricing direction
  bool iterate(const Eigen::VectorXd& cost, int n_price, Eigen::VectorXd* dual_out) {
    const int m = int(a.rows());
    for (;;) {
      const auto lu = factor_basis();
      Eigen::VectorXd cb(m);
      for (int i = 0; i < m; ++i) cb(i) = cost(basis[i]);
      const Eigen::VectorXd y = lu.transpose().solve(cb);
      int entering = -1;
      for (int j = 0; j < n_price; ++j) {  // Bland: first improving index
        bool basic = false;
        for (int i = 0; i < m; ++i)
          if (basis[i] == j) {
            basic = true;
            break;
          }
        if (basic) continue;
        if (cost(j) - y.dot(a.col(j)) < -cost_tol) {
          entering = j;
          break;
        }
      }
      if (entering < 0) {
        if (dual_out) *dual_out = y;
        return true;  // optimal
      }
      const Eigen::VectorXd xb = lu.solve(b);
      const Eigen::VectorXd w = lu.solve(a.col(entering));
      int leave = -1;
      double best_ratio = 0.0;
      for (int i = 0; i < m; ++i) {
        if (w(i) <= pivot_tol) continue;
        const double ratio = std::max(xb(i), 0.0) / w(i);
        if (leave < 0 || ratio < best_ratio - 1e-15 ||
            (std::abs(ratio - best_ratio) <= 1e-15 && basis[i] < basis[leave]))
          leave = i, best_ratio = ratio;
      }
      if (leave < 0) return false;  // unbounded
      basis[leave] = entering;
      if (++iterations > 20000)
        throw std::runtime_error("simplex: iteration limit exceeded");
    }
  }
};

}  // namespace simplex_detail

inline LpResult solve_lp(const LpProblem& p) {
  using namespace simplex_detail;
  const int m = int(p.a.rows());
  const int n = int(p.a.cols());
  if (p.b.size() != m || p.c.size() != n)
    throw std::invalid_argument("solve_lp: inconsistent dimensions");

  Tableau t;
  t.a.resize(m, n + m);
  t.a.leftCols(n) = p.a;
  t.b = p.b;
  for (int i = 0; i < m; ++i)
    if (t.b(i) < 0) {
      t.b(i) = -t.b(i);
      t.a.row(i).head(n) = -t.a.row(i).head(n);
    }
  t.a.rightCols(m) = Eigen::MatrixXd::Identity(m, m);
  t.basis.resize(m);
  for (int i = 0; i < m; ++i) t.basis[i] = n + i;

  LpResult res;

  // phase 1: minimize the artificial mass
  Eigen::VectorXd cost1 = Eigen::VectorXd::Zero(n + m);
  cost1.tail(m).setOnes();
  Eigen::VectorXd dual;
  if (!t.iterate(cost1, n + m, &dual))
    throw std::runtime_error("simplex: phase 1 unbounded");
  {
    const auto lu = t.factor_basis();
    const Eigen::VectorXd xb = lu.solve(t.b);
    double art = 0.0;
    for (int i = 0; i < m; ++i)
      if (t.basis[i] >= n) art += std::max(xb(i), 0.0);
    if (art > 1e-8) {
      res.status = LpStatus::infeasible;
      // certificate in the original row signs: A^T y <= 0 and b.y > 0
      Eigen::VectorXd farkas = dual;
      for (int i = 0; i < m; ++i)
        if (p.b(i) < 0) farkas(i) = -farkas(i);
      res.dual = farkas;
      res.iterations = t.iterations;
      return res;
    }
  }

  // pivot residual artificials out of the basis; rows that resist are
  // linearly dependent and get dropped
  std::vector<bool> keep(m, true);
  for (int i = 0; i < m; ++i) {
    if (t.basis[i] < n) continue;
    const auto lu = t.factor_basis();
    bool replaced = false;
    for (int j = 0; j < n && !replaced; ++j) {
      bool basic = false;
      for (int k = 0; k < m; ++k)
        if (t.basis[k] == j) {
          basic = true;
          break;
        }
      if (basic) continue;
      const Eigen::VectorXd w = lu.solve(t.a.col(j));
      if (std::abs(w(i)) > pivot_tol) {
        t.basis[i] = j;
        replaced = true;
      }
    }
    if (!replaced) keep[i] = false;
  }
  std::vector<int> kept_rows;
  for (int i = 0; i < m; ++i)
    if (keep[i]) kept_rows.push_back(i);
  const int mk = int(kept_rows.size());
  if (mk < m) {
    Eigen::MatrixXd a2(mk, t.a.cols());
    Eigen::VectorXd b2(mk);
    std::vector<int> basis2(mk);
    for (int i = 0; i < mk; ++i) {
      a2.row(i) = t.a.row(kept_rows[i]);
      b2(i) = t.b(kept_rows[i]);
      basis2[i] = t.basis[kept_rows[i]];
    }
    t.a = a2;
    t.b = b2;
    t.basis = basis2;
  }

  // phase 2 prices only the structural columns
  Eigen::VectorXd cost2 = Eigen::VectorXd::Zero(n + m);
  cost2.head(n) = p.c;
  if (!t.iterate(cost2, n, &dual)) {
    res.status = LpStatus::unbounded;
    res.iterations = t.iterations;
    return res;
  }

  const auto lu = t.factor_basis();
  const Eigen::VectorXd xb = lu.solve(t.b);
  res.x = Eigen::VectorXd::Zero(n);
  for (size_t i = 0; i < t.basis.size(); ++i)
    if (t.basis[i] < n) res.x(t.basis[i]) = xb(i);
  res.objective = p.c.dot(res.x);
  res.dual = Eigen::VectorXd::Zero(m);
  for (size_t i = 0; i < t.basis.size(); ++i) {
    const int row = mk < m ? kept_rows[i] : int(i);
    res.dual(row) = dual(i);
  }
  for (int i = 0; i < m; ++i)
    if (p.b(i) < 0) res.dual(i) = -res.dual(i);
  res.status = LpStatus::optimal;
  res.iterations = t.iterations;
  return res;
}

}  // namespace avgbench
