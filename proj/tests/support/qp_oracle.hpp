#pragma once

#include "mavmpc/box_qp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <vector>
#include <random>

namespace mavmpc::testing {

/// Global minimizer of a strictly convex box QP by enumerating all 3^n
/// assignments (free, at lower, at upper): each assignment fixes the bounded
/// coordinates and minimizes over the rest; the best feasible candidate wins.
inline Eigen::VectorXd enumerate_box_qp(const BoxQp& qp) {
  const int n = qp.size();
  int total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  Eigen::VectorXd best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (int code = 0; code < total; ++code) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    std::vector<int> free;
    int c = code;
    for (int i = 0; i < n; ++i, c /= 3) {
      if (c % 3 == 1) z(i) = qp.lb(i);
      else if (c % 3 == 2) z(i) = qp.ub(i);
      else free.push_back(i);
    }
    if (!free.empty()) {
      const int m = static_cast<int>(free.size());
      Eigen::MatrixXd Hff(m, m);
      Eigen::VectorXd rhs(m);
      for (int a = 0; a < m; ++a) {
        rhs(a) = -qp.g(free[a]);
        for (int j = 0; j < n; ++j)
          if (std::find(free.begin(), free.end(), j) == free.end()) rhs(a) -= qp.H(free[a], j) * z(j);
        for (int b = 0; b < m; ++b) Hff(a, b) = qp.H(free[a], free[b]);
      }
      const Eigen::VectorXd zf = Hff.ldlt().solve(rhs);
      for (int a = 0; a < m; ++a) z(free[a]) = zf(a);
    }
    bool feasible = true;
    for (int i = 0; i < n; ++i)
      if (z(i) < qp.lb(i) - 1e-12 || z(i) > qp.ub(i) + 1e-12) feasible = false;
    if (!feasible) continue;
    const double obj = qp.objective(z);
    if (obj < best_obj) {
      best_obj = obj;
      best = z;
    }
  }
  return best;
}

inline BoxQp random_box_qp(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.1, 2.0);
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = normal(rng);
  BoxQp qp;
  qp.H = M * M.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  qp.g.resize(n);
  qp.lb.resize(n);
  qp.ub.resize(n);
  for (int i = 0; i < n; ++i) {
    qp.g(i) = 3.0 * normal(rng);
    const double centre = 0.5 * normal(rng);
    qp.lb(i) = centre - uni(rng);
    qp.ub(i) = centre + uni(rng);
  }
  return qp;
}

}  // namespace mavmpc::testing
