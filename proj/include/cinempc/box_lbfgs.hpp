#pragma once

// Projected limited-memory quasi-Newton minimization over a box.
//
// Variables sitting on a bound with the gradient pointing outward are frozen
// for the iteration; the L-BFGS two-loop recursion runs on the remaining free
// variables and every trial point is projected back onto the box. A projected
// steepest-descent step is the fallback when the quasi-Newton step fails the
// Armijo test. An optional initial metric (an SPD Hessian approximation)
// replaces the scalar initial inverse Hessian of the recursion.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

namespace cinempc {

struct BoxMinimizerOptions {
  int max_iterations = 150;
  double gradient_tolerance = 1e-6;  // on the infinity norm of the projected gradient step
  int memory = 8;
  double armijo = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
};

struct BoxMinimizerResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  double projected_gradient = 0.0;
};

inline Eigen::VectorXd project_box(const Eigen::VectorXd& x, const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

/// Symmetric part of `h` with eigenvalues replaced by their magnitudes,
/// floored at `rel_floor` times the largest (and a tiny absolute floor).
inline Eigen::MatrixXd positive_definite_metric(const Eigen::MatrixXd& h, double rel_floor = 1e-8) {
  const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
  const double top = ev.maxCoeff();
  const double floor = std::max(rel_floor * top, 1e-12);
  ev = ev.cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

/// `fg(x, g)` returns f(x) and writes the gradient into g. `metric`, when
/// given, must be symmetric positive definite.
template <typename Objective>
BoxMinimizerResult minimize_box(Objective&& fg, const Eigen::VectorXd& x0, const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper, const BoxMinimizerOptions& opt = {},
                                const Eigen::MatrixXd* metric = nullptr) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n) throw std::invalid_argument("minimize_box: dimension mismatch");
  if ((lower.array() > upper.array()).any()) throw std::invalid_argument("minimize_box: empty box");

  BoxMinimizerResult res;
  Eigen::VectorXd x = project_box(x0, lower, upper);
  Eigen::VectorXd g(n);
  double f = fg(x, g);
  ++res.evaluations;

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  Eigen::VectorXd xt(n), gt(n), d(n);
  Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
  if (metric && (metric->rows() != n || metric->cols() != n)) {
    throw std::invalid_argument("minimize_box: metric dimension mismatch");
  }

  // Initial inverse Hessian on the free subspace, refactored when it changes.
  Eigen::Array<bool, Eigen::Dynamic, 1> factored_free;
  std::vector<Eigen::Index> free_idx;
  Eigen::LDLT<Eigen::MatrixXd> reduced;
  auto apply_metric_inverse = [&](const Eigen::VectorXd& v) {
    if (factored_free.size() != n || (factored_free != free).any()) {
      factored_free = free;
      free_idx.clear();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (free[i]) free_idx.push_back(i);
      }
      const auto m = static_cast<Eigen::Index>(free_idx.size());
      Eigen::MatrixXd b(m, m);
      for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index c = 0; c < m; ++c) b(a, c) = (*metric)(free_idx[a], free_idx[c]);
      reduced.compute(b);
    }
    const auto m = static_cast<Eigen::Index>(free_idx.size());
    Eigen::VectorXd vr(m);
    for (Eigen::Index a = 0; a < m; ++a) vr[a] = v[free_idx[a]];
    const Eigen::VectorXd sol = m > 0 ? Eigen::VectorXd(reduced.solve(vr)) : vr;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
    for (Eigen::Index a = 0; a < m; ++a) out[free_idx[a]] = sol[a];
    return out;
  };

  auto projected_gradient = [&]() { return (project_box(x - g, lower, upper) - x).cwiseAbs().maxCoeff(); };

  for (;;) {
    res.projected_gradient = n > 0 ? projected_gradient() : 0.0;
    if (res.projected_gradient <= opt.gradient_tolerance) {
      res.converged = true;
      break;
    }
    if (res.iterations >= opt.max_iterations) break;

    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lower = x[i] <= lower[i] && g[i] > 0;
      const bool at_upper = x[i] >= upper[i] && g[i] < 0;
      free[i] = !(at_lower || at_upper) && lower[i] < upper[i];
    }
    const Eigen::VectorXd mask = free.cast<double>().matrix();
    const Eigen::VectorXd g_free = g.cwiseProduct(mask);

    // Two-loop recursion on the free subspace.
    Eigen::VectorXd q = g_free;
    const std::size_t m = s_hist.size();
    std::vector<double> alpha(m), rho(m);
    double gamma = 0.0;
    bool have_pairs = false;
    for (std::size_t j = m; j-- > 0;) {
      const Eigen::VectorXd s = s_hist[j].cwiseProduct(mask);
      const Eigen::VectorXd y = y_hist[j].cwiseProduct(mask);
      const double sy = s.dot(y);
      if (!(sy > 1e-16 * s.norm() * y.norm()) || sy <= 0) {
        rho[j] = 0.0;
        continue;
      }
      rho[j] = 1.0 / sy;
      alpha[j] = rho[j] * s.dot(q);
      q -= alpha[j] * y;
      if (!have_pairs) {
        gamma = sy / y.squaredNorm();
        have_pairs = true;
      }
    }
    if (metric) {
      q = apply_metric_inverse(q);
      have_pairs = true;
    } else if (have_pairs) {
      q *= gamma;
    }
    if (have_pairs) {
      for (std::size_t j = 0; j < m; ++j) {
        if (rho[j] == 0.0) continue;
        const Eigen::VectorXd s = s_hist[j].cwiseProduct(mask);
        const Eigen::VectorXd y = y_hist[j].cwiseProduct(mask);
        const double beta = rho[j] * y.dot(q);
        q += (alpha[j] - beta) * s;
      }
      d = -q.cwiseProduct(mask);
    } else {
      d = -g_free / std::max(g_free.cwiseAbs().maxCoeff(), 1.0);
    }

    auto line_search = [&](const Eigen::VectorXd& dir) {
      double step = 1.0;
      for (int b = 0; b < opt.max_backtracks; ++b, step *= opt.backtrack) {
        xt = project_box(x + step * dir, lower, upper);
        const double decrease = g.dot(xt - x);
        if (!(decrease < 0)) continue;
        const double ft = fg(xt, gt);
        ++res.evaluations;
        if (std::isfinite(ft) && ft <= f + opt.armijo * decrease) return ft;
      }
      return std::numeric_limits<double>::quiet_NaN();
    };

    double ft = std::numeric_limits<double>::quiet_NaN();
    if (g_free.dot(d) < 0) ft = line_search(d);
    if (std::isnan(ft)) {
      // Quasi-Newton step failed; fall back to projected steepest descent and
      // restart the curvature history.
      s_hist.clear();
      y_hist.clear();
      const double scale = std::max(g.cwiseAbs().maxCoeff(), 1e-300);
      ft = line_search(-g / scale);
      if (std::isnan(ft)) break;
    }

    Eigen::VectorXd s = xt - x;
    Eigen::VectorXd y = gt - g;
    if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      if (static_cast<int>(s_hist.size()) > opt.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
      }
    }
    x = xt;
    g = gt;
    f = ft;
    ++res.iterations;
  }
  res.x = std::move(x);
  res.value = f;
  return res;
}

}  // namespace cinempc
