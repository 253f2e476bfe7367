#pragma once

// Test-side oracles, independent of the library's solve paths.

#include "piccolo/geometry.hpp"
#include "piccolo/problems.hpp"

#include <functional>

namespace piccolo::testing {

// Brute-force projection onto the 2-simplex over a fine grid.
inline Vec grid_simplex_projection_2d(const Vec& v, int cells = 2000001) {
  double best = 1e300;
  Vec arg(2);
  for (int i = 0; i < cells; ++i) {
    double p = static_cast<double>(i) / (cells - 1);
    Vec z(2);
    z << p, 1.0 - p;
    double d = (z - v).squaredNorm();
    if (d < best) {
      best = d;
      arg = z;
    }
  }
  return arg;
}

// Generic projected-gradient minimizer (Euclidean projection), for oracle use
// on small smooth problems.
inline Vec projected_gradient_minimize(const FeasibleSet& set,
                                       const std::function<Vec(const Vec&)>& grad, Vec x,
                                       double step, int iters) {
  for (int k = 0; k < iters; ++k) x = set.project(x - step * grad(x));
  return x;
}

// Plain value iteration as an independent policy-evaluation oracle.
inline Vec value_iteration_eval(const TabularMDP& mdp, const Vec& pi, int sweeps) {
  const int S = mdp.num_states(), A = mdp.num_actions();
  Vec v = Vec::Zero(S);
  for (int k = 0; k < sweeps; ++k) {
    Vec next(S);
    for (int s = 0; s < S; ++s) {
      double acc = 0;
      for (int a = 0; a < A; ++a) {
        double q = mdp.cost()(s, a) +
                   mdp.gamma() * mdp.transitions().row(static_cast<Eigen::Index>(s) * A + a).dot(v);
        acc += pi[static_cast<Eigen::Index>(s) * A + a] * q;
      }
      next[s] = acc;
    }
    v = next;
  }
  return v;
}

// Central finite differences of a scalar function.
inline Vec finite_difference_gradient(const std::function<double(const Vec&)>& f, const Vec& x,
                                      double h = 1e-6) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

}  // namespace piccolo::testing
