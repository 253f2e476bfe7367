#pragma once

#include "piccolo/common.hpp"

#include <vector>

namespace piccolo {

enum class SetKind { ProductSimplex, L2Ball, Box };

// Compact convex decision domain with Euclidean (and metric-weighted)
// projections. Immutable after construction.
class FeasibleSet {
 public:
  static FeasibleSet product_simplex(int num_blocks, int block_dim);
  static FeasibleSet l2_ball(Vec center, double radius);
  static FeasibleSet box(Vec lower, Vec upper);

  SetKind kind() const { return kind_; }
  Eigen::Index dim() const { return dim_; }
  int num_blocks() const { return num_blocks_; }
  int block_dim() const { return block_dim_; }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }

  // Euclidean projection onto the set.
  Vec project(const Vec& x) const;

  // argmin over the set of (1/2)(z - x)' diag(d) (z - x), d > 0 elementwise.
  Vec project_weighted(const Vec& x, const Vec& diag) const;

  bool contains(const Vec& x, double tol = 1e-9) const;

  double euclidean_diameter() const;

  // Uniform-ish feasible sample (exact for simplex/box, rejection-free for ball).
  Vec sample(Rng& rng) const;

  // Canonical interior point (uniform blocks / center / midpoint).
  Vec interior_point() const;

 private:
  FeasibleSet() = default;
  SetKind kind_{};
  Eigen::Index dim_ = 0;
  int num_blocks_ = 0, block_dim_ = 0;  // simplex
  Vec center_;                          // ball
  double radius_ = 0;
  Vec lower_, upper_;  // box
};

// Projection of v onto the standard probability simplex (sort-and-threshold;
// threshold ties include equal elements).
Vec simplex_project(const Vec& v);

enum class GenKind { SquaredEuclidean, NegativeEntropy, DiagonalQuadratic, FisherQuadratic };

// Bregman distance generator together with the norm it is strongly convex
// against and that norm's dual. Immutable.
class BregmanGeometry {
 public:
  static BregmanGeometry squared_euclidean(double scale);
  static BregmanGeometry negative_entropy(double scale);
  static BregmanGeometry diagonal_quadratic(Vec diag);
  static BregmanGeometry fisher_quadratic(Mat fisher, double floor_eps);

  GenKind kind() const { return kind_; }
  double scale() const { return scale_; }
  const Vec& diag() const { return diag_; }
  const Mat& matrix() const { return matrix_; }  // Fisher + floor (FisherQuadratic only)

  double value(const Vec& x) const;     // R(x)
  Vec gradient(const Vec& x) const;     // grad R(x)
  double bregman(const Vec& x, const Vec& y) const;

  // Declared norm, its dual, and the strong-convexity constant alpha with
  // B_R(x||y) >= (alpha/2) * norm(x - y)^2.
  double norm(const Vec& x) const;
  double dual_norm(const Vec& g) const;
  double strong_convexity() const { return alpha_; }

 private:
  BregmanGeometry() = default;
  GenKind kind_{};
  double scale_ = 1.0;
  double alpha_ = 1.0;
  Vec diag_;
  Mat matrix_;                       // Fisher + floor, with factorization
  Eigen::LLT<Mat> llt_;
};

// w_n = n^p with accumulated prefix sums; prefix sums are exact in
// accumulation order (w_{1:n} - w_{1:n-1} == w_n bitwise).
class WeightSchedule {
 public:
  explicit WeightSchedule(double exponent);

  double exponent() const { return p_; }
  double weight(long n) const;                 // w_n
  double prefix(long n) const;                 // w_{1:n}
  std::pair<double, double> at(long n) const;  // (w_n, w_{1:n})

 private:
  double p_;
  mutable std::vector<double> prefix_;  // prefix_[k] = w_{1:k+1}
};

}  // namespace piccolo
