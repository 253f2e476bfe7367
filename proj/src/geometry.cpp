#include "piccolo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace piccolo {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------------------
// FeasibleSet

FeasibleSet FeasibleSet::product_simplex(int num_blocks, int block_dim) {
  if (num_blocks < 1 || block_dim < 1)
    throw StructuralError("product_simplex: blocks and block_dim must be positive");
  FeasibleSet s;
  s.kind_ = SetKind::ProductSimplex;
  s.num_blocks_ = num_blocks;
  s.block_dim_ = block_dim;
  s.dim_ = static_cast<Eigen::Index>(num_blocks) * block_dim;
  return s;
}

FeasibleSet FeasibleSet::l2_ball(Vec center, double radius) {
  if (!(radius > 0)) throw StructuralError("l2_ball: radius must be positive");
  require_finite(center, "l2_ball center");
  FeasibleSet s;
  s.kind_ = SetKind::L2Ball;
  s.dim_ = center.size();
  s.center_ = std::move(center);
  s.radius_ = radius;
  return s;
}

FeasibleSet FeasibleSet::box(Vec lower, Vec upper) {
  if (lower.size() != upper.size()) throw StructuralError("box: bound dimensions differ");
  require_finite(lower, "box lower");
  require_finite(upper, "box upper");
  if (((upper - lower).array() < 0).any())
    throw StructuralError("box: upper must dominate lower");
  FeasibleSet s;
  s.kind_ = SetKind::Box;
  s.dim_ = lower.size();
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  return s;
}

Vec simplex_project(const Vec& v) {
  const Eigen::Index d = v.size();
  std::vector<double> u(v.data(), v.data() + d);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0;
  double theta = 0.0;
  long rho = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    cum += u[j];
    double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t >= 0.0) {  // >= keeps threshold-tied elements in the support
      rho = j + 1;
      theta = t;
    }
  }
  (void)rho;
  Vec out(d);
  for (Eigen::Index i = 0; i < d; ++i) out[i] = std::max(v[i] - theta, 0.0);
  return out;
}

Vec FeasibleSet::project(const Vec& x) const {
  require_dim(x, dim_, "project");
  require_finite(x, "project");
  switch (kind_) {
    case SetKind::ProductSimplex: {
      Vec out(dim_);
      for (int b = 0; b < num_blocks_; ++b)
        out.segment(b * block_dim_, block_dim_) =
            simplex_project(x.segment(b * block_dim_, block_dim_));
      return out;
    }
    case SetKind::L2Ball: {
      Vec d = x - center_;
      double n = d.norm();
      if (n <= radius_) return x;
      return center_ + (radius_ / n) * d;
    }
    case SetKind::Box:
      return x.cwiseMax(lower_).cwiseMin(upper_);
  }
  throw StructuralError("project: unknown set kind");
}

namespace {

// argmin over block simplex of sum_i d_i (z_i - x_i)^2 / 2.
// KKT: z_i = max(x_i - theta / d_i, 0), theta chosen so the block sums to 1.
Vec weighted_simplex_project(const Vec& x, const Vec& d) {
  double lo = 0.0, hi = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    lo = std::min(lo, (x[i] - 1.0) * d[i]);
    hi = std::max(hi, x[i] * d[i]);
  }
  auto mass = [&](double theta) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += std::max(x[i] - theta / d[i], 0.0);
    return s;
  };
  // mass is nonincreasing in theta; bisect to machine precision.
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mass(mid) > 1.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-16 * (1.0 + std::abs(hi))) break;
  }
  double theta = 0.5 * (lo + hi);
  Vec z(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) z[i] = std::max(x[i] - theta / d[i], 0.0);
  double s = z.sum();
  if (s > 0) z /= s;  // absorb bisection residue
  return z;
}

}  // namespace

Vec FeasibleSet::project_weighted(const Vec& x, const Vec& diag) const {
  require_dim(x, dim_, "project_weighted");
  require_dim(diag, dim_, "project_weighted metric");
  if ((diag.array() <= 0).any())
    throw StructuralError("project_weighted: metric must be positive");
  switch (kind_) {
    case SetKind::Box:
      return x.cwiseMax(lower_).cwiseMin(upper_);  // separable, metric-independent
    case SetKind::ProductSimplex: {
      Vec out(dim_);
      for (int b = 0; b < num_blocks_; ++b)
        out.segment(b * block_dim_, block_dim_) =
            weighted_simplex_project(x.segment(b * block_dim_, block_dim_),
                                     diag.segment(b * block_dim_, block_dim_));
      return out;
    }
    case SetKind::L2Ball: {
      Vec delta = x - center_;
      if (delta.norm() <= radius_) return x;
      // KKT: z = (D + lambda I)^{-1} (D x + lambda c); find lambda >= 0 with
      // ||z - c|| = r. The norm is decreasing in lambda.
      auto dist = [&](double lambda) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < dim_; ++i) {
          double zi = (diag[i] * delta[i]) / (diag[i] + lambda);
          s += zi * zi;
        }
        return std::sqrt(s);
      };
      double lo = 0.0, hi = diag.maxCoeff();
      while (dist(hi) > radius_) hi *= 2.0;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (dist(mid) > radius_)
          lo = mid;
        else
          hi = mid;
      }
      double lambda = 0.5 * (lo + hi);
      Vec z(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i)
        z[i] = center_[i] + (diag[i] * delta[i]) / (diag[i] + lambda);
      // land exactly on the sphere to keep feasibility independent of the
      // bisection residue
      Vec dd = z - center_;
      double n = dd.norm();
      if (n > radius_) z = center_ + (radius_ / n) * dd;
      return z;
    }
  }
  throw StructuralError("project_weighted: unknown set kind");
}

bool FeasibleSet::contains(const Vec& x, double tol) const {
  if (x.size() != dim_ || !x.allFinite()) return false;
  switch (kind_) {
    case SetKind::ProductSimplex: {
      for (int b = 0; b < num_blocks_; ++b) {
        auto blk = x.segment(b * block_dim_, block_dim_);
        if ((blk.array() < -tol).any()) return false;
        if (std::abs(blk.sum() - 1.0) > tol) return false;
      }
      return true;
    }
    case SetKind::L2Ball:
      return (x - center_).norm() <= radius_ + tol;
    case SetKind::Box:
      return ((x - lower_).array() >= -tol).all() && ((upper_ - x).array() >= -tol).all();
  }
  return false;
}

double FeasibleSet::euclidean_diameter() const {
  switch (kind_) {
    case SetKind::ProductSimplex:
      return std::sqrt(2.0 * num_blocks_);
    case SetKind::L2Ball:
      return 2.0 * radius_;
    case SetKind::Box:
      return (upper_ - lower_).norm();
  }
  return 0.0;
}

Vec FeasibleSet::sample(Rng& rng) const {
  switch (kind_) {
    case SetKind::ProductSimplex: {
      Vec out(dim_);
      for (int b = 0; b < num_blocks_; ++b) {
        // exponential spacings give a uniform simplex point
        Vec e(block_dim_);
        double s = 0.0;
        for (int i = 0; i < block_dim_; ++i) {
          e[i] = -std::log(1.0 - rng.uniform());
          s += e[i];
        }
        out.segment(b * block_dim_, block_dim_) = e / s;
      }
      return out;
    }
    case SetKind::L2Ball:
      return center_ + rng.ball(dim_, radius_);
    case SetKind::Box: {
      Vec out(dim_);
      for (Eigen::Index i = 0; i < dim_; ++i) out[i] = rng.uniform(lower_[i], upper_[i]);
      return out;
    }
  }
  throw StructuralError("sample: unknown set kind");
}

Vec FeasibleSet::interior_point() const {
  switch (kind_) {
    case SetKind::ProductSimplex:
      return Vec::Constant(dim_, 1.0 / block_dim_);
    case SetKind::L2Ball:
      return center_;
    case SetKind::Box:
      return 0.5 * (lower_ + upper_);
  }
  throw StructuralError("interior_point: unknown set kind");
}

// ---------------------------------------------------------------------------
// BregmanGeometry

BregmanGeometry BregmanGeometry::squared_euclidean(double scale) {
  if (!(scale > 0)) throw StructuralError("squared_euclidean: scale must be positive");
  BregmanGeometry g;
  g.kind_ = GenKind::SquaredEuclidean;
  g.scale_ = scale;
  g.alpha_ = scale;  // against the plain L2 norm
  return g;
}

BregmanGeometry BregmanGeometry::negative_entropy(double scale) {
  if (!(scale > 0)) throw StructuralError("negative_entropy: scale must be positive");
  BregmanGeometry g;
  g.kind_ = GenKind::NegativeEntropy;
  g.scale_ = scale;
  // Pinsker per block and ||.||_1 >= ||.||_2 give B >= (scale/2)||x-y||_2^2
  // on product simplexes.
  g.alpha_ = scale;
  return g;
}

BregmanGeometry BregmanGeometry::diagonal_quadratic(Vec diag) {
  if ((diag.array() <= 0).any())
    throw StructuralError("diagonal_quadratic: diagonal must be positive");
  BregmanGeometry g;
  g.kind_ = GenKind::DiagonalQuadratic;
  g.diag_ = std::move(diag);
  g.alpha_ = 1.0;  // against its own weighted norm
  return g;
}

BregmanGeometry BregmanGeometry::fisher_quadratic(Mat fisher, double floor_eps) {
  if (fisher.rows() != fisher.cols()) throw StructuralError("fisher_quadratic: square matrix required");
  if (!(floor_eps > 0)) throw StructuralError("fisher_quadratic: floor must be positive");
  BregmanGeometry g;
  g.kind_ = GenKind::FisherQuadratic;
  g.matrix_ = 0.5 * (fisher + fisher.transpose()) + floor_eps * Mat::Identity(fisher.rows(), fisher.cols());
  g.llt_.compute(g.matrix_);
  if (g.llt_.info() != Eigen::Success)
    throw NumericError("fisher_quadratic: matrix not positive definite after floor");
  g.alpha_ = 1.0;
  return g;
}

static constexpr double kEntropyFloor = 1e-30;

double BregmanGeometry::value(const Vec& x) const {
  switch (kind_) {
    case GenKind::SquaredEuclidean:
      return 0.5 * scale_ * x.squaredNorm();
    case GenKind::NegativeEntropy: {
      double s = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] < kEntropyFloor) throw DomainError("negative_entropy: nonpositive coordinate");
        s += x[i] * std::log(x[i]);
      }
      return scale_ * s;
    }
    case GenKind::DiagonalQuadratic:
      return 0.5 * x.dot(diag_.cwiseProduct(x));
    case GenKind::FisherQuadratic:
      return 0.5 * x.dot(matrix_ * x);
  }
  throw StructuralError("value: unknown generator");
}

Vec BregmanGeometry::gradient(const Vec& x) const {
  switch (kind_) {
    case GenKind::SquaredEuclidean:
      return scale_ * x;
    case GenKind::NegativeEntropy: {
      Vec g(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] < kEntropyFloor) throw DomainError("negative_entropy: nonpositive coordinate");
        g[i] = scale_ * (std::log(x[i]) + 1.0);
      }
      return g;
    }
    case GenKind::DiagonalQuadratic:
      return diag_.cwiseProduct(x);
    case GenKind::FisherQuadratic:
      return matrix_ * x;
  }
  throw StructuralError("gradient: unknown generator");
}

double BregmanGeometry::bregman(const Vec& x, const Vec& y) const {
  if (x.size() != y.size()) throw StructuralError("bregman: dimension mismatch");
  switch (kind_) {
    case GenKind::SquaredEuclidean:
      return 0.5 * scale_ * (x - y).squaredNorm();
    case GenKind::NegativeEntropy: {
      double s = 0.0;
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] < kEntropyFloor || y[i] < kEntropyFloor)
          throw DomainError("negative_entropy: nonpositive coordinate");
        s += x[i] * std::log(x[i] / y[i]) - x[i] + y[i];
      }
      return scale_ * s;
    }
    case GenKind::DiagonalQuadratic: {
      Vec d = x - y;
      return 0.5 * d.dot(diag_.cwiseProduct(d));
    }
    case GenKind::FisherQuadratic: {
      Vec d = x - y;
      return 0.5 * d.dot(matrix_ * d);
    }
  }
  throw StructuralError("bregman: unknown generator");
}

double BregmanGeometry::norm(const Vec& x) const {
  switch (kind_) {
    case GenKind::SquaredEuclidean:
    case GenKind::NegativeEntropy:
      return x.norm();
    case GenKind::DiagonalQuadratic:
      return std::sqrt(x.dot(diag_.cwiseProduct(x)));
    case GenKind::FisherQuadratic:
      return std::sqrt(x.dot(matrix_ * x));
  }
  throw StructuralError("norm: unknown generator");
}

double BregmanGeometry::dual_norm(const Vec& g) const {
  switch (kind_) {
    case GenKind::SquaredEuclidean:
    case GenKind::NegativeEntropy:
      return g.norm();
    case GenKind::DiagonalQuadratic:
      return std::sqrt(g.dot(g.cwiseQuotient(diag_)));
    case GenKind::FisherQuadratic: {
      Vec s = llt_.solve(g);
      return std::sqrt(g.dot(s));
    }
  }
  throw StructuralError("dual_norm: unknown generator");
}

// ---------------------------------------------------------------------------
// WeightSchedule

WeightSchedule::WeightSchedule(double exponent) : p_(exponent) {
  if (!(p_ >= 0)) throw StructuralError("weight schedule: exponent must be >= 0");
}

double WeightSchedule::weight(long n) const {
  if (n < 1) throw StructuralError("weight: round index must be >= 1");
  return std::pow(static_cast<double>(n), p_);
}

double WeightSchedule::prefix(long n) const {
  if (n < 1) throw StructuralError("prefix: round index must be >= 1");
  while (static_cast<long>(prefix_.size()) < n) {
    long k = static_cast<long>(prefix_.size()) + 1;
    double prev = prefix_.empty() ? 0.0 : prefix_.back();
    prefix_.push_back(prev + std::pow(static_cast<double>(k), p_));
  }
  return prefix_[n - 1];
}

std::pair<double, double> WeightSchedule::at(long n) const { return {weight(n), prefix(n)}; }

}  // namespace piccolo
