#include "piccolo/geometry.hpp"

#include "oracle_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace piccolo;

TEST_CASE("ball projection is a radial clip") {
  auto set = FeasibleSet::l2_ball(Vec::Zero(2), 1.0);
  Vec x(2);
  x << 3.0, 0.0;
  Vec p = set.project(x);
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("feasible simplex points are untouched") {
  auto set = FeasibleSet::product_simplex(1, 2);
  Vec x(2);
  x << 0.5, 0.5;
  CHECK((set.project(x) - x).norm() == doctest::Approx(0.0));
}

TEST_CASE("simplex projection matches the grid oracle") {
  auto set = FeasibleSet::product_simplex(1, 2);
  Vec x(2);
  x << 1.2, 0.4;
  Vec p = set.project(x);
  CHECK(p[0] == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(p[1] == doctest::Approx(0.1).epsilon(1e-9));
  Vec oracle = testing::grid_simplex_projection_2d(x);
  CHECK((p - oracle).norm() < 2e-6);
}

TEST_CASE("projection errors") {
  auto set = FeasibleSet::product_simplex(1, 2);
  Vec bad(3);
  bad.setZero();
  CHECK_THROWS_AS(set.project(bad), StructuralError);
  Vec nan(2);
  nan << std::nan(""), 0.0;
  CHECK_THROWS_AS(set.project(nan), NumericError);
}

TEST_CASE("projection idempotence and feasibility across kinds") {
  Rng rng(123);
  std::vector<FeasibleSet> sets;
  sets.push_back(FeasibleSet::product_simplex(3, 4));
  sets.push_back(FeasibleSet::l2_ball(Vec::Ones(5), 2.0));
  sets.push_back(FeasibleSet::box(-Vec::Ones(4), 2 * Vec::Ones(4)));
  for (const auto& set : sets) {
    for (int k = 0; k < 200; ++k) {
      Vec x = 3.0 * rng.gaussian_vector(set.dim());
      Vec p = set.project(x);
      CHECK(set.contains(p, 1e-12));
      CHECK((set.project(p) - p).norm() <= 1e-12);
    }
  }
}

TEST_CASE("projection is a Euclidean contraction") {
  Rng rng(7);
  auto set = FeasibleSet::product_simplex(2, 5);
  for (int k = 0; k < 300; ++k) {
    Vec x = 2.0 * rng.gaussian_vector(set.dim());
    Vec y = 2.0 * rng.gaussian_vector(set.dim());
    CHECK((set.project(x) - set.project(y)).norm() <= (x - y).norm() + 1e-12);
  }
}

TEST_CASE("weighted projection agrees with a numerical minimizer") {
  Rng rng(11);
  auto ball = FeasibleSet::l2_ball(Vec::Zero(3), 1.0);
  auto simplex = FeasibleSet::product_simplex(1, 3);
  for (int k = 0; k < 50; ++k) {
    Vec x = 2.0 * rng.gaussian_vector(3);
    Vec d(3);
    for (int i = 0; i < 3; ++i) d[i] = 0.2 + 3.0 * rng.uniform();
    for (const FeasibleSet* set : {&ball, &simplex}) {
      Vec z = set->project_weighted(x, d);
      auto grad = [&](const Vec& p) { return Vec(d.cwiseProduct(p - x)); };
      Vec oracle =
          testing::projected_gradient_minimize(*set, grad, set->project(x), 0.2, 20000);
      CHECK((z - oracle).norm() < 1e-5);
    }
  }
}

TEST_CASE("bregman values") {
  auto euclid = BregmanGeometry::squared_euclidean(1.0);
  Vec same(2);
  same << 0.3, 0.7;
  CHECK(euclid.bregman(same, same) == doctest::Approx(0.0));
  Vec x(2), y(2);
  x << 1.0, 0.0;
  y << 0.0, 0.0;
  CHECK(euclid.bregman(x, y) == doctest::Approx(0.5).epsilon(1e-12));

  auto ent = BregmanGeometry::negative_entropy(1.0);
  Vec p(2), q(2);
  p << 0.5, 0.5;
  q << 0.9, 0.1;
  // direct KL summation oracle
  double kl = 0;
  for (int i = 0; i < 2; ++i) kl += p[i] * std::log(p[i] / q[i]);
  CHECK(ent.bregman(p, q) == doctest::Approx(kl).epsilon(1e-12));
  CHECK(ent.bregman(p, q) == doctest::Approx(0.5108256238).epsilon(1e-8));
}

TEST_CASE("entropy domain errors") {
  auto ent = BregmanGeometry::negative_entropy(1.0);
  Vec p(2), q(2);
  p << 1.0, 0.0;
  q << 0.5, 0.5;
  CHECK_THROWS_AS(ent.bregman(p, q), DomainError);
}

TEST_CASE("bregman nonnegativity and strong convexity witness") {
  Rng rng(31);
  auto simplex = FeasibleSet::product_simplex(2, 4);
  auto ball = FeasibleSet::l2_ball(Vec::Zero(6), 1.5);
  std::vector<std::pair<BregmanGeometry, const FeasibleSet*>> cases;
  cases.push_back({BregmanGeometry::squared_euclidean(2.0), &ball});
  cases.push_back({BregmanGeometry::negative_entropy(1.5), &simplex});
  Vec diag(6);
  for (int i = 0; i < 6; ++i) diag[i] = 0.5 + i;
  cases.push_back({BregmanGeometry::diagonal_quadratic(diag), &ball});
  Mat f = Mat::Random(6, 6);
  cases.push_back({BregmanGeometry::fisher_quadratic(f * f.transpose(), 1e-6), &ball});
  for (auto& [geom, set] : cases) {
    double alpha = geom.strong_convexity();
    for (int k = 0; k < 300; ++k) {
      Vec x = set->sample(rng), y = set->sample(rng);
      if (geom.kind() == GenKind::NegativeEntropy) {
        x = 0.99 * x + Vec::Constant(x.size(), 0.01 / set->block_dim());
        y = 0.99 * y + Vec::Constant(y.size(), 0.01 / set->block_dim());
      }
      double b = geom.bregman(x, y);
      CHECK(b >= -1e-12);
      double n = geom.norm(x - y);
      CHECK(b + 1e-9 >= 0.5 * alpha * n * n);
    }
  }
}

TEST_CASE("dual norm consistency") {
  Rng rng(77);
  Vec diag(5);
  for (int i = 0; i < 5; ++i) diag[i] = 0.3 + i;
  Mat f = Mat::Random(5, 5);
  std::vector<BregmanGeometry> geoms = {BregmanGeometry::squared_euclidean(3.0),
                                        BregmanGeometry::diagonal_quadratic(diag),
                                        BregmanGeometry::fisher_quadratic(f * f.transpose(), 1e-4)};
  for (const auto& geom : geoms) {
    for (int k = 0; k < 300; ++k) {
      Vec g = rng.gaussian_vector(5), x = rng.gaussian_vector(5);
      CHECK(g.dot(x) <= geom.dual_norm(g) * geom.norm(x) + 1e-9);
    }
  }
}

TEST_CASE("weight schedule examples") {
  WeightSchedule w0(0.0);
  CHECK(w0.at(5).first == doctest::Approx(1.0));
  CHECK(w0.at(5).second == doctest::Approx(5.0));
  WeightSchedule w2(2.0);
  CHECK(w2.at(3).first == doctest::Approx(9.0));
  CHECK(w2.at(3).second == doctest::Approx(14.0));
  WeightSchedule w1(1.0);
  CHECK(w1.at(4).first == doctest::Approx(4.0));
  CHECK(w1.at(4).second == doctest::Approx(10.0));
  CHECK_THROWS_AS(w1.at(0), StructuralError);
}

TEST_CASE("weight prefix sums are exact in accumulation order") {
  WeightSchedule w(1.7);
  for (long n = 2; n <= 500; ++n) {
    CHECK(w.prefix(n) == w.prefix(n - 1) + w.weight(n));  // bitwise, by construction
  }
}

TEST_CASE("weight ratio monotonicity on sampled triples") {
  Rng rng(5);
  for (double p : {0.0, 0.5, 1.0, 2.0, 3.5}) {
    WeightSchedule w(p);
    for (int t = 0; t < 500; ++t) {
      long m = 1 + static_cast<long>(rng.uniform_int(0, 50));
      long n = m + static_cast<long>(rng.uniform_int(0, 50));
      long k = static_cast<long>(rng.uniform_int(0, 50));
      CHECK(w.weight(n + k) / w.weight(n) <= w.weight(m + k) / w.weight(m) + 1e-12);
    }
  }
}
