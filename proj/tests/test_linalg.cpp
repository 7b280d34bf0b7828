#include <doctest.h>

#include "gma/linalg.hpp"
#include "oracles.hpp"

#include <random>

using namespace gma;

namespace {

Matrix random_symmetric(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = gauss(rng);
  }
  return 0.5 * (a + a.transpose()).eval();
}

}  // namespace

TEST_CASE("sym_eig: identity has unit spectrum") {
  const EigResult eig = sym_eig(Matrix::Identity(5, 5), 5, EigOrder::Smallest);
  for (int i = 0; i < 5; ++i) {
    CHECK(eig.values(i) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("sym_eig: diagonal matrix sorted smallest-first") {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 3.0, 1.0, 2.0;
  const EigResult eig = sym_eig(a, 3, EigOrder::Smallest);
  CHECK(eig.values(0) == doctest::Approx(1.0));
  CHECK(eig.values(1) == doctest::Approx(2.0));
  CHECK(eig.values(2) == doctest::Approx(3.0));

  const EigResult top = sym_eig(a, 2, EigOrder::Largest);
  CHECK(top.values(0) == doctest::Approx(3.0));
  CHECK(top.values(1) == doctest::Approx(2.0));
}

TEST_CASE("sym_eig: residual and orthonormality on random matrices") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const Matrix a = random_symmetric(8, seed);
    const EigResult eig = sym_eig(a, 8, EigOrder::Smallest);
    for (int i = 0; i < 8; ++i) {
      const Vector v = eig.vectors.col(i);
      const double residual = (a * v - eig.values(i) * v).norm() / v.norm();
      CHECK(residual <= 1e-8);
    }
    const Matrix gram = eig.vectors.transpose() * eig.vectors;
    CHECK((gram - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("sym_eig: rejects bad input") {
  CHECK_THROWS_AS(sym_eig(Matrix::Identity(3, 3), 0, EigOrder::Smallest),
                  NumericError);
  CHECK_THROWS_AS(sym_eig(Matrix::Identity(3, 3), 4, EigOrder::Smallest),
                  NumericError);
  Matrix asym = Matrix::Zero(3, 3);
  asym(0, 1) = 1.0;  // not mirrored
  CHECK_THROWS_AS(sym_eig(asym, 2, EigOrder::Smallest), NumericError);
  Matrix nan = Matrix::Zero(2, 2);
  nan(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sym_eig(nan, 1, EigOrder::Smallest), NumericError);
}

TEST_CASE("classical_mds: equilateral triangle reconstructs unit distances") {
  DistanceMatrix d;
  d.values = Matrix::Constant(3, 3, 1.0);
  d.values.diagonal().setZero();
  const Matrix coords = classical_mds(d, 2);
  const Matrix rec = oracle::pairwise_loop(coords);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) CHECK(rec(i, j) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("classical_mds: realizable distances reconstruct to 1e-9") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  Matrix pts(12, 3);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) pts(i, j) = gauss(rng);
  }
  const DistanceMatrix d = pairwise_distances(pts);
  const Matrix coords = classical_mds(d, 3);
  const Matrix rec = oracle::pairwise_loop(coords);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    for (Eigen::Index j = 0; j < pts.rows(); ++j) {
      if (i == j) continue;
      CHECK(std::abs(rec(i, j) - d.values(i, j)) <=
            1e-9 * std::max(1.0, d.values(i, j)));
    }
  }
}

TEST_CASE("classical_mds: single point embeds at the origin") {
  DistanceMatrix d;
  d.values = Matrix::Zero(1, 1);
  const Matrix coords = classical_mds(d, 2);
  CHECK(coords.rows() == 1);
  CHECK(coords.cols() == 2);
  CHECK(coords.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("procrustes_align: source == target gives zero residual") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  Matrix src(10, 3);
  for (Eigen::Index i = 0; i < src.rows(); ++i) {
    for (Eigen::Index j = 0; j < 3; ++j) src(i, j) = gauss(rng);
  }
  const ProcrustesResult pr = procrustes_align(src, src);
  CHECK(pr.residual <= 1e-10);
  CHECK((pr.aligned - src).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("procrustes_align: recovers planted orthogonal transforms") {
  for (std::uint64_t seed : {7ULL, 8ULL, 9ULL}) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Matrix src(15, 4);
    for (Eigen::Index i = 0; i < src.rows(); ++i) {
      for (Eigen::Index j = 0; j < 4; ++j) src(i, j) = gauss(rng);
    }
    const Matrix planted = random_rotation(4, seed + 100);
    const Matrix target = src * planted;
    const ProcrustesResult pr = procrustes_align(src, target);
    CHECK((src * pr.rotation - target).norm() <= 1e-8);
  }
}

TEST_CASE("procrustes_align: single-row degenerate case aligns exactly") {
  Matrix src(1, 3), dst(1, 3);
  src << 2.0, 0.0, 0.0;
  dst << 0.0, 2.0, 0.0;
  const ProcrustesResult pr = procrustes_align(src, dst);
  CHECK(pr.residual <= 1e-10);
}

TEST_CASE("procrustes_align: residual never beats the identity map") {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix src(8, 2), dst(8, 2);
    for (Eigen::Index i = 0; i < 8; ++i) {
      for (Eigen::Index j = 0; j < 2; ++j) {
        src(i, j) = gauss(rng);
        dst(i, j) = gauss(rng);
      }
    }
    const ProcrustesResult pr = procrustes_align(src, dst);
    CHECK(pr.residual <= (src - dst).norm() + 1e-12);
  }
}

TEST_CASE("random_rotation: d=1 gives a sign") {
  const Matrix q = random_rotation(1, 3);
  CHECK(std::abs(std::abs(q(0, 0)) - 1.0) <= 1e-12);
}

TEST_CASE("random_rotation: orthogonality and determinism") {
  for (int d : {2, 3, 5, 9}) {
    const Matrix q = random_rotation(d, 17);
    CHECK((q.transpose() * q - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() <=
          1e-10);
    const Matrix q2 = random_rotation(d, 17);
    CHECK((q - q2).cwiseAbs().maxCoeff() == 0.0);
    const Matrix q3 = random_rotation(d, 18);
    CHECK((q - q3).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("sinkhorn: constant cost with uniform marginals is the outer "
          "product") {
  const Matrix cost = Matrix::Constant(4, 6, 3.5);
  const Vector mu = Vector::Constant(4, 0.25);
  const Vector nu = Vector::Constant(6, 1.0 / 6.0);
  const Coupling c = sinkhorn(cost, mu, nu, 0.1, 1e-10, 10000);
  for (Eigen::Index i = 0; i < 4; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      CHECK(c.values(i, j) == doctest::Approx(0.25 / 6.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("sinkhorn: small epsilon recovers the 2x2 assignment") {
  // LP oracle: with cost [[0,1],[1,0]] and uniform marginals the optimal
  // plan is diag(1/2, 1/2).
  Matrix cost(2, 2);
  cost << 0.0, 1.0, 1.0, 0.0;
  const Vector mu = Vector::Constant(2, 0.5);
  const Vector nu = Vector::Constant(2, 0.5);
  const Coupling c = sinkhorn(cost, mu, nu, 0.01, 1e-10, 100000);
  CHECK(c.values(0, 1) <= 0.01);
  CHECK(c.values(1, 0) <= 0.01);
  CHECK(c.values(0, 0) == doctest::Approx(0.5).epsilon(1e-2));
}

TEST_CASE("sinkhorn: marginal residual within tolerance on a random "
          "instance") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> uni(0.0, 2.0);
  Matrix cost(10, 12);
  for (Eigen::Index i = 0; i < 10; ++i) {
    for (Eigen::Index j = 0; j < 12; ++j) cost(i, j) = uni(rng);
  }
  Vector mu(10), nu(12);
  for (int i = 0; i < 10; ++i) mu(i) = 1.0 + uni(rng);
  for (int j = 0; j < 12; ++j) nu(j) = 1.0 + uni(rng);
  mu /= mu.sum();
  nu /= nu.sum();

  const Coupling c = sinkhorn(cost, mu, nu, 0.05, 1e-9, 100000);
  const double row_err = (c.values.rowwise().sum() - mu).cwiseAbs().sum();
  const double col_err =
      (c.values.colwise().sum().transpose() - nu).cwiseAbs().sum();
  CHECK(row_err + col_err <= 1e-9);
  CHECK((c.values.array() >= 0.0).all());
}

TEST_CASE("sinkhorn: error paths") {
  const Matrix cost = Matrix::Zero(2, 2);
  const Vector uniform = Vector::Constant(2, 0.5);
  CHECK_THROWS_AS(sinkhorn(cost, uniform, uniform, 0.0, 1e-9, 100),
                  NumericError);
  Vector bad(2);
  bad << 0.7, 0.7;
  CHECK_THROWS_AS(sinkhorn(cost, bad, uniform, 0.1, 1e-9, 100), NumericError);
  // Non-convergence reports the achieved residual.
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Matrix hard(5, 4);
  for (Eigen::Index i = 0; i < 5; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) hard(i, j) = uni(rng);
  }
  Vector mu5(5), nu4(4);
  for (int i = 0; i < 5; ++i) mu5(i) = 0.5 + uni(rng);
  for (int j = 0; j < 4; ++j) nu4(j) = 0.5 + uni(rng);
  mu5 /= mu5.sum();
  nu4 /= nu4.sum();
  CHECK_THROWS_WITH_AS(sinkhorn(hard, mu5, nu4, 1e-3, 1e-13, 1),
                       doctest::Contains("marginal error"), NumericError);
}

TEST_CASE("pairwise_distances matches the double loop") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss;
  Matrix pts(9, 4);
  for (Eigen::Index i = 0; i < 9; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) pts(i, j) = gauss(rng);
  }
  const DistanceMatrix d = pairwise_distances(pts);
  const Matrix ref = oracle::pairwise_loop(pts);
  CHECK((d.values - ref).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((d.values - d.values.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(d.values.diagonal().cwiseAbs().maxCoeff() == 0.0);
}
