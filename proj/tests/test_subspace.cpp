#include "ssearch/error.hpp"
#include "ssearch/rng.hpp"
#include "ssearch/subspace.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace ssearch;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

Matrix random_matrix(Index rows, Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

GradientWindow window_from(const Matrix& g) {
  GradientWindow w(static_cast<std::size_t>(g.cols()), g.rows());
  for (Index j = 0; j < g.cols(); ++j) w.push(g.col(j));
  return w;
}

double orthonormality_error(const SubspaceBasis& b) {
  const Matrix a = b.active();
  return (a.transpose() * a - Matrix::Identity(b.rank, b.rank)).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("push into an empty window") {
  GradientWindow w(2, 2);
  w.push(vec({1, 0}));
  CHECK(w.size() == 1);
  CHECK(w[0] == vec({1, 0}));
}

TEST_CASE("push into a full window evicts the oldest") {
  GradientWindow w(2, 2);
  w.push(vec({1, 0}));
  w.push(vec({0, 1}));
  w.push(vec({1, 1}));
  REQUIRE(w.size() == 2);
  CHECK(w[0] == vec({0, 1}));
  CHECK(w[1] == vec({1, 1}));
}

TEST_CASE("push rejects wrong length and non-finite gradients") {
  GradientWindow w(2, 2);
  CHECK_THROWS_AS(w.push(vec({1, 2, 3})), DimensionError);
  CHECK_THROWS_AS(w.push(vec({1, std::numeric_limits<double>::quiet_NaN()})), NonFiniteError);
  CHECK(w.empty());
}

TEST_CASE("after Q + k pushes the window holds the last Q in order") {
  Rng rng(2);
  for (std::size_t q : {1u, 3u, 8u}) {
    for (std::size_t k : {0u, 1u, 5u, 17u}) {
      GradientWindow w(q, 4);
      std::vector<Vector> pushed;
      for (std::size_t i = 0; i < q + k; ++i) {
        Vector g = random_matrix(4, 1, rng).col(0);
        pushed.push_back(g);
        w.push(g);
      }
      REQUIRE(w.size() == q);
      for (std::size_t i = 0; i < q; ++i) CHECK(w[i] == pushed[k + i]);
    }
  }
}

TEST_CASE("basis of G = [[1,0],[0,0]] is e1 with rank 1") {
  // G G^T = diag(1, 0): the only non-zero eigenvalue has eigenvector e1.
  Matrix g(2, 2);
  g << 1, 0, 0, 0;
  const auto b = build_basis(window_from(g), Vector::Zero(2), 1);
  CHECK(b.rank == 1);
  CHECK(b.directions(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(b.directions(1, 0)) < 1e-15);
}

TEST_CASE("two identical columns give g / |g| and rank 1, zero padded") {
  // G G^T = 2 g g^T is rank one with eigenvector g / |g|.
  const Vector g = vec({3, -4, 0});
  Matrix m(3, 2);
  m << g, g;
  const auto b = build_basis(window_from(m), Vector::Zero(3), 2);
  CHECK(b.rank == 1);
  CHECK(b.directions.cols() == 2);
  // Largest |entry| is -4, so the canonical sign flips g.
  CHECK((b.directions.col(0) - (-g / 5.0)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(b.directions.col(1).isZero(0.0));
  CHECK(b.singular_values[0] == doctest::Approx(5.0 * std::sqrt(2.0)));
}

TEST_CASE("orthonormal leading block for random windows") {
  Rng rng(100);
  for (Index d : {10, 1000}) {
    for (Index q : {4, 32}) {
      for (int seed = 0; seed < 100; ++seed) {
        const Matrix g = random_matrix(d, q, rng);
        const auto b = build_basis(window_from(g), Vector::Zero(d), q);
        REQUIRE(b.rank == std::min(d, q));
        CHECK(orthonormality_error(b) <= 1e-8);
      }
    }
  }
}

TEST_CASE("projection residual equals the tail singular energy of a full SVD") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const Index d = 1 + static_cast<Index>(rng.below(10));
    const Index q = 1 + static_cast<Index>(rng.below(6));
    Matrix g = random_matrix(d, q, rng);
    if (trial % 3 == 0 && q > 1) g.col(q - 1) = g.col(0) * 2.0;  // force rank deficiency
    const Index r = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(q)));

    const auto basis = build_basis(window_from(g), Vector::Zero(d), r);
    const Matrix a = basis.active();
    const double residual = (g - a * (a.transpose() * g)).norm();

    // Oracle: divide-and-conquer full SVD, independent of the Jacobi path.
    Eigen::BDCSVD<Matrix> full(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector sigma = full.singularValues();
    double tail = 0.0;
    for (Index i = r; i < sigma.size(); ++i) tail += sigma[i] * sigma[i];
    CHECK(std::abs(residual - std::sqrt(tail)) <= 1e-8);
  }
}

TEST_CASE("columns are ordered by singular value and sign-canonical") {
  Rng rng(9);
  const Matrix g = random_matrix(20, 6, rng);
  const auto b = build_basis(window_from(g), Vector::Zero(20), 6);
  for (Index j = 0; j + 1 < b.rank; ++j) CHECK(b.singular_values[j] >= b.singular_values[j + 1]);
  for (Index j = 0; j < b.rank; ++j) {
    Index pivot = 0;
    b.directions.col(j).cwiseAbs().maxCoeff(&pivot);
    CHECK(b.directions(pivot, j) >= 0.0);
  }
}

TEST_CASE("build_basis error paths") {
  GradientWindow empty(3, 2);
  CHECK_THROWS_AS(build_basis(empty, Vector::Zero(2), 1), DegenerateHistory);
  GradientWindow zeros(3, 2);
  zeros.push(Vector::Zero(2));
  zeros.push(Vector::Zero(2));
  CHECK_THROWS_WITH_AS(build_basis(zeros, Vector::Zero(2), 1), doctest::Contains("degenerate gradient history"),
                       DegenerateHistory);
  GradientWindow ok(3, 2);
  ok.push(vec({1, 2}));
  CHECK_THROWS_AS(build_basis(ok, Vector::Zero(3), 1), DimensionError);
}

TEST_CASE("anchor is stored unchanged") {
  GradientWindow w(2, 3);
  w.push(vec({1, 2, 3}));
  const Vector anchor = vec({0.25, -1, 7});
  CHECK(build_basis(w, anchor, 2).anchor == anchor);
}

TEST_CASE("lift examples") {
  SubspaceBasis identity{Matrix::Identity(2, 2), vec({1, 2}), 2, vec({1, 1})};
  CHECK(lift(identity, Vector::Zero(2)) == identity.anchor);
  CHECK(lift(identity, vec({0.5, -0.5})) == vec({1.5, 1.5}));

  Matrix column(2, 1);
  column << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  SubspaceBasis diagonal{column, Vector::Zero(2), 1, vec({1})};
  const Vector out = lift(diagonal, vec({std::sqrt(2.0)}));
  CHECK(out[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-15));

  CHECK_THROWS_AS(lift(diagonal, vec({1, 2, 3})), DimensionError);
}

TEST_CASE("lift accepts padded coordinates for rank-deficient bases") {
  Matrix m(3, 2);
  m << 1, 1, 0, 0, 0, 0;
  const auto b = build_basis(window_from(m), vec({1, 1, 1}), 2);
  REQUIRE(b.rank == 1);
  CHECK(lift(b, vec({2})) == lift(b, vec({2, 5})));
}

TEST_CASE("lift minus anchor is linear in z") {
  Rng rng(4);
  const Matrix g = random_matrix(50, 5, rng);
  const Vector anchor = random_matrix(50, 1, rng).col(0);
  const auto b = build_basis(window_from(g), anchor, 5);
  for (int i = 0; i < 50; ++i) {
    const Vector z1 = random_matrix(5, 1, rng).col(0);
    const Vector z2 = random_matrix(5, 1, rng).col(0);
    const double alpha = rng.normal(), beta = rng.normal();
    const Vector lhs = lift(b, alpha * z1 + beta * z2) - anchor;
    const Vector rhs = alpha * (lift(b, z1) - anchor) + beta * (lift(b, z2) - anchor);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + rhs.cwiseAbs().maxCoeff()));
  }
}
