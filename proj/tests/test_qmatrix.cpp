#include "doctest.h"
#include "test_support.hpp"

#include "qhyp/qmatrix.hpp"

#include <algorithm>
#include <stdexcept>

using namespace qhyp;

namespace {

double max_diff(const CMatrix& a, const CMatrix& b) { return max_abs_diff(a, b); }

void check_decomposition(const CMatrix& a, const EigDecomposition& e) {
  const std::size_t d = a.dim();
  REQUIRE(e.eigenvalues.size() == d);
  REQUIRE(e.projectors.size() == d);
  CHECK(std::is_sorted(e.eigenvalues.rbegin(), e.eigenvalues.rend()));
  CMatrix sum(d);
  for (const auto& p : e.projectors) {
    CHECK(p.is_hermitian(1e-12));
    CHECK(p.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    sum += p;
  }
  CHECK(max_diff(sum, CMatrix::identity(d)) <= tol::kProjectorSum);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const CMatrix expected = i == j ? e.projectors[i] : CMatrix(d);
      CHECK(max_diff(e.projectors[i] * e.projectors[j], expected) <= tol::kProjectorOrtho);
    }
  CHECK(max_diff(e.reconstruct(), a) <= tol::kReconstruct * std::max(1.0, a.max_abs()));
}

}  // namespace

TEST_CASE("basis convention") {
  const CMatrix g = qubit::ground_state();
  CHECK(g(qubit::kGround, qubit::kGround) == cplx(1.0));
  CHECK(expect(qubit::sigma_z(), g).real() == -1.0);
  CHECK(expect(qubit::sigma_z(), qubit::excited_state()).real() == 1.0);
  // lowering = |g><e| takes |e> to |g>
  const CMatrix low = qubit::lowering();
  CHECK(max_diff(low * qubit::excited_state() * low.adjoint(), g) == 0.0);
  // sigma_y = -i (sigma_+ - sigma_-) with sigma_- = |g><e|, and [sx, sy] = 2i sz
  CHECK(max_diff(commutator(qubit::sigma_x(), qubit::sigma_y()), cplx(0, 2) * qubit::sigma_z()) < 1e-15);
}

TEST_CASE("arithmetic") {
  const CMatrix a{{1.0, cplx(0, 2)}, {3.0, 4.0}};
  const CMatrix b{{cplx(0, 1), 1.0}, {0.0, -1.0}};
  const CMatrix p = a * b;
  CHECK(p(0, 0) == cplx(0, 1));
  CHECK(p(0, 1) == cplx(1, -2));
  CHECK(p(1, 0) == cplx(0, 3));
  CHECK(p(1, 1) == cplx(-1, 0));
  CHECK(a.adjoint()(0, 1) == cplx(3, 0));
  CHECK(a.adjoint()(1, 0) == cplx(0, -2));
  CHECK(a.trace() == cplx(5, 0));
  CHECK(max_diff(anticommutator(a, b), a * b + b * a) == 0.0);
  const CMatrix k = kron(qubit::sigma_z(), CMatrix::identity(2));
  CHECK(k.dim() == 4);
  CHECK(k(0, 0) == cplx(-1.0));
  CHECK(k(3, 3) == cplx(1.0));
  CHECK_THROWS_AS(a * CMatrix(3), std::invalid_argument);
}

TEST_CASE("expect matches a naive double loop") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 1 + trial % 5;
    CMatrix a(d), r(d);
    std::normal_distribution<double> n;
    for (auto& x : a.data()) x = cplx(n(rng), n(rng));
    for (auto& x : r.data()) x = cplx(n(rng), n(rng));
    cplx naive = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k) naive += a(i, k) * r(k, i);
    CHECK(std::abs(expect(a, r) - naive) < 1e-12);
  }
  CHECK(expect(CMatrix::identity(2), qubit::excited_state()) == cplx(1.0));
  CHECK_THROWS_AS(expect(CMatrix(2), CMatrix(3)), std::invalid_argument);
}

TEST_CASE("expect of Hermitian pairs is real") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const CMatrix a = testing::random_hermitian(rng, 3);
    const CMatrix r = testing::random_density(rng, 3);
    CHECK(std::abs(expect(a, r).imag()) < 1e-12);
  }
}

TEST_CASE("hermitian_eigs on known matrices") {
  SUBCASE("diagonal") {
    const EigDecomposition e = hermitian_eigs(CMatrix::diagonal({1.0, -1.0}));
    CHECK(e.eigenvalues == std::vector<double>{1.0, -1.0});
    CHECK(max_diff(e.projectors[0], CMatrix::diagonal({1.0, 0.0})) == 0.0);
    CHECK(max_diff(e.projectors[1], CMatrix::diagonal({0.0, 1.0})) == 0.0);
  }
  SUBCASE("identity") {
    const EigDecomposition e = hermitian_eigs(CMatrix::identity(2));
    CHECK(e.eigenvalues == std::vector<double>{1.0, 1.0});
    check_decomposition(CMatrix::identity(2), e);
  }
  SUBCASE("sigma_y") {
    const EigDecomposition e = hermitian_eigs(qubit::sigma_y());
    CHECK(e.eigenvalues[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(e.eigenvalues[1] == doctest::Approx(-1.0).epsilon(1e-15));
    check_decomposition(qubit::sigma_y(), e);
  }
  SUBCASE("zero") {
    const EigDecomposition e = hermitian_eigs(CMatrix(3));
    CHECK(e.eigenvalues == std::vector<double>{0.0, 0.0, 0.0});
    check_decomposition(CMatrix(3), e);
  }
}

TEST_CASE("hermitian_eigs matches characteristic polynomial roots") {
  std::mt19937_64 rng(2024);
  for (std::size_t d : {2u, 3u, 4u, 4u, 4u, 5u}) {
    const CMatrix a = testing::random_hermitian(rng, d);
    const EigDecomposition e = hermitian_eigs(a);
    const std::vector<double> roots = testing::charpoly_eigenvalues(a);
    REQUIRE(roots.size() == d);
    for (std::size_t i = 0; i < d; ++i) CHECK(std::abs(e.eigenvalues[i] - roots[i]) < 1e-8);
    check_decomposition(a, e);
  }
}

TEST_CASE("hermitian_eigs properties on random matrices") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + trial % 6;
    const CMatrix a = testing::random_hermitian(rng, d, 1.0 + trial % 3);
    const EigDecomposition e = hermitian_eigs(a);
    check_decomposition(a, e);

    double weighted = 0.0;
    for (std::size_t i = 0; i < d; ++i) weighted += e.eigenvalues[i] * e.projectors[i].trace().real();
    CHECK(std::abs(weighted - a.trace().real()) < 1e-10);
    CHECK(trace_norm(a) >= std::abs(a.trace().real()) - 1e-12);

    const EigDecomposition again = hermitian_eigs(e.reconstruct());
    for (std::size_t i = 0; i < d; ++i) CHECK(std::abs(again.eigenvalues[i] - e.eigenvalues[i]) < 1e-8);
  }
}

TEST_CASE("hermitian_eigs is deterministic") {
  std::mt19937_64 rng(3);
  const CMatrix a = testing::random_hermitian(rng, 4);
  const EigDecomposition e1 = hermitian_eigs(a);
  const EigDecomposition e2 = hermitian_eigs(a);
  CHECK(e1.eigenvalues == e2.eigenvalues);
  for (std::size_t i = 0; i < 4; ++i) CHECK(max_diff(e1.projectors[i], e2.projectors[i]) == 0.0);
}

TEST_CASE("degenerate eigenvalues give an orthonormal rank-one split") {
  std::mt19937_64 rng(5);
  // U diag(2, 1, 1, -1) U^dag for a random unitary U built from eigenvectors of a random matrix.
  const EigDecomposition basis = hermitian_eigs(testing::random_hermitian(rng, 4));
  const double values[] = {2.0, 1.0, 1.0, -1.0};
  CMatrix a(4);
  for (std::size_t i = 0; i < 4; ++i) a += values[i] * basis.projectors[i];
  a.symmetrize();
  const EigDecomposition e = hermitian_eigs(a);
  check_decomposition(a, e);
  CHECK(e.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.eigenvalues[2] == doctest::Approx(1.0).epsilon(1e-12));
  // the two degenerate projectors span the same subspace as the original pair
  const CMatrix sub = basis.projectors[1] + basis.projectors[2];
  CHECK(max_diff(e.projectors[1] + e.projectors[2], sub) < 1e-10);
  // and are rank one
  CHECK(max_diff(e.projectors[1] * e.projectors[1], e.projectors[1]) < 1e-10);
}

TEST_CASE("hermitian_eigs rejects non-Hermitian input") {
  const CMatrix a{{1.0, 1.0}, {0.0, 1.0}};
  CHECK_THROWS_WITH_AS(hermitian_eigs(a), doctest::Contains("not Hermitian"), std::domain_error);
  CMatrix nearly = qubit::sigma_x();
  nearly(0, 1) += 1e-12;
  CHECK_NOTHROW(hermitian_eigs(nearly));
}

TEST_CASE("trace_norm") {
  CHECK(trace_norm(CMatrix::diagonal({0.5, -0.5})) == doctest::Approx(1.0));
  CHECK(trace_norm(CMatrix(3)) == 0.0);
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const CMatrix a = testing::random_hermitian(rng, 3);
    const std::vector<double> sv = testing::singular_values(a);
    double s = 0.0;
    for (double x : sv) s += x;
    CHECK(std::abs(trace_norm(a) - s) < 1e-8);
  }
}

TEST_CASE("expm") {
  const double theta = 0.7;
  const CMatrix u = expm(cplx(0, theta) * qubit::sigma_x());
  const CMatrix expected = std::cos(theta) * CMatrix::identity(2) + cplx(0, std::sin(theta)) * qubit::sigma_x();
  CHECK(max_diff(u, expected) < 1e-14);
  const CMatrix d = expm(CMatrix::diagonal({-30.0, 0.0, 2.5}));
  CHECK(d(0, 0).real() == doctest::Approx(std::exp(-30.0)).epsilon(1e-12));
  CHECK(d(1, 1).real() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d(2, 2).real() == doctest::Approx(std::exp(2.5)).epsilon(1e-13));
  CHECK(max_diff(expm(CMatrix(3)), CMatrix::identity(3)) == 0.0);

  // exp(A) exp(-A) = 1 for a random matrix with a large norm
  std::mt19937_64 rng(8);
  const CMatrix a = testing::random_hermitian(rng, 4, 3.0);
  const CMatrix ia = cplx(0.3, 1.0) * a;
  CHECK(max_diff(expm(ia) * expm(-ia), CMatrix::identity(4)) < 1e-9);
}

TEST_CASE("solve") {
  const CMatrix a{{2.0, 1.0}, {1.0, 3.0}};
  const std::vector<cplx> x = solve(a, {3.0, 5.0});
  CHECK(std::abs(x[0] - 0.8) < 1e-15);
  CHECK(std::abs(x[1] - 1.4) < 1e-15);
  CHECK_THROWS_WITH(solve(CMatrix(2), {1.0, 1.0}), doctest::Contains("singular"));
}

TEST_CASE("density matrix checks") {
  std::mt19937_64 rng(1);
  CHECK(is_density_matrix(testing::random_density(rng, 3)));
  CHECK(is_density_matrix(qubit::ground_state()));
  CHECK_FALSE(is_density_matrix(CMatrix::diagonal({1.5, -0.5})));
  CHECK_FALSE(is_density_matrix(CMatrix::diagonal({0.5, 0.4})));
  CHECK(min_eigenvalue(CMatrix::diagonal({1.5, -0.5})) == doctest::Approx(-0.5));
}

TEST_CASE("finiteness and symmetrization") {
  CMatrix a{{1.0, cplx(1, 1)}, {cplx(3, 1), 2.0}};
  CHECK(a.all_finite());
  CHECK_FALSE(a.is_hermitian());
  a.symmetrize();
  CHECK(a.is_hermitian(0.0));
  CHECK(a(0, 1) == cplx(2, 0));
  a(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(a.all_finite());
}
