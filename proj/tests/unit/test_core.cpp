#include <doctest.h>

#include <Eigen/SVD>

#include <random>

#include "qlm/complex_core.hpp"
#include "qlm/svd.hpp"
#include "support.hpp"

using namespace qlm;
using cd = std::complex<double>;

TEST_CASE("kron orders entries as a[i] * b[j] at i * |b| + j") {
    CVecd a(2), b(3);
    a << cd(1, 1), cd(2, 0);
    b << cd(0, 1), cd(3, 0), cd(1, -1);
    const CVecd k = kron(a, b);
    REQUIRE(k.size() == 6);
    for (Index i = 0; i < 2; ++i) {
        for (Index j = 0; j < 3; ++j) CHECK(k(i * 3 + j) == a(i) * b(j));
    }
}

TEST_CASE("kron of rationals is bit-exact") {
    CVecd a(2), b(2);
    a << cd(0.5, 0), cd(0.25, 0);
    b << cd(0.75, 0), cd(0.125, 0);
    const CVecd k = kron(a, b);
    CHECK(k(0) == cd(0.375, 0));
    CHECK(k(1) == cd(0.0625, 0));
    CHECK(k(2) == cd(0.1875, 0));
    CHECK(k(3) == cd(0.03125, 0));
}

TEST_CASE("kron is associative and multiplicative in norm") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        const CVecd a = test::gaussian_cvec(rng, 2), b = test::gaussian_cvec(rng, 3), c = test::gaussian_cvec(rng, 2);
        CHECK((kron(kron(a, b), c) - kron(a, kron(b, c))).norm() < 1e-12);
        CHECK(std::abs(kron(a, b).norm() - a.norm() * b.norm()) < 1e-12);
    }
}

TEST_CASE("l2_normalize yields unit norm and rejects the zero vector") {
    CVecd v(2);
    v << cd(3, 0), cd(0, 4);
    const CVecd u = l2_normalize(v);
    CHECK(u(0) == cd(0.6, 0));
    CHECK(u(1) == cd(0, 0.8));
    CHECK_THROWS_AS(l2_normalize(CVecd::Zero(3).eval()), DegenerateStateError);
    CVecd tiny = CVecd::Constant(2, cd(1e-14, 0));
    CHECK_THROWS_AS(l2_normalize(tiny), DegenerateStateError);
}

TEST_CASE("inner is conjugate-linear in its first argument") {
    CVecd a(1), b(1);
    a << cd(0, 1);
    b << cd(1, 0);
    CHECK(inner(a, b) == cd(0, -1));
    CHECK(inner(b, a) == cd(0, 1));
    CHECK_THROWS_AS(inner(a, CVecd::Zero(2).eval()), DimensionError);
}

TEST_CASE("cmatvec checks shapes") {
    CMatd m = CMatd::Identity(2, 3);
    CHECK_THROWS_AS(cmatvec(m, CVecd::Zero(2).eval()), DimensionError);
    CVecd v(3);
    v << cd(1, 0), cd(2, 0), cd(3, 0);
    CHECK(cmatvec(m, v) == v.head(2));
}

namespace {

void check_svd_against_oracle(const CMatd& m) {
    const auto r = svd<double>(m);
    const Eigen::BDCSVD<CMatd> oracle(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Index k = std::min(m.rows(), m.cols());
    REQUIRE(r.s.size() == k);
    const double scale = std::max(1.0, oracle.singularValues()(0));
    for (Index i = 0; i < k; ++i) CHECK(std::abs(r.s(i) - oracle.singularValues()(i)) < 1e-11 * scale);
    for (Index i = 1; i < k; ++i) CHECK(r.s(i - 1) >= r.s(i));
    CHECK((r.u * r.s.cast<cd>().asDiagonal() * r.v.adjoint() - m).norm() < 1e-11 * scale);
    CHECK((r.u.adjoint() * r.u - CMatd::Identity(k, k)).norm() < 1e-10);
    CHECK((r.v.adjoint() * r.v - CMatd::Identity(k, k)).norm() < 1e-10);
}

}  // namespace

TEST_CASE("Jacobi SVD matches Eigen's BDCSVD on random complex matrices") {
    std::mt19937_64 rng(11);
    for (auto [rows, cols] : std::vector<std::pair<Index, Index>>{{1, 1}, {2, 2}, {4, 4}, {8, 2}, {2, 8}, {16, 4}, {7, 5}}) {
        for (int t = 0; t < 5; ++t) {
            CMatd m(rows, cols);
            for (Index j = 0; j < cols; ++j) m.col(j) = test::gaussian_cvec(rng, rows);
            check_svd_against_oracle(m);
        }
    }
}

TEST_CASE("Jacobi SVD handles rank-deficient and zero matrices") {
    std::mt19937_64 rng(12);
    const CVecd a = test::gaussian_cvec(rng, 5), b = test::gaussian_cvec(rng, 3);
    const CMatd rank1 = a * b.adjoint();
    check_svd_against_oracle(rank1);
    const auto r = svd<double>(rank1);
    CHECK(r.s(1) < 1e-12);
    check_svd_against_oracle(CMatd::Zero(3, 4));
}

TEST_CASE("singular values of a unitary are all one") {
    std::mt19937_64 rng(13);
    const RVecd s = singular_values<double>(test::random_unitary(rng, 6));
    for (Index i = 0; i < s.size(); ++i) CHECK(std::abs(s(i) - 1.0) < 1e-12);
}

TEST_CASE("SVD is templated on the scalar") {
    CMat<float> m(2, 2);
    m << std::complex<float>(3, 0), std::complex<float>(0, 0), std::complex<float>(0, 0), std::complex<float>(0, 4);
    const RVec<float> s = singular_values<float>(m);
    CHECK(s(0) == doctest::Approx(4.0f));
    CHECK(s(1) == doctest::Approx(3.0f));
}
