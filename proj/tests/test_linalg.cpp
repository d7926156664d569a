#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "subnyq/errors.hpp"
#include "subnyq/linalg.hpp"
#include "subnyq/rng.hpp"

using namespace subnyq;

namespace {

ComplexMatrix random_complex(std::size_t rows, std::size_t cols, Rng& rng) {
    ComplexMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = {rng.gaussian(), rng.gaussian()};
    return m;
}

RealMatrix random_real(std::size_t rows, std::size_t cols, Rng& rng) {
    RealMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
    return m;
}

ComplexMatrix random_hermitian(std::size_t n, Rng& rng) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        m(i, i) = rng.gaussian();
        for (std::size_t j = i + 1; j < n; ++j) {
            m(i, j) = {rng.gaussian(), rng.gaussian()};
            m(j, i) = std::conj(m(i, j));
        }
    }
    return m;
}

double rebuild_error(const ComplexMatrix& a, const EigenDecomposition& ed) {
    const std::size_t n = a.rows();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            cplx acc = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                acc += ed.eigenvectors(i, k) * ed.eigenvalues[k] *
                       std::conj(ed.eigenvectors(j, k));
            worst = std::max(worst, std::abs(acc - a(i, j)));
        }
    return worst;
}

} // namespace

TEST_CASE("hermitian_eig identity and diagonal") {
    const ComplexMatrix eye = ComplexMatrix::identity(4);
    const EigenDecomposition ed = hermitian_eig(eye);
    for (double v : ed.eigenvalues) CHECK(v == doctest::Approx(1.0).epsilon(1e-14));

    ComplexMatrix d(3, 3);
    d(0, 0) = 2.0;
    d(1, 1) = -5.0;
    d(2, 2) = 7.0;
    const EigenDecomposition dd = hermitian_eig(d);
    CHECK(dd.eigenvalues[0] == doctest::Approx(7.0).epsilon(1e-14));
    CHECK(dd.eigenvalues[1] == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(dd.eigenvalues[2] == doctest::Approx(-5.0).epsilon(1e-14));
}

TEST_CASE("hermitian_eig rejects non-Hermitian input") {
    ComplexMatrix m(2, 2);
    m(0, 1) = {1.0, 0.0};
    m(1, 0) = {2.0, 0.0};
    CHECK_THROWS_AS(hermitian_eig(m), ConfigError);
}

TEST_CASE("hermitian_eig reconstructs 1000 random matrices") {
    const std::size_t sizes[] = {2, 3, 5, 8, 13, 21, 33, 64};
    Rng rng = Rng::stream(7, "linalg:herm", 0);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = sizes[trial % 8];
        const ComplexMatrix a = random_hermitian(n, rng);
        const EigenDecomposition ed = hermitian_eig(a);
        REQUIRE(ed.eigenvalues.size() == n);
        for (std::size_t k = 0; k + 1 < n; ++k) CHECK(ed.eigenvalues[k] >= ed.eigenvalues[k + 1]);
        CHECK(rebuild_error(a, ed) < 1e-9 * static_cast<double>(n));

        // Columns must be orthonormal.
        for (std::size_t j = 0; j < n; ++j) {
            cplx dot = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                dot += std::conj(ed.eigenvectors(i, j)) * ed.eigenvectors(i, (j + 1) % n);
            cplx self = 0.0;
            for (std::size_t i = 0; i < n; ++i) self += std::norm(ed.eigenvectors(i, j));
            CHECK(std::abs(self - 1.0) < 1e-10);
            if (n > 1) CHECK(std::abs(dot) < 1e-10);
        }
    }
}

TEST_CASE("symmetric_eig reconstructs random matrices") {
    Rng rng = Rng::stream(7, "linalg:sym", 0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 15;
        RealMatrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                a(i, j) = rng.gaussian();
                a(j, i) = a(i, j);
            }
        const RealEigenDecomposition ed = symmetric_eig(a);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    acc += ed.eigenvectors(i, k) * ed.eigenvalues[k] * ed.eigenvectors(j, k);
                CHECK(std::abs(acc - a(i, j)) < 1e-10 * static_cast<double>(n));
            }
    }
}

TEST_CASE("least_squares recovers a planted solution") {
    Rng rng = Rng::stream(11, "linalg:ls", 0);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 24, k = 6;
        const ComplexMatrix b = random_complex(m, k, rng);
        std::vector<cplx> x(k);
        for (auto& v : x) v = {rng.gaussian(), rng.gaussian()};
        std::vector<cplx> y(m, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < k; ++j) y[i] += b(i, j) * x[j];
        const std::vector<cplx> got = least_squares(b, y);
        REQUIRE(got.size() == k);
        for (std::size_t j = 0; j < k; ++j) CHECK(std::abs(got[j] - x[j]) < 1e-9);
    }
}

TEST_CASE("least_squares residual is orthogonal to the column space") {
    Rng rng = Rng::stream(11, "linalg:ls-orth", 0);
    const std::size_t m = 30, k = 5;
    const ComplexMatrix b = random_complex(m, k, rng);
    std::vector<cplx> y(m);
    for (auto& v : y) v = {rng.gaussian(), rng.gaussian()};
    const std::vector<cplx> x = least_squares(b, y);
    std::vector<cplx> r = y;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j) r[i] -= b(i, j) * x[j];
    const std::vector<cplx> bh_r = adjoint_matvec(b, r);
    for (const cplx& v : bh_r) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("least_squares reports singular systems") {
    Rng rng = Rng::stream(11, "linalg:ls-sing", 0);
    ComplexMatrix b = random_complex(8, 3, rng);
    for (std::size_t i = 0; i < 8; ++i) b(i, 2) = b(i, 0);
    std::vector<cplx> y(8, 1.0);
    CHECK_THROWS_AS((void)least_squares(b, y), SingularMatrixError);
    try {
        (void)least_squares(b, y);
    } catch (const SingularMatrixError& e) {
        CHECK(e.condition_number() > 1e12);
    }
}

TEST_CASE("real_pseudoinverse matches a hand-computed example") {
    // M = [[1,0],[0,1],[1,1]]: pinv = (1/3) [[2,-1,1],[-1,2,1]].
    RealMatrix m(3, 2);
    m(0, 0) = 1.0;
    m(1, 1) = 1.0;
    m(2, 0) = 1.0;
    m(2, 1) = 1.0;
    const RealMatrix p = real_pseudoinverse(m);
    REQUIRE(p.rows() == 2);
    REQUIRE(p.cols() == 3);
    const double e[2][3] = {{2.0 / 3.0, -1.0 / 3.0, 1.0 / 3.0},
                            {-1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0}};
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(p(i, j) == doctest::Approx(e[i][j]).epsilon(1e-12));
}

TEST_CASE("real_pseudoinverse is a left inverse of random tall matrices") {
    Rng rng = Rng::stream(13, "linalg:pinv", 0);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t rows = 9 + trial % 8, cols = 2 + trial % 5;
        const RealMatrix m = random_real(rows, cols, rng);
        const RealMatrix p = real_pseudoinverse(m);
        const RealMatrix pm = matmul(p, m);
        for (std::size_t i = 0; i < cols; ++i)
            for (std::size_t j = 0; j < cols; ++j)
                CHECK(std::abs(pm(i, j) - (i == j ? 1.0 : 0.0)) < 1e-9);
    }
}

TEST_CASE("real_pseudoinverse rejects rank-deficient input") {
    RealMatrix m(4, 2);
    for (std::size_t i = 0; i < 4; ++i) {
        m(i, 0) = static_cast<double>(i + 1);
        m(i, 1) = 2.0 * static_cast<double>(i + 1);
    }
    CHECK_THROWS_AS((void)real_pseudoinverse(m), SingularMatrixError);
}

TEST_CASE("poly_roots finds the roots of z^2 + z - 6") {
    const std::vector<cplx> c = {-6.0, 1.0, 1.0};
    const PolynomialRoots pr = poly_roots(c);
    REQUIRE(pr.roots.size() == 2);
    double best2 = 1e9, best_m3 = 1e9;
    for (const cplx& r : pr.roots) {
        best2 = std::min(best2, std::abs(r - cplx(2.0, 0.0)));
        best_m3 = std::min(best_m3, std::abs(r - cplx(-3.0, 0.0)));
    }
    CHECK(best2 < 1e-12);
    CHECK(best_m3 < 1e-12);
}

TEST_CASE("poly_roots recovers all 40 roots of z^40 - 1") {
    std::vector<cplx> c(41, 0.0);
    c[0] = -1.0;
    c[40] = 1.0;
    const PolynomialRoots pr = poly_roots(c);
    REQUIRE(pr.roots.size() == 40);
    std::vector<bool> used(40, false);
    for (const cplx& r : pr.roots) {
        double best = 1e9;
        std::size_t arg = 0;
        for (std::size_t k = 0; k < 40; ++k) {
            if (used[k]) continue;
            const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) / 40.0;
            const double d = std::abs(r - std::polar(1.0, ang));
            if (d < best) {
                best = d;
                arg = k;
            }
        }
        used[arg] = true;
        CHECK(best < 1e-8);
    }
}

TEST_CASE("poly_roots on random planted roots keeps small residuals") {
    Rng rng = Rng::stream(17, "linalg:roots", 0);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t deg = 3 + trial % 10;
        std::vector<cplx> roots(deg);
        for (auto& r : roots) r = std::polar(0.5 + rng.uniform(), rng.uniform(0.0, 2.0 * std::numbers::pi));
        std::vector<cplx> c = {1.0};
        for (const cplx& r : roots) {
            std::vector<cplx> next(c.size() + 1, 0.0);
            for (std::size_t i = 0; i < c.size(); ++i) {
                next[i] += -r * c[i];
                next[i + 1] += c[i];
            }
            c = std::move(next);
        }
        const PolynomialRoots pr = poly_roots(c);
        REQUIRE(pr.roots.size() == deg);
        for (const cplx& z : pr.roots) CHECK(std::abs(poly_eval(c, z)) < 1e-6);
    }
}

TEST_CASE("poly_roots trims exact trailing zeros and rejects constants") {
    const std::vector<cplx> padded = {-6.0, 1.0, 1.0, 0.0, 0.0};
    const PolynomialRoots pr = poly_roots(padded);
    CHECK(pr.coefficients.size() == 3);
    CHECK(pr.roots.size() == 2);

    const std::vector<cplx> zero = {0.0, 0.0};
    CHECK_THROWS_AS((void)poly_roots(zero), ConfigError);
    const std::vector<cplx> constant = {4.0};
    CHECK_THROWS_AS((void)poly_roots(constant), ConfigError);
}

TEST_CASE("poly_eval works as Horner evaluation") {
    const std::vector<cplx> c = {-6.0, 1.0, 1.0};
    CHECK(std::abs(poly_eval(c, cplx(2.0, 0.0))) < 1e-15);
    const cplx at = poly_eval(c, cplx(1.0, 1.0));
    CHECK(at.real() == doctest::Approx(-5.0).epsilon(1e-14));
    CHECK(at.imag() == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("parallel kernels match the serial reference bitwise") {
    Rng rng = Rng::stream(19, "linalg:kernels", 0);

    SUBCASE("complex matmul, small and large") {
        for (const auto [m, k, n] : {std::array<std::size_t, 3>{3, 4, 5},
                                     std::array<std::size_t, 3>{33, 57, 29},
                                     std::array<std::size_t, 3>{64, 64, 64}}) {
            const ComplexMatrix a = random_complex(m, k, rng);
            const ComplexMatrix b = random_complex(k, n, rng);
            const ComplexMatrix c1 = matmul(a, b);
            const ComplexMatrix c2 = serial::matmul(a, b);
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) CHECK(c1(i, j) == c2(i, j));
        }
    }

    SUBCASE("real by complex matmul") {
        const RealMatrix a = random_real(48, 56, rng);
        const ComplexMatrix b = random_complex(56, 40, rng);
        const ComplexMatrix c1 = real_complex_matmul(a, b);
        const ComplexMatrix c2 = serial::real_complex_matmul(a, b);
        for (std::size_t i = 0; i < c1.rows(); ++i)
            for (std::size_t j = 0; j < c1.cols(); ++j) CHECK(c1(i, j) == c2(i, j));
    }

    SUBCASE("real matmul") {
        const RealMatrix a = random_real(41, 47, rng);
        const RealMatrix b = random_real(47, 43, rng);
        const RealMatrix c1 = matmul(a, b);
        const RealMatrix c2 = serial::matmul(a, b);
        for (std::size_t i = 0; i < c1.rows(); ++i)
            for (std::size_t j = 0; j < c1.cols(); ++j) CHECK(c1(i, j) == c2(i, j));
    }

    SUBCASE("matvec variants") {
        const ComplexMatrix a = random_complex(210, 200, rng);
        std::vector<cplx> x(200);
        for (auto& v : x) v = {rng.gaussian(), rng.gaussian()};
        const std::vector<cplx> y1 = matvec(a, x);
        const std::vector<cplx> y2 = serial::matvec(a, x);
        REQUIRE(y1.size() == y2.size());
        for (std::size_t i = 0; i < y1.size(); ++i) CHECK(y1[i] == y2[i]);

        const RealMatrix ra = random_real(210, 200, rng);
        const std::vector<cplx> z1 = real_matvec(ra, x);
        const std::vector<cplx> z2 = serial::real_matvec(ra, x);
        for (std::size_t i = 0; i < z1.size(); ++i) CHECK(z1[i] == z2[i]);
    }
}

TEST_CASE("matmul rejects mismatched inner dimensions") {
    const ComplexMatrix a(2, 3), b(4, 2);
    CHECK_THROWS_AS((void)matmul(a, b), ConfigError);
}

TEST_CASE("gram is exactly Hermitian and matches A^H A") {
    Rng rng = Rng::stream(23, "linalg:gram", 0);
    const ComplexMatrix a = random_complex(17, 9, rng);
    const ComplexMatrix g = gram(a);
    const ComplexMatrix ref = matmul(adjoint(a), a);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(g(i, i).imag() == 0.0);
        for (std::size_t j = 0; j < 9; ++j) {
            CHECK(g(i, j) == std::conj(g(j, i)));
            CHECK(std::abs(g(i, j) - ref(i, j)) < 1e-10);
        }
    }
}

TEST_CASE("adjoint, transpose and norms") {
    ComplexMatrix a(2, 3);
    a(0, 0) = {1.0, 2.0};
    a(1, 2) = {0.0, -4.0};
    const ComplexMatrix ah = adjoint(a);
    CHECK(ah.rows() == 3);
    CHECK(ah.cols() == 2);
    CHECK(ah(0, 0) == cplx(1.0, -2.0));
    CHECK(ah(2, 1) == cplx(0.0, 4.0));
    CHECK(max_abs(a) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(fro_norm(a) == doctest::Approx(std::sqrt(1.0 + 4.0 + 16.0)).epsilon(1e-15));

    RealMatrix r(2, 3);
    r(0, 1) = 5.0;
    const RealMatrix rt = transpose(r);
    CHECK(rt.rows() == 3);
    CHECK(rt(1, 0) == 5.0);
}
