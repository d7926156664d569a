#include "subnyq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <string>

#include <dlfcn.h>
#include <lapacke.h>

#include "subnyq/errors.hpp"

namespace subnyq {

namespace {

constexpr double kMaxCondition = 1e12;
// Work sizes below this stay serial; spawning threads costs more than the loop.
constexpr std::size_t kParallelGrain = 1u << 15;

lapack_complex_double* lp(cplx* p) { return reinterpret_cast<lapack_complex_double*>(p); }

} // namespace

void init_deterministic_blas() {
    static std::once_flag flag;
    std::call_once(flag, [] {
        setenv("OPENBLAS_NUM_THREADS", "1", 0);
        using SetThreads = void (*)(int);
        if (auto* f = reinterpret_cast<SetThreads>(dlsym(RTLD_DEFAULT, "openblas_set_num_threads")))
            f(1);
    });
}

EigenDecomposition hermitian_eig(const ComplexMatrix& a) {
    init_deterministic_blas();
    const std::size_t n = a.rows();
    if (n == 0 || a.cols() != n)
        throw ConfigError("hermitian_eig: matrix must be square and non-empty");

    double scale = 0.0, dev = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            scale = std::max(scale, std::abs(a(i, j)));
            dev = std::max(dev, std::abs(a(i, j) - std::conj(a(j, i))));
        }
    if (dev > 1e-10 * std::max(scale, 1.0))
        throw ConfigError("hermitian_eig: matrix is not Hermitian within tolerance");

    ComplexMatrix v = a;
    std::vector<double> w(n);
    const auto info = LAPACKE_zheev(LAPACK_ROW_MAJOR, 'V', 'L', static_cast<lapack_int>(n),
                                    lp(v.data()), static_cast<lapack_int>(n), w.data());
    if (info > 0)
        throw ConvergenceError("hermitian_eig: zheev failed to converge", static_cast<int>(info));
    if (info < 0)
        throw ConfigError("hermitian_eig: invalid argument passed to zheev");

    // zheev returns ascending eigenvalues; flip to descending and reorder columns.
    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = ComplexMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = w[n - 1 - j];
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, n - 1 - j);
    }
    return out;
}

RealEigenDecomposition symmetric_eig(const RealMatrix& a) {
    init_deterministic_blas();
    const std::size_t n = a.rows();
    if (n == 0 || a.cols() != n)
        throw ConfigError("symmetric_eig: matrix must be square and non-empty");

    RealMatrix v = a;
    std::vector<double> w(n);
    const auto info = LAPACKE_dsyev(LAPACK_ROW_MAJOR, 'V', 'L', static_cast<lapack_int>(n),
                                    v.data(), static_cast<lapack_int>(n), w.data());
    if (info > 0)
        throw ConvergenceError("symmetric_eig: dsyev failed to converge", static_cast<int>(info));
    if (info < 0)
        throw ConfigError("symmetric_eig: invalid argument passed to dsyev");

    RealEigenDecomposition out;
    out.eigenvalues.resize(n);
    out.eigenvectors = RealMatrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.eigenvalues[j] = w[n - 1 - j];
        for (std::size_t i = 0; i < n; ++i) out.eigenvectors(i, j) = v(i, n - 1 - j);
    }
    return out;
}

ComplexMatrix gram(const ComplexMatrix& a) {
    const std::size_t m = a.rows(), k = a.cols();
    ComplexMatrix g(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i; j < k; ++j) {
            cplx acc = 0.0;
            for (std::size_t r = 0; r < m; ++r) acc += std::conj(a(r, i)) * a(r, j);
            g(i, j) = acc;
            g(j, i) = std::conj(acc);
        }
    for (std::size_t i = 0; i < k; ++i) g(i, i) = g(i, i).real();
    return g;
}

std::vector<cplx> adjoint_matvec(const ComplexMatrix& a, std::span<const cplx> x) {
    if (x.size() != a.rows())
        throw ConfigError("adjoint_matvec: dimension mismatch");
    std::vector<cplx> out(a.cols(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const cplx xr = x[r];
        for (std::size_t c = 0; c < a.cols(); ++c) out[c] += std::conj(a(r, c)) * xr;
    }
    return out;
}

std::vector<cplx> least_squares(const ComplexMatrix& b, std::span<const cplx> y) {
    const std::size_t m = b.rows(), k = b.cols();
    if (k == 0 || m < k)
        throw ConfigError("least_squares: system must be tall (rows >= cols >= 1)");
    if (y.size() != m)
        throw ConfigError("least_squares: right-hand side length mismatch");

    const ComplexMatrix g = gram(b);
    const std::vector<cplx> rhs = adjoint_matvec(b, y);
    const EigenDecomposition ed = hermitian_eig(g);

    const double lmax = ed.eigenvalues.front();
    const double lmin = ed.eigenvalues.back();
    if (!(lmin > 0.0) || lmax / lmin > kMaxCondition) {
        const double cond = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
        throw SingularMatrixError("least_squares: normal equations are numerically singular", cond);
    }

    // d = V diag(1/lambda) V^H rhs
    std::vector<cplx> t(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        cplx acc = 0.0;
        for (std::size_t i = 0; i < k; ++i) acc += std::conj(ed.eigenvectors(i, j)) * rhs[i];
        t[j] = acc / ed.eigenvalues[j];
    }
    std::vector<cplx> d(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        cplx acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += ed.eigenvectors(i, j) * t[j];
        d[i] = acc;
    }
    return d;
}

RealMatrix real_pseudoinverse(const RealMatrix& m) {
    const std::size_t rows = m.rows(), cols = m.cols();
    if (cols == 0 || rows < cols)
        throw ConfigError("real_pseudoinverse: matrix must be tall (rows >= cols >= 1)");

    RealMatrix s(cols, cols);
    for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t j = i; j < cols; ++j) {
            double acc = 0.0;
            for (std::size_t r = 0; r < rows; ++r) acc += m(r, i) * m(r, j);
            s(i, j) = acc;
            s(j, i) = acc;
        }

    const RealEigenDecomposition ed = symmetric_eig(s);
    const double lmax = ed.eigenvalues.front();
    const double lmin = ed.eigenvalues.back();
    if (!(lmin > 0.0) || lmax / lmin > kMaxCondition) {
        const double cond = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
        throw SingularMatrixError("real_pseudoinverse: matrix is numerically rank deficient", cond);
    }

    // pinv = (V diag(1/lambda) V^T) M^T
    RealMatrix vs(cols, cols);
    for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t j = 0; j < cols; ++j)
            vs(i, j) = ed.eigenvectors(i, j) / ed.eigenvalues[j];

    RealMatrix inv(cols, cols);
    for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t j = 0; j < cols; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < cols; ++k) acc += vs(i, k) * ed.eigenvectors(j, k);
            inv(i, j) = acc;
        }

    RealMatrix pinv(cols, rows);
    for (std::size_t i = 0; i < cols; ++i)
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cols; ++j) acc += inv(i, j) * m(r, j);
            pinv(i, r) = acc;
        }
    return pinv;
}

PolynomialRoots poly_roots(std::span<const cplx> coefficients) {
    init_deterministic_blas();
    std::vector<cplx> c(coefficients.begin(), coefficients.end());
    while (!c.empty() && std::abs(c.back()) == 0.0) c.pop_back();
    if (c.size() < 2)
        throw ConfigError("poly_roots: polynomial degree must be at least 1 after trimming");

    const std::size_t n = c.size() - 1;
    const cplx lead = c.back();

    // Frobenius companion with the coefficients in the first row is already
    // upper Hessenberg, so the QR iteration runs without a reduction step.
    ComplexMatrix comp(n, n);
    for (std::size_t j = 0; j < n; ++j) comp(0, j) = -c[n - 1 - j] / lead;
    for (std::size_t i = 1; i < n; ++i) comp(i, i - 1) = 1.0;

    // Scaling-only balancing: improves accuracy for uneven coefficient
    // magnitudes and preserves the Hessenberg shape.
    std::vector<double> scale(n);
    lapack_int ilo = 0, ihi = 0;
    auto info = LAPACKE_zgebal(LAPACK_ROW_MAJOR, 'S', static_cast<lapack_int>(n),
                               lp(comp.data()), static_cast<lapack_int>(n), &ilo, &ihi,
                               scale.data());
    if (info != 0)
        throw ConfigError("poly_roots: invalid argument passed to zgebal");

    std::vector<cplx> w(n);
    // LAPACKE insists on ldz >= n even though compz='N' leaves z untouched.
    std::vector<cplx> z_dummy(n * n);
    info = LAPACKE_zhseqr(LAPACK_ROW_MAJOR, 'E', 'N', static_cast<lapack_int>(n), ilo, ihi,
                          lp(comp.data()), static_cast<lapack_int>(n), lp(w.data()),
                          lp(z_dummy.data()), static_cast<lapack_int>(n));
    if (info > 0)
        throw ConvergenceError("poly_roots: zhseqr failed to converge", static_cast<int>(info));
    if (info < 0)
        throw ConfigError("poly_roots: invalid argument passed to zhseqr");

    PolynomialRoots out;
    out.coefficients = std::move(c);
    out.roots = std::move(w);
    return out;
}

cplx poly_eval(std::span<const cplx> coefficients, cplx z) {
    cplx acc = 0.0;
    for (std::size_t i = coefficients.size(); i-- > 0;) acc = acc * z + coefficients[i];
    return acc;
}

namespace serial {

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw ConfigError("matmul: inner dimensions differ");
    ComplexMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            cplx acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    return c;
}

ComplexMatrix real_complex_matmul(const RealMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw ConfigError("real_complex_matmul: inner dimensions differ");
    ComplexMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            cplx acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    return c;
}

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b) {
    if (a.cols() != b.rows()) throw ConfigError("matmul: inner dimensions differ");
    RealMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    return c;
}

std::vector<cplx> matvec(const ComplexMatrix& a, std::span<const cplx> x) {
    if (x.size() != a.cols()) throw ConfigError("matvec: dimension mismatch");
    std::vector<cplx> out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        cplx acc = 0.0;
        for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * x[k];
        out[i] = acc;
    }
    return out;
}

std::vector<cplx> real_matvec(const RealMatrix& a, std::span<const cplx> x) {
    if (x.size() != a.cols()) throw ConfigError("real_matvec: dimension mismatch");
    std::vector<cplx> out(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double re = 0.0, im = 0.0;
        for (std::size_t k = 0; k < a.cols(); ++k) {
            re += a(i, k) * x[k].real();
            im += a(i, k) * x[k].imag();
        }
        out[i] = {re, im};
    }
    return out;
}

} // namespace serial

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw ConfigError("matmul: inner dimensions differ");
    const std::size_t m = a.rows(), n = b.cols(), k = a.cols();
    if (m * n * k < kParallelGrain) return serial::matmul(a, b);
    ComplexMatrix c(m, n);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
        cplx* crow = c.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const cplx aip = a(i, p);
            const cplx* brow = b.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

ComplexMatrix real_complex_matmul(const RealMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) throw ConfigError("real_complex_matmul: inner dimensions differ");
    const std::size_t m = a.rows(), n = b.cols(), k = a.cols();
    if (m * n * k < kParallelGrain) return serial::real_complex_matmul(a, b);
    ComplexMatrix c(m, n);
    // Four output rows share one pass over b; each c(i, j) still accumulates
    // over p in ascending order, so the result matches the serial kernel
    // bit for bit.
#pragma omp parallel for schedule(static)
    for (std::size_t ib = 0; ib < m; ib += 4) {
        const std::size_t ie = std::min(ib + 4, m);
        for (std::size_t p = 0; p < k; ++p) {
            const cplx* brow = b.data() + p * n;
            for (std::size_t i = ib; i < ie; ++i) {
                const double aip = a(i, p);
                cplx* crow = c.data() + i * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
            }
        }
    }
    return c;
}

RealMatrix matmul(const RealMatrix& a, const RealMatrix& b) {
    if (a.cols() != b.rows()) throw ConfigError("matmul: inner dimensions differ");
    const std::size_t m = a.rows(), n = b.cols(), k = a.cols();
    if (m * n * k < kParallelGrain) return serial::matmul(a, b);
    RealMatrix c(m, n);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double aip = a(i, p);
            const double* brow = b.data() + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
    return c;
}

std::vector<cplx> matvec(const ComplexMatrix& a, std::span<const cplx> x) {
    if (x.size() != a.cols()) throw ConfigError("matvec: dimension mismatch");
    const std::size_t m = a.rows(), k = a.cols();
    if (m * k < kParallelGrain) return serial::matvec(a, x);
    std::vector<cplx> out(m);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
        cplx acc = 0.0;
        const cplx* arow = a.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * x[p];
        out[i] = acc;
    }
    return out;
}

std::vector<cplx> real_matvec(const RealMatrix& a, std::span<const cplx> x) {
    if (x.size() != a.cols()) throw ConfigError("real_matvec: dimension mismatch");
    const std::size_t m = a.rows(), k = a.cols();
    if (m * k < kParallelGrain) return serial::real_matvec(a, x);
    std::vector<cplx> out(m);
#pragma omp parallel for schedule(static)
    for (std::size_t i = 0; i < m; ++i) {
        double re = 0.0, im = 0.0;
        const double* arow = a.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            re += arow[p] * x[p].real();
            im += arow[p] * x[p].imag();
        }
        out[i] = {re, im};
    }
    return out;
}

ComplexMatrix adjoint(const ComplexMatrix& a) {
    ComplexMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = std::conj(a(i, j));
    return out;
}

RealMatrix transpose(const RealMatrix& a) {
    RealMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

double max_abs(const ComplexMatrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j)));
    return m;
}

double fro_norm(const ComplexMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

} // namespace subnyq
