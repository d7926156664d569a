#ifndef SUBNYQ_LINALG_HPP
#define SUBNYQ_LINALG_HPP

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace subnyq {

using cplx = std::complex<double>;

// Dense row-major complex matrix.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}

    static ComplexMatrix identity(std::size_t n) {
        ComplexMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    cplx& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    cplx* data() { return data_.data(); }
    const cplx* data() const { return data_.data(); }

    std::span<const cplx> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

// Dense row-major real matrix.
class RealMatrix {
public:
    RealMatrix() = default;
    RealMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}

    static RealMatrix identity(std::size_t n) {
        RealMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const double& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Eigenvalues in descending order; eigenvectors(:, j) pairs with eigenvalues[j].
struct EigenDecomposition {
    std::vector<double> eigenvalues;
    ComplexMatrix eigenvectors;
};

struct RealEigenDecomposition {
    std::vector<double> eigenvalues;
    RealMatrix eigenvectors;
};

struct PolynomialRoots {
    std::vector<cplx> coefficients; // ascending degree, as used after trimming
    std::vector<cplx> roots;
};

// Forces single-threaded BLAS on first use so results do not depend on an
// external thread pool. Safe to call more than once.
void init_deterministic_blas();

// Eigendecomposition of a Hermitian matrix (checked to tolerance). LAPACK zheev.
EigenDecomposition hermitian_eig(const ComplexMatrix& a);

// Eigendecomposition of a symmetric real matrix. LAPACK dsyev.
RealEigenDecomposition symmetric_eig(const RealMatrix& a);

// argmin_d ||y - B d||_2 for tall B via normal equations; throws
// SingularMatrixError when cond(B^H B) exceeds 1e12.
std::vector<cplx> least_squares(const ComplexMatrix& b, std::span<const cplx> y);

// Moore-Penrose pseudoinverse (M^T M)^{-1} M^T of a tall full-rank real matrix.
RealMatrix real_pseudoinverse(const RealMatrix& m);

// All complex roots of sum_k coefficients[k] z^k via the companion matrix.
// Trailing zero coefficients are trimmed; the trimmed degree must be >= 1.
PolynomialRoots poly_roots(std::span<const cplx> coefficients);

// Horner evaluation, coefficients ascending.
cplx poly_eval(std::span<const cplx> coefficients, cplx z);

// OpenMP kernels. Each output row is produced by exactly one thread with a
// fixed accumulation order, so results are identical for any worker count.
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix real_complex_matmul(const RealMatrix& a, const ComplexMatrix& b);
RealMatrix matmul(const RealMatrix& a, const RealMatrix& b);
std::vector<cplx> matvec(const ComplexMatrix& a, std::span<const cplx> x);
std::vector<cplx> real_matvec(const RealMatrix& a, std::span<const cplx> x);

// Serial reference kernels, kept for equivalence tests and benchmarks.
namespace serial {
ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix real_complex_matmul(const RealMatrix& a, const ComplexMatrix& b);
RealMatrix matmul(const RealMatrix& a, const RealMatrix& b);
std::vector<cplx> matvec(const ComplexMatrix& a, std::span<const cplx> x);
std::vector<cplx> real_matvec(const RealMatrix& a, std::span<const cplx> x);
} // namespace serial

ComplexMatrix adjoint(const ComplexMatrix& a);
RealMatrix transpose(const RealMatrix& a);

// A^H A, exactly Hermitian by construction (upper triangle mirrored).
ComplexMatrix gram(const ComplexMatrix& a);

std::vector<cplx> adjoint_matvec(const ComplexMatrix& a, std::span<const cplx> x); // A^H x

double max_abs(const ComplexMatrix& a);
double fro_norm(const ComplexMatrix& a);

} // namespace subnyq

#endif
