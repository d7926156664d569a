#include "subnyq/crb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "subnyq/errors.hpp"

namespace subnyq {

namespace {

void check_inputs(const LineSpectrumModel& model, const RealMatrix& phi, double sigma2) {
    if (model.count() < 1) throw ConfigError("crb: empty model");
    if (model.frequencies.size() != model.amplitudes.size())
        throw ConfigError("crb: frequency/amplitude count mismatch");
    if (phi.rows() < 1 || phi.cols() < 1) throw ConfigError("crb: empty measurement matrix");
    if (!(sigma2 > 0.0)) throw ConfigError("crb: noise variance must be positive");
}

// Phi G D, the measured frequency derivatives weighted by the amplitudes.
ComplexMatrix measured_derivatives(const DerivativeMatrices& dm, const RealMatrix& phi) {
    const int k = static_cast<int>(dm.g.cols());
    ComplexMatrix gd(dm.g.rows(), k);
    for (std::size_t n = 0; n < dm.g.rows(); ++n)
        for (int c = 0; c < k; ++c) gd(n, c) = dm.g(n, c) * dm.amplitude_diag(c, c);
    return real_complex_matmul(phi, gd);
}

std::string closest_pair_string(const LineSpectrumModel& model) {
    double best = std::numeric_limits<double>::infinity();
    int bi = 0, bj = 1;
    for (int i = 0; i < model.count(); ++i)
        for (int j = i + 1; j < model.count(); ++j) {
            const double d = circular_distance(model.frequencies[i], model.frequencies[j]);
            if (d < best) {
                best = d;
                bi = i;
                bj = j;
            }
        }
    return "closest frequencies " + std::to_string(model.frequencies[bi]) + " and " +
           std::to_string(model.frequencies[bj]);
}

} // namespace

DerivativeMatrices build_derivative_matrices(const LineSpectrumModel& model, int n_len) {
    if (n_len < 1) throw ConfigError("build_derivative_matrices: length must be positive");
    if (model.count() < 1) throw ConfigError("build_derivative_matrices: empty model");
    const int k = model.count();
    DerivativeMatrices dm;
    dm.a = vandermonde(model.frequencies, n_len);
    dm.g = ComplexMatrix(n_len, k);
    for (int c = 0; c < k; ++c)
        for (int n = 0; n < n_len; ++n)
            dm.g(n, c) = cplx{0.0, -static_cast<double>(n)} * dm.a(n, c);
    dm.amplitude_diag = ComplexMatrix(k, k);
    for (int c = 0; c < k; ++c) dm.amplitude_diag(c, c) = model.amplitudes[c];
    return dm;
}

FisherAssembly fisher_information(const LineSpectrumModel& model, const RealMatrix& phi,
                                  double sigma2) {
    check_inputs(model, phi, sigma2);
    const int k = model.count();
    const int n_len = static_cast<int>(phi.cols());
    const DerivativeMatrices dm = build_derivative_matrices(model, n_len);

    const ComplexMatrix b = real_complex_matmul(phi, dm.a);
    const ComplexMatrix t = measured_derivatives(dm, phi);
    const double c = 2.0 / sigma2;

    FisherAssembly fa;
    fa.f = gram(b);
    for (std::size_t i = 0; i < fa.f.rows(); ++i)
        for (std::size_t j = 0; j < fa.f.cols(); ++j) fa.f(i, j) *= c;

    fa.delta = ComplexMatrix(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            cplx acc = 0.0;
            for (std::size_t m = 0; m < b.rows(); ++m) acc += std::conj(b(m, i)) * t(m, j);
            fa.delta(i, j) = c * acc;
        }

    const ComplexMatrix tt = gram(t);
    fa.lambda_block = RealMatrix(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) fa.lambda_block(i, j) = c * tt(i, j).real();

    fa.i_theta = RealMatrix(3 * k, 3 * k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const double fre = fa.f(i, j).real();
            const double fim = fa.f(i, j).imag();
            const double dre = fa.delta(i, j).real();
            const double dim = fa.delta(i, j).imag();
            fa.i_theta(i, j) = fre;
            fa.i_theta(i, k + j) = -fim;
            fa.i_theta(i, 2 * k + j) = dre;
            fa.i_theta(k + i, j) = fim;
            fa.i_theta(k + i, k + j) = fre;
            fa.i_theta(k + i, 2 * k + j) = dim;
            // Lower-left blocks are the transposes of the upper-right ones.
            fa.i_theta(2 * k + j, i) = dre;
            fa.i_theta(2 * k + j, k + i) = dim;
            fa.i_theta(2 * k + i, 2 * k + j) = fa.lambda_block(i, j);
        }
    return fa;
}

CrbResult crb_trace(const LineSpectrumModel& model, const RealMatrix& phi, double sigma2) {
    check_inputs(model, phi, sigma2);
    const int k = model.count();
    const int n_len = static_cast<int>(phi.cols());
    const FisherAssembly fa = fisher_information(model, phi, sigma2);

    const RealEigenDecomposition ed = symmetric_eig(fa.i_theta);
    const double lmax = ed.eigenvalues.front();
    const double lmin = ed.eigenvalues.back();
    if (!(lmin > 0.0) || lmax / lmin > 1e12) {
        const double cond = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
        throw SingularMatrixError(
            "crb_trace: Fisher information is numerically singular, " + closest_pair_string(model),
            cond);
    }

    const int p = 3 * k;
    RealMatrix inv(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = i; j < p; ++j) {
            double acc = 0.0;
            for (int m = 0; m < p; ++m)
                acc += ed.eigenvectors(i, m) * ed.eigenvectors(j, m) / ed.eigenvalues[m];
            inv(i, j) = acc;
            inv(j, i) = acc;
        }

    // J = dx/dtheta = [A, jA, GD]; CRB = Tr{J I^{-1} J^H} = sum_ij inv_ij Re{(J^H J)_ij}.
    const DerivativeMatrices dm = build_derivative_matrices(model, n_len);
    ComplexMatrix j_mat(n_len, p);
    for (int n = 0; n < n_len; ++n)
        for (int c = 0; c < k; ++c) {
            j_mat(n, c) = dm.a(n, c);
            j_mat(n, k + c) = cplx{0.0, 1.0} * dm.a(n, c);
            j_mat(n, 2 * k + c) = dm.g(n, c) * dm.amplitude_diag(c, c);
        }
    const ComplexMatrix jj = gram(j_mat);

    double crb = 0.0;
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) crb += inv(i, j) * jj(i, j).real();

    const std::vector<cplx> x = synthesize_signal(model, n_len);
    double x2 = 0.0;
    for (const cplx& v : x) x2 += std::norm(v);
    if (!(x2 > 0.0)) throw ConfigError("crb_trace: signal energy is zero");

    return {crb, 10.0 * std::log10(crb / x2)};
}

std::vector<double> score(const LineSpectrumModel& model, const RealMatrix& phi,
                          double sigma2, std::span<const cplx> y) {
    check_inputs(model, phi, sigma2);
    const int k = model.count();
    const int n_len = static_cast<int>(phi.cols());
    if (y.size() != phi.rows()) throw ConfigError("score: measurement length mismatch");

    const DerivativeMatrices dm = build_derivative_matrices(model, n_len);
    const ComplexMatrix b = real_complex_matmul(phi, dm.a);
    std::vector<cplx> d(k);
    for (int c = 0; c < k; ++c) d[c] = model.amplitudes[c];
    const std::vector<cplx> bd = matvec(b, d);
    std::vector<cplx> w(y.begin(), y.end());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= bd[i];

    const double c = 2.0 / sigma2;
    const std::vector<cplx> bw = adjoint_matvec(b, w);

    // Phi^T w, then g_k^H (Phi^T w) per column.
    const RealMatrix phit = transpose(phi);
    const std::vector<cplx> tw = real_matvec(phit, w);

    std::vector<double> s(3 * k);
    for (int i = 0; i < k; ++i) {
        s[i] = c * bw[i].real();
        s[k + i] = c * bw[i].imag();
        cplx acc = 0.0;
        for (int n = 0; n < n_len; ++n) acc += std::conj(dm.g(n, i)) * tw[n];
        s[2 * k + i] = c * (std::conj(model.amplitudes[i]) * acc).real();
    }
    return s;
}

double log_likelihood(const LineSpectrumModel& model, const RealMatrix& phi, double sigma2,
                      std::span<const cplx> y) {
    check_inputs(model, phi, sigma2);
    if (y.size() != phi.rows()) throw ConfigError("log_likelihood: measurement length mismatch");
    const std::vector<cplx> x = synthesize_signal(model, static_cast<int>(phi.cols()));
    const std::vector<cplx> px = real_matvec(phi, x);
    double r2 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) r2 += std::norm(y[i] - px[i]);
    const double m = static_cast<double>(phi.rows());
    return -m * std::log(std::numbers::pi * sigma2) - r2 / sigma2;
}

} // namespace subnyq
