#ifndef SUBNYQ_CRB_HPP
#define SUBNYQ_CRB_HPP

#include <span>
#include <vector>

#include "subnyq/linalg.hpp"
#include "subnyq/spectralcs.hpp"

namespace subnyq {

// Deterministic Cramer-Rao bound for the sinusoid mixture observed through a
// real compressive matrix in circular complex noise with per-sample variance
// sigma2. Parameter vector theta = [Re(d); Im(d); omega], length 3K.

struct DerivativeMatrices {
    ComplexMatrix a;              // steering matrix, N x K
    ComplexMatrix g;              // dA/d omega columns: g_k(n) = -j n exp(-j w_k n)
    ComplexMatrix amplitude_diag; // diag(d), K x K
};

DerivativeMatrices build_derivative_matrices(const LineSpectrumModel& model, int n_len);

struct FisherAssembly {
    ComplexMatrix f;         // (2/sigma2) B^H B, K x K
    ComplexMatrix delta;     // (2/sigma2) B^H Phi G D, K x K
    RealMatrix lambda_block; // (2/sigma2) Re{(Phi G D)^H (Phi G D)}, K x K
    RealMatrix i_theta;      // 3K x 3K
};

FisherAssembly fisher_information(const LineSpectrumModel& model, const RealMatrix& phi,
                                  double sigma2);

struct CrbResult {
    double crb;     // Tr{J I^{-1} J^H}, J = dx/dtheta
    double ncrb_db; // 10 log10(crb / ||x||^2)
};

CrbResult crb_trace(const LineSpectrumModel& model, const RealMatrix& phi, double sigma2);

// Gradient of the log-likelihood at the true parameters, length 3K, ordered
// [Re(d); Im(d); omega].
std::vector<double> score(const LineSpectrumModel& model, const RealMatrix& phi,
                          double sigma2, std::span<const cplx> y);

double log_likelihood(const LineSpectrumModel& model, const RealMatrix& phi, double sigma2,
                      std::span<const cplx> y);

} // namespace subnyq

#endif
