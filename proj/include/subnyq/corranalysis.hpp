#ifndef SUBNYQ_CORRANALYSIS_HPP
#define SUBNYQ_CORRANALYSIS_HPP

#include <utility>
#include <vector>

#include "subnyq/linalg.hpp"
#include "subnyq/multicoset.hpp"

namespace subnyq {

// Closed-form first and second moments of the correlogram power estimate for
// a circularly symmetric white Gaussian input with per-sample power sigma2.
// Valid once every sample window clears both boundaries, which requires
// samples_per_channel >= 2 * filter_len - 1.

struct CorrelogramStats {
    std::vector<double> expected_p; // E{p_hat}, length L
    RealMatrix cov_p;               // covariance of p_hat, L x L
    RealMatrix u_matrix;            // E{u_breve u_breve^T}, diagonal 2Q x 2Q
    std::vector<double> g_terms;    // G_k per pair, length Q
    std::vector<double> sigma_terms; // boundary corrections Sigma_k, length Q
};

// The estimate is unbiased for any N: E{p_hat} = sigma2 * ones(L).
std::vector<double> expected_power(const MultiCosetConfig& cfg, double sigma2);

// Expected stacked measurement vector: first entry 2*pi*(w/L)*H_1*sigma2,
// every other entry zero.
std::vector<double> expected_u_breve(const MultiCosetConfig& cfg,
                                     const DelayFilterBank& filters, double sigma2);

// Central and boundary fourth-moment sums for pair k:
// G_k = sum_g [h_a * h_a^rev]_g [h_b * h_b^rev]_g and Sigma_k the sum of the
// boundary window corrections at both edges.
std::pair<double, double> compute_g_sigma(const MultiCosetConfig& cfg,
                                          const DelayFilterBank& filters, int pair_index);

// Diagonal second-moment matrix of u_breve.
RealMatrix compute_u(const MultiCosetConfig& cfg, const DelayFilterBank& filters,
                     double sigma2);

// Covariance of p_hat via the pseudoinverse of the stacked measurement matrix.
RealMatrix compute_cov_p(const MultiCosetConfig& cfg, const DelayFilterBank& filters,
                         double sigma2);

// [cov_p]_{0,0} without forming the full L x L matrix; used for variance curves.
double variance_p_first(const MultiCosetConfig& cfg, const DelayFilterBank& filters,
                        double sigma2);

CorrelogramStats analyze_correlogram(const MultiCosetConfig& cfg,
                                     const DelayFilterBank& filters, double sigma2);

} // namespace subnyq

#endif
