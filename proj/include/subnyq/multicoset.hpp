#ifndef SUBNYQ_MULTICOSET_HPP
#define SUBNYQ_MULTICOSET_HPP

#include <span>
#include <utility>
#include <vector>

#include "subnyq/linalg.hpp"
#include "subnyq/rng.hpp"

namespace subnyq {

// Multi-coset sampler: q channels, each sampling at rate w_hz / segments_l
// with an integer offset on the Nyquist grid. The spectrum [-w/2, w/2] is
// split into segments_l equal segments whose average powers are estimated.
struct MultiCosetConfig {
    double w_hz = 1000.0;        // two-sided Nyquist rate of the input
    int segments_l = 0;          // L, odd
    std::vector<int> offsets;    // c_i, distinct integers in [0, L)
    int samples_per_channel = 0; // N
    int filter_len = 8;          // N_h, fractional-delay filter taps
    int integer_delay = 3;       // D, bulk delay added to every channel filter

    int channels() const { return static_cast<int>(offsets.size()); }
    // Q: the (1,1) pair plus all upper-triangle channel pairs.
    int pair_count() const {
        const int q = channels();
        return q * (q - 1) / 2 + 1;
    }
    long long nyquist_length() const {
        return static_cast<long long>(samples_per_channel) * segments_l;
    }
    double average_rate() const { return channels() * w_hz / segments_l; }

    static int default_integer_delay(int filter_len) { return (filter_len - 1) / 2; }

    // Throws ConfigError on structural violations.
    void validate() const;
};

// Validated constructor; integer_delay defaults from filter_len.
MultiCosetConfig make_config(double w_hz, int segments_l, std::vector<int> offsets,
                             int samples_per_channel, int filter_len = 8);

// Offsets drawn uniformly without replacement, redrawn until the resulting
// measurement matrix has full column rank.
std::vector<int> draw_offsets(int segments_l, int channels, Rng& rng);

// Channel index pairs in measurement order: (0,0) first, then all a < b in
// lexicographic order. Zero-based.
std::vector<std::pair<int, int>> correlation_pairs(int channels);

// [Gamma]_{i,l} = (w/L) exp(-j 2 pi c_i m_l / L), m_l = -(L+1)/2 + l, l = 1..L.
ComplexMatrix build_gamma(const MultiCosetConfig& cfg);

// Stacked real form of the pairwise measurement matrix:
// [Psi]_{k,l} = (w/L)^2 exp(-j 2 pi (c_a - c_b) m_l / L) over correlation_pairs,
// returned as [Re(Psi); Im(Psi)], 2Q x L.
RealMatrix build_psi_breve(const MultiCosetConfig& cfg);

// Lagrange fractional-delay taps for total delay tau, unnormalized.
std::vector<double> lagrange_fractional_delay(int length, double tau);

struct DelayFilterBank {
    std::vector<std::vector<double>> taps; // per channel, unit l2 norm
    std::vector<double> energy;            // H_a = (1/N) sum_m (N - m) h_a(m)^2
};

// Channel a gets delay c_a / L + integer_delay so cross-correlations of the
// filtered streams align on the Nyquist grid.
DelayFilterBank design_delay_filters(const MultiCosetConfig& cfg);

struct ChannelSamples {
    int samples_per_channel = 0;
    std::vector<std::vector<cplx>> channels;
};

// y_i(n) = x[n L + c_i] for n = 0..N-1.
ChannelSamples sample_signal(std::span<const cplx> x, const MultiCosetConfig& cfg);

// Correlation matrix of the delayed channel streams:
// [Rz]_{a,b} = (2 pi w / (N L)) sum_n y_a^d(n) conj(y_b^d(n)),
// where y^d is the causal truncated convolution with the channel filter.
ComplexMatrix estimate_rz(const ChannelSamples& samples, const DelayFilterBank& filters,
                          const MultiCosetConfig& cfg);

struct PowerEstimate {
    std::vector<double> p_hat;   // per-segment average power, length L
    std::vector<double> v_hat;   // spectrum-level unknowns, length L
    std::vector<double> u_breve; // stacked measurement vector, length 2Q
};

// Precomputes the pseudoinverse once; reuse across Monte Carlo trials.
class PowerSolver {
public:
    PowerSolver(const MultiCosetConfig& cfg, const DelayFilterBank& filters);

    PowerEstimate solve(const ComplexMatrix& rz) const;

    const RealMatrix& pinv() const { return pinv_; }

private:
    MultiCosetConfig cfg_;
    RealMatrix pinv_;  // (Psi_breve)^+, L x 2Q
    double energy1_;   // H_1
};

// One-shot convenience wrapper around PowerSolver.
PowerEstimate estimate_power(const ComplexMatrix& rz, const MultiCosetConfig& cfg,
                             const DelayFilterBank& filters);

// Circularly symmetric white Gaussian signal with E{|x(n)|^2} = sigma2.
std::vector<cplx> white_gaussian_signal(long long length, double sigma2, Rng& rng);

} // namespace subnyq

#endif
