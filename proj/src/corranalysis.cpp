#include "subnyq/corranalysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "subnyq/errors.hpp"

namespace subnyq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Full convolution of h with its reversal: ac[g] = sum_i h(i) h(Nh-1-g+i),
// g = 0..2Nh-2. Equals the autocorrelation at lag g-(Nh-1).
std::vector<double> full_autocorr(const std::vector<double>& h) {
    const int nh = static_cast<int>(h.size());
    std::vector<double> ac(2 * nh - 1, 0.0);
    for (int g = 0; g < 2 * nh - 1; ++g) {
        double acc = 0.0;
        for (int i = std::max(0, g - nh + 1); i <= std::min(nh - 1, g); ++i)
            acc += h[i] * h[nh - 1 - g + i];
        ac[g] = acc;
    }
    return ac;
}

// Convolution of the left-truncated filter (taps 0..n kept) with the reversal
// of the full filter; captures the startup transient of the running estimate.
std::vector<double> windowed_autocorr(const std::vector<double>& h, int n) {
    const int nh = static_cast<int>(h.size());
    std::vector<double> wc(n + nh, 0.0);
    for (int g = 0; g < n + nh; ++g) {
        double acc = 0.0;
        const int hi = std::min({n, g, nh - 1});
        for (int i = std::max(0, g - nh + 1); i <= hi; ++i)
            acc += h[i] * h[nh - 1 - g + i];
        wc[g] = acc;
    }
    return wc;
}

void require_regime(const MultiCosetConfig& cfg, const DelayFilterBank& filters) {
    if (filters.taps.empty())
        throw ConfigError("corranalysis: filter bank is empty");
    const int nh = static_cast<int>(filters.taps.front().size());
    if (cfg.samples_per_channel < 2 * nh - 1)
        throw ConfigError("corranalysis: closed forms need samples_per_channel >= 2*filter_len-1");
}

} // namespace

std::vector<double> expected_power(const MultiCosetConfig& cfg, double sigma2) {
    if (cfg.segments_l < 1) throw ConfigError("expected_power: segments_l must be positive");
    return std::vector<double>(cfg.segments_l, sigma2);
}

std::vector<double> expected_u_breve(const MultiCosetConfig& cfg,
                                     const DelayFilterBank& filters, double sigma2) {
    if (filters.energy.empty())
        throw ConfigError("expected_u_breve: filter bank is empty");
    std::vector<double> u(2 * cfg.pair_count(), 0.0);
    u[0] = kTwoPi * (cfg.w_hz / cfg.segments_l) * filters.energy.front() * sigma2;
    return u;
}

std::pair<double, double> compute_g_sigma(const MultiCosetConfig& cfg,
                                          const DelayFilterBank& filters, int pair_index) {
    require_regime(cfg, filters);
    const auto pairs = correlation_pairs(cfg.channels());
    if (pair_index < 0 || pair_index >= static_cast<int>(pairs.size()))
        throw ConfigError("compute_g_sigma: pair index out of range");
    const auto& ha = filters.taps[pairs[pair_index].first];
    const auto& hb = filters.taps[pairs[pair_index].second];
    const int nh = static_cast<int>(ha.size());
    const int n_samples = cfg.samples_per_channel;

    const std::vector<double> ac_a = full_autocorr(ha);
    const std::vector<double> ac_b = full_autocorr(hb);

    double g_term = 0.0;
    for (int g = 0; g < 2 * nh - 1; ++g) g_term += ac_a[g] * ac_b[g];

    // Left edge: output indices whose filter window is still filling.
    double sigma = 0.0;
    for (int n = 0; n <= nh - 2; ++n) {
        const std::vector<double> wa = windowed_autocorr(ha, n);
        const std::vector<double> wb = windowed_autocorr(hb, n);
        double s = 0.0;
        for (int g = 0; g < n + nh; ++g) s += wa[g] * wb[g];
        sigma += s;
    }
    // Right edge: full windows, but the correlation partner runs off the end.
    for (int n = n_samples - nh + 1; n <= n_samples - 1; ++n) {
        const int gmax = n_samples - n + nh - 2;
        double s = 0.0;
        for (int g = 0; g <= gmax; ++g) s += ac_a[g] * ac_b[g];
        sigma += s;
    }
    return {g_term, sigma};
}

RealMatrix compute_u(const MultiCosetConfig& cfg, const DelayFilterBank& filters,
                     double sigma2) {
    require_regime(cfg, filters);
    const int q_count = cfg.pair_count();
    const int n_samples = cfg.samples_per_channel;
    const int nh = static_cast<int>(filters.taps.front().size());
    const double s = kTwoPi * cfg.w_hz / (static_cast<double>(n_samples) * cfg.segments_l);
    const double s2 = s * s;
    const double sig4 = sigma2 * sigma2;
    const double h1 = filters.energy.front();
    const double central = n_samples - 2 * nh + 2;

    RealMatrix u(2 * q_count, 2 * q_count);
    {
        const auto [g0, sg0] = compute_g_sigma(cfg, filters, 0);
        u(0, 0) = sig4 * s2 *
                  (static_cast<double>(n_samples) * n_samples * h1 * h1 + central * g0 + sg0);
    }
    for (int k = 1; k < q_count; ++k) {
        const auto [gk, sgk] = compute_g_sigma(cfg, filters, k);
        const double val = 0.5 * sig4 * s2 * (central * gk + sgk);
        u(k, k) = val;
        u(q_count + k, q_count + k) = val;
    }
    // Row q_count is the imaginary part of the autocorrelation entry: exactly zero.
    u(q_count, q_count) = 0.0;
    return u;
}

RealMatrix compute_cov_p(const MultiCosetConfig& cfg, const DelayFilterBank& filters,
                         double sigma2) {
    const RealMatrix u = compute_u(cfg, filters, sigma2);
    const RealMatrix pinv = real_pseudoinverse(build_psi_breve(cfg));
    const int l_count = cfg.segments_l;
    const int width = static_cast<int>(u.rows());
    const double h1 = filters.energy.front();
    const double c = cfg.w_hz / (kTwoPi * h1);
    const double c2 = c * c;
    const double sig4 = sigma2 * sigma2;

    RealMatrix cov(l_count, l_count);
    for (int i = 0; i < l_count; ++i)
        for (int j = i; j < l_count; ++j) {
            double acc = 0.0;
            for (int k = 0; k < width; ++k) acc += pinv(i, k) * u(k, k) * pinv(j, k);
            const double v = c2 * acc - sig4;
            cov(i, j) = v;
            cov(j, i) = v;
        }
    return cov;
}

double variance_p_first(const MultiCosetConfig& cfg, const DelayFilterBank& filters,
                        double sigma2) {
    const RealMatrix u = compute_u(cfg, filters, sigma2);
    const RealMatrix pinv = real_pseudoinverse(build_psi_breve(cfg));
    const double h1 = filters.energy.front();
    const double c = cfg.w_hz / (kTwoPi * h1);
    double acc = 0.0;
    for (std::size_t k = 0; k < u.rows(); ++k) acc += pinv(0, k) * u(k, k) * pinv(0, k);
    return c * c * acc - sigma2 * sigma2;
}

CorrelogramStats analyze_correlogram(const MultiCosetConfig& cfg,
                                     const DelayFilterBank& filters, double sigma2) {
    CorrelogramStats stats;
    stats.expected_p = expected_power(cfg, sigma2);
    stats.u_matrix = compute_u(cfg, filters, sigma2);
    stats.cov_p = compute_cov_p(cfg, filters, sigma2);
    const int q_count = cfg.pair_count();
    stats.g_terms.resize(q_count);
    stats.sigma_terms.resize(q_count);
    for (int k = 0; k < q_count; ++k) {
        const auto [g, s] = compute_g_sigma(cfg, filters, k);
        stats.g_terms[k] = g;
        stats.sigma_terms[k] = s;
    }
    return stats;
}

} // namespace subnyq
