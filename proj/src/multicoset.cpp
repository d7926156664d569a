#include "subnyq/multicoset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "subnyq/errors.hpp"

namespace subnyq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// m_l = -(L+1)/2 + l for l = 1..L, so the segment index runs symmetrically
// around zero when L is odd.
double segment_center(int l_one_based, int segments_l) {
    return -0.5 * (segments_l + 1) + l_one_based;
}

std::string offsets_string(const std::vector<int>& offsets) {
    std::string s = "{";
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(offsets[i]);
    }
    return s + "}";
}

} // namespace

void MultiCosetConfig::validate() const {
    if (!(w_hz > 0.0)) throw ConfigError("config: w_hz must be positive");
    if (segments_l < 1 || segments_l % 2 == 0)
        throw ConfigError("config: segments_l must be a positive odd integer");
    const int q = channels();
    if (q < 1) throw ConfigError("config: at least one channel offset is required");
    if (q >= segments_l && segments_l > 1)
        throw ConfigError("config: channel count must be smaller than segments_l");
    std::set<int> seen;
    for (int c : offsets) {
        if (c < 0 || c >= segments_l)
            throw ConfigError("config: offsets must lie in [0, segments_l)");
        if (!seen.insert(c).second)
            throw ConfigError("config: offsets must be distinct");
    }
    if (samples_per_channel < 1)
        throw ConfigError("config: samples_per_channel must be positive");
    if (filter_len < 2) throw ConfigError("config: filter_len must be at least 2");
    if (samples_per_channel < filter_len)
        throw ConfigError("config: samples_per_channel must be >= filter_len");
    if (integer_delay < 0)
        throw ConfigError("config: integer_delay must be non-negative");
    // Total delay c/L + D must stay inside the filter support for every channel.
    const double max_frac = segments_l > 1 ? (segments_l - 1.0) / segments_l : 0.0;
    if (integer_delay + max_frac > filter_len - 1)
        throw ConfigError("config: integer_delay + max fractional delay exceeds filter support");
    if (2 * pair_count() < segments_l)
        throw ConfigError("config: too few channels, 2Q must be >= segments_l for recovery");
}

MultiCosetConfig make_config(double w_hz, int segments_l, std::vector<int> offsets,
                             int samples_per_channel, int filter_len) {
    MultiCosetConfig cfg;
    cfg.w_hz = w_hz;
    cfg.segments_l = segments_l;
    cfg.offsets = std::move(offsets);
    cfg.samples_per_channel = samples_per_channel;
    cfg.filter_len = filter_len;
    cfg.integer_delay = MultiCosetConfig::default_integer_delay(filter_len);
    cfg.validate();
    return cfg;
}

std::vector<int> draw_offsets(int segments_l, int channels, Rng& rng) {
    if (channels < 1 || channels >= segments_l)
        throw ConfigError("draw_offsets: need 1 <= channels < segments_l");
    const int q = channels;
    if (q * (q - 1) + 2 < segments_l)
        throw ConfigError("draw_offsets: too few channels for segments_l (2Q < L)");
    for (int attempt = 0; attempt < 256; ++attempt) {
        std::vector<int> c = rng.sample_without_replacement(segments_l, channels);
        MultiCosetConfig probe;
        probe.segments_l = segments_l;
        probe.offsets = c;
        try {
            real_pseudoinverse(build_psi_breve(probe));
        } catch (const SingularMatrixError&) {
            continue;
        }
        return c;
    }
    throw ConvergenceError("draw_offsets: no full-rank offset pattern found", 256);
}

std::vector<std::pair<int, int>> correlation_pairs(int channels) {
    if (channels < 1) throw ConfigError("correlation_pairs: need at least one channel");
    std::vector<std::pair<int, int>> pairs;
    pairs.emplace_back(0, 0);
    for (int a = 0; a < channels; ++a)
        for (int b = a + 1; b < channels; ++b) pairs.emplace_back(a, b);
    return pairs;
}

ComplexMatrix build_gamma(const MultiCosetConfig& cfg) {
    const int L = cfg.segments_l;
    const int q = cfg.channels();
    if (L < 1 || L % 2 == 0) throw ConfigError("build_gamma: segments_l must be odd");
    if (q < 1) throw ConfigError("build_gamma: offsets are empty");
    const double scale = cfg.w_hz / L;
    ComplexMatrix g(q, L);
    for (int i = 0; i < q; ++i)
        for (int l = 1; l <= L; ++l) {
            const double phase = -kTwoPi / L * cfg.offsets[i] * segment_center(l, L);
            g(i, l - 1) = scale * cplx{std::cos(phase), std::sin(phase)};
        }
    return g;
}

RealMatrix build_psi_breve(const MultiCosetConfig& cfg) {
    const int L = cfg.segments_l;
    if (L < 1 || L % 2 == 0) throw ConfigError("build_psi_breve: segments_l must be odd");
    if (cfg.channels() < 1) throw ConfigError("build_psi_breve: offsets are empty");
    const auto pairs = correlation_pairs(cfg.channels());
    const int Q = static_cast<int>(pairs.size());
    const double scale = (cfg.w_hz / L) * (cfg.w_hz / L);
    RealMatrix psi(2 * Q, L);
    for (int k = 0; k < Q; ++k) {
        const int diff = cfg.offsets[pairs[k].first] - cfg.offsets[pairs[k].second];
        for (int l = 1; l <= L; ++l) {
            const double phase = -kTwoPi / L * diff * segment_center(l, L);
            psi(k, l - 1) = scale * std::cos(phase);
            psi(Q + k, l - 1) = scale * std::sin(phase);
        }
    }
    return psi;
}

std::vector<double> lagrange_fractional_delay(int length, double tau) {
    if (length < 1) throw ConfigError("lagrange_fractional_delay: length must be positive");
    if (tau < 0.0 || tau > length - 1)
        throw ConfigError("lagrange_fractional_delay: delay must lie in [0, length-1]");
    std::vector<double> h(length, 1.0);
    for (int n = 0; n < length; ++n)
        for (int k = 0; k < length; ++k) {
            if (k == n) continue;
            h[n] *= (tau - k) / (n - k);
        }
    return h;
}

DelayFilterBank design_delay_filters(const MultiCosetConfig& cfg) {
    if (cfg.filter_len < 2)
        throw ConfigError("design_delay_filters: filter_len must be at least 2");
    const int N = cfg.samples_per_channel;
    const int Nh = cfg.filter_len;
    if (N < Nh)
        throw ConfigError("design_delay_filters: samples_per_channel must be >= filter_len");
    DelayFilterBank bank;
    for (int a = 0; a < cfg.channels(); ++a) {
        const double tau = static_cast<double>(cfg.offsets[a]) / cfg.segments_l +
                           cfg.integer_delay;
        if (tau > Nh - 1)
            throw ConfigError("design_delay_filters: delay outside filter support for channel " +
                              std::to_string(a));
        std::vector<double> h = lagrange_fractional_delay(Nh, tau);
        double e = 0.0;
        for (double v : h) e += v * v;
        const double inv = 1.0 / std::sqrt(e);
        for (double& v : h) v *= inv;
        double energy = 0.0;
        for (int m = 0; m < Nh; ++m) energy += (N - m) * h[m] * h[m];
        energy /= N;
        bank.taps.push_back(std::move(h));
        bank.energy.push_back(energy);
    }
    return bank;
}

ChannelSamples sample_signal(std::span<const cplx> x, const MultiCosetConfig& cfg) {
    const int L = cfg.segments_l;
    const int N = cfg.samples_per_channel;
    if (L < 1) throw ConfigError("sample_signal: segments_l must be positive");
    if (N < 1) throw ConfigError("sample_signal: samples_per_channel must be positive");
    int cmax = 0;
    for (int c : cfg.offsets) cmax = std::max(cmax, c);
    const long long needed = static_cast<long long>(N - 1) * L + cmax + 1;
    if (static_cast<long long>(x.size()) < needed)
        throw ConfigError("sample_signal: signal too short, need at least " +
                          std::to_string(needed) + " samples");
    ChannelSamples out;
    out.samples_per_channel = N;
    for (int c : cfg.offsets) {
        std::vector<cplx> ch(N);
        for (int n = 0; n < N; ++n) ch[n] = x[static_cast<long long>(n) * L + c];
        out.channels.push_back(std::move(ch));
    }
    return out;
}

ComplexMatrix estimate_rz(const ChannelSamples& samples, const DelayFilterBank& filters,
                          const MultiCosetConfig& cfg) {
    const int q = static_cast<int>(samples.channels.size());
    if (q == 0) throw ConfigError("estimate_rz: no channels");
    if (static_cast<int>(filters.taps.size()) != q)
        throw ConfigError("estimate_rz: filter bank does not match channel count");
    const int N = samples.samples_per_channel;
    if (N < 1) throw ConfigError("estimate_rz: empty channels");

    // Causal truncated convolution of each channel with its delay filter.
    std::vector<std::vector<cplx>> d(q, std::vector<cplx>(N));
    for (int a = 0; a < q; ++a) {
        const auto& y = samples.channels[a];
        const auto& h = filters.taps[a];
        const int Nh = static_cast<int>(h.size());
        for (int n = 0; n < N; ++n) {
            cplx acc = 0.0;
            const int m0 = std::max(0, n - Nh + 1);
            for (int m = m0; m <= n; ++m) acc += y[m] * h[n - m];
            d[a][n] = acc;
        }
    }

    const double scale = kTwoPi * cfg.w_hz / (static_cast<double>(N) * cfg.segments_l);
    ComplexMatrix rz(q, q);
    for (int a = 0; a < q; ++a) {
        double diag = 0.0;
        for (int n = 0; n < N; ++n) diag += std::norm(d[a][n]);
        rz(a, a) = scale * diag;
        for (int b = a + 1; b < q; ++b) {
            cplx acc = 0.0;
            for (int n = 0; n < N; ++n) acc += d[a][n] * std::conj(d[b][n]);
            rz(a, b) = scale * acc;
            rz(b, a) = std::conj(rz(a, b));
        }
    }
    return rz;
}

PowerSolver::PowerSolver(const MultiCosetConfig& cfg, const DelayFilterBank& filters)
    : cfg_(cfg) {
    if (filters.energy.empty())
        throw ConfigError("PowerSolver: filter bank is empty");
    energy1_ = filters.energy.front();
    try {
        pinv_ = real_pseudoinverse(build_psi_breve(cfg));
    } catch (const SingularMatrixError& e) {
        throw SingularMatrixError("PowerSolver: measurement matrix rank deficient for offsets " +
                                      offsets_string(cfg.offsets),
                                  e.condition_number());
    }
}

PowerEstimate PowerSolver::solve(const ComplexMatrix& rz) const {
    const int q = cfg_.channels();
    if (rz.rows() != static_cast<std::size_t>(q) || rz.cols() != static_cast<std::size_t>(q))
        throw ConfigError("PowerSolver: correlation matrix size mismatch");
    const auto pairs = correlation_pairs(q);
    const int Q = static_cast<int>(pairs.size());

    PowerEstimate out;
    out.u_breve.resize(2 * Q);
    for (int k = 0; k < Q; ++k) {
        const cplx v = rz(pairs[k].first, pairs[k].second);
        out.u_breve[k] = v.real();
        out.u_breve[Q + k] = v.imag();
    }

    const int L = cfg_.segments_l;
    out.v_hat.resize(L);
    for (int l = 0; l < L; ++l) {
        double acc = 0.0;
        for (int k = 0; k < 2 * Q; ++k) acc += pinv_(l, k) * out.u_breve[k];
        out.v_hat[l] = acc;
    }

    const double scale = cfg_.w_hz / (kTwoPi * energy1_);
    out.p_hat.resize(L);
    for (int l = 0; l < L; ++l) out.p_hat[l] = scale * out.v_hat[l];
    return out;
}

PowerEstimate estimate_power(const ComplexMatrix& rz, const MultiCosetConfig& cfg,
                             const DelayFilterBank& filters) {
    return PowerSolver(cfg, filters).solve(rz);
}

std::vector<cplx> white_gaussian_signal(long long length, double sigma2, Rng& rng) {
    if (length < 0) throw ConfigError("white_gaussian_signal: negative length");
    std::vector<cplx> x(static_cast<std::size_t>(length));
    for (auto& v : x) v = rng.circular_gaussian(sigma2);
    return x;
}

} // namespace subnyq
