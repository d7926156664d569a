#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "subnyq/corranalysis.hpp"
#include "subnyq/errors.hpp"
#include "subnyq/linalg.hpp"
#include "subnyq/multicoset.hpp"
#include "subnyq/rng.hpp"

using namespace subnyq;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Brute-force fourth-moment boundary sum, straight from its definition: five
// nested indices over the truncated sample windows, two Kronecker deltas tying
// the covariance pairings, taps zero outside their support. Deliberately slow;
// this is the anchor the closed forms are checked against.
double s_oracle(const std::vector<double>& ha, const std::vector<double>& hb,
                int n_samples, int n) {
    const int nh = static_cast<int>(ha.size());
    auto tap = [&](const std::vector<double>& h, int j) {
        return (j >= 0 && j < nh) ? h[j] : 0.0;
    };
    double total = 0.0;
    for (int u = 0; u < n_samples; ++u)
        for (int r = 0; r < n_samples; ++r)
            for (int p = 0; p < n_samples; ++p)
                for (int s = 0; s < n_samples; ++s)
                    for (int m = 0; m < n_samples; ++m) {
                        if (r != s || p != m) continue;
                        total += tap(ha, n - r) * tap(hb, n - p) * tap(ha, u - s) *
                                 tap(hb, u - m);
                    }
    return total;
}

MultiCosetConfig raw_config(double w, int l, std::vector<int> offsets, int n, int nh,
                            int d) {
    MultiCosetConfig cfg;
    cfg.w_hz = w;
    cfg.segments_l = l;
    cfg.offsets = std::move(offsets);
    cfg.samples_per_channel = n;
    cfg.filter_len = nh;
    cfg.integer_delay = d;
    return cfg;
}

} // namespace

TEST_CASE("expected power is sigma2 in every segment") {
    const auto cfg = make_config(1000.0, 5, {0, 2, 4}, 64);
    const auto p4 = expected_power(cfg, 4.0);
    REQUIRE(p4.size() == 5);
    for (double v : p4) CHECK(v == 4.0);
    for (double v : expected_power(cfg, 0.0)) CHECK(v == 0.0);

    // The power expectation does not depend on the filter design; only the
    // intermediate u_breve mean carries the H_1 factor.
    auto short_filters = cfg;
    short_filters.filter_len = 4;
    short_filters.integer_delay = 1;
    CHECK(expected_power(cfg, 2.5) == expected_power(short_filters, 2.5));

    const auto bank = design_delay_filters(cfg);
    const auto u = expected_u_breve(cfg, bank, 4.0);
    REQUIRE(u.size() == 2u * cfg.pair_count());
    CHECK(u[0] == doctest::Approx(kTwoPi * (1000.0 / 5.0) * bank.energy[0] * 4.0)
                      .epsilon(1e-14));
    for (std::size_t k = 1; k < u.size(); ++k) CHECK(u[k] == 0.0);
}

TEST_CASE("g and sigma for hand-built filters") {
    SUBCASE("impulse filter: g is one, sigma vanishes") {
        DelayFilterBank bank;
        bank.taps = {{1.0}};
        bank.energy = {1.0};
        const auto cfg = raw_config(1.0, 1, {0}, 8, 1, 0);
        const auto [g, s] = compute_g_sigma(cfg, bank, 0);
        CHECK(g == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(s == doctest::Approx(0.0).epsilon(1e-15));
    }

    SUBCASE("two-tap filter expands by hand") {
        // Offset 4/7 with two taps designs to [0.6, 0.8]; the self-convolution
        // is [0.48, 1.0, 0.48], so G = 0.48^2 + 1 + 0.48^2 = 1.4608.
        const auto cfg = raw_config(7.0, 7, {4}, 10, 2, 0);
        const auto bank = design_delay_filters(cfg);
        const auto [g, s] = compute_g_sigma(cfg, bank, 0);
        CHECK(g == doctest::Approx(1.4608).epsilon(1e-12));
        // Boundary term: one truncated output at each edge for two taps.
        CHECK(s == doctest::Approx(s_oracle(bank.taps[0], bank.taps[0], 10, 0) +
                                   s_oracle(bank.taps[0], bank.taps[0], 10, 9))
                       .epsilon(1e-12));
    }

    SUBCASE("pair index bounds") {
        const auto cfg = make_config(1000.0, 5, {0, 2, 4}, 64);
        const auto bank = design_delay_filters(cfg);
        CHECK_THROWS_AS(compute_g_sigma(cfg, bank, -1), ConfigError);
        CHECK_THROWS_AS(compute_g_sigma(cfg, bank, 4), ConfigError);
    }
}

TEST_CASE("closed forms equal the quintuple sum oracle") {
    // Small enough for the direct five-index sum, large enough that both
    // boundary regimes and the central plateau are all populated.
    const int n_samples = 12, nh = 3;
    auto cfg = make_config(1000.0, 5, {0, 2, 4}, n_samples, nh);
    const auto bank = design_delay_filters(cfg);
    const auto pairs = correlation_pairs(cfg.channels());

    for (int k = 0; k < static_cast<int>(pairs.size()); ++k) {
        CAPTURE(k);
        const auto& ha = bank.taps[pairs[k].first];
        const auto& hb = bank.taps[pairs[k].second];
        const auto [g, sigma] = compute_g_sigma(cfg, bank, k);

        // Central plateau: S_k(n) is n-independent and equals G_k.
        for (int n = nh - 1; n <= n_samples - nh; ++n) {
            CAPTURE(n);
            CHECK(std::abs(s_oracle(ha, hb, n_samples, n) - g) < 1e-12);
        }
        // Boundary corrections: both edges summed.
        double edge = 0.0;
        for (int n = 0; n <= nh - 2; ++n) edge += s_oracle(ha, hb, n_samples, n);
        for (int n = n_samples - nh + 1; n < n_samples; ++n)
            edge += s_oracle(ha, hb, n_samples, n);
        CHECK(std::abs(sigma - edge) < 1e-12);

        // Whole-sum identity used by the U entries.
        double full = 0.0;
        for (int n = 0; n < n_samples; ++n) full += s_oracle(ha, hb, n_samples, n);
        CHECK(std::abs((n_samples - 2 * nh + 2) * g + sigma - full) < 1e-12);
    }
}

TEST_CASE("u matrix structure") {
    const auto cfg = make_config(1000.0, 5, {0, 2, 4}, 64);
    const auto bank = design_delay_filters(cfg);
    const int bigq = cfg.pair_count();
    const auto u = compute_u(cfg, bank, 2.0);
    REQUIRE(u.rows() == static_cast<std::size_t>(2 * bigq));

    SUBCASE("diagonal with a vanishing imaginary self entry") {
        for (std::size_t i = 0; i < u.rows(); ++i)
            for (std::size_t j = 0; j < u.cols(); ++j)
                if (i != j) CHECK(u(i, j) == 0.0);
        CHECK(u(bigq, bigq) == 0.0);
        CHECK(u(0, 0) > 0.0);
        for (int k = 1; k < bigq; ++k) {
            CHECK(u(k, k) > 0.0);
            CHECK(u(k, k) == u(bigq + k, bigq + k)); // same pair formula
        }
    }

    SUBCASE("quartic in sigma") {
        const auto u0 = compute_u(cfg, bank, 0.0);
        for (std::size_t i = 0; i < u0.rows(); ++i)
            for (std::size_t j = 0; j < u0.cols(); ++j) CHECK(u0(i, j) == 0.0);
        const auto u2 = compute_u(cfg, bank, 4.0);
        for (std::size_t i = 0; i < u.rows(); ++i)
            CHECK(u2(i, i) == doctest::Approx(4.0 * u(i, i)).epsilon(1e-12));
    }

    SUBCASE("asymptotics: self entry tends to sigma4 (2 pi W / L)^2") {
        const double sigma2 = 2.0;
        const double limit = sigma2 * sigma2 * std::pow(kTwoPi * 1000.0 / 5.0, 2);
        double prev_err = 1e300, prev_pair = 1e300;
        for (int n : {256, 1024, 4096, 16384}) {
            auto big = cfg;
            big.samples_per_channel = n;
            const auto bank_n = design_delay_filters(big);
            const auto un = compute_u(big, bank_n, sigma2);
            const double err = std::abs(un(0, 0) / limit - 1.0);
            CHECK(err < prev_err);
            CHECK(un(1, 1) < prev_pair);
            prev_err = err;
            prev_pair = un(1, 1);
        }
        CHECK(prev_err < 1e-3);
    }

    SUBCASE("closed forms need room for both boundary regimes") {
        auto tight = cfg;
        tight.samples_per_channel = 14; // < 2*8 - 1
        const auto bank_t = design_delay_filters(cfg);
        CHECK_THROWS_AS(compute_u(tight, bank_t, 1.0), ConfigError);
    }
}

TEST_CASE("u diagonal and covariance match monte carlo") {
    const double sigma2 = 2.0;
    const auto cfg = make_config(1000.0, 5, {0, 2, 4}, 64, 4);
    const auto bank = design_delay_filters(cfg);
    const PowerSolver solver(cfg, bank);
    const int bigq = cfg.pair_count();
    const int dim = 2 * bigq;
    const int trials = 100000;

    std::vector<double> second(dim, 0.0);
    std::vector<double> cross(dim, 0.0); // E{u_0 u_k}
    std::vector<double> p_sum(5, 0.0), p_sq(5, 0.0);
    for (int t = 0; t < trials; ++t) {
        Rng rng = Rng::stream(2024, "u-moments", static_cast<std::uint64_t>(t));
        const auto x = white_gaussian_signal(cfg.nyquist_length(), sigma2, rng);
        const auto est = solver.solve(estimate_rz(sample_signal(x, cfg), bank, cfg));
        for (int k = 0; k < dim; ++k) {
            second[k] += est.u_breve[k] * est.u_breve[k] / trials;
            cross[k] += est.u_breve[0] * est.u_breve[k] / trials;
        }
        for (int l = 0; l < 5; ++l) {
            p_sum[l] += est.p_hat[l] / trials;
            p_sq[l] += est.p_hat[l] * est.p_hat[l] / trials;
        }
    }

    const auto u = compute_u(cfg, bank, sigma2);
    for (int k = 0; k < dim; ++k) {
        CAPTURE(k);
        if (k == bigq) {
            // Exactly zero in theory; the estimator stores a true zero.
            CHECK(second[k] == 0.0);
        } else {
            CHECK(second[k] == doctest::Approx(u(k, k)).epsilon(0.05));
        }
    }
    // Off-diagonal second moments vanish: compare against the self-moment scale.
    for (int k = 1; k < dim; ++k)
        CHECK(std::abs(cross[k]) < 0.02 * second[0]);

    const auto cov = compute_cov_p(cfg, bank, sigma2);
    for (int l = 0; l < 5; ++l) {
        CAPTURE(l);
        const double emp = p_sq[l] - p_sum[l] * p_sum[l];
        CHECK(emp == doctest::Approx(cov(l, l)).epsilon(0.10));
    }
}

TEST_CASE("covariance is symmetric positive semidefinite") {
    const auto cfg = make_config(1000.0, 11, {0, 1, 3, 7, 9}, 128);
    const auto bank = design_delay_filters(cfg);
    const auto cov = compute_cov_p(cfg, bank, 4.0);
    REQUIRE(cov.rows() == 11);

    double max_entry = 0.0;
    for (std::size_t i = 0; i < 11; ++i)
        for (std::size_t j = 0; j < 11; ++j) {
            CHECK(cov(i, j) == cov(j, i));
            max_entry = std::max(max_entry, std::abs(cov(i, j)));
        }

    const auto ed = symmetric_eig(cov);
    for (double lam : ed.eigenvalues) CHECK(lam > -1e-8 * max_entry);

    CHECK(variance_p_first(cfg, bank, 4.0) == doctest::Approx(cov(0, 0)).epsilon(1e-12));
}

TEST_CASE("analytical variance is consistent and orders by segment count") {
    SUBCASE("strictly decreasing in record length") {
        for (const auto& [l, offs] :
             std::vector<std::pair<int, std::vector<int>>>{
                 {5, {0, 2, 4}}, {11, {0, 1, 3, 7, 9}}}) {
            double prev = 1e300;
            for (int n = 64; n <= 4096; n *= 2) {
                const auto cfg = make_config(1000.0, l, offs, n);
                const double v = variance_p_first(cfg, design_delay_filters(cfg), 4.0);
                CHECK(v > 0.0);
                CHECK(v < prev);
                prev = v;
            }
        }
    }

    SUBCASE("variance grows with segment count at fixed nyquist length") {
        // Average rate held near W/4 in both configurations; equal N_x means
        // fewer samples per channel when L is larger, and a harder inversion.
        Rng rng(31);
        const long long nx = 51LL * 101LL * 8LL;
        const auto c51 = make_config(1000.0, 51, draw_offsets(51, 12, rng),
                                     static_cast<int>(nx / 51));
        const auto c101 = make_config(1000.0, 101, draw_offsets(101, 25, rng),
                                      static_cast<int>(nx / 101));
        const double v51 = variance_p_first(c51, design_delay_filters(c51), 4.0);
        const double v101 = variance_p_first(c101, design_delay_filters(c101), 4.0);
        CHECK(v51 > 0.0);
        CHECK(v51 < v101);
    }
}

TEST_CASE("analyze_correlogram bundles the pieces") {
    const auto cfg = make_config(1000.0, 5, {0, 2, 4}, 64);
    const auto bank = design_delay_filters(cfg);
    const auto stats = analyze_correlogram(cfg, bank, 4.0);

    CHECK(stats.expected_p == expected_power(cfg, 4.0));
    const auto u = compute_u(cfg, bank, 4.0);
    for (std::size_t i = 0; i < u.rows(); ++i) CHECK(stats.u_matrix(i, i) == u(i, i));
    REQUIRE(stats.g_terms.size() == static_cast<std::size_t>(cfg.pair_count()));
    for (int k = 0; k < cfg.pair_count(); ++k) {
        const auto [g, s] = compute_g_sigma(cfg, bank, k);
        CHECK(stats.g_terms[k] == g);
        CHECK(stats.sigma_terms[k] == s);
    }
    const auto cov = compute_cov_p(cfg, bank, 4.0);
    for (int l = 0; l < 5; ++l) CHECK(stats.cov_p(l, l) == cov(l, l));
}
