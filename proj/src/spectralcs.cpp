#include "subnyq/spectralcs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <lapacke.h>

#include "subnyq/errors.hpp"

namespace subnyq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kDuplicateTol = 1e-9;

// Sample autocorrelation matrix of order w:
// R[a,b] = (1/(nx-w+1)) sum_{n=w-1}^{nx-1} conj(x[n-a]) x[n-b].
// Filled along diagonals: the seed of each diagonal is a direct sum and
// successive entries differ by one boundary term at each end, which keeps the
// cost near O(w * nx) instead of O(w^2 * nx). Conjugate mirroring makes the
// result exactly Hermitian.
ComplexMatrix autocorrelation_matrix(std::span<const cplx> x, int w) {
    const int nx = static_cast<int>(x.size());
    const double norm = 1.0 / (nx - w + 1);
    ComplexMatrix r(w, w);
    for (int d = 0; d < w; ++d) {
        cplx acc = 0.0;
        for (int n = w - 1; n < nx; ++n) acc += std::conj(x[n - d]) * x[n];
        r(d, 0) = acc;
        int a = d, b = 0;
        while (a + 1 < w) {
            acc += std::conj(x[w - 2 - a]) * x[w - 2 - b];
            acc -= std::conj(x[nx - 1 - a]) * x[nx - 1 - b];
            ++a;
            ++b;
            r(a, b) = acc;
        }
    }
    for (int a = 0; a < w; ++a)
        for (int b = a + 1; b < w; ++b) r(a, b) = std::conj(r(b, a));
    for (int a = 0; a < w; ++a) r(a, a) = r(a, a).real();
    for (int a = 0; a < w; ++a)
        for (int b = 0; b < w; ++b) r(a, b) *= norm;
    return r;
}

// Signal-subspace eigenvectors (the k largest eigenpairs) as columns. zheevr
// skips the back-transform of the w - k noise eigenvectors, which root_music
// never touches: the noise projector is I - Vs Vs^H.
ComplexMatrix signal_eigenvectors(ComplexMatrix a, int k) {
    const int w = static_cast<int>(a.rows());
    std::vector<double> vals(w);
    ComplexMatrix vecs(w, k);
    std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(k));
    lapack_int found = 0;
    const auto info = LAPACKE_zheevr(
        LAPACK_ROW_MAJOR, 'V', 'I', 'L', w, reinterpret_cast<lapack_complex_double*>(a.data()),
        w, 0.0, 0.0, w - k + 1, w, 0.0, &found, vals.data(),
        reinterpret_cast<lapack_complex_double*>(vecs.data()), k, isuppz.data());
    if (info > 0)
        throw ConvergenceError("root_music: zheevr failed to converge", static_cast<int>(info));
    if (info < 0) throw ConfigError("root_music: invalid argument passed to zheevr");
    if (found != k)
        throw ConvergenceError("root_music: zheevr found too few eigenpairs",
                               static_cast<int>(found));
    return vecs;
}

// Companion-matrix rooting of the null-spectrum polynomial in single
// precision. Selection only needs each root to land inside its polish basin
// (width pi/w) and the Newton polish restores double accuracy, so the cheaper
// QR iteration does not show in the final frequencies.
std::vector<cplx> companion_roots_fast(std::span<const cplx> coefficients) {
    std::vector<std::complex<float>> c(coefficients.size());
    std::transform(coefficients.begin(), coefficients.end(), c.begin(), [](const cplx& v) {
        return std::complex<float>{static_cast<float>(v.real()), static_cast<float>(v.imag())};
    });
    while (!c.empty() && std::abs(c.back()) == 0.0f) c.pop_back();
    if (c.size() < 2) return {};

    const std::size_t n = c.size() - 1;
    const std::complex<float> lead = c.back();
    auto fp = [](std::complex<float>* p) { return reinterpret_cast<lapack_complex_float*>(p); };

    // Column-major companion so the _work entry points run in place; the
    // row-major wrappers would copy the n x n matrix in and out of a
    // transposed temporary on every call.
    std::vector<std::complex<float>> comp(n * n);
    for (std::size_t j = 0; j < n; ++j) comp[j * n] = -c[n - 1 - j] / lead;
    for (std::size_t i = 1; i < n; ++i) comp[i + (i - 1) * n] = 1.0f;

    std::vector<float> scale(n);
    lapack_int ilo = 0, ihi = 0;
    auto info = LAPACKE_cgebal_work(LAPACK_COL_MAJOR, 'S', static_cast<lapack_int>(n),
                                    fp(comp.data()), static_cast<lapack_int>(n), &ilo, &ihi,
                                    scale.data());
    if (info != 0) throw ConfigError("root_music: invalid argument passed to cgebal");

    std::vector<std::complex<float>> roots_f(n);
    std::complex<float> z_unused;
    std::complex<float> work_query;
    info = LAPACKE_chseqr_work(LAPACK_COL_MAJOR, 'E', 'N', static_cast<lapack_int>(n), ilo, ihi,
                               fp(comp.data()), static_cast<lapack_int>(n), fp(roots_f.data()),
                               fp(&z_unused), 1, fp(&work_query), -1);
    if (info != 0) throw ConfigError("root_music: chseqr workspace query failed");
    std::vector<std::complex<float>> work(
        std::max<std::size_t>(n, static_cast<std::size_t>(work_query.real())));
    info = LAPACKE_chseqr_work(LAPACK_COL_MAJOR, 'E', 'N', static_cast<lapack_int>(n), ilo, ihi,
                               fp(comp.data()), static_cast<lapack_int>(n), fp(roots_f.data()),
                               fp(&z_unused), 1, fp(work.data()),
                               static_cast<lapack_int>(work.size()));
    if (info > 0)
        throw ConvergenceError("root_music: chseqr failed to converge", static_cast<int>(info));
    if (info < 0) throw ConfigError("root_music: invalid argument passed to chseqr");

    std::vector<cplx> roots(n);
    for (std::size_t i = 0; i < n; ++i) roots[i] = cplx{roots_f[i].real(), roots_f[i].imag()};
    return roots;
}

} // namespace

LineSpectrumModel draw_line_spectrum(int k, Rng& rng, double min_spacing, bool random_phase) {
    if (k < 1) throw ConfigError("draw_line_spectrum: need at least one sinusoid");
    if (min_spacing < 0.0 || k * min_spacing >= kTwoPi)
        throw ConfigError("draw_line_spectrum: spacing infeasible for this count");
    LineSpectrumModel model;
    model.frequencies.reserve(k);
    int attempts = 0;
    while (static_cast<int>(model.frequencies.size()) < k) {
        if (++attempts > 100000)
            throw ConvergenceError("draw_line_spectrum: spacing rejection did not terminate",
                                   attempts);
        const double cand = rng.uniform(0.0, kTwoPi);
        bool ok = true;
        for (double f : model.frequencies)
            if (circular_distance(cand, f) < min_spacing) {
                ok = false;
                break;
            }
        if (ok) model.frequencies.push_back(cand);
    }
    model.amplitudes.reserve(k);
    for (int i = 0; i < k; ++i) {
        const double mag = rng.uniform(1.0, 2.0);
        const double phase = random_phase ? rng.uniform(0.0, kTwoPi) : 0.0;
        model.amplitudes.push_back(mag * cplx{std::cos(phase), std::sin(phase)});
    }
    return model;
}

std::vector<cplx> synthesize_signal(const LineSpectrumModel& model, int n_len) {
    if (n_len < 1) throw ConfigError("synthesize_signal: length must be positive");
    if (model.frequencies.size() != model.amplitudes.size())
        throw ConfigError("synthesize_signal: frequency/amplitude count mismatch");
    std::vector<cplx> x(n_len, 0.0);
    for (int k = 0; k < model.count(); ++k) {
        const double w = model.frequencies[k];
        const cplx d = model.amplitudes[k];
        const cplx step{std::cos(-w), std::sin(-w)};
        cplx rot = 1.0;
        for (int n = 0; n < n_len; ++n) {
            x[n] += d * rot;
            rot *= step;
        }
    }
    return x;
}

ComplexMatrix vandermonde(std::span<const double> omegas, int n_len) {
    if (n_len < 1) throw ConfigError("vandermonde: length must be positive");
    const int k = static_cast<int>(omegas.size());
    if (k < 1) throw ConfigError("vandermonde: no frequencies");
    ComplexMatrix a(n_len, k);
    for (int c = 0; c < k; ++c) {
        const cplx step{std::cos(-omegas[c]), std::sin(-omegas[c])};
        cplx rot = 1.0;
        for (int n = 0; n < n_len; ++n) {
            a(n, c) = rot;
            rot *= step;
        }
    }
    return a;
}

MeasurementSystem draw_measurement_system(int m, int n_len, double noise_sigma, Rng& rng) {
    if (m < 1 || n_len < 1) throw ConfigError("draw_measurement_system: bad dimensions");
    if (noise_sigma < 0.0) throw ConfigError("draw_measurement_system: negative noise level");
    MeasurementSystem sys;
    sys.phi = RealMatrix(m, n_len);
    const double s = 1.0 / std::sqrt(static_cast<double>(m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n_len; ++j) sys.phi(i, j) = s * rng.gaussian();
    sys.noise_sigma = noise_sigma;
    return sys;
}

std::vector<cplx> measure(std::span<const cplx> x, const MeasurementSystem& sys, Rng& rng) {
    std::vector<cplx> y = real_matvec(sys.phi, x);
    if (sys.noise_sigma > 0.0) {
        const double var = sys.noise_sigma * sys.noise_sigma;
        for (auto& v : y) v += rng.circular_gaussian(var);
    }
    return y;
}

std::vector<cplx> outer_ls_step(std::span<const cplx> x_prev, std::span<const cplx> y,
                                const RealMatrix& phi, double lambda) {
    if (x_prev.size() != phi.cols() || y.size() != phi.rows())
        throw ConfigError("outer_ls_step: dimension mismatch");
    std::vector<cplx> r = real_matvec(phi, x_prev);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] - r[i];
    const RealMatrix phit = transpose(phi);
    std::vector<cplx> grad = real_matvec(phit, r);
    std::vector<cplx> x_e(x_prev.begin(), x_prev.end());
    for (std::size_t i = 0; i < x_e.size(); ++i) x_e[i] += lambda * grad[i];
    return x_e;
}

RootMusicResult root_music(std::span<const cplx> x, const RootMusicConfig& cfg) {
    const int w = cfg.window;
    const int k = cfg.model_order;
    const int nx = static_cast<int>(x.size());
    if (k < 1) throw ConfigError("root_music: model order must be positive");
    if (w <= 2 * k) throw ConfigError("root_music: window must exceed twice the model order");
    if (nx < w + 1) throw ConfigError("root_music: signal shorter than window + 1");

    const ComplexMatrix r = autocorrelation_matrix(x, w);
    const ComplexMatrix vs = signal_eigenvectors(r, k);

    // P(z) = z^{w-1} sum_{a,b} proj[a,b] z^{b-a} with proj = I - Vs Vs^H;
    // the diagonal sums are written straight from the signal eigenvectors.
    std::vector<cplx> coeff(2 * w - 1, 0.0);
    double trace = w;
    for (int i = 0; i < k; ++i)
        for (int a = 0; a < w; ++a) trace -= std::norm(vs(a, i));
    coeff[w - 1] = trace;
    for (int g = 1; g < w; ++g) {
        cplx acc = 0.0;
        for (int i = 0; i < k; ++i)
            for (int a = 0; a + g < w; ++a) acc += vs(a, i) * std::conj(vs(a + g, i));
        coeff[w - 1 + g] = -acc;
        coeff[w - 1 - g] = -std::conj(acc);
    }

    const std::vector<cplx> roots = companion_roots_fast(coeff);

    // Roots come in conjugate-reciprocal pairs straddling the circle, and a
    // converged signal root can sit closer to |z| = 1 than the QR error, so a
    // hard inside-only cut would sometimes drop a true root whose magnitude
    // rounded above one. Admit a thin band outside the circle instead and
    // fold the mirror copies during selection.
    constexpr double kBoundaryBand = 1e-3;
    constexpr double kMirrorTol = 2e-4;
    struct Candidate {
        double dist;
        double omega;
    };
    std::vector<Candidate> cands;
    for (const cplx& z : roots) {
        const double mag = std::abs(z);
        if (mag >= 1.0 + kBoundaryBand) continue;
        double omega = std::fmod(-std::arg(z), kTwoPi);
        if (omega < 0.0) omega += kTwoPi;
        cands.push_back({std::abs(1.0 - mag), omega});
    }

    RootMusicResult out;
    out.admissible = static_cast<int>(cands.size());
    std::sort(cands.begin(), cands.end(), [](const Candidate& l, const Candidate& r) {
        if (l.dist != r.dist) return l.dist < r.dist;
        return l.omega < r.omega;
    });

    // Greedy selection of the k roots nearest the circle; among candidates at
    // equal distance, prefer the phase farthest from what is already selected.
    std::vector<bool> used(cands.size(), false);
    while (static_cast<int>(out.frequencies.size()) < k) {
        std::size_t first = 0;
        while (first < cands.size() && used[first]) ++first;
        if (first == cands.size()) break;
        std::size_t pick = first;
        double best_sep = -1.0;
        for (std::size_t i = first; i < cands.size(); ++i) {
            if (used[i]) continue;
            if (cands[i].dist - cands[first].dist > 1e-12) break;
            double sep = 0.0;
            if (!out.frequencies.empty()) {
                sep = std::numeric_limits<double>::infinity();
                for (double f : out.frequencies)
                    sep = std::min(sep, circular_distance(cands[i].omega, f));
            }
            if (sep > best_sep) {
                best_sep = sep;
                pick = i;
            }
        }
        used[pick] = true;
        out.frequencies.push_back(cands[pick].omega);
    }
    out.degenerate = static_cast<int>(out.frequencies.size()) < k;

    // Polish each pick to the nearest minimum of the continuous null spectrum
    // f(omega) = u(omega)^H proj u(omega) by Newton steps on f'. The argument
    // of a degree-2(w-1) root amplifies ulp-level projector perturbations; the
    // minimum location responds to them linearly, so the polished frequencies
    // are stable under global rescaling or rotation of the input signal.
    const double basin = std::numbers::pi / w;
    for (double& omega : out.frequencies) {
        for (int it = 0; it < 8; ++it) {
            double d1 = 0.0, d2 = 0.0;
            for (int g = 1; g < w; ++g) {
                const cplx e = coeff[g + w - 1] *
                               cplx{std::cos(g * omega), -std::sin(g * omega)};
                d1 += 2.0 * g * e.imag();
                d2 -= 2.0 * g * g * e.real();
            }
            if (!(d2 > 0.0)) break; // not in a convex basin, keep the root phase
            const double step = d1 / d2;
            if (!(std::abs(step) <= basin)) break;
            omega -= step;
            if (std::abs(step) < 1e-14) break;
        }
        omega = std::fmod(omega, kTwoPi);
        if (omega < 0.0) omega += kTwoPi;
    }

    std::sort(out.frequencies.begin(), out.frequencies.end());
    return out;
}

AmplitudeEstimate inner_ls_amplitudes(std::span<const cplx> y, const RealMatrix& phi,
                                      const ComplexMatrix& a_hat,
                                      std::span<const double> omegas) {
    const int k = static_cast<int>(a_hat.cols());
    if (k < 1) throw ConfigError("inner_ls_amplitudes: no columns");
    if (omegas.size() != static_cast<std::size_t>(k))
        throw ConfigError("inner_ls_amplitudes: frequency list does not match columns");
    if (phi.cols() != a_hat.rows() || y.size() != phi.rows())
        throw ConfigError("inner_ls_amplitudes: dimension mismatch");

    // Collapse duplicate frequencies so the normal equations stay full rank.
    std::vector<int> rep(k, -1);
    std::vector<int> kept;
    for (int i = 0; i < k; ++i) {
        for (int r : kept)
            if (circular_distance(omegas[i], omegas[r]) < kDuplicateTol) {
                rep[i] = r;
                break;
            }
        if (rep[i] < 0) {
            rep[i] = i;
            kept.push_back(i);
        }
    }

    ComplexMatrix a_kept(a_hat.rows(), kept.size());
    for (std::size_t c = 0; c < kept.size(); ++c)
        for (std::size_t r = 0; r < a_hat.rows(); ++r) a_kept(r, c) = a_hat(r, kept[c]);

    const ComplexMatrix b = real_complex_matmul(phi, a_kept);
    const std::vector<cplx> d_kept = least_squares(b, y);

    AmplitudeEstimate out;
    out.amplitudes.assign(k, 0.0);
    for (std::size_t c = 0; c < kept.size(); ++c) out.amplitudes[kept[c]] = d_kept[c];
    out.merged = k - static_cast<int>(kept.size());
    return out;
}

std::vector<cplx> siht_amplitudes(std::span<const cplx> x_e, const ComplexMatrix& a_hat) {
    if (x_e.size() != a_hat.rows())
        throw ConfigError("siht_amplitudes: dimension mismatch");
    std::vector<cplx> d = adjoint_matvec(a_hat, x_e);
    const double inv = 1.0 / static_cast<double>(a_hat.rows());
    for (auto& v : d) v *= inv;
    return d;
}

RecoveryTrace recover(std::span<const cplx> y, const RealMatrix& phi, int k, double lambda,
                      const StopRule& stop, AmplitudeStep method,
                      std::optional<RootMusicConfig> rm) {
    const int n_len = static_cast<int>(phi.cols());
    const int m_len = static_cast<int>(phi.rows());
    if (k < 1) throw ConfigError("recover: model order must be positive");
    if (static_cast<int>(y.size()) != m_len) throw ConfigError("recover: measurement length mismatch");
    if (stop.max_iterations < 1) throw ConfigError("recover: need at least one iteration");
    // Fallback frame: a quarter of the signal, but never shorter than the
    // small-problem default and never longer than the frame estimate allows.
    const RootMusicConfig rm_cfg = rm.value_or(RootMusicConfig{
        std::min(std::max(RootMusicConfig::for_order(k).window, n_len / 4), n_len - 1), k});
    if (rm_cfg.model_order != k)
        throw ConfigError("recover: root-MUSIC model order must equal k");

    const RealMatrix phit = transpose(phi);
    double y2 = 0.0;
    for (const cplx& v : y) y2 += std::norm(v);

    RecoveryTrace trace;
    std::vector<cplx> x_hat(n_len, 0.0);
    // Phi x_hat, carried across iterations so the gradient reuses the
    // residual product computed for the previous stopping check.
    std::vector<cplx> px(m_len, 0.0);
    std::vector<double> prev_omega;

    for (int it = 0; it < stop.max_iterations; ++it) {
        // x_e = x_hat + lambda Phi^T (y - Phi x_hat)
        std::vector<cplx> r(m_len);
        for (int i = 0; i < m_len; ++i) r[i] = y[i] - px[i];
        std::vector<cplx> x_e = real_matvec(phit, r);
        for (int i = 0; i < n_len; ++i) x_e[i] = x_hat[i] + lambda * x_e[i];

        IterationRecord rec;
        std::vector<double> omegas;
        try {
            RootMusicResult rmres = root_music(x_e, rm_cfg);
            omegas = std::move(rmres.frequencies);
            rec.degenerate = rmres.degenerate;
        } catch (const ConvergenceError&) {
            rec.degenerate = true;
        }

        // Pad shortfalls from the previous iterate, then evenly spaced
        // fallbacks, so the amplitude step always sees k columns.
        auto is_new = [&](double w) {
            for (double f : omegas)
                if (circular_distance(w, f) < kDuplicateTol) return false;
            return true;
        };
        for (double w : prev_omega) {
            if (static_cast<int>(omegas.size()) >= k) break;
            if (is_new(w)) omegas.push_back(w);
        }
        for (int j = 0; static_cast<int>(omegas.size()) < k && j < 4 * k; ++j) {
            const double w = kTwoPi * (j + 0.5) / k;
            if (is_new(std::fmod(w, kTwoPi))) omegas.push_back(std::fmod(w, kTwoPi));
        }
        std::sort(omegas.begin(), omegas.end());

        const ComplexMatrix a_hat = vandermonde(omegas, n_len);
        std::vector<cplx> d_hat;
        if (method == AmplitudeStep::kNestedLs) {
            try {
                AmplitudeEstimate est = inner_ls_amplitudes(y, phi, a_hat, omegas);
                d_hat = std::move(est.amplitudes);
                rec.merged = est.merged;
            } catch (const SingularMatrixError&) {
                d_hat = siht_amplitudes(x_e, a_hat);
                rec.degenerate = true;
            }
        } else {
            d_hat = siht_amplitudes(x_e, a_hat);
        }

        x_hat = matvec(a_hat, d_hat);
        px = real_matvec(phi, x_hat);
        double r2 = 0.0;
        for (int i = 0; i < m_len; ++i) r2 += std::norm(y[i] - px[i]);
        rec.residual_norm = std::sqrt(r2);
        rec.normalized_error = y2 > 0.0 ? r2 / y2 : 0.0;
        rec.omega_hat = omegas;
        rec.d_hat = d_hat;
        rec.x_hat = x_hat;
        prev_omega = std::move(omegas);
        trace.iterations.push_back(std::move(rec));

        if (stop.error_threshold && trace.iterations.back().normalized_error <= *stop.error_threshold)
            break;
    }
    trace.iterations_run = static_cast<int>(trace.iterations.size());
    return trace;
}

double circular_distance(double a, double b) {
    double d = std::fmod(std::abs(a - b), kTwoPi);
    return std::min(d, kTwoPi - d);
}

int missed_count(std::span<const double> true_omegas, std::span<const double> est_omegas,
                 double threshold) {
    int missed = 0;
    for (double t : true_omegas) {
        bool hit = false;
        for (double e : est_omegas)
            if (circular_distance(t, e) <= threshold) {
                hit = true;
                break;
            }
        if (!hit) ++missed;
    }
    return missed;
}

} // namespace subnyq
