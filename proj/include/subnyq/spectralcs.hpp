#ifndef SUBNYQ_SPECTRALCS_HPP
#define SUBNYQ_SPECTRALCS_HPP

#include <optional>
#include <span>
#include <vector>

#include "subnyq/linalg.hpp"
#include "subnyq/rng.hpp"

namespace subnyq {

// Mixture of K complex sinusoids x(n) = sum_k d_k exp(-j omega_k n).
struct LineSpectrumModel {
    std::vector<double> frequencies; // omega_k in [0, 2 pi)
    std::vector<cplx> amplitudes;    // d_k

    int count() const { return static_cast<int>(frequencies.size()); }
};

// Frequencies uniform on [0, 2 pi) with pairwise circular spacing of at least
// min_spacing, moduli uniform on [1, 2]; phases zero unless random_phase.
LineSpectrumModel draw_line_spectrum(int k, Rng& rng, double min_spacing,
                                     bool random_phase = false);

// x(n), n = 0..n_len-1.
std::vector<cplx> synthesize_signal(const LineSpectrumModel& model, int n_len);

// A(:, k) = exp(-j omega_k n), n_len x K.
ComplexMatrix vandermonde(std::span<const double> omegas, int n_len);

struct MeasurementSystem {
    RealMatrix phi;     // M x N, entries N(0, 1/M)
    double noise_sigma; // per-component std dev of the circular complex noise
};

MeasurementSystem draw_measurement_system(int m, int n_len, double noise_sigma, Rng& rng);

// y = Phi x + w with w circularly symmetric, E{|w_i|^2} = noise_sigma^2.
std::vector<cplx> measure(std::span<const cplx> x, const MeasurementSystem& sys, Rng& rng);

// Gradient step toward the unconstrained LS solution:
// x_e = x_prev + lambda Phi^T (y - Phi x_prev).
std::vector<cplx> outer_ls_step(std::span<const cplx> x_prev, std::span<const cplx> y,
                                const RealMatrix& phi, double lambda);

struct RootMusicConfig {
    int window = 52;      // autocorrelation order W_x; must exceed 2 * model_order
    int model_order = 20; // K
    // Minimal window for a given K; recover() widens it for long signals.
    static RootMusicConfig for_order(int k) { return {2 * k + 12, k}; }
};

struct RootMusicResult {
    std::vector<double> frequencies; // ascending, in [0, 2 pi)
    int admissible = 0;              // roots strictly inside the unit circle
    bool degenerate = false;         // fewer than model_order frequencies found
};

// Root-MUSIC on the estimated signal: sample autocorrelation matrix of order
// `window`, noise projector from the trailing eigenvectors, roots of the
// projector polynomial; the model_order roots nearest the unit circle (from
// strictly inside) give the frequencies. Equidistant candidates prefer the
// phase farthest from frequencies already selected.
RootMusicResult root_music(std::span<const cplx> x, const RootMusicConfig& cfg);

struct AmplitudeEstimate {
    std::vector<cplx> amplitudes;
    int merged = 0; // duplicate frequencies collapsed before the solve
};

// d = argmin ||y - Phi A d||; frequencies closer than 1e-9 are collapsed to
// one column (the duplicates get zero amplitude) and the merge is reported.
AmplitudeEstimate inner_ls_amplitudes(std::span<const cplx> y, const RealMatrix& phi,
                                      const ComplexMatrix& a_hat,
                                      std::span<const double> omegas);

// Hard-thresholding baseline: d = A^H x_e / n_len.
std::vector<cplx> siht_amplitudes(std::span<const cplx> x_e, const ComplexMatrix& a_hat);

enum class AmplitudeStep { kNestedLs, kSiht };

struct StopRule {
    int max_iterations = 10;
    // Stop once ||y - Phi x_hat||^2 / ||y||^2 drops below this, when set.
    std::optional<double> error_threshold;
};

struct IterationRecord {
    std::vector<double> omega_hat;
    std::vector<cplx> d_hat;
    std::vector<cplx> x_hat;
    double residual_norm = 0.0;     // ||y - Phi x_hat||
    double normalized_error = 0.0;  // residual^2 / ||y||^2
    bool degenerate = false;        // root finding returned short or LS fell back
    int merged = 0;
};

struct RecoveryTrace {
    std::vector<IterationRecord> iterations;
    int iterations_run = 0;
};

// Alternating recovery: outer gradient step, root-MUSIC frequency refresh,
// amplitude step (nested LS or SIHT), repeated until the stop rule fires.
// Shortfalls in the frequency estimate are padded from the previous iterate
// and flagged degenerate rather than aborting.
RecoveryTrace recover(std::span<const cplx> y, const RealMatrix& phi, int k, double lambda,
                      const StopRule& stop, AmplitudeStep method = AmplitudeStep::kNestedLs,
                      std::optional<RootMusicConfig> rm = std::nullopt);

// Circular distance |a - b| on the frequency torus [0, 2 pi).
double circular_distance(double a, double b);

// True frequencies with no estimate within `threshold` (circular).
int missed_count(std::span<const double> true_omegas, std::span<const double> est_omegas,
                 double threshold);

} // namespace subnyq

#endif
