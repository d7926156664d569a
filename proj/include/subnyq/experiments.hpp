#ifndef SUBNYQ_EXPERIMENTS_HPP
#define SUBNYQ_EXPERIMENTS_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "subnyq/linalg.hpp"

namespace subnyq {

// One config type covers every experiment; unused grids stay empty. Defaults
// per experiment come from default_config and match the reference settings
// used throughout the documentation.
struct ExperimentConfig {
    std::string experiment = "fig2"; // fig1|fig2|fig3|fig4|table1|crb|custom

    // Correlogram variance study (fig1).
    std::vector<long long> nx_grid;                // Nyquist-grid lengths
    std::vector<std::pair<int, int>> lq_grid;      // (segments_l, channels)
    double w_hz = 1000.0;
    double sigma2_power = 4.0;
    int filter_len = 8;

    // Compressive recovery studies (fig2/fig3/fig4/table1/crb).
    std::vector<double> sigma_grid; // noise standard deviations
    std::vector<int> m_grid;        // measurement counts
    int iterations = 10;
    int k_sinusoids = 20;
    int signal_len = 1024;
    double lambda_step = 1.0;
    // Root-MUSIC frame length. Frames under ~160 samples cannot separate 20
    // tones near the minimum spacing and the recovery stalls well above the
    // CRB; longer frames sharpen the estimates at cubic cost. 192 is the
    // smallest length that reproduces the reference missed-frequency counts.
    int rm_window = 192;
    double min_spacing_factor = 10.0;  // spacing >= factor * pi / signal_len
    double miss_threshold_factor = 5.0; // hit radius = factor * pi / signal_len

    int trials = 200;
    std::uint64_t seed = 1;
    int workers = 0; // 0 = all hardware threads
};

ExperimentConfig default_config(const std::string& experiment);

// Canonical JSON with sorted keys; the config hash is FNV-1a over this string.
std::string canonical_json(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Overlays JSON text onto `base`. Unknown keys are rejected.
ExperimentConfig apply_config_json(const ExperimentConfig& base, const std::string& json_text);

using Cell = std::variant<long long, double, std::string>;

// Every row additionally carries the seed and config hash when rendered.
struct ResultTable {
    std::string experiment;
    std::uint64_t seed = 0;
    std::uint64_t hash = 0;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

std::string render_csv(const ResultTable& table);

// gnuplot commands referencing the CSV, one plot per experiment family.
std::string render_plot_script(const ResultTable& table, const std::string& csv_path);

// Analytical (and optionally empirical) variance of the first power estimate
// across the (L, q) x N_x grid.
ResultTable run_fig1(const ExperimentConfig& cfg);

// NMSE of nested-LS and SIHT recovery plus the normalized CRB over the
// sigma x M grid; per-iteration rows.
ResultTable run_nmse(const ExperimentConfig& cfg);

// Average missed-frequency counts per iteration for each sigma.
ResultTable run_table1(const ExperimentConfig& cfg);

// CRB and normalized CRB per (sigma, M), averaged over random models.
ResultTable run_crb(const ExperimentConfig& cfg);

// Dispatch on cfg.experiment ("custom" runs run_nmse with the given grids).
ResultTable run_experiment(const ExperimentConfig& cfg);

// Deterministic parallel trial loop: per-trial slots, fixed-order reduction
// is the caller's job. workers <= 0 means all hardware threads.
void parallel_trials(int trials, int workers, const std::function<void(int)>& body);

} // namespace subnyq

#endif
