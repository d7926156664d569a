#include "subnyq/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <omp.h>
#include <json.hpp>

#include "subnyq/corranalysis.hpp"
#include "subnyq/crb.hpp"
#include "subnyq/errors.hpp"
#include "subnyq/io.hpp"
#include "subnyq/multicoset.hpp"
#include "subnyq/rng.hpp"
#include "subnyq/spectralcs.hpp"

namespace subnyq {

namespace {

constexpr double kPi = std::numbers::pi;

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n == 0) return {nan_value(), nan_value()};
    double s = 0.0;
    for (double x : v) s += x;
    const double mean = s / static_cast<double>(n);
    if (n == 1) return {mean, nan_value()};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (static_cast<double>(n) * (n - 1)))};
}

// Standard error of 10*log10(sum(num)/sum(den)) by the delta method on the
// ratio of means.
double ratio_db_stderr(const std::vector<double>& num, const std::vector<double>& den) {
    const std::size_t n = num.size();
    if (n < 2 || den.size() != n) return nan_value();
    double mn = 0.0, md = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mn += num[i];
        md += den[i];
    }
    mn /= static_cast<double>(n);
    md /= static_cast<double>(n);
    if (!(md > 0.0) || !(mn > 0.0)) return nan_value();
    const double r = mn / md;
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = (num[i] - r * den[i]) / md;
        var += e * e;
    }
    var /= static_cast<double>(n) * (n - 1);
    return 10.0 / std::log(10.0) * std::sqrt(var) / r;
}

std::string grid_tag(const std::string& experiment, std::size_t index) {
    return experiment + ":g" + std::to_string(index);
}

} // namespace

void parallel_trials(int trials, int workers, const std::function<void(int)>& body) {
    if (trials <= 0) return;
    int w = workers > 0 ? workers : omp_get_max_threads();
    w = std::max(1, w);
#pragma omp parallel for num_threads(w) schedule(dynamic, 1)
    for (int t = 0; t < trials; ++t) body(t);
}

ExperimentConfig default_config(const std::string& experiment) {
    ExperimentConfig cfg;
    cfg.experiment = experiment;
    if (experiment == "fig1") {
        cfg.nx_grid = {1 << 15, 1 << 16, 1 << 17, 1 << 18, 1 << 19, 1 << 20};
        cfg.lq_grid = {{51, 12}, {101, 25}, {201, 50}, {101, 20}};
        cfg.trials = 0; // analytical curves by default
    } else if (experiment == "fig2") {
        cfg.sigma_grid = {2.0};
        cfg.m_grid = {300};
        cfg.iterations = 10;
        cfg.trials = 200;
    } else if (experiment == "fig3") {
        cfg.sigma_grid = {1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
        cfg.m_grid = {300};
        cfg.iterations = 10;
        cfg.trials = 200;
    } else if (experiment == "fig4") {
        cfg.sigma_grid = {2.0};
        cfg.m_grid = {150, 200, 250, 300, 350, 400};
        cfg.iterations = 10;
        cfg.trials = 200;
    } else if (experiment == "table1") {
        cfg.sigma_grid = {2.0, 3.0, 4.0};
        cfg.m_grid = {300};
        cfg.iterations = 4;
        cfg.trials = 1000;
    } else if (experiment == "crb") {
        cfg.sigma_grid = {1.0, 2.0, 3.0, 4.0};
        cfg.m_grid = {300};
        cfg.trials = 50;
    } else if (experiment == "custom") {
        cfg.sigma_grid = {2.0};
        cfg.m_grid = {300};
    } else {
        throw ConfigError("unknown experiment '" + experiment + "'");
    }
    return cfg;
}

std::string canonical_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["experiment"] = cfg.experiment;
    j["nx_grid"] = cfg.nx_grid;
    nlohmann::json lq = nlohmann::json::array();
    for (const auto& [l, q] : cfg.lq_grid) lq.push_back({l, q});
    j["lq_grid"] = lq;
    j["w_hz"] = cfg.w_hz;
    j["sigma2_power"] = cfg.sigma2_power;
    j["filter_len"] = cfg.filter_len;
    j["sigma_grid"] = cfg.sigma_grid;
    j["m_grid"] = cfg.m_grid;
    j["iterations"] = cfg.iterations;
    j["k_sinusoids"] = cfg.k_sinusoids;
    j["signal_len"] = cfg.signal_len;
    j["lambda_step"] = cfg.lambda_step;
    j["rm_window"] = cfg.rm_window;
    j["min_spacing_factor"] = cfg.min_spacing_factor;
    j["miss_threshold_factor"] = cfg.miss_threshold_factor;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    return j.dump(); // object keys are emitted sorted
}

std::uint64_t config_hash(const ExperimentConfig& cfg) { return fnv1a64(canonical_json(cfg)); }

ExperimentConfig apply_config_json(const ExperimentConfig& base, const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed config JSON: ") + e.what());
    }
    if (!j.is_object()) throw IoError("config JSON must be an object");

    ExperimentConfig cfg = base;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "experiment")
                cfg.experiment = value.get<std::string>();
            else if (key == "nx_grid")
                cfg.nx_grid = value.get<std::vector<long long>>();
            else if (key == "lq_grid") {
                cfg.lq_grid.clear();
                for (const auto& pair : value) {
                    if (!pair.is_array() || pair.size() != 2)
                        throw IoError("lq_grid entries must be [l, q] pairs");
                    cfg.lq_grid.emplace_back(pair[0].get<int>(), pair[1].get<int>());
                }
            } else if (key == "w_hz")
                cfg.w_hz = value.get<double>();
            else if (key == "sigma2_power")
                cfg.sigma2_power = value.get<double>();
            else if (key == "filter_len")
                cfg.filter_len = value.get<int>();
            else if (key == "sigma_grid")
                cfg.sigma_grid = value.get<std::vector<double>>();
            else if (key == "m_grid")
                cfg.m_grid = value.get<std::vector<int>>();
            else if (key == "iterations")
                cfg.iterations = value.get<int>();
            else if (key == "k_sinusoids")
                cfg.k_sinusoids = value.get<int>();
            else if (key == "signal_len")
                cfg.signal_len = value.get<int>();
            else if (key == "lambda_step")
                cfg.lambda_step = value.get<double>();
            else if (key == "rm_window")
                cfg.rm_window = value.get<int>();
            else if (key == "min_spacing_factor")
                cfg.min_spacing_factor = value.get<double>();
            else if (key == "miss_threshold_factor")
                cfg.miss_threshold_factor = value.get<double>();
            else if (key == "trials")
                cfg.trials = value.get<int>();
            else if (key == "seed")
                cfg.seed = value.get<std::uint64_t>();
            else if (key == "workers")
                cfg.workers = value.get<int>();
            else
                throw IoError("unknown config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad config value: ") + e.what());
    }
    return cfg;
}

std::string render_csv(const ResultTable& table) {
    std::string out;
    for (const std::string& c : table.columns) {
        out += c;
        out += ',';
    }
    out += "seed,config_hash\n";
    char hash_hex[20];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(table.hash));
    const std::string seed_str = std::to_string(table.seed);
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size())
            throw ConfigError("render_csv: row width does not match columns");
        for (const Cell& cell : row) {
            if (std::holds_alternative<long long>(cell))
                out += std::to_string(std::get<long long>(cell));
            else if (std::holds_alternative<double>(cell))
                out += format_double(std::get<double>(cell));
            else
                out += std::get<std::string>(cell);
            out += ',';
        }
        out += seed_str;
        out += ',';
        out += hash_hex;
        out += '\n';
    }
    return out;
}

std::string render_plot_script(const ResultTable& table, const std::string& csv_path) {
    std::string s;
    s += "set datafile separator ','\n";
    s += "set key top right\n";
    s += "set grid\n";
    if (table.experiment == "fig1") {
        s += "set logscale xy\n";
        s += "set xlabel 'Nyquist samples N_x'\nset ylabel 'var(p_1)'\n";
        s += "plot '" + csv_path + "' using 1:($4) with linespoints title 'analytical', \\\n";
        s += "     '" + csv_path + "' using 1:($5) with points title 'empirical'\n";
    } else if (table.experiment == "table1") {
        s += "set xlabel 'iteration'\nset ylabel 'average missed frequencies'\n";
        s += "plot '" + csv_path + "' using 2:3 with linespoints title 'missed'\n";
    } else if (table.experiment == "crb") {
        s += "set xlabel 'sigma'\nset ylabel 'NCRB (dB)'\n";
        s += "plot '" + csv_path + "' using 1:4 with linespoints title 'NCRB'\n";
    } else {
        s += "set xlabel 'iteration'\nset ylabel 'NMSE (dB)'\n";
        s += "plot '" + csv_path + "' using 3:(strcol(4) eq 'nested_ls' ? $5 : 1/0)"
             " with linespoints title 'nested LS', \\\n";
        s += "     '" + csv_path + "' using 3:(strcol(4) eq 'siht' ? $5 : 1/0)"
             " with linespoints title 'SIHT', \\\n";
        s += "     '" + csv_path + "' using 3:(strcol(4) eq 'ncrb' ? $5 : 1/0)"
             " with lines title 'NCRB'\n";
    }
    return s;
}

ResultTable run_fig1(const ExperimentConfig& cfg) {
    if (cfg.nx_grid.empty() || cfg.lq_grid.empty())
        throw ConfigError("run_fig1: nx_grid and lq_grid must be non-empty");
    ResultTable table;
    table.experiment = "fig1";
    table.seed = cfg.seed;
    table.hash = config_hash(cfg);
    table.columns = {"n_x", "l", "q", "analytical_var", "empirical_var", "trials"};

    for (std::size_t pi = 0; pi < cfg.lq_grid.size(); ++pi) {
        const auto [l_count, q_count] = cfg.lq_grid[pi];
        Rng offs_rng = Rng::stream(cfg.seed, "fig1:offsets", pi);
        const std::vector<int> offsets = draw_offsets(l_count, q_count, offs_rng);

        for (std::size_t ni = 0; ni < cfg.nx_grid.size(); ++ni) {
            const long long nx = cfg.nx_grid[ni];
            const long long n_ll = (nx + l_count / 2) / l_count;
            if (n_ll < 2LL * cfg.filter_len - 1)
                throw ConfigError("run_fig1: nx too small for segments_l=" +
                                  std::to_string(l_count));
            const int n = static_cast<int>(n_ll);
            const MultiCosetConfig mc =
                make_config(cfg.w_hz, l_count, offsets, n, cfg.filter_len);
            const DelayFilterBank filters = design_delay_filters(mc);
            const double analytic = variance_p_first(mc, filters, cfg.sigma2_power);

            double empirical = nan_value();
            if (cfg.trials > 1) {
                const PowerSolver solver(mc, filters);
                int cmax = 0;
                for (int c : mc.offsets) cmax = std::max(cmax, c);
                const long long sig_len =
                    static_cast<long long>(n - 1) * l_count + cmax + 1;
                std::vector<double> p1(cfg.trials);
                const std::string tag =
                    grid_tag("fig1", pi * cfg.nx_grid.size() + ni) + ":signal";
                parallel_trials(cfg.trials, cfg.workers, [&](int t) {
                    Rng rng = Rng::stream(cfg.seed, tag, t);
                    const std::vector<cplx> x =
                        white_gaussian_signal(sig_len, cfg.sigma2_power, rng);
                    const ChannelSamples ys = sample_signal(x, mc);
                    const ComplexMatrix rz = estimate_rz(ys, filters, mc);
                    p1[t] = solver.solve(rz).p_hat.front();
                });
                double mean = 0.0;
                for (double v : p1) mean += v;
                mean /= cfg.trials;
                double ss = 0.0;
                for (double v : p1) ss += (v - mean) * (v - mean);
                empirical = ss / (cfg.trials - 1);
            }

            table.rows.push_back({static_cast<long long>(mc.nyquist_length()),
                                  static_cast<long long>(l_count),
                                  static_cast<long long>(q_count), analytic, empirical,
                                  static_cast<long long>(cfg.trials)});
        }
    }
    return table;
}

namespace {

struct NmseSlot {
    double signal_energy = 0.0;
    std::vector<double> err_nested;  // per iteration
    std::vector<double> err_siht;    // per iteration
    double crb = 0.0;
    bool crb_ok = false;
};

NmseSlot run_recovery_trial(const ExperimentConfig& cfg, const std::string& tag, int trial,
                            double sigma, int m, bool with_crb) {
    const int n = cfg.signal_len;
    const int k = cfg.k_sinusoids;
    const double spacing = cfg.min_spacing_factor * kPi / n;

    Rng model_rng = Rng::stream(cfg.seed, tag + ":model", trial);
    const LineSpectrumModel model = draw_line_spectrum(k, model_rng, spacing);
    const std::vector<cplx> x = synthesize_signal(model, n);

    Rng phi_rng = Rng::stream(cfg.seed, tag + ":phi", trial);
    const MeasurementSystem sys = draw_measurement_system(m, n, sigma, phi_rng);
    Rng noise_rng = Rng::stream(cfg.seed, tag + ":noise", trial);
    const std::vector<cplx> y = measure(x, sys, noise_rng);

    const RootMusicConfig rm{cfg.rm_window, k};
    const StopRule stop{cfg.iterations, std::nullopt};

    NmseSlot slot;
    for (const cplx& v : x) slot.signal_energy += std::norm(v);

    const RecoveryTrace nested =
        recover(y, sys.phi, k, cfg.lambda_step, stop, AmplitudeStep::kNestedLs, rm);
    const RecoveryTrace siht =
        recover(y, sys.phi, k, cfg.lambda_step, stop, AmplitudeStep::kSiht, rm);

    auto errs = [&](const RecoveryTrace& tr) {
        std::vector<double> e(cfg.iterations, nan_value());
        for (int i = 0; i < tr.iterations_run; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += std::norm(x[j] - tr.iterations[i].x_hat[j]);
            e[i] = s;
        }
        return e;
    };
    slot.err_nested = errs(nested);
    slot.err_siht = errs(siht);

    if (with_crb) {
        try {
            slot.crb = crb_trace(model, sys.phi, sigma * sigma).crb;
            slot.crb_ok = true;
        } catch (const SingularMatrixError&) {
            slot.crb_ok = false;
        }
    }
    return slot;
}

} // namespace

ResultTable run_nmse(const ExperimentConfig& cfg) {
    if (cfg.sigma_grid.empty() || cfg.m_grid.empty())
        throw ConfigError("run_nmse: sigma_grid and m_grid must be non-empty");
    if (cfg.trials < 1) throw ConfigError("run_nmse: trials must be positive");
    ResultTable table;
    table.experiment = cfg.experiment;
    table.seed = cfg.seed;
    table.hash = config_hash(cfg);
    table.columns = {"sigma", "m", "iteration", "method", "nmse_db", "stderr_db", "trials"};

    std::size_t gi = 0;
    for (double sigma : cfg.sigma_grid)
        for (int m : cfg.m_grid) {
            const std::string tag = grid_tag(cfg.experiment, gi++);
            std::vector<NmseSlot> slots(cfg.trials);
            parallel_trials(cfg.trials, cfg.workers, [&](int t) {
                slots[t] = run_recovery_trial(cfg, tag, t, sigma, m, true);
            });

            std::vector<double> sig(cfg.trials);
            for (int t = 0; t < cfg.trials; ++t) sig[t] = slots[t].signal_energy;
            double sig_sum = 0.0;
            for (double v : sig) sig_sum += v;

            auto emit_method = [&](const std::string& method, auto pick) {
                for (int i = 0; i < cfg.iterations; ++i) {
                    std::vector<double> err(cfg.trials);
                    double err_sum = 0.0;
                    for (int t = 0; t < cfg.trials; ++t) {
                        err[t] = pick(slots[t], i);
                        err_sum += err[t];
                    }
                    const double nmse = 10.0 * std::log10(err_sum / sig_sum);
                    table.rows.push_back({sigma, static_cast<long long>(m),
                                          static_cast<long long>(i + 1), method, nmse,
                                          ratio_db_stderr(err, sig),
                                          static_cast<long long>(cfg.trials)});
                }
            };
            emit_method("nested_ls",
                        [](const NmseSlot& s, int i) { return s.err_nested[i]; });
            emit_method("siht", [](const NmseSlot& s, int i) { return s.err_siht[i]; });

            std::vector<double> crbs, crb_sig;
            for (int t = 0; t < cfg.trials; ++t)
                if (slots[t].crb_ok) {
                    crbs.push_back(slots[t].crb);
                    crb_sig.push_back(slots[t].signal_energy);
                }
            double crb_sum = 0.0, csig_sum = 0.0;
            for (std::size_t t = 0; t < crbs.size(); ++t) {
                crb_sum += crbs[t];
                csig_sum += crb_sig[t];
            }
            const double ncrb =
                crbs.empty() ? nan_value() : 10.0 * std::log10(crb_sum / csig_sum);
            table.rows.push_back({sigma, static_cast<long long>(m), 0LL,
                                  std::string("ncrb"), ncrb, ratio_db_stderr(crbs, crb_sig),
                                  static_cast<long long>(crbs.size())});
        }
    return table;
}

ResultTable run_table1(const ExperimentConfig& cfg) {
    if (cfg.sigma_grid.empty() || cfg.m_grid.empty())
        throw ConfigError("run_table1: sigma_grid and m_grid must be non-empty");
    if (cfg.trials < 1) throw ConfigError("run_table1: trials must be positive");
    ResultTable table;
    table.experiment = "table1";
    table.seed = cfg.seed;
    table.hash = config_hash(cfg);
    table.columns = {"sigma", "iteration", "avg_missed", "stderr", "trials"};

    const int n = cfg.signal_len;
    const int k = cfg.k_sinusoids;
    const int m = cfg.m_grid.front();
    const double spacing = cfg.min_spacing_factor * kPi / n;
    const double threshold = cfg.miss_threshold_factor * kPi / n;

    for (std::size_t si = 0; si < cfg.sigma_grid.size(); ++si) {
        const double sigma = cfg.sigma_grid[si];
        const std::string tag = grid_tag("table1", si);
        std::vector<std::vector<double>> missed(cfg.trials);
        parallel_trials(cfg.trials, cfg.workers, [&](int t) {
            Rng model_rng = Rng::stream(cfg.seed, tag + ":model", t);
            const LineSpectrumModel model = draw_line_spectrum(k, model_rng, spacing);
            const std::vector<cplx> x = synthesize_signal(model, n);
            Rng phi_rng = Rng::stream(cfg.seed, tag + ":phi", t);
            const MeasurementSystem sys = draw_measurement_system(m, n, sigma, phi_rng);
            Rng noise_rng = Rng::stream(cfg.seed, tag + ":noise", t);
            const std::vector<cplx> y = measure(x, sys, noise_rng);

            const RootMusicConfig rm{cfg.rm_window, k};
            const RecoveryTrace tr = recover(y, sys.phi, k, cfg.lambda_step,
                                             StopRule{cfg.iterations, std::nullopt},
                                             AmplitudeStep::kNestedLs, rm);
            std::vector<double> miss(cfg.iterations, nan_value());
            for (int i = 0; i < tr.iterations_run; ++i)
                miss[i] = missed_count(model.frequencies, tr.iterations[i].omega_hat, threshold);
            missed[t] = std::move(miss);
        });

        for (int i = 0; i < cfg.iterations; ++i) {
            std::vector<double> col(cfg.trials);
            for (int t = 0; t < cfg.trials; ++t) col[t] = missed[t][i];
            const MeanStderr ms = mean_stderr(col);
            table.rows.push_back({sigma, static_cast<long long>(i + 1), ms.mean, ms.stderr_,
                                  static_cast<long long>(cfg.trials)});
        }
    }
    return table;
}

ResultTable run_crb(const ExperimentConfig& cfg) {
    if (cfg.sigma_grid.empty() || cfg.m_grid.empty())
        throw ConfigError("run_crb: sigma_grid and m_grid must be non-empty");
    if (cfg.trials < 1) throw ConfigError("run_crb: trials must be positive");
    ResultTable table;
    table.experiment = "crb";
    table.seed = cfg.seed;
    table.hash = config_hash(cfg);
    table.columns = {"sigma", "m", "crb", "ncrb_db", "trials"};

    const int n = cfg.signal_len;
    const int k = cfg.k_sinusoids;
    const double spacing = cfg.min_spacing_factor * kPi / n;

    std::size_t gi = 0;
    for (double sigma : cfg.sigma_grid)
        for (int m : cfg.m_grid) {
            const std::string tag = grid_tag("crb", gi++);
            std::vector<double> crbs(cfg.trials, nan_value());
            std::vector<double> energies(cfg.trials, 0.0);
            parallel_trials(cfg.trials, cfg.workers, [&](int t) {
                Rng model_rng = Rng::stream(cfg.seed, tag + ":model", t);
                const LineSpectrumModel model = draw_line_spectrum(k, model_rng, spacing);
                Rng phi_rng = Rng::stream(cfg.seed, tag + ":phi", t);
                const MeasurementSystem sys = draw_measurement_system(m, n, sigma, phi_rng);
                const std::vector<cplx> x = synthesize_signal(model, n);
                for (const cplx& v : x) energies[t] += std::norm(v);
                try {
                    crbs[t] = crb_trace(model, sys.phi, sigma * sigma).crb;
                } catch (const SingularMatrixError&) {
                    crbs[t] = nan_value();
                }
            });
            double crb_sum = 0.0, sig_sum = 0.0;
            long long ok = 0;
            for (int t = 0; t < cfg.trials; ++t)
                if (std::isfinite(crbs[t])) {
                    crb_sum += crbs[t];
                    sig_sum += energies[t];
                    ++ok;
                }
            const double crb_mean = ok > 0 ? crb_sum / ok : nan_value();
            const double ncrb = ok > 0 ? 10.0 * std::log10(crb_sum / sig_sum) : nan_value();
            table.rows.push_back({sigma, static_cast<long long>(m), crb_mean, ncrb, ok});
        }
    return table;
}

ResultTable run_experiment(const ExperimentConfig& cfg) {
    if (cfg.experiment == "fig1") return run_fig1(cfg);
    if (cfg.experiment == "fig2" || cfg.experiment == "fig3" || cfg.experiment == "fig4" ||
        cfg.experiment == "custom")
        return run_nmse(cfg);
    if (cfg.experiment == "table1") return run_table1(cfg);
    if (cfg.experiment == "crb") return run_crb(cfg);
    throw ConfigError("run_experiment: unknown experiment '" + cfg.experiment + "'");
}

} // namespace subnyq
