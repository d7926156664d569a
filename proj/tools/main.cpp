#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "subnyq/corranalysis.hpp"
#include "subnyq/crb.hpp"
#include "subnyq/errors.hpp"
#include "subnyq/experiments.hpp"
#include "subnyq/io.hpp"
#include "subnyq/linalg.hpp"
#include "subnyq/multicoset.hpp"
#include "subnyq/rng.hpp"
#include "subnyq/spectralcs.hpp"

namespace {

using namespace subnyq;

std::string json_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += c;
        } else if (c == '\n') {
            out += "\\n";
        } else {
            out += c;
        }
    }
    return out;
}

// Common experiment options; every subcommand shares this shape.
struct CommonOpts {
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> iterations;
    std::optional<int> workers;
    std::string out_path;
    std::string config_path;
    bool plot = false;
};

void add_common(CLI::App* sub, CommonOpts& opts, const std::string& default_out) {
    opts.out_path = default_out;
    sub->add_option("--seed", opts.seed, "Base RNG seed");
    sub->add_option("--trials", opts.trials, "Monte Carlo trials per grid point");
    sub->add_option("--iterations", opts.iterations, "Recovery iterations");
    sub->add_option("--workers", opts.workers, "Worker threads (0 = all)");
    sub->add_option("--out", opts.out_path, "Output CSV path");
    sub->add_option("--config", opts.config_path, "JSON config overlay");
    sub->add_flag("--plot", opts.plot, "Also write a gnuplot script next to the CSV");
}

ExperimentConfig resolve_config(const std::string& experiment, const CommonOpts& opts) {
    ExperimentConfig cfg = default_config(experiment);
    if (!opts.config_path.empty())
        cfg = apply_config_json(cfg, read_text_file(opts.config_path));
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.trials) cfg.trials = *opts.trials;
    if (opts.iterations) cfg.iterations = *opts.iterations;
    if (opts.workers) cfg.workers = *opts.workers;
    return cfg;
}

void emit(const ResultTable& table, const CommonOpts& opts) {
    const std::string csv = render_csv(table);
    write_text_file(opts.out_path, csv);
    std::cout << "wrote " << opts.out_path << " (" << table.rows.size() << " rows)\n";
    if (opts.plot) {
        const std::string script_path = opts.out_path + ".gnuplot";
        write_text_file(script_path, render_plot_script(table, opts.out_path));
        std::cout << "wrote " << script_path << "\n";
    }
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stoi(cell));
        } catch (const std::exception&) {
            throw ConfigError("cannot parse " + what + " entry '" + cell + "'");
        }
    }
    if (out.empty()) throw ConfigError(what + " list is empty");
    return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stod(cell));
        } catch (const std::exception&) {
            throw ConfigError("cannot parse " + what + " entry '" + cell + "'");
        }
    }
    if (out.empty()) throw ConfigError(what + " list is empty");
    return out;
}

struct RecoverOpts {
    CommonOpts common;
    std::string bundle_path;
    std::string y_path, phi_path, meta_path;
    bool synth = false;
    int k = 20, n = 1024, m = 300;
    double sigma = 2.0, lambda = 1.0;
    std::string method = "nested";
    std::string save_bundle;
};

int run_recover(const RecoverOpts& o) {
    MeasurementBundle bundle;
    if (!o.bundle_path.empty()) {
        bundle = read_bundle(o.bundle_path);
    } else if (!o.y_path.empty()) {
        if (o.phi_path.empty() || o.meta_path.empty())
            throw ConfigError("recover: --y requires --phi and --meta");
        bundle = read_bundle_csv(o.y_path, o.phi_path, o.meta_path);
    } else if (o.synth) {
        const std::uint64_t seed = o.common.seed.value_or(1);
        Rng model_rng = Rng::stream(seed, "recover:model", 0);
        LineSpectrumModel model =
            draw_line_spectrum(o.k, model_rng, 10.0 * std::numbers::pi / o.n);
        const std::vector<cplx> x = synthesize_signal(model, o.n);
        Rng phi_rng = Rng::stream(seed, "recover:phi", 0);
        MeasurementSystem sys = draw_measurement_system(o.m, o.n, o.sigma, phi_rng);
        Rng noise_rng = Rng::stream(seed, "recover:noise", 0);
        bundle.y = measure(x, sys, noise_rng);
        bundle.phi = std::move(sys.phi);
        bundle.model_order = o.k;
        bundle.noise_sigma = o.sigma;
        bundle.lambda_step = o.lambda;
        bundle.truth = std::move(model);
    } else {
        throw ConfigError("recover: provide --bundle, --y/--phi/--meta, or --synth");
    }
    if (!o.save_bundle.empty()) write_bundle(o.save_bundle, bundle);

    const int iters = o.common.iterations.value_or(10);
    const AmplitudeStep step =
        o.method == "siht" ? AmplitudeStep::kSiht : AmplitudeStep::kNestedLs;
    if (o.method != "siht" && o.method != "nested")
        throw ConfigError("recover: --method must be nested or siht");

    const int n_len = static_cast<int>(bundle.phi.cols());
    const RecoveryTrace trace = recover(bundle.y, bundle.phi, bundle.model_order,
                                        bundle.lambda_step, StopRule{iters, std::nullopt}, step);

    std::vector<cplx> x_true;
    if (bundle.truth) x_true = synthesize_signal(*bundle.truth, n_len);
    double x2 = 0.0;
    for (const cplx& v : x_true) x2 += std::norm(v);
    const double threshold = 5.0 * std::numbers::pi / n_len;

    ResultTable table;
    table.experiment = "recover";
    table.seed = o.common.seed.value_or(0);
    ExperimentConfig hash_cfg = default_config("custom");
    hash_cfg.experiment = "recover";
    hash_cfg.k_sinusoids = bundle.model_order;
    hash_cfg.signal_len = n_len;
    hash_cfg.m_grid = {static_cast<int>(bundle.phi.rows())};
    hash_cfg.sigma_grid = {bundle.noise_sigma};
    hash_cfg.lambda_step = bundle.lambda_step;
    hash_cfg.iterations = iters;
    hash_cfg.seed = table.seed;
    table.hash = config_hash(hash_cfg);
    table.columns = {"iteration", "nmse_db", "residual", "missed_count"};
    for (int i = 0; i < trace.iterations_run; ++i) {
        const IterationRecord& rec = trace.iterations[i];
        double nmse = std::numeric_limits<double>::quiet_NaN();
        long long missed = -1;
        if (bundle.truth) {
            double e = 0.0;
            for (int j = 0; j < n_len; ++j) e += std::norm(x_true[j] - rec.x_hat[j]);
            nmse = 10.0 * std::log10(e / x2);
            missed = missed_count(bundle.truth->frequencies, rec.omega_hat, threshold);
        }
        table.rows.push_back(
            {static_cast<long long>(i + 1), nmse, rec.residual_norm, missed});
    }
    emit(table, o.common);
    return 0;
}

struct CorrelogramOpts {
    CommonOpts common;
    std::string signal_path;
    long long white_len = 0;
    double sigma2 = 4.0;
    double w_hz = 1000.0;
    int l = 0, q = 0, n = 0, nh = 8;
    std::string offsets_text;
};

int run_correlogram(const CorrelogramOpts& o) {
    if (o.l < 1) throw ConfigError("correlogram: --l is required");
    const std::uint64_t seed = o.common.seed.value_or(1);

    std::vector<int> offsets;
    if (!o.offsets_text.empty()) {
        offsets = parse_int_list(o.offsets_text, "offsets");
    } else {
        if (o.q < 1) throw ConfigError("correlogram: provide --offsets or --q");
        Rng rng = Rng::stream(seed, "correlogram:offsets", 0);
        offsets = draw_offsets(o.l, o.q, rng);
    }

    std::vector<cplx> x;
    if (!o.signal_path.empty()) {
        x = read_signal(o.signal_path);
    } else if (o.white_len > 0) {
        Rng rng = Rng::stream(seed, "correlogram:signal", 0);
        x = white_gaussian_signal(o.white_len, o.sigma2, rng);
    } else {
        throw ConfigError("correlogram: provide --signal or --white");
    }

    int cmax = 0;
    for (int c : offsets) cmax = std::max(cmax, c);
    int n = o.n;
    if (n <= 0) {
        // Largest per-channel count the signal supports.
        n = static_cast<int>((static_cast<long long>(x.size()) - cmax - 1) / o.l + 1);
    }
    const MultiCosetConfig cfg = make_config(o.w_hz, o.l, offsets, n, o.nh);
    const DelayFilterBank filters = design_delay_filters(cfg);
    const ChannelSamples samples = sample_signal(x, cfg);
    const ComplexMatrix rz = estimate_rz(samples, filters, cfg);
    const PowerEstimate est = estimate_power(rz, cfg, filters);

    std::string csv = "# subnyq correlogram\n";
    csv += "# seed=" + std::to_string(seed) + "\n";
    std::string offs = "# offsets=";
    for (std::size_t i = 0; i < offsets.size(); ++i)
        offs += (i ? "," : "") + std::to_string(offsets[i]);
    csv += offs + "\n";
    csv += "segment_index,p_hat\n";
    for (std::size_t l = 0; l < est.p_hat.size(); ++l)
        csv += std::to_string(l) + "," + format_double(est.p_hat[l]) + "\n";
    write_text_file(o.common.out_path, csv);
    std::cout << "wrote " << o.common.out_path << " (" << est.p_hat.size() << " segments)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    init_deterministic_blas();
    CLI::App app{"sub-Nyquist spectral estimation toolkit"};
    app.require_subcommand(1);

    // Experiment subcommands sharing the ResultTable pipeline.
    struct ExpSub {
        std::string name;
        std::string help;
        CommonOpts opts;
        CLI::App* sub = nullptr;
        std::string sigma_text, m_text, lq_text, nx_text;
    };
    std::vector<ExpSub> subs = {
        {"fig1", "Correlogram variance vs Nyquist length", {}, nullptr, "", "", "", ""},
        {"fig2", "Recovery NMSE per iteration", {}, nullptr, "", "", "", ""},
        {"fig3", "Recovery NMSE vs noise level", {}, nullptr, "", "", "", ""},
        {"fig4", "Recovery NMSE vs measurement count", {}, nullptr, "", "", "", ""},
        {"table1", "Average missed frequencies per iteration", {}, nullptr, "", "", "", ""},
        {"crb", "Cramer-Rao bound grid", {}, nullptr, "", "", "", ""},
    };
    for (auto& e : subs) {
        e.sub = app.add_subcommand(e.name, e.help);
        add_common(e.sub, e.opts, e.name + ".csv");
        if (e.name == "fig1") {
            e.sub->add_option("--nx", e.nx_text, "Comma list of Nyquist lengths");
            e.sub->add_option("--lq", e.lq_text, "Comma list of l:q pairs, e.g. 51:12,101:25");
        } else {
            e.sub->add_option("--sigma", e.sigma_text, "Comma list of noise sigmas");
            e.sub->add_option("--m", e.m_text, "Comma list of measurement counts");
        }
    }

    RecoverOpts rec;
    CLI::App* rec_sub = app.add_subcommand("recover", "Run one recovery and dump the trace");
    add_common(rec_sub, rec.common, "recover.csv");
    rec_sub->add_option("--bundle", rec.bundle_path, "Binary measurement bundle");
    rec_sub->add_option("--y", rec.y_path, "Measurement CSV (re,im rows)");
    rec_sub->add_option("--phi", rec.phi_path, "Sensing matrix CSV");
    rec_sub->add_option("--meta", rec.meta_path, "Meta JSON");
    rec_sub->add_flag("--synth", rec.synth, "Synthesize a random instance");
    rec_sub->add_option("--k", rec.k, "Sinusoid count for --synth");
    rec_sub->add_option("--n", rec.n, "Signal length for --synth");
    rec_sub->add_option("--m", rec.m, "Measurement count for --synth");
    rec_sub->add_option("--sigma", rec.sigma, "Noise sigma for --synth");
    rec_sub->add_option("--lambda", rec.lambda, "Outer step size for --synth");
    rec_sub->add_option("--method", rec.method, "nested (default) or siht");
    rec_sub->add_option("--save-bundle", rec.save_bundle, "Write the instance as a bundle");

    CorrelogramOpts cor;
    CLI::App* cor_sub = app.add_subcommand("correlogram", "Estimate segment powers from a signal");
    add_common(cor_sub, cor.common, "correlogram.csv");
    cor_sub->add_option("--signal", cor.signal_path, "Input signal (.csv or raw float64)");
    cor_sub->add_option("--white", cor.white_len, "Synthesize this many white samples instead");
    cor_sub->add_option("--sigma2", cor.sigma2, "Power of the synthesized white signal");
    cor_sub->add_option("--w", cor.w_hz, "Nyquist rate in Hz");
    cor_sub->add_option("--l", cor.l, "Spectral segments (odd)")->required();
    cor_sub->add_option("--q", cor.q, "Channels to draw offsets for");
    cor_sub->add_option("--offsets", cor.offsets_text, "Comma list of channel offsets");
    cor_sub->add_option("--n", cor.n, "Samples per channel (default: all available)");
    cor_sub->add_option("--nh", cor.nh, "Delay filter length");

    CLI11_PARSE(app, argc, argv);

    try {
        for (auto& e : subs) {
            if (!e.sub->parsed()) continue;
            ExperimentConfig cfg = resolve_config(e.name, e.opts);
            if (!e.sigma_text.empty()) cfg.sigma_grid = parse_double_list(e.sigma_text, "sigma");
            if (!e.m_text.empty()) cfg.m_grid = parse_int_list(e.m_text, "m");
            if (!e.nx_text.empty()) {
                cfg.nx_grid.clear();
                for (int v : parse_int_list(e.nx_text, "nx")) cfg.nx_grid.push_back(v);
            }
            if (!e.lq_text.empty()) {
                cfg.lq_grid.clear();
                std::stringstream ss(e.lq_text);
                std::string cell;
                while (std::getline(ss, cell, ',')) {
                    const auto colon = cell.find(':');
                    if (colon == std::string::npos)
                        throw ConfigError("--lq entries must look like 51:12");
                    cfg.lq_grid.emplace_back(std::stoi(cell.substr(0, colon)),
                                             std::stoi(cell.substr(colon + 1)));
                }
            }
            emit(run_experiment(cfg), e.opts);
            return 0;
        }
        if (rec_sub->parsed()) return run_recover(rec);
        if (cor_sub->parsed()) return run_correlogram(cor);
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"" << json_escape(e.what()) << "\"}" << std::endl;
        return 1;
    }
    return 0;
}
