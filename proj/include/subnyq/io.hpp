#ifndef SUBNYQ_IO_HPP
#define SUBNYQ_IO_HPP

#include <optional>
#include <string>
#include <vector>

#include "subnyq/linalg.hpp"
#include "subnyq/spectralcs.hpp"

namespace subnyq {

// Nyquist-grid signal. ".csv" files hold one sample per line, either a single
// real value or "re,im"; anything else is read as raw little-endian float64
// (real samples). Throws IoError with the path on failure.
std::vector<cplx> read_signal(const std::string& path);

void write_signal_csv(const std::string& path, std::span<const cplx> x);
void write_signal_f64(const std::string& path, std::span<const double> x);

// Everything a recovery run needs: measurements, the sensing matrix, model
// order, noise level, step size, and optionally the ground truth.
struct MeasurementBundle {
    RealMatrix phi;
    std::vector<cplx> y;
    int model_order = 0;
    double noise_sigma = 0.0;
    double lambda_step = 1.0;
    std::optional<LineSpectrumModel> truth;
};

// Binary container, magic "SNQB", version 1, little-endian fields.
MeasurementBundle read_bundle(const std::string& path);
void write_bundle(const std::string& path, const MeasurementBundle& bundle);

// CSV triple: y as "re,im" lines, phi as one CSV row per measurement row,
// meta as JSON {"model_order", "noise_sigma", "lambda_step", optional
// "true_omega", "true_d_re", "true_d_im"}.
MeasurementBundle read_bundle_csv(const std::string& y_path, const std::string& phi_path,
                                  const std::string& meta_path);

// Deterministic float formatting shared by every CSV writer.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

} // namespace subnyq

#endif
