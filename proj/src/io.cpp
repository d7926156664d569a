#include "subnyq/io.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "subnyq/errors.hpp"

namespace subnyq {

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// std::stod reports ERANGE for subnormal magnitudes, which would reject
// legitimate tiny samples; from_chars round-trips every finite double.
std::optional<double> parse_numeric_cell(const std::string& cell) {
    const char* b = cell.data();
    const char* e = b + cell.size();
    while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(e[-1]))) --e;
    if (b < e && *b == '+') ++b;
    double v{};
    const auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e || b == e) return std::nullopt;
    return v;
}

std::vector<double> parse_csv_line(const std::string& line, const std::string& path) {
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const std::optional<double> v = parse_numeric_cell(cell);
        if (!v) throw IoError("malformed numeric cell '" + cell + "' in " + path);
        vals.push_back(*v);
    }
    return vals;
}

template <typename T>
void write_le(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("truncated bundle file " + path);
    return v;
}

} // namespace

std::vector<cplx> read_signal(const std::string& path) {
    if (has_suffix(path, ".csv")) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open signal file " + path);
        std::vector<cplx> x;
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (first) {
                first = false;
                // Skip a header line when the first cell is not numeric.
                if (!parse_numeric_cell(line.substr(0, line.find(',')))) continue;
            }
            const std::vector<double> vals = parse_csv_line(line, path);
            if (vals.size() == 1)
                x.emplace_back(vals[0], 0.0);
            else if (vals.size() == 2)
                x.emplace_back(vals[0], vals[1]);
            else
                throw IoError("signal CSV rows must have 1 or 2 columns in " + path);
        }
        if (x.empty()) throw IoError("signal file " + path + " holds no samples");
        return x;
    }

    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open signal file " + path);
    in.seekg(0, std::ios::end);
    const std::streamoff bytes = in.tellg();
    in.seekg(0, std::ios::beg);
    if (bytes <= 0 || bytes % 8 != 0)
        throw IoError("binary signal file " + path + " is not a whole number of float64 values");
    std::vector<double> raw(static_cast<std::size_t>(bytes / 8));
    in.read(reinterpret_cast<char*>(raw.data()), bytes);
    if (!in) throw IoError("short read on signal file " + path);
    std::vector<cplx> x(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) x[i] = {raw[i], 0.0};
    return x;
}

void write_signal_csv(const std::string& path, std::span<const cplx> x) {
    std::string out = "re,im\n";
    for (const cplx& v : x) out += format_double(v.real()) + "," + format_double(v.imag()) + "\n";
    write_text_file(path, out);
}

void write_signal_f64(const std::string& path, std::span<const double> x) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(x.data()),
              static_cast<std::streamsize>(x.size() * sizeof(double)));
    if (!out) throw IoError("short write on " + path);
}

MeasurementBundle read_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open bundle file " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "SNQB", 4) != 0)
        throw IoError("bad magic in bundle file " + path);
    const auto version = read_le<std::uint32_t>(in, path);
    if (version != 1) throw IoError("unsupported bundle version in " + path);

    MeasurementBundle b;
    const auto m = read_le<std::uint32_t>(in, path);
    const auto n = read_le<std::uint32_t>(in, path);
    b.model_order = static_cast<int>(read_le<std::uint32_t>(in, path));
    b.noise_sigma = read_le<double>(in, path);
    b.lambda_step = read_le<double>(in, path);
    const auto flags = read_le<std::uint32_t>(in, path);
    if (m == 0 || n == 0) throw IoError("empty dimensions in bundle file " + path);

    b.y.resize(m);
    for (auto& v : b.y) {
        const double re = read_le<double>(in, path);
        const double im = read_le<double>(in, path);
        v = {re, im};
    }
    b.phi = RealMatrix(m, n);
    for (std::uint32_t i = 0; i < m; ++i)
        for (std::uint32_t j = 0; j < n; ++j) b.phi(i, j) = read_le<double>(in, path);

    if (flags & 1u) {
        const auto kt = read_le<std::uint32_t>(in, path);
        LineSpectrumModel truth;
        truth.frequencies.resize(kt);
        truth.amplitudes.resize(kt);
        for (auto& w : truth.frequencies) w = read_le<double>(in, path);
        for (auto& d : truth.amplitudes) {
            const double re = read_le<double>(in, path);
            const double im = read_le<double>(in, path);
            d = {re, im};
        }
        b.truth = std::move(truth);
    }
    return b;
}

void write_bundle(const std::string& path, const MeasurementBundle& bundle) {
    if (bundle.phi.rows() != bundle.y.size())
        throw ConfigError("write_bundle: phi rows must match measurement length");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write("SNQB", 4);
    write_le<std::uint32_t>(out, 1);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.phi.rows()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.phi.cols()));
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.model_order));
    write_le<double>(out, bundle.noise_sigma);
    write_le<double>(out, bundle.lambda_step);
    write_le<std::uint32_t>(out, bundle.truth ? 1u : 0u);
    for (const cplx& v : bundle.y) {
        write_le<double>(out, v.real());
        write_le<double>(out, v.imag());
    }
    for (std::size_t i = 0; i < bundle.phi.rows(); ++i)
        for (std::size_t j = 0; j < bundle.phi.cols(); ++j) write_le<double>(out, bundle.phi(i, j));
    if (bundle.truth) {
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.truth->count()));
        for (double w : bundle.truth->frequencies) write_le<double>(out, w);
        for (const cplx& d : bundle.truth->amplitudes) {
            write_le<double>(out, d.real());
            write_le<double>(out, d.imag());
        }
    }
    if (!out) throw IoError("short write on " + path);
}

MeasurementBundle read_bundle_csv(const std::string& y_path, const std::string& phi_path,
                                  const std::string& meta_path) {
    MeasurementBundle b;
    b.y = read_signal(y_path);

    std::ifstream in(phi_path);
    if (!in) throw IoError("cannot open sensing matrix file " + phi_path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        rows.push_back(parse_csv_line(line, phi_path));
        if (rows.back().size() != rows.front().size())
            throw IoError("ragged rows in sensing matrix file " + phi_path);
    }
    if (rows.empty()) throw IoError("sensing matrix file " + phi_path + " is empty");
    if (rows.size() != b.y.size())
        throw IoError("sensing matrix rows do not match measurement count across " + phi_path +
                      " and " + y_path);
    b.phi = RealMatrix(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) b.phi(i, j) = rows[i][j];

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(meta_path));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed JSON in " + meta_path + ": " + e.what());
    }
    if (!meta.contains("model_order"))
        throw IoError("meta file " + meta_path + " is missing model_order");
    b.model_order = meta.at("model_order").get<int>();
    b.noise_sigma = meta.value("noise_sigma", 0.0);
    b.lambda_step = meta.value("lambda_step", 1.0);
    if (meta.contains("true_omega")) {
        LineSpectrumModel truth;
        truth.frequencies = meta.at("true_omega").get<std::vector<double>>();
        const auto re = meta.value("true_d_re", std::vector<double>(truth.frequencies.size(), 1.0));
        const auto im = meta.value("true_d_im", std::vector<double>(truth.frequencies.size(), 0.0));
        if (re.size() != truth.frequencies.size() || im.size() != truth.frequencies.size())
            throw IoError("truth amplitude arrays in " + meta_path + " have mismatched lengths");
        for (std::size_t i = 0; i < re.size(); ++i) truth.amplitudes.emplace_back(re[i], im[i]);
        b.truth = std::move(truth);
    }
    return b;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write on " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace subnyq
