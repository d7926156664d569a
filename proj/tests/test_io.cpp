#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "subnyq/errors.hpp"
#include "subnyq/io.hpp"
#include "subnyq/rng.hpp"

using namespace subnyq;

namespace {

// Unique temp path per test file run; cleaned up by the fixture destructor.
struct TempDir {
    std::filesystem::path dir;
    TempDir() {
        dir = std::filesystem::temp_directory_path() /
              ("subnyq-io-test-" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir);
    }
    ~TempDir() { std::filesystem::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

} // namespace

TEST_CASE("signal csv roundtrip preserves every bit") {
    TempDir tmp;
    Rng rng(91);
    std::vector<cplx> x(64);
    for (auto& v : x) v = {rng.gaussian() * 1e3, rng.gaussian() * 1e-7};
    x[0] = {0.1, -0.3};        // decimal fractions exercise the %.17g path
    x[1] = {1e308, -1e-308};   // extreme magnitudes

    const auto p = tmp.path("sig.csv");
    write_signal_csv(p, x);
    const auto back = read_signal(p);
    REQUIRE(back.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(back[i] == x[i]);
}

TEST_CASE("signal csv accepts real-only rows and comments") {
    TempDir tmp;
    const auto p = tmp.path("real.csv");
    write_text_file(p, "# comment\nvalue\n1.5\n-2\n3e-2\n");
    const auto x = read_signal(p);
    REQUIRE(x.size() == 3);
    CHECK(x[0] == cplx{1.5, 0.0});
    CHECK(x[1] == cplx{-2.0, 0.0});
    CHECK(x[2] == cplx{0.03, 0.0});
}

TEST_CASE("binary f64 signals roundtrip") {
    TempDir tmp;
    Rng rng(93);
    std::vector<double> raw(257);
    for (auto& v : raw) v = rng.gaussian();
    const auto p = tmp.path("sig.f64");
    write_signal_f64(p, raw);
    const auto x = read_signal(p);
    REQUIRE(x.size() == raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        CHECK(x[i].real() == raw[i]);
        CHECK(x[i].imag() == 0.0);
    }
}

TEST_CASE("malformed signal files name the offending path") {
    TempDir tmp;

    const auto missing = tmp.path("nope.csv");
    CHECK_THROWS_WITH_AS(read_signal(missing), doctest::Contains("nope.csv"), IoError);

    const auto bad = tmp.path("bad.csv");
    write_text_file(bad, "1.0\nnot-a-number\n");
    CHECK_THROWS_WITH_AS(read_signal(bad), doctest::Contains("bad.csv"), IoError);

    const auto wide = tmp.path("wide.csv");
    write_text_file(wide, "1,2,3\n");
    CHECK_THROWS_WITH_AS(read_signal(wide), doctest::Contains("1 or 2 columns"), IoError);

    const auto empty = tmp.path("empty.csv");
    write_text_file(empty, "# nothing\n");
    CHECK_THROWS_AS(read_signal(empty), IoError);

    const auto ragged = tmp.path("ragged.bin");
    write_text_file(ragged, "12345"); // 5 bytes, not a multiple of 8
    CHECK_THROWS_WITH_AS(read_signal(ragged), doctest::Contains("float64"), IoError);
}

TEST_CASE("bundle roundtrip with and without ground truth") {
    TempDir tmp;
    Rng rng(97);

    MeasurementBundle b;
    b.phi = RealMatrix(4, 6);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 6; ++j) b.phi(i, j) = rng.gaussian();
    b.y.resize(4);
    for (auto& v : b.y) v = {rng.gaussian(), rng.gaussian()};
    b.model_order = 2;
    b.noise_sigma = 1.25;
    b.lambda_step = 0.75;

    SUBCASE("without truth") {
        const auto p = tmp.path("plain.snqb");
        write_bundle(p, b);
        const auto r = read_bundle(p);
        CHECK(!r.truth.has_value());
        CHECK(r.model_order == 2);
        CHECK(r.noise_sigma == 1.25);
        CHECK(r.lambda_step == 0.75);
        REQUIRE(r.y.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) CHECK(r.y[i] == b.y[i]);
        REQUIRE(r.phi.rows() == 4);
        REQUIRE(r.phi.cols() == 6);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 6; ++j) CHECK(r.phi(i, j) == b.phi(i, j));
    }

    SUBCASE("with truth") {
        b.truth = LineSpectrumModel{{0.5, 2.5}, {cplx{1.0, -0.5}, cplx{0.25, 2.0}}};
        const auto p = tmp.path("truth.snqb");
        write_bundle(p, b);
        const auto r = read_bundle(p);
        REQUIRE(r.truth.has_value());
        CHECK(r.truth->frequencies == b.truth->frequencies);
        CHECK(r.truth->amplitudes == b.truth->amplitudes);
    }

    SUBCASE("mismatched dimensions are rejected before writing") {
        b.y.pop_back();
        CHECK_THROWS_AS(write_bundle(tmp.path("x.snqb"), b), ConfigError);
    }
}

TEST_CASE("corrupt bundles are rejected with the path") {
    TempDir tmp;

    const auto magic = tmp.path("magic.snqb");
    write_text_file(magic, "NOPE0000000000000000000000000000");
    CHECK_THROWS_WITH_AS(read_bundle(magic), doctest::Contains("bad magic"), IoError);

    const auto trunc = tmp.path("trunc.snqb");
    write_text_file(trunc, std::string("SNQB") + std::string(6, '\0'));
    CHECK_THROWS_WITH_AS(read_bundle(trunc), doctest::Contains("trunc.snqb"), IoError);

    CHECK_THROWS_AS(read_bundle(tmp.path("missing.snqb")), IoError);
}

TEST_CASE("csv bundle triple") {
    TempDir tmp;
    const auto yp = tmp.path("y.csv");
    const auto pp = tmp.path("phi.csv");
    const auto mp = tmp.path("meta.json");

    write_text_file(yp, "1.0,0.5\n-2.0,0.25\n");
    write_text_file(pp, "# sensing matrix\n1,0,0\n0,1,0\n");

    SUBCASE("full metadata with truth") {
        write_text_file(mp, R"({"model_order": 1, "noise_sigma": 2.0, "lambda_step": 0.5,
                                "true_omega": [1.25], "true_d_re": [2.0], "true_d_im": [-1.0]})");
        const auto b = read_bundle_csv(yp, pp, mp);
        CHECK(b.model_order == 1);
        CHECK(b.noise_sigma == 2.0);
        CHECK(b.lambda_step == 0.5);
        REQUIRE(b.y.size() == 2);
        CHECK(b.y[0] == cplx{1.0, 0.5});
        CHECK(b.y[1] == cplx{-2.0, 0.25});
        REQUIRE(b.phi.rows() == 2);
        REQUIRE(b.phi.cols() == 3);
        CHECK(b.phi(0, 0) == 1.0);
        CHECK(b.phi(1, 1) == 1.0);
        REQUIRE(b.truth.has_value());
        CHECK(b.truth->frequencies == std::vector<double>{1.25});
        CHECK(b.truth->amplitudes == std::vector<cplx>{cplx{2.0, -1.0}});
    }

    SUBCASE("defaults fill in when optional keys are absent") {
        write_text_file(mp, R"({"model_order": 3})");
        const auto b = read_bundle_csv(yp, pp, mp);
        CHECK(b.model_order == 3);
        CHECK(b.noise_sigma == 0.0);
        CHECK(b.lambda_step == 1.0);
        CHECK(!b.truth.has_value());
    }

    SUBCASE("missing model order is an error") {
        write_text_file(mp, R"({"noise_sigma": 1.0})");
        CHECK_THROWS_WITH_AS(read_bundle_csv(yp, pp, mp),
                             doctest::Contains("model_order"), IoError);
    }

    SUBCASE("malformed json names the file") {
        write_text_file(mp, "{oops");
        CHECK_THROWS_WITH_AS(read_bundle_csv(yp, pp, mp),
                             doctest::Contains("meta.json"), IoError);
    }

    SUBCASE("row count mismatch between y and phi") {
        write_text_file(mp, R"({"model_order": 1})");
        write_text_file(pp, "1,0,0\n");
        CHECK_THROWS_WITH_AS(read_bundle_csv(yp, pp, mp),
                             doctest::Contains("do not match"), IoError);
    }

    SUBCASE("ragged sensing matrix") {
        write_text_file(mp, R"({"model_order": 1})");
        write_text_file(pp, "1,0,0\n0,1\n");
        CHECK_THROWS_WITH_AS(read_bundle_csv(yp, pp, mp), doctest::Contains("ragged"),
                             IoError);
    }
}

TEST_CASE("format_double is stable and lossless") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(-2.5) == "-2.5");
    Rng rng(101);
    for (int i = 0; i < 200; ++i) {
        const double v = rng.gaussian() * std::pow(10.0, rng.uniform(-30.0, 30.0));
        const double back = std::stod(format_double(v));
        CHECK(back == v);
        CHECK(format_double(v) == format_double(v));
    }
}
