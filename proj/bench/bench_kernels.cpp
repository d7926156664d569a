// Compares the OpenMP kernels against the serial reference on the shapes the
// recovery pipeline actually hits (Phi is 300x1024, the Vandermonde basis is
// 1024x20). Run with --benchmark_filter=... to narrow.

#include <benchmark/benchmark.h>

#include <cstddef>
#include <vector>

#include "subnyq/linalg.hpp"
#include "subnyq/rng.hpp"

using namespace subnyq;

namespace {

ComplexMatrix random_complex(std::size_t rows, std::size_t cols, Rng& rng) {
    ComplexMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = {rng.gaussian(), rng.gaussian()};
    return m;
}

RealMatrix random_real(std::size_t rows, std::size_t cols, Rng& rng) {
    RealMatrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.gaussian();
    return m;
}

void bm_matmul_omp(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng = Rng::stream(1, "bench", 0);
    const ComplexMatrix a = random_complex(n, n, rng);
    const ComplexMatrix b = random_complex(n, n, rng);
    for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
}

void bm_matmul_serial(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng = Rng::stream(1, "bench", 0);
    const ComplexMatrix a = random_complex(n, n, rng);
    const ComplexMatrix b = random_complex(n, n, rng);
    for (auto _ : state) benchmark::DoNotOptimize(serial::matmul(a, b));
}

// Phi * A: the inner least-squares basis product.
void bm_phi_basis_omp(benchmark::State& state) {
    Rng rng = Rng::stream(2, "bench", 0);
    const RealMatrix phi = random_real(300, 1024, rng);
    const ComplexMatrix a = random_complex(1024, 20, rng);
    for (auto _ : state) benchmark::DoNotOptimize(real_complex_matmul(phi, a));
}

void bm_phi_basis_serial(benchmark::State& state) {
    Rng rng = Rng::stream(2, "bench", 0);
    const RealMatrix phi = random_real(300, 1024, rng);
    const ComplexMatrix a = random_complex(1024, 20, rng);
    for (auto _ : state) benchmark::DoNotOptimize(serial::real_complex_matmul(phi, a));
}

void bm_matvec_omp(benchmark::State& state) {
    Rng rng = Rng::stream(3, "bench", 0);
    const RealMatrix phi = random_real(300, 1024, rng);
    std::vector<cplx> x(1024);
    for (auto& v : x) v = {rng.gaussian(), rng.gaussian()};
    for (auto _ : state) benchmark::DoNotOptimize(real_matvec(phi, x));
}

void bm_matvec_serial(benchmark::State& state) {
    Rng rng = Rng::stream(3, "bench", 0);
    const RealMatrix phi = random_real(300, 1024, rng);
    std::vector<cplx> x(1024);
    for (auto& v : x) v = {rng.gaussian(), rng.gaussian()};
    for (auto _ : state) benchmark::DoNotOptimize(serial::real_matvec(phi, x));
}

BENCHMARK(bm_matmul_omp)->Arg(32)->Arg(128)->Arg(256);
BENCHMARK(bm_matmul_serial)->Arg(32)->Arg(128)->Arg(256);
BENCHMARK(bm_phi_basis_omp);
BENCHMARK(bm_phi_basis_serial);
BENCHMARK(bm_matvec_omp);
BENCHMARK(bm_matvec_serial);

} // namespace

int main(int argc, char** argv) {
    init_deterministic_blas();
    benchmark::Initialize(&argc, argv);
    benchmark::RunSpecifiedBenchmarks();
    return 0;
}
