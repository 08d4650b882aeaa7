#include <random>

#include <benchmark/benchmark.h>

#include "kinbridge/kernel.hpp"
#include "kinbridge/solver.hpp"

using namespace kinbridge;

namespace {

struct Setup {
    Potential pot = Potential::quadratic(1, 1);
    PhaseGrid g;
    InvariantMeasure m;
    explicit Setup(long n) : g(build_grid({-6, 6}, {-6, 6}, n, n)), m(invariant_measure(pot, g)) {}
};

Exec exec_of(const benchmark::State& st) { return st.range(1) ? Exec::Parallel : Exec::Serial; }

void BM_GaussianKernel(benchmark::State& st) {
    const Setup s(st.range(0));
    KernelOptions opts;
    opts.exec = exec_of(st);
    for (auto _ : st) benchmark::DoNotOptimize(gaussian_kernel(1, 1, 1.0, s.g, s.m, opts));
}

// raw values only, no balancing pass
void BM_GaussianKernelReference(benchmark::State& st) {
    const Setup s(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(reference::gaussian_kernel_values(1, 1, 1.0, s.g, s.m));
}

void BM_Propagate(benchmark::State& st) {
    const Setup s(st.range(0));
    const TransitionKernel k = gaussian_kernel(1, 1, 1.0, s.g, s.m);
    const Vector g = Vector::LinSpaced(s.g.size(), 0.0, 1.0);
    const Exec e = exec_of(st);
    for (auto _ : st) benchmark::DoNotOptimize(propagate_backward(k, g, e));
}

void BM_LseRows(benchmark::State& st) {
    const auto n = st.range(0) * st.range(0);
    std::mt19937 rng(1);
    std::normal_distribution<double> n01;
    RowMatrix lk(n, n);
    for (Eigen::Index i = 0; i < lk.size(); ++i) lk.data()[i] = n01(rng);
    const Vector b = Vector::Zero(n);
    const Exec e = exec_of(st);
    for (auto _ : st) benchmark::DoNotOptimize(lse_rows(lk, b, e));
}

void BM_Sinkhorn(benchmark::State& st) {
    const Setup s(st.range(0));
    const TransitionKernel k = gaussian_kernel(1, 1, 2.0, s.g, s.m);
    const PhaseDensity mu = gaussian_phase_density({-1, 0}, Eigen::Matrix2d::Identity() * 0.5, s.m, s.g);
    const PhaseDensity nu = gaussian_phase_density({1, 0}, Eigen::Matrix2d::Identity() * 0.5, s.m, s.g);
    SinkhornOptions opts;
    opts.exec = exec_of(st);
    for (auto _ : st) benchmark::DoNotOptimize(sinkhorn(k, mu, nu, opts));
}

void BM_McKernel(benchmark::State& st) {
    const Setup s(st.range(0));
    const Exec e = exec_of(st);
    for (auto _ : st) benchmark::DoNotOptimize(mc_kernel(s.pot, 0.5, s.g, s.m, 1000, 5e-3, 7, e));
}

} // namespace

BENCHMARK(BM_GaussianKernel)->ArgsProduct({{21, 41}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GaussianKernelReference)->Arg(21)->Arg(41)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Propagate)->ArgsProduct({{21, 41}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LseRows)->ArgsProduct({{21, 41}, {0, 1}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Sinkhorn)->ArgsProduct({{21}, {0, 1}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McKernel)->ArgsProduct({{13}, {0, 1}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
