#include <benchmark/benchmark.h>

#include "setinf/distance.hpp"
#include "setinf/estimation.hpp"
#include "setinf/parallel.hpp"
#include "setinf/projection.hpp"
#include "setinf/regions.hpp"
#include "setinf/resampling.hpp"
#include "setinf/statistics.hpp"

using namespace setinf;

namespace {

Vec v3(double a, double b, double c) {
    Vec v(3);
    v << a, b, c;
    return v;
}

Mat canonical_sigma() {
    Mat s(3, 3);
    s << 0.04, 0.004, 0.01, 0.004, 0.0025, 0.002, 0.01, 0.002, 0.02;
    return s;
}

struct Fixture {
    models::HjModel model;
    estimation::ReturnsPanel panel;
    estimation::SufficientStats stats;
    GridPtr grid;

    explicit Fixture(std::size_t points) {
        Engine engine = derive_engine(1, streams::synth_panel, 0);
        panel = regions::GaussianReturnsDgp::simulate(v3(1.08, 1.02, 1.05), canonical_sigma(), 500, engine);
        stats = estimation::estimate_hj_stats(panel, {estimation::OmegaMethod::DeltaMethod, 1000, 0});
        Vec lo(2), hi(2);
        lo << 0.90, 0.1;
        hi << 1.06, 3.0;
        grid = std::make_shared<const ParamGrid>(ParamBox(lo, hi, 0.05), points);
    }
};

const Fixture& fixture() {
    static const Fixture f(200);
    return f;
}

void BM_LrGrid(benchmark::State& state) {
    parallel::set_workers(1);
    const auto& f = fixture();
    const auto w = statistics::WeightSpec::anderson_darling();
    for (auto _ : state) {
        double sum = 0.0;
        for (std::size_t i = 0; i < f.grid->size(); ++i)
            sum += statistics::lr_stat(f.model, f.stats, f.grid->point(i), w);
        benchmark::DoNotOptimize(sum);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.grid->size()));
}
BENCHMARK(BM_LrGrid)->Unit(benchmark::kMillisecond);

void BM_WaldPoint(benchmark::State& state) {
    const auto& f = fixture();
    Vec theta(2);
    theta << 0.97, 0.2;
    const auto w = statistics::WeightSpec::anderson_darling();
    for (auto _ : state)
        benchmark::DoNotOptimize(statistics::wald_stat(f.model, f.stats, theta, w, f.grid->box()));
}
BENCHMARK(BM_WaldPoint);

void BM_EllipsoidMinimum(benchmark::State& state) {
    const auto& f = fixture();
    const auto e = projection::gamma_region(f.stats, 0.05);
    Vec theta(2);
    theta << 0.97, 0.2;
    for (auto _ : state) benchmark::DoNotOptimize(projection::minimize_over_ellipsoid(f.model, e, theta).value);
}
BENCHMARK(BM_EllipsoidMinimum);

void BM_CriticalValueSimulate(benchmark::State& state) {
    parallel::set_workers(1);
    const auto& f = fixture();
    const auto band = estimation::estimate_boundary(f.model, f.stats, f.grid);
    resampling::ResampleConfig cfg;
    cfg.draws = static_cast<std::size_t>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(resampling::critical_value_simulate(f.model, f.stats, band,
                                                                     statistics::WeightSpec::anderson_darling(),
                                                                     resampling::StatisticKind::LR, cfg)
                                     .quantile(0.05));
}
BENCHMARK(BM_CriticalValueSimulate)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_HausdorffLattice(benchmark::State& state) {
    const auto& f = fixture();
    const auto est = estimation::estimate_set(f.model, f.stats, f.grid);
    const auto shifted = DiscreteSet::from_predicate(f.grid, [&](std::size_t i) {
        return f.model.eval(f.grid->point(i), f.stats.gamma_hat) <= 0.05;
    });
    for (auto _ : state) benchmark::DoNotOptimize(hausdorff(est, shifted));
}
BENCHMARK(BM_HausdorffLattice)->Unit(benchmark::kMillisecond);

void BM_OmegaBootstrap(benchmark::State& state) {
    parallel::set_workers(1);
    const auto& f = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(estimation::estimate_omega_bootstrap(f.panel, estimation::hj_gamma, 1000, 3).sum());
}
BENCHMARK(BM_OmegaBootstrap)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
