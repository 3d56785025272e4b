#include "phbt/counting.hpp"
#include "phbt/dynamics.hpp"
#include "phbt/gaussian_bound.hpp"
#include "phbt/hilbert.hpp"
#include "phbt/inference.hpp"
#include "phbt/trajectories.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

namespace c = phbt::counting;
namespace d = phbt::dynamics;
namespace h = phbt::hilbert;
namespace t = phbt::trajectories;

namespace {

d::PulseSchedule main_schedule(double delay = 115e-9)
{
    return d::PulseSchedule::make(27e-15, 924e-15, 32e-9, delay, 50e-6);
}

d::HeatingModel main_heating(const d::PulseSchedule& s)
{
    return d::HeatingModel::from_onsets(0.2, 0.0, {{s.pump.envelope.begin(), 0.24e6}, {s.read.envelope.begin(), 0.8e6}},
                                        s.period);
}

void BM_DisplacementOperator(benchmark::State& state)
{
    const int dim = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(h::displacement_operator({2.0, 0.0}, dim));
}
BENCHMARK(BM_DisplacementOperator)->Arg(50)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_PropagateDense(benchmark::State& state)
{
    const int dim = static_cast<int>(state.range(0));
    const auto s = main_schedule();
    const d::ReducedModel model(d::DeviceParams::reference(), main_heating(s), {s.pump, s.read}, dim);
    const auto rho = h::coherent({1.0, 0.0}, dim);
    for (auto _ : state) benchmark::DoNotOptimize(d::propagate(rho, model, 0.0, s.read.envelope.end()));
}
BENCHMARK(BM_PropagateDense)->Arg(20)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_Predict(benchmark::State& state)
{
    const auto s = main_schedule();
    const auto heating = main_heating(s);
    c::PredictOptions options;
    options.dim = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(c::predict(d::DeviceParams::reference(), s, heating, 0.0116, options));
    }
}
BENCHMARK(BM_Predict)->Arg(50)->Arg(80)->Unit(benchmark::kMillisecond);

void BM_CycleTree(benchmark::State& state)
{
    const auto s = main_schedule();
    const auto heating = main_heating(s);
    c::TreeOptions options;
    options.grid_points = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(c::cycle_tree(d::DeviceParams::reference(), s, heating, 0.0116, 0.015, options));
    }
}
BENCHMARK(BM_CycleTree)->Arg(24)->Arg(96)->Unit(benchmark::kMillisecond);

void BM_SimulateCycles(benchmark::State& state)
{
    const auto s = main_schedule();
    const auto tree = c::cycle_tree(d::DeviceParams::reference(), s, main_heating(s), 0.3, 0.3);
    const std::array<t::DetectorModel, 2> detectors{t::DetectorModel{0.3, 100.0, 60e-9, false},
                                                    t::DetectorModel{0.3, 100.0, 120e-9, false}};
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(t::simulate_cycles(tree, detectors, s.period, n, 1, 1));
    state.SetItemsProcessed(static_cast<std::int64_t>(n) * state.iterations());
}
BENCHMARK(BM_SimulateCycles)->Arg(1'000'000)->UseRealTime()->Unit(benchmark::kMillisecond);

void BM_EstimateG2(benchmark::State& state)
{
    const auto s = main_schedule();
    const auto tree = c::cycle_tree(d::DeviceParams::reference(), s, main_heating(s), 0.3, 0.3);
    const std::array<t::DetectorModel, 2> detectors{t::DetectorModel{0.3, 0.0, 0.0, false},
                                                    t::DetectorModel{0.3, 0.0, 0.0, false}};
    const auto record = t::simulate_cycles(tree, detectors, s.period, 1'000'000, 1, 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            phbt::inference::estimate_g2(record, tree.herald_window, tree.read_window, phbt::inference::HeraldPolicy::d1));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(record.events.size()) * state.iterations());
}
BENCHMARK(BM_EstimateG2)->Unit(benchmark::kMillisecond);

void BM_BinomialTail(benchmark::State& state)
{
    for (auto _ : state) benchmark::DoNotOptimize(phbt::inference::binomial_lower_tail(49, 1'200'000, 6.3e-5));
}
BENCHMARK(BM_BinomialTail)->Unit(benchmark::kMicrosecond);

void BM_GaussianG2(benchmark::State& state)
{
    const h::GaussianParams params{2.0, 0.0, 0.44, 0.0};
    for (auto _ : state) benchmark::DoNotOptimize(phbt::gaussianbound::gaussian_g2(0.2, params));
}
BENCHMARK(BM_GaussianG2)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
