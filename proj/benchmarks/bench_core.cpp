#include <benchmark/benchmark.h>

#include <vector>

#include "cfsurv/conformal.hpp"
#include "cfsurv/dataset.hpp"
#include "cfsurv/estimators.hpp"
#include "cfsurv/rng.hpp"
#include "cfsurv/simulation.hpp"

using namespace cfsurv;

namespace {

struct QuantileFixture {
    std::vector<double> scores;
    std::vector<double> weights;
};

QuantileFixture make_quantile_fixture(std::size_t n) {
    Rng rng(1234);
    QuantileFixture f;
    f.scores.resize(n);
    f.weights.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.scores[i] = rng.next_normal();
        f.weights[i] = rng.next_uniform_pos() * 3.0;
    }
    return f;
}

void bm_weighted_quantile(benchmark::State& state) {
    const auto f = make_quantile_fixture(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(weighted_quantile(f.scores, f.weights, 1.3, 0.9));
    }
}

void bm_knn_quantile_query(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(99);
    Matrix x(n, 1);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = 4.0 * rng.next_uniform();
        y[i] = rng.next_exponential(0.2);
    }
    const CdfModel model = CdfModel::fit_knn(x, y, default_knn_k(n));
    const std::vector<double> q{2.0};
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.quantile(q, 0.1));
    }
}

void bm_pinball_fit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(7);
    Matrix x(n, 1);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.next_normal();
        y[i] = 1.0 + 2.0 * x(i, 0) + rng.next_normal();
    }
    PinballOptions opts;
    opts.steps = 1000;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_linear_pinball(x, y, 0.1, opts));
    }
}

void bm_logistic_fit(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(8);
    Matrix x(n, 1);
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = 4.0 * rng.next_uniform();
        c[i] = rng.next_exponential(0.2 + 0.1 * x(i, 0));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            CensoringModel::fit(x, c, 2.0, CensoringModel::Kind::logistic, 0.05));
    }
}

void bm_conformalize_and_predict(benchmark::State& state) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::uvt_homo;
    spec.n = static_cast<std::size_t>(state.range(0));
    spec.seed = 4;
    const Dataset ds = generate(spec);
    const SplitIndices sp = split(ds, 0.5, 1);
    ConformalConfig cfg;
    cfg.alpha = 0.1;
    const std::vector<double> x{2.0};
    for (auto _ : state) {
        const ConformalModel model = conformalize(ds, sp, 1.5, cfg);
        benchmark::DoNotOptimize(model.predict(x));
    }
}

} // namespace

BENCHMARK(bm_weighted_quantile)->Arg(100)->Arg(1500);
BENCHMARK(bm_knn_quantile_query)->Arg(500)->Arg(1500);
BENCHMARK(bm_pinball_fit)->Arg(500);
BENCHMARK(bm_logistic_fit)->Arg(1500);
BENCHMARK(bm_conformalize_and_predict)->Arg(1000);

BENCHMARK_MAIN();
