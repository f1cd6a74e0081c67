#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "cfsurv/dataset.hpp"
#include "cfsurv/errors.hpp"
#include "cfsurv/rng.hpp"
#include "cfsurv/simulation.hpp"
#include "cfsurv/threshold.hpp"

using namespace cfsurv;

namespace {

Dataset sim_train(std::uint64_t seed, std::size_t n) {
    GeneratorSpec spec;
    spec.kind = GeneratorKind::uvt_homo;
    spec.n = n;
    spec.seed = seed;
    return generate(spec);
}

} // namespace

TEST_CASE("grid construction sorts, deduplicates and validates") {
    const ThresholdGrid g = ThresholdGrid::explicit_grid({3.0, 1.0, 3.0, 2.0});
    CHECK(g.candidates == std::vector<double>{1.0, 2.0, 3.0});
    CHECK_THROWS_AS(ThresholdGrid::explicit_grid({}), std::invalid_argument);
    CHECK_THROWS_AS(ThresholdGrid::explicit_grid({-1.0}), std::invalid_argument);

    const Dataset ds = sim_train(5, 200);
    const ThresholdGrid deciles = ThresholdGrid::censoring_deciles(ds, ds.all_indices());
    CHECK(deciles.candidates.size() == 9);
    CHECK(std::is_sorted(deciles.candidates.begin(), deciles.candidates.end()));
    for (double c : deciles.candidates) CHECK(c > 0.0);
}

TEST_CASE("singleton grids are returned unchanged by both selectors") {
    const Dataset ds = sim_train(6, 600);
    const SplitIndices sp = split(ds, 0.5, 3);
    ConformalConfig cfg;
    cfg.alpha = 0.1;
    const ThresholdGrid g = ThresholdGrid::explicit_grid({1.25});
    CHECK(select_c0_train(ds, sp.train, g, cfg, 0.25, 11) == 1.25);
    CHECK(select_c0_calib(ds, sp, g, cfg) == 1.25);
}

TEST_CASE("a zero threshold is dominated by any informative candidate") {
    const Dataset ds = sim_train(7, 800);
    const SplitIndices sp = split(ds, 0.5, 4);
    ConformalConfig cfg;
    cfg.alpha = 0.1;
    // c0 = 0 caps every outcome at zero, hence zero bounds everywhere.
    const ThresholdGrid g = ThresholdGrid::explicit_grid({0.0, 1.5});
    const double chosen = select_c0_train(ds, sp.train, g, cfg, 0.25, 12);
    CHECK(chosen == 1.5);
    CHECK(select_c0_calib(ds, sp, g, cfg) == 1.5);
}

TEST_CASE("selected threshold always comes from the grid and is seed-stable") {
    const Dataset ds = sim_train(8, 700);
    const SplitIndices sp = split(ds, 0.5, 5);
    ConformalConfig cfg;
    cfg.alpha = 0.1;
    const ThresholdGrid g = ThresholdGrid::censoring_deciles(ds, sp.train);
    const double a = select_c0_train(ds, sp.train, g, cfg, 0.25, 21);
    const double b = select_c0_train(ds, sp.train, g, cfg, 0.25, 21);
    CHECK(a == b);
    CHECK(std::find(g.candidates.begin(), g.candidates.end(), a) != g.candidates.end());
}

TEST_CASE("training-fold selection picks a positive threshold on the univariate benchmark") {
    std::size_t positive = 0;
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
        const Dataset ds = sim_train(1000 + rep, 600);
        const SplitIndices sp = split(ds, 0.5, rep);
        ConformalConfig cfg;
        cfg.alpha = 0.1;
        const ThresholdGrid g = ThresholdGrid::censoring_deciles(ds, sp.train);
        if (select_c0_train(ds, sp.train, g, cfg, 0.25, rep) > 0.0) ++positive;
    }
    CHECK(positive >= 48); // >= 95% of 50
}

TEST_CASE("train-fold and calibration-fold selectors land on similar objectives") {
    const Dataset ds = sim_train(9, 4000);
    const Dataset holdout = sim_train(10, 1500);
    const SplitIndices sp = split(ds, 0.5, 6);
    ConformalConfig cfg;
    cfg.alpha = 0.1;
    const ThresholdGrid g = ThresholdGrid::censoring_deciles(ds, sp.train);

    // Candidate objective on an independent holdout.
    std::vector<double> means;
    for (double c0 : g.candidates) {
        const ConformalModel m = conformalize(ds, sp, c0, cfg);
        double mean = 0.0;
        for (const auto& r : holdout.records()) mean += m.predict(r.x).lpb;
        means.push_back(mean / static_cast<double>(holdout.size()));
    }
    auto objective_of = [&](double c0) {
        for (std::size_t i = 0; i < g.candidates.size(); ++i) {
            if (g.candidates[i] == c0) return means[i];
        }
        FAIL("chosen threshold not in grid");
        return 0.0;
    };
    const double span =
        *std::max_element(means.begin(), means.end()) - *std::min_element(means.begin(), means.end());
    const double c_train = select_c0_train(ds, sp.train, g, cfg, 0.25, 31);
    const double c_calib = select_c0_calib(ds, sp, g, cfg);
    CHECK(std::abs(objective_of(c_train) - objective_of(c_calib)) < 0.05 * span);
}

TEST_CASE("coverage survives calibration-fold threshold selection") {
    double cov_sum = 0.0;
    const int reps = 3;
    for (int rep = 0; rep < reps; ++rep) {
        GeneratorSpec spec;
        spec.kind = GeneratorKind::uvt_homo;
        spec.n = 6000;
        spec.seed = 5000 + static_cast<std::uint64_t>(rep);
        const Dataset all = generate(spec);
        std::vector<SurvivalRecord> tr(all.records().begin(), all.records().begin() + 4000);
        std::vector<SurvivalRecord> te(all.records().begin() + 4000, all.records().end());
        const Dataset train(std::move(tr));
        const Dataset test(std::move(te));
        const SplitIndices sp = split(train, 0.5, 7 + static_cast<std::uint64_t>(rep));
        ConformalConfig cfg;
        cfg.alpha = 0.1;
        const ThresholdGrid g = ThresholdGrid::censoring_deciles(train, sp.train);
        const double c0 = select_c0_calib(train, sp, g, cfg);
        const ConformalModel m = conformalize(train, sp, c0, cfg);
        double cov = 0.0;
        for (const auto& r : test.records()) {
            if (*r.true_time >= m.predict(r.x).lpb) cov += 1.0;
        }
        cov_sum += cov / static_cast<double>(test.size());
    }
    CHECK(cov_sum / reps >= 0.9 - 0.02);
}

TEST_CASE("discrete c-bar is the order statistic the mass requirement demands") {
    const std::vector<int> one_level(10, 0);
    const std::vector<double> c{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    // eta = 0.2: ceil(2 * 0.2 * 10) = 4th largest = 7.
    CHECK(estimate_c_bar_discrete(one_level, c, 0.2) == 7.0);

    // eta -> 0.5^-: ceil(~1.0 * 10) = 10th largest = the minimum.
    CHECK(estimate_c_bar_discrete(one_level, c, 0.499999) == 1.0);

    // Enumeration oracle on an irregular sample.
    const std::vector<double> c2{0.3, 5.2, 1.1, 9.9, 2.2, 2.2, 7.5};
    const double eta = 0.31;
    std::vector<double> sorted = c2;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double best = -1.0;
    for (double cand : sorted) {
        std::size_t count = 0;
        for (double v : c2) {
            if (v >= cand) ++count;
        }
        if (static_cast<double>(count) >= 2.0 * eta * static_cast<double>(c2.size())) {
            best = std::max(best, cand);
        }
    }
    CHECK(estimate_c_bar_discrete(std::vector<int>(7, 1), c2, eta) == best);
}

TEST_CASE("c-bar over identical levels equals the single-level answer") {
    const std::vector<double> c{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<double> both = c;
    both.insert(both.end(), c.begin(), c.end());
    std::vector<int> labels(20, 0);
    for (std::size_t i = 10; i < 20; ++i) labels[i] = 1;
    CHECK(estimate_c_bar_discrete(labels, both, 0.2) ==
          estimate_c_bar_discrete(std::vector<int>(10, 0), c, 0.2));
}

TEST_CASE("c-bar is nonincreasing in eta") {
    Rng rng(404);
    std::vector<int> labels(60);
    std::vector<double> c(60);
    for (std::size_t i = 0; i < 60; ++i) {
        labels[i] = static_cast<int>(rng.next_below(3));
        c[i] = rng.next_exponential(0.3);
    }
    double prev = std::numeric_limits<double>::infinity();
    for (double eta = 0.05; eta < 0.5; eta += 0.05) {
        const double cb = estimate_c_bar_discrete(labels, c, eta);
        CHECK(cb <= prev);
        prev = cb;
    }
}

TEST_CASE("selection fails loudly when every candidate empties the folds") {
    const Dataset ds = sim_train(11, 300);
    const SplitIndices sp = split(ds, 0.5, 8);
    ConformalConfig cfg;
    const ThresholdGrid g = ThresholdGrid::explicit_grid({1e9});
    CHECK_THROWS_AS(select_c0_train(ds, sp.train, g, cfg, 0.25, 1), DegenerateError);
    CHECK_THROWS_AS(select_c0_calib(ds, sp, g, cfg), DegenerateError);
}
