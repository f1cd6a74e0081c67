#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "cfsurv/csv.hpp"
#include "cfsurv/dataset.hpp"
#include "cfsurv/errors.hpp"
#include "cfsurv/rng.hpp"

using namespace cfsurv;

namespace {

Dataset tiny_dataset(std::vector<double> censoring, std::vector<double> observed) {
    std::vector<SurvivalRecord> recs(censoring.size());
    for (std::size_t i = 0; i < censoring.size(); ++i) {
        recs[i].x = {static_cast<double>(i)};
        recs[i].censoring = censoring[i];
        recs[i].observed = observed[i];
        recs[i].event = observed[i] < censoring[i];
    }
    return Dataset(std::move(recs));
}

} // namespace

TEST_CASE("load_csv accepts a well-formed file") {
    std::istringstream in(
        "x1,x2,censoring,observed\n"
        "0.5,1.0,3.0,2.0\n"
        "1.5,2.0,10.0,9.0\n"
        "2.5,3.0,14.0,14.0\n");
    const Dataset ds = dataset_from_table(parse_csv(in));
    CHECK(ds.size() == 3);
    CHECK(ds.dim() == 2);
    CHECK(ds[1].observed == 9.0);
    CHECK(ds[2].event == false); // tie observed == censoring counts as censored
    CHECK(ds[0].event == true);
}

TEST_CASE("load_csv rejects observed > censoring with the row number") {
    std::istringstream in(
        "x1,censoring,observed\n"
        "0.0,9.0,1.0\n"
        "1.0,3.0,5.0\n");
    CHECK_THROWS_WITH_AS(dataset_from_table(parse_csv(in)),
                         doctest::Contains("row 3"), SchemaError);
}

TEST_CASE("load_csv rejects missing columns and non-finite values") {
    std::istringstream missing("x1,censoring\n1.0,2.0\n");
    CHECK_THROWS_AS(dataset_from_table(parse_csv(missing)), SchemaError);

    std::istringstream bad("x1,censoring,observed\nnan,2.0,1.0\n");
    CHECK_THROWS_AS(dataset_from_table(parse_csv(bad)), SchemaError);
}

TEST_CASE("csv handles RFC-4180 quoting") {
    std::istringstream in(
        "\"x1\",\"cens,oring\",observed\n"
        "1.0,2.0,1.5\n");
    const CsvTable t = parse_csv(in);
    CHECK(t.header[1] == "cens,oring");
    CHECK(t.column("cens,oring")[0] == 2.0);
    CHECK(csv_escape("a\"b") == "\"a\"\"b\"");
}

TEST_CASE("csv round-trips bit-identically at 12 significant digits") {
    std::vector<SurvivalRecord> recs;
    Rng rng(42);
    for (int i = 0; i < 50; ++i) {
        SurvivalRecord r;
        r.x = {rng.next_uniform() * 1e3, rng.next_uniform() * 1e-7};
        const double t = rng.next_exponential(0.1);
        r.censoring = rng.next_exponential(0.2);
        r.observed = std::min(t, r.censoring);
        r.true_time = t;
        r.event = t <= r.censoring;
        recs.push_back(std::move(r));
    }
    const Dataset ds(std::move(recs));

    std::ostringstream first;
    save_csv(ds, first);
    std::istringstream back(first.str());
    const Dataset reloaded = dataset_from_table(parse_csv(back));
    std::ostringstream second;
    save_csv(reloaded, second);
    CHECK(first.str() == second.str());
}

TEST_CASE("split is deterministic and balanced") {
    const Dataset ds = tiny_dataset({1, 2, 3, 4, 5, 6, 7, 8, 9, 10},
                                    {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
    const SplitIndices a = split(ds, 0.5, 7);
    const SplitIndices b = split(ds, 0.5, 7);
    CHECK(a.train.size() == 5);
    CHECK(a.calib.size() == 5);
    CHECK(a.train == b.train);
    CHECK(a.calib == b.calib);
}

TEST_CASE("split is a bijection on indices") {
    const Dataset ds = tiny_dataset(std::vector<double>(37, 5.0), std::vector<double>(37, 3.0));
    const SplitIndices s = split(ds, 0.31, 99);
    std::vector<std::size_t> all = s.train;
    all.insert(all.end(), s.calib.begin(), s.calib.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
}

TEST_CASE("different seeds give different permutations almost always") {
    const Dataset ds = tiny_dataset(std::vector<double>(20, 5.0), std::vector<double>(20, 3.0));
    std::set<std::vector<std::size_t>> seen;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        seen.insert(split(ds, 0.5, seed).train);
    }
    CHECK(seen.size() >= 99);
}

TEST_CASE("split rejects degenerate inputs") {
    const Dataset small = tiny_dataset({1, 2, 3}, {1, 2, 3});
    CHECK_THROWS_AS(split(small, 0.5, 1), DegenerateError);
    const Dataset ds = tiny_dataset({1, 2, 3, 4}, {1, 2, 3, 4});
    CHECK_THROWS_AS(split(ds, 0.01, 1), DegenerateError); // rounds to an empty fold
    CHECK_THROWS_AS(split(ds, 1.5, 1), DegenerateError);
}

TEST_CASE("select_subpopulation with c0 = 0 selects everything with zero outcomes") {
    const Dataset ds = tiny_dataset({3, 10, 14}, {2, 9, 14});
    const auto idx = ds.all_indices();
    const Subpopulation sub = select_subpopulation(ds, idx, 0.0);
    CHECK(sub.indices == idx);
    for (double y : sub.capped) CHECK(y == 0.0);
}

TEST_CASE("select_subpopulation keeps units with C >= c0 and caps outcomes") {
    // c = (3,10,14), observed = (2,9,14), c0 = 10 -> units 2,3 with capped (9,10)
    const Dataset ds = tiny_dataset({3, 10, 14}, {2, 9, 14});
    const auto idx = ds.all_indices();
    const Subpopulation sub = select_subpopulation(ds, idx, 10.0);
    REQUIRE(sub.indices.size() == 2);
    CHECK(sub.indices[0] == 1);
    CHECK(sub.indices[1] == 2);
    CHECK(sub.capped[0] == 9.0);
    CHECK(sub.capped[1] == 10.0);
}

TEST_CASE("capped outcomes equal min(true time, c0) on the selected units") {
    std::vector<SurvivalRecord> recs;
    Rng rng(314);
    for (int i = 0; i < 200; ++i) {
        SurvivalRecord r;
        r.x = {rng.next_uniform()};
        const double t = rng.next_exponential(0.5);
        r.censoring = rng.next_exponential(0.3);
        r.observed = std::min(t, r.censoring);
        r.true_time = t;
        r.event = t <= r.censoring;
        recs.push_back(std::move(r));
    }
    const Dataset ds(std::move(recs));
    const auto idx = ds.all_indices();
    const double c0 = 1.7;
    const Subpopulation sub = select_subpopulation(ds, idx, c0);
    REQUIRE(!sub.indices.empty());
    for (std::size_t i = 0; i < sub.indices.size(); ++i) {
        const auto& r = ds[sub.indices[i]];
        CHECK(sub.capped[i] == std::min(*r.true_time, c0));
        CHECK(sub.capped[i] <= c0);
        CHECK(sub.capped[i] <= r.observed);
    }
}

TEST_CASE("select_subpopulation reports an empty selection") {
    const Dataset ds = tiny_dataset({1, 2, 3, 4}, {1, 2, 3, 4});
    CHECK_THROWS_WITH_AS(select_subpopulation(ds, ds.all_indices(), 100.0),
                         doctest::Contains("no calibration units"), DegenerateError);
}

TEST_CASE("dataset construction validates invariants") {
    std::vector<SurvivalRecord> bad(1);
    bad[0].x = {1.0};
    bad[0].censoring = 1.0;
    bad[0].observed = 2.0;
    CHECK_THROWS_AS(Dataset(std::move(bad)), SchemaError);

    std::vector<SurvivalRecord> mismatch(1);
    mismatch[0].x = {1.0};
    mismatch[0].censoring = 5.0;
    mismatch[0].observed = 2.0;
    mismatch[0].true_time = 3.0; // min(3, 5) != 2
    CHECK_THROWS_AS(Dataset(std::move(mismatch)), SchemaError);
}
