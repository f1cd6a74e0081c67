#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "cfsurv/csv.hpp"
#include "cfsurv/model_io.hpp"
#include "cfsurv/simulation.hpp"

using namespace cfsurv;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kTmp = CFSURV_TEST_TMPDIR;

int run_cli(const std::string& args, const fs::path& stderr_to = {}) {
    fs::create_directories(kTmp);
    std::string cmd = std::string(CFSURV_CLI_PATH) + " " + args;
    if (!stderr_to.empty()) cmd += " 2> " + stderr_to.string();
    else cmd += " 2> /dev/null";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// Generates the shared input once, on first use inside a test case.
fs::path data_csv() {
    static const bool ready = [] {
        fs::create_directories(kTmp);
        const fs::path data = kTmp / "data.csv";
        return run_cli("gen --generator uvt-homo --n 1200 --seed 3 --out " + data.string()) == 0;
    }();
    REQUIRE(ready);
    return kTmp / "data.csv";
}

} // namespace

TEST_CASE("fit writes a model and replayable metadata") {
    const fs::path model = kTmp / "model.json";
    const fs::path meta = kTmp / "meta.json";
    const int rc = run_cli("fit --data " + data_csv().string() + " --out " + model.string() +
                           " --meta " + meta.string() + " --seed 5 --alpha 0.1 --c0 auto-train");
    REQUIRE(rc == 0);
    const json m = json::parse(slurp(meta));
    CHECK(m.at("command") == "fit");
    CHECK(m.at("c0").at("policy") == "auto-train");
    CHECK(m.at("c0").at("value").get<double>() > 0.0);
    CHECK(m.at("options").at("seed") == 5);
    CHECK(m.at("folds").at("train").get<int>() == 600);
    const json doc = json::parse(slurp(model));
    CHECK(doc.at("format") == "cfsurv-model");
    CHECK(doc.at("score") == "cqr");
}

TEST_CASE("schema problems exit with code 2 and a machine-readable error") {
    const fs::path bad = kTmp / "bad.csv";
    std::ofstream(bad) << "x1,observed\n1.0,2.0\n";
    const fs::path err = kTmp / "err.json";
    const int rc = run_cli("fit --data " + bad.string() + " --out " + (kTmp / "m.json").string(),
                           err);
    CHECK(rc == 2);
    const json e = json::parse(slurp(err));
    CHECK(e.at("error").at("kind") == "schema");
}

TEST_CASE("degenerate data exits with code 3") {
    const fs::path err = kTmp / "err3.json";
    const int rc = run_cli("fit --data " + data_csv().string() + " --out " +
                               (kTmp / "m.json").string() + " --c0 1e9",
                           err);
    CHECK(rc == 3);
    const json e = json::parse(slurp(err));
    CHECK(e.at("error").at("kind") == "degenerate");
}

TEST_CASE("identical configs produce byte-identical models") {
    const fs::path m1 = kTmp / "m1.json";
    const fs::path m2 = kTmp / "m2.json";
    const std::string base = "fit --data " + data_csv().string() + " --seed 7 --c0 auto-train";
    REQUIRE(run_cli(base + " --out " + m1.string()) == 0);
    REQUIRE(run_cli(base + " --out " + m2.string()) == 0);
    CHECK(slurp(m1) == slurp(m2));
    CHECK(!slurp(m1).empty());
}

TEST_CASE("predict emits one row per input and reloads exactly") {
    const fs::path model = kTmp / "pm.json";
    REQUIRE(run_cli("fit --data " + data_csv().string() + " --out " + model.string() +
                    " --seed 5 --c0 2.0") == 0);

    const fs::path cov = kTmp / "cov.csv";
    std::ofstream(cov) << "x1\n0.5\n1.5\n3.5\n";
    const fs::path out = kTmp / "lpb.csv";
    REQUIRE(run_cli("predict --model " + model.string() + " --data " + cov.string() + " --out " +
                    out.string()) == 0);
    const CsvTable lpbs = parse_csv_file(out.string());
    REQUIRE(lpbs.rows() == 3);

    // In-memory predictions from the reloaded model agree with the CSV to
    // printing precision.
    const ConformalModel reloaded = load_model(model.string());
    const double direct = reloaded.predict(std::vector<double>{1.5}).lpb;
    CHECK(lpbs.column("lpb")[1] == doctest::Approx(direct).epsilon(1e-10));

    // Zero-row input gives a header-only file.
    const fs::path empty = kTmp / "empty.csv";
    std::ofstream(empty) << "x1\n";
    const fs::path eout = kTmp / "elpb.csv";
    REQUIRE(run_cli("predict --model " + model.string() + " --data " + empty.string() +
                    " --out " + eout.string()) == 0);
    CHECK(slurp(eout) == "id,lpb,eta,p_inf,uninformative,clamped_at_c0\n");
}

TEST_CASE("evaluate reports the coverage bounds") {
    const fs::path model = kTmp / "em.json";
    REQUIRE(run_cli("fit --data " + data_csv().string() + " --out " + model.string() +
                    " --seed 5 --c0 2.0") == 0);
    const fs::path rep = kTmp / "report.json";
    REQUIRE(run_cli("evaluate --model " + model.string() + " --data " + data_csv().string() +
                    " --out " + rep.string()) == 0);
    const json r = json::parse(slurp(rep));
    CHECK(r.at("n_test") == 1200);
    CHECK(r.at("beta_lo").get<double>() <= r.at("coverage").get<double>());
    CHECK(r.at("coverage").get<double>() <= r.at("beta_hi").get<double>());
}

TEST_CASE("experiment smoke run finishes quickly and deterministically") {
    const fs::path r1 = kTmp / "exp1.json";
    const fs::path r2 = kTmp / "exp2.json";
    const std::string base =
        "experiment --generator uvt-homo --n-train 3000 --n-test 3000 --replications 5 "
        "--seed 11 --alpha 0.1 --c0 auto-train --jobs 2 --out ";
    const auto t0 = std::chrono::steady_clock::now();
    REQUIRE(run_cli(base + r1.string()) == 0);
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - t0);
    CHECK(elapsed.count() < 60);
    REQUIRE(run_cli(base + r2.string()) == 0);
    CHECK(slurp(r1) == slurp(r2));
    const json r = json::parse(slurp(r1));
    CHECK(r.at("replication_reports").size() == 5);
    CHECK(r.at("mean_coverage").get<double>() > 0.8);
}

TEST_CASE("config file seeds options and flags override it") {
    const fs::path cfg = kTmp / "cfg.json";
    std::ofstream(cfg) << R"({"alpha": 0.2, "c0": "2.0", "seed": 9})";
    const fs::path m1 = kTmp / "cfg_m1.json";
    REQUIRE(run_cli("fit --config " + cfg.string() + " --data " + data_csv().string() +
                    " --out " + m1.string()) == 0);
    CHECK(json::parse(slurp(m1)).at("alpha").get<double>() == 0.2);

    const fs::path m2 = kTmp / "cfg_m2.json";
    REQUIRE(run_cli("fit --config " + cfg.string() + " --data " + data_csv().string() +
                    " --out " + m2.string() + " --alpha 0.05") == 0);
    CHECK(json::parse(slurp(m2)).at("alpha").get<double>() == 0.05);
}

TEST_CASE("mondrian fit and predict round-trip through the group column") {
    // Attach a group column derived from the covariate.
    const CsvTable table = parse_csv_file(data_csv().string());
    const fs::path grouped = kTmp / "grouped.csv";
    {
        std::ofstream f(grouped);
        f << "x1,censoring,observed,event,true_time,cohort\n";
        for (std::size_t i = 0; i < table.rows(); ++i) {
            for (const char* col : {"x1", "censoring", "observed", "event", "true_time"}) {
                f << format_value(table.column(col)[i]) << ',';
            }
            f << (table.column("x1")[i] < 2.0 ? 1 : 2) << '\n';
        }
    }
    const fs::path model = kTmp / "mondrian.json";
    REQUIRE(run_cli("fit --data " + grouped.string() + " --out " + model.string() +
                    " --seed 5 --c0 1.5 --groups cohort") == 0);
    CHECK(json::parse(slurp(model)).contains("mondrian"));

    const fs::path cov = kTmp / "mcov.csv";
    std::ofstream(cov) << "x1,cohort\n0.5,1\n3.5,2\n";
    const fs::path out = kTmp / "mlpb.csv";
    REQUIRE(run_cli("predict --model " + model.string() + " --data " + cov.string() + " --out " +
                    out.string()) == 0);
    CHECK(parse_csv_file(out.string()).rows() == 2);
}

TEST_CASE("separate-fit mondrian models round-trip through predict") {
    const CsvTable table = parse_csv_file(data_csv().string());
    const fs::path grouped = kTmp / "grouped2.csv";
    {
        std::ofstream f(grouped);
        f << "x1,censoring,observed,event,true_time,cohort\n";
        for (std::size_t i = 0; i < table.rows(); ++i) {
            for (const char* col : {"x1", "censoring", "observed", "event", "true_time"}) {
                f << format_value(table.column(col)[i]) << ',';
            }
            f << (table.column("x1")[i] < 2.0 ? 1 : 2) << '\n';
        }
    }
    const fs::path model = kTmp / "mondrian_sep.json";
    REQUIRE(run_cli("fit --data " + grouped.string() + " --out " + model.string() +
                    " --seed 5 --c0 1.5 --groups cohort --groups-separate-fit") == 0);
    CHECK(json::parse(slurp(model)).at("format") == "cfsurv-mondrian-separate");

    const fs::path cov = kTmp / "mcov2.csv";
    std::ofstream(cov) << "x1,cohort\n0.5,1\n3.5,2\n1.0,7\n"; // group 7 never seen
    const fs::path out = kTmp / "mlpb2.csv";
    REQUIRE(run_cli("predict --model " + model.string() + " --data " + cov.string() + " --out " +
                    out.string()) == 0);
    // The unseen group's row carries eta = inf, so read the text directly.
    std::istringstream lines(slurp(out));
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(lines, line)) rows.push_back(line);
    REQUIRE(rows.size() == 4);
    CHECK(rows[3].rfind("3,0,inf,1,1,0", 0) == 0); // lpb 0, uninformative flag set
    CHECK(rows[1].find(",inf,") == std::string::npos);
}

TEST_CASE("predict rejects a covariate dimension mismatch") {
    const fs::path model = kTmp / "dim_model.json";
    REQUIRE(run_cli("fit --data " + data_csv().string() + " --out " + model.string() +
                    " --seed 5 --c0 2.0") == 0);
    const fs::path cov = kTmp / "dim_cov.csv";
    std::ofstream(cov) << "x1,x2\n0.5,1.0\n";
    const fs::path err = kTmp / "dim_err.json";
    CHECK(run_cli("predict --model " + model.string() + " --data " + cov.string() + " --out " +
                      (kTmp / "dim_out.csv").string(),
                  err) == 2);
    CHECK(json::parse(slurp(err)).at("error").at("kind") == "schema");
}

TEST_CASE("gen writes loadable two-censoring data with the oracle columns") {
    const fs::path out = kTmp / "twocens.csv";
    REQUIRE(run_cli("gen --generator two-censoring --n 50 --seed 4 --out " + out.string()) == 0);
    const CsvTable t = parse_csv_file(out.string());
    CHECK(t.has("c_end"));
    CHECK(t.has("uncensored_time"));
    CHECK(t.rows() == 50);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(t.column("observed")[i] <= t.column("c_end")[i]);
        CHECK(t.column("true_time")[i] <= t.column("uncensored_time")[i]);
    }
}
