// Command-line front end: fit / predict / evaluate / experiment / gen.
//
// One flat JSON config can seed any subcommand's options; explicit flags
// override config values. Every run that writes artifacts also writes a
// metadata document sufficient to replay it bit-identically.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfsurv/csv.hpp"
#include "cfsurv/errors.hpp"
#include "cfsurv/extensions.hpp"
#include "cfsurv/model_io.hpp"
#include "cfsurv/simulation.hpp"
#include "cfsurv/threshold.hpp"
#include "cfsurv/version.hpp"

using nlohmann::json;
using namespace cfsurv;

namespace {

struct CommonOptions {
    std::string data;
    std::string out;
    std::string meta;
    double alpha = 0.1;
    std::string score = "cqr";
    std::string method = "weighted"; // weighted | naive
    std::string c0 = "auto-train";   // number | auto-train | auto-calib
    std::string censoring = "logistic"; // logistic | knn | unit
    std::string quantile_backend = "knn"; // knn | linear
    std::string mean_backend = "knn";     // knn | linear
    double floor = kDefaultCensoringFloor;
    std::uint64_t seed = 1;
    double train_fraction = 0.5;
    double holdout_fraction = 0.25;
    std::vector<double> grid; // explicit c0 grid; empty = censoring deciles
    std::optional<std::size_t> k;
    std::string groups_column;
    bool groups_separate_fit = false;
    std::string treatment_column;
    bool two_censoring = false;
};

ConformalConfig conformal_config(const CommonOptions& opt) {
    ConformalConfig cfg;
    cfg.score = score_kind_from_name(opt.score);
    cfg.alpha = opt.alpha;
    cfg.censoring_floor = opt.floor;
    cfg.knn_k = opt.k;
    if (opt.censoring == "logistic") cfg.censoring = CensoringKind::logistic;
    else if (opt.censoring == "knn") cfg.censoring = CensoringKind::knn_frequency;
    else if (opt.censoring == "unit") cfg.censoring = CensoringKind::known_unit;
    else throw SchemaError("unknown censoring estimator '" + opt.censoring + "'");
    if (opt.quantile_backend == "knn") cfg.quantile_backend = QuantileBackend::knn_cdf;
    else if (opt.quantile_backend == "linear") cfg.quantile_backend = QuantileBackend::linear_pinball;
    else throw SchemaError("unknown quantile backend '" + opt.quantile_backend + "'");
    if (opt.mean_backend == "knn") cfg.mean_backend = MeanBackend::knn;
    else if (opt.mean_backend == "linear") cfg.mean_backend = MeanBackend::linear_least_squares;
    else throw SchemaError("unknown mean backend '" + opt.mean_backend + "'");
    if (!(opt.alpha > 0.0 && opt.alpha < 1.0)) throw SchemaError("alpha must lie in (0, 1)");
    return cfg;
}

unsigned default_jobs() {
    if (const char* env = std::getenv("CFS_JOBS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return 1;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SchemaError("cannot write '" + path + "'");
    f << text;
}

void write_json_doc(const std::string& path, const json& doc) {
    write_text(path, doc.dump(2) + "\n");
}

// Applies "--config file.json" values onto the option struct before the
// real flag parse; flags given on the command line then win.
void apply_config(const std::string& path, CommonOptions& opt, json* extra = nullptr) {
    std::ifstream f(path);
    if (!f) throw SchemaError("cannot open config '" + path + "'");
    json cfg;
    try {
        f >> cfg;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!cfg.is_object()) throw SchemaError("config: expected a flat JSON object");
    auto get = [&cfg](const char* key, auto& field) {
        if (cfg.contains(key)) field = cfg.at(key).template get<std::decay_t<decltype(field)>>();
    };
    get("data", opt.data);
    get("out", opt.out);
    get("meta", opt.meta);
    get("alpha", opt.alpha);
    get("score", opt.score);
    get("method", opt.method);
    get("c0", opt.c0);
    get("censoring", opt.censoring);
    get("quantile_backend", opt.quantile_backend);
    get("mean_backend", opt.mean_backend);
    get("floor", opt.floor);
    get("seed", opt.seed);
    get("train_fraction", opt.train_fraction);
    get("holdout_fraction", opt.holdout_fraction);
    get("grid", opt.grid);
    get("groups", opt.groups_column);
    get("groups_separate_fit", opt.groups_separate_fit);
    get("treatment", opt.treatment_column);
    get("two_censoring", opt.two_censoring);
    if (cfg.contains("k")) opt.k = cfg.at("k").get<std::size_t>();
    if (extra) *extra = cfg;
}

json options_json(const CommonOptions& opt) {
    json j;
    j["alpha"] = opt.alpha;
    j["score"] = opt.score;
    j["method"] = opt.method;
    j["c0"] = opt.c0;
    j["censoring"] = opt.censoring;
    j["quantile_backend"] = opt.quantile_backend;
    j["mean_backend"] = opt.mean_backend;
    j["floor"] = opt.floor;
    j["seed"] = opt.seed;
    j["train_fraction"] = opt.train_fraction;
    j["holdout_fraction"] = opt.holdout_fraction;
    if (!opt.grid.empty()) j["grid"] = opt.grid;
    if (opt.k) j["k"] = *opt.k;
    if (!opt.groups_column.empty()) {
        j["groups"] = opt.groups_column;
        j["groups_separate_fit"] = opt.groups_separate_fit;
    }
    if (!opt.treatment_column.empty()) j["treatment"] = opt.treatment_column;
    j["two_censoring"] = opt.two_censoring;
    return j;
}

struct C0Choice {
    std::string policy;
    double value = 0.0;
};

C0Choice resolve_c0(const CommonOptions& opt, const Dataset& ds, const SplitIndices& sp,
                    const ConformalConfig& cfg) {
    const ThresholdGrid grid = opt.grid.empty()
                                   ? ThresholdGrid::censoring_deciles(ds, sp.train)
                                   : ThresholdGrid::explicit_grid(opt.grid);
    if (opt.c0 == "auto-train") {
        return {"auto-train",
                select_c0_train(ds, sp.train, grid, cfg, opt.holdout_fraction, opt.seed)};
    }
    if (opt.c0 == "auto-calib") {
        return {"auto-calib", select_c0_calib(ds, sp, grid, cfg)};
    }
    char* end = nullptr;
    const double v = std::strtod(opt.c0.c_str(), &end);
    if (end == opt.c0.c_str() || *end != '\0' || !(v >= 0.0)) {
        throw SchemaError("--c0 must be a nonnegative number, 'auto-train' or 'auto-calib'");
    }
    return {"fixed", v};
}

std::vector<int> int_column(const CsvTable& table, const std::string& name) {
    const auto& col = table.column(name);
    std::vector<int> out(col.size());
    for (std::size_t i = 0; i < col.size(); ++i) out[i] = static_cast<int>(col[i]);
    return out;
}

int run_fit(const CommonOptions& opt) {
    if (opt.data.empty() || opt.out.empty()) throw SchemaError("fit: --data and --out are required");
    const CsvTable table = parse_csv_file(opt.data);
    CsvSchema schema;
    if (opt.two_censoring) schema.censoring = "c_end"; // relabel the conditioning censor
    const Dataset ds = dataset_from_table(table, schema);
    const SplitIndices sp = split(ds, opt.train_fraction, opt.seed);
    const ConformalConfig cfg = conformal_config(opt);

    json model_doc;
    json meta;
    meta["version"] = kVersion;
    meta["command"] = "fit";
    meta["data"] = opt.data;
    meta["rows"] = ds.size();
    meta["dim"] = ds.dim();
    meta["options"] = options_json(opt);
    meta["folds"] = json{{"train", sp.train.size()}, {"calib", sp.calib.size()}};

    if (opt.method == "naive") {
        const ConformalModel model = naive_lpb(ds, sp, opt.alpha, cfg);
        model_doc = model_to_json(model);
        meta["c0"] = json{{"policy", "none"}, {"value", nullptr}};
        meta["folds"]["calib_selected"] = sp.calib.size();
    } else if (opt.method == "weighted") {
        const C0Choice c0 = resolve_c0(opt, ds, sp, cfg);
        meta["c0"] = json{{"policy", c0.policy}, {"value", c0.value}};
        if (!opt.treatment_column.empty()) {
            const std::vector<int> treatment = int_column(table, opt.treatment_column);
            const ConformalModel model =
                conformalize_counterfactual(ds, treatment, sp, c0.value, cfg);
            model_doc = model_to_json(model);
            meta["folds"]["calib_selected"] = model.calibration().scores.size();
        } else if (!opt.groups_column.empty()) {
            const std::vector<int> groups = int_column(table, opt.groups_column);
            const MondrianModel model = conformalize_mondrian_labeled(
                ds, groups, sp, c0.value, cfg, opt.groups_separate_fit);
            if (model.separate()) {
                model_doc["format"] = "cfsurv-mondrian-separate";
                model_doc["version"] = kVersion;
                model_doc["column"] = opt.groups_column;
                json group_models = json::array();
                std::size_t selected = 0;
                for (const auto& [group, gm] : model.group_models()) {
                    group_models.push_back(
                        json{{"group", group}, {"model", model_to_json(gm)}});
                    selected += gm.calibration().scores.size();
                }
                model_doc["group_models"] = std::move(group_models);
                meta["folds"]["calib_selected"] = selected;
            } else {
                model_doc = model_to_json(model.base());
                model_doc["mondrian"] = json{{"column", opt.groups_column},
                                             {"calibration_groups", model.calibration_groups()}};
                meta["folds"]["calib_selected"] = model.base().calibration().scores.size();
            }
        } else {
            const ConformalModel model = conformalize(ds, sp, c0.value, cfg);
            model_doc = model_to_json(model);
            meta["folds"]["calib_selected"] = model.calibration().scores.size();
        }
    } else {
        throw SchemaError("fit: --method must be 'weighted' or 'naive'");
    }

    write_json_doc(opt.out, model_doc);
    if (!opt.meta.empty()) write_json_doc(opt.meta, meta);
    return 0;
}

std::string render_lpb_csv(const std::vector<LpbOutput>& lpbs) {
    std::ostringstream out;
    out << "id,lpb,eta,p_inf,uninformative,clamped_at_c0\n";
    for (std::size_t i = 0; i < lpbs.size(); ++i) {
        const auto& o = lpbs[i];
        out << (i + 1) << ',' << format_value(o.lpb) << ','
            << (std::isinf(o.eta) ? "inf" : format_value(o.eta)) << ',' << format_value(o.p_inf)
            << ',' << (o.uninformative ? 1 : 0) << ',' << (o.clamped_at_c0 ? 1 : 0) << '\n';
    }
    return out.str();
}

int run_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
    if (model_path.empty() || data_path.empty())
        throw SchemaError("predict: --model and --data are required");
    std::ifstream mf(model_path);
    if (!mf) throw SchemaError("cannot open model '" + model_path + "'");
    json model_doc;
    try {
        mf >> model_doc;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("model: invalid JSON: ") + e.what());
    }

    const CsvTable table = parse_csv_file(data_path);
    std::size_t p = 0;
    while (table.has("x" + std::to_string(p + 1))) ++p;
    if (p == 0) throw SchemaError("predict: no covariate columns x1...");
    auto row_covariates = [&](std::size_t i) {
        std::vector<double> x(p);
        for (std::size_t j = 0; j < p; ++j) x[j] = table.column("x" + std::to_string(j + 1))[i];
        return x;
    };
    auto check_dim = [&](const json& doc) {
        if (doc.contains("dim") && doc.at("dim").get<std::size_t>() != p) {
            throw SchemaError("predict: model expects " +
                              std::to_string(doc.at("dim").get<std::size_t>()) +
                              " covariates, data has " + std::to_string(p));
        }
    };

    std::vector<LpbOutput> lpbs(table.rows());
    if (model_doc.value("format", "") == "cfsurv-mondrian-separate") {
        std::map<int, ConformalModel> by_group;
        for (const auto& entry : model_doc.at("group_models")) {
            check_dim(entry.at("model"));
            by_group.emplace(entry.at("group").get<int>(), model_from_json(entry.at("model")));
        }
        const MondrianModel mondrian =
            MondrianModel::assemble_separate(std::move(by_group), GroupPartition{});
        const std::vector<int> groups =
            int_column(table, model_doc.at("column").get<std::string>());
        for (std::size_t i = 0; i < table.rows(); ++i) {
            lpbs[i] = mondrian.predict(row_covariates(i), groups[i]);
        }
    } else if (model_doc.contains("mondrian")) {
        check_dim(model_doc);
        const auto& mj = model_doc.at("mondrian");
        const MondrianModel mondrian = MondrianModel::assemble(
            model_from_json(model_doc), mj.at("calibration_groups").get<std::vector<int>>(),
            GroupPartition{});
        const std::vector<int> groups = int_column(table, mj.at("column").get<std::string>());
        for (std::size_t i = 0; i < table.rows(); ++i) {
            lpbs[i] = mondrian.predict(row_covariates(i), groups[i]);
        }
    } else {
        check_dim(model_doc);
        const ConformalModel model = model_from_json(model_doc);
        for (std::size_t i = 0; i < table.rows(); ++i) {
            lpbs[i] = model.predict(row_covariates(i));
        }
    }
    const std::string csv = render_lpb_csv(lpbs);
    if (out_path.empty()) std::cout << csv;
    else write_text(out_path, csv);
    return 0;
}

json report_to_json(const EvaluationReport& rep) {
    json j;
    j["n_test"] = rep.n_test;
    auto put = [&j](const char* key, double v) {
        if (std::isnan(v)) j[key] = nullptr;
        else j[key] = v;
    };
    put("coverage", rep.coverage);
    put("coverage_capped", rep.coverage_capped);
    j["mean_lpb"] = rep.mean_lpb;
    j["beta_lo"] = rep.beta_lo;
    j["beta_hi"] = rep.beta_hi;
    put("mean_ratio", rep.mean_ratio);
    if (!rep.strata.empty()) {
        json rows = json::array();
        for (const auto& s : rep.strata) {
            json row;
            row["var_lo"] = s.var_lo;
            row["var_hi"] = s.var_hi;
            row["count"] = s.count;
            if (std::isnan(s.coverage)) row["coverage"] = nullptr;
            else row["coverage"] = s.coverage;
            row["mean_ratio"] = s.mean_ratio;
            rows.push_back(std::move(row));
        }
        j["strata"] = std::move(rows);
    }
    return j;
}

int run_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& out_path) {
    if (model_path.empty() || data_path.empty())
        throw SchemaError("evaluate: --model and --data are required");
    const ConformalModel model = load_model(model_path);
    const Dataset test = load_csv(data_path);
    const EvaluationReport rep = evaluate(model, test);
    const json j = report_to_json(rep);
    if (out_path.empty()) std::cout << j.dump(2) << '\n';
    else write_json_doc(out_path, j);
    return 0;
}

std::string render_strata_csv(const std::vector<StratumRow>& strata) {
    std::ostringstream out;
    out << "stratum,var_lo,var_hi,coverage,mean_ratio\n";
    for (std::size_t s = 0; s < strata.size(); ++s) {
        out << (s + 1) << ',' << format_value(strata[s].var_lo) << ','
            << format_value(strata[s].var_hi) << ',' << format_value(strata[s].coverage) << ','
            << format_value(strata[s].mean_ratio) << '\n';
    }
    return out.str();
}

int run_experiment_cmd(const CommonOptions& opt, const std::string& generator,
                       std::size_t n_train, std::size_t n_test, std::size_t replications,
                       unsigned jobs, const std::string& strata_csv) {
    if (opt.out.empty()) throw SchemaError("experiment: --out is required");
    ExperimentConfig cfg;
    cfg.generator.kind = generator_kind_from_name(generator);
    cfg.generator.seed = opt.seed;
    cfg.n_train = n_train;
    cfg.n_test = n_test;
    cfg.train_fraction = opt.train_fraction;
    cfg.conformal = conformal_config(opt);
    cfg.method = opt.method == "naive" ? Method::naive : Method::weighted;
    cfg.holdout_fraction = opt.holdout_fraction;
    cfg.replications = replications;
    cfg.jobs = jobs;
    if (opt.c0 == "auto-train") cfg.c0_policy = C0Policy::auto_train;
    else if (opt.c0 == "auto-calib") cfg.c0_policy = C0Policy::auto_calib;
    else {
        cfg.c0_policy = C0Policy::fixed;
        char* end = nullptr;
        cfg.c0_fixed = std::strtod(opt.c0.c_str(), &end);
        if (end == opt.c0.c_str() || *end != '\0' || !(cfg.c0_fixed >= 0.0)) {
            throw SchemaError("--c0 must be a nonnegative number, 'auto-train' or 'auto-calib'");
        }
    }

    const auto results = run_experiment(cfg);

    auto mean_of = [&](auto&& get) {
        double s = 0.0;
        for (const auto& r : results) s += get(r);
        return s / static_cast<double>(results.size());
    };

    json reps = json::array();
    for (const auto& r : results) {
        json row = report_to_json(r.report);
        row.erase("strata"); // per-stratum data goes to the aggregated CSV
        row["c0"] = std::isinf(r.c0) ? json(nullptr) : json(r.c0);
        if (!std::isnan(r.coverage_t_raw)) row["coverage_uncensored"] = r.coverage_t_raw;
        reps.push_back(std::move(row));
    }

    json doc;
    doc["version"] = kVersion;
    doc["command"] = "experiment";
    doc["generator"] = generator;
    doc["n_train"] = n_train;
    doc["n_test"] = n_test;
    doc["replications"] = replications;
    doc["options"] = options_json(opt);
    doc["mean_coverage"] = mean_of([](const auto& r) { return r.report.coverage; });
    doc["mean_coverage_capped"] =
        mean_of([](const auto& r) { return r.report.coverage_capped; });
    doc["mean_lpb"] = mean_of([](const auto& r) { return r.report.mean_lpb; });
    doc["mean_ratio"] = mean_of([](const auto& r) { return r.report.mean_ratio; });
    doc["replication_reports"] = std::move(reps);

    write_json_doc(opt.out, doc);
    if (!opt.meta.empty()) {
        json meta;
        meta["version"] = kVersion;
        meta["command"] = "experiment";
        meta["generator"] = generator;
        meta["n_train"] = n_train;
        meta["n_test"] = n_test;
        meta["replications"] = replications;
        meta["jobs_note"] = "results are independent of --jobs";
        meta["options"] = options_json(opt);
        write_json_doc(opt.meta, meta);
    }
    if (!strata_csv.empty()) {
        // Average the per-stratum curves across replications.
        const std::size_t k = results[0].report.strata.size();
        std::vector<StratumRow> mean_rows(k);
        for (std::size_t s = 0; s < k; ++s) {
            double lo = 0.0;
            double hi = 0.0;
            double cov = 0.0;
            double ratio = 0.0;
            for (const auto& r : results) {
                lo += r.report.strata[s].var_lo;
                hi += r.report.strata[s].var_hi;
                cov += r.report.strata[s].coverage;
                ratio += r.report.strata[s].mean_ratio;
            }
            const auto n = static_cast<double>(results.size());
            mean_rows[s] = {lo / n, hi / n, results[0].report.strata[s].count, cov / n, ratio / n};
        }
        write_text(strata_csv, render_strata_csv(mean_rows));
    }
    return 0;
}

int run_gen(const std::string& generator, std::size_t n, std::uint64_t seed,
            const std::string& out_path) {
    if (out_path.empty()) throw SchemaError("gen: --out is required");
    GeneratorSpec spec;
    spec.kind = generator_kind_from_name(generator);
    spec.n = n;
    spec.seed = seed;
    const GeneratedData data = generate_full(spec);
    if (data.t_raw.empty()) {
        save_csv_file(data.ds, out_path);
        return 0;
    }
    // Two-censoring data carries the fully uncensored time as an extra
    // oracle column; the censoring column already holds c_end.
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw SchemaError("cannot write '" + out_path + "'");
    const std::size_t p = data.ds.dim();
    for (std::size_t j = 0; j < p; ++j) f << "x" << (j + 1) << ',';
    f << "c_end,observed,event,true_time,uncensored_time\n";
    for (std::size_t i = 0; i < data.ds.size(); ++i) {
        const auto& r = data.ds[i];
        for (std::size_t j = 0; j < p; ++j) f << format_value(r.x[j]) << ',';
        f << format_value(r.censoring) << ',' << format_value(r.observed) << ','
          << (r.event ? 1 : 0) << ',' << format_value(*r.true_time) << ','
          << format_value(data.t_raw[i]) << '\n';
    }
    return 0;
}

json error_json(const std::string& kind, const std::string& message) {
    return json{{"error", {{"kind", kind}, {"message", message}}}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Calibrated lower predictive bounds for right-censored survival times"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonOptions opt;
    std::string config_path;
    std::string model_path;
    std::string generator = "uvt-homo";
    std::size_t n_train = 3000;
    std::size_t n_test = 3000;
    std::size_t n_gen = 1000;
    std::size_t replications = 1;
    unsigned jobs = default_jobs();
    std::string strata_csv;

    // The config file must be applied before flags so flags override it.
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
    }

    try {
        if (!config_path.empty()) apply_config(config_path, opt);
    } catch (const SchemaError& e) {
        std::cerr << error_json("schema", e.what()).dump() << '\n';
        return 2;
    }

    auto add_common = [&](CLI::App* cmd, bool with_fit_options) {
        cmd->add_option("--config", config_path, "flat JSON config; flags override it");
        cmd->add_option("--data", opt.data, "input CSV path");
        cmd->add_option("--out", opt.out, "output path");
        cmd->add_option("--seed", opt.seed, "master seed; all randomness derives from it");
        if (with_fit_options) {
            cmd->add_option("--alpha", opt.alpha, "miscoverage level in (0,1)");
            cmd->add_option("--score", opt.score, "conformity score: cmr, cqr or cdr");
            cmd->add_option("--method", opt.method, "weighted or naive");
            cmd->add_option("--c0", opt.c0, "threshold: number, auto-train or auto-calib");
            cmd->add_option("--censoring", opt.censoring,
                            "censoring estimator: logistic, knn or unit");
            cmd->add_option("--quantile-backend", opt.quantile_backend, "knn or linear");
            cmd->add_option("--mean-backend", opt.mean_backend, "knn or linear");
            cmd->add_option("--floor", opt.floor, "censoring truncation level");
            cmd->add_option("--train-fraction", opt.train_fraction, "training fold fraction");
            cmd->add_option("--holdout-fraction", opt.holdout_fraction,
                            "holdout share for auto-train c0 selection");
            cmd->add_option("--grid", opt.grid, "explicit c0 candidates")->delimiter(',');
            std::size_t k_tmp = 0;
            cmd->add_option("--k", k_tmp, "neighborhood size for knn estimators")
                ->each([&opt](const std::string& s) { opt.k = std::stoull(s); });
            cmd->add_option("--meta", opt.meta, "metadata JSON output path");
        }
    };

    CLI::App* fit = app.add_subcommand("fit", "fit a model on a labeled CSV");
    add_common(fit, true);
    fit->add_option("--groups", opt.groups_column, "group column for Mondrian calibration");
    fit->add_flag("--groups-separate-fit", opt.groups_separate_fit,
                  "refit estimators per group instead of joint training");
    fit->add_option("--treatment", opt.treatment_column,
                    "treatment column for counterfactual bounds");
    fit->add_flag("--two-censoring", opt.two_censoring,
                  "treat the c_end column as the conditioning censor");

    CLI::App* predict = app.add_subcommand("predict", "emit bounds for covariate rows");
    predict->add_option("--model", model_path, "model JSON path")->required();
    add_common(predict, false);

    CLI::App* eval = app.add_subcommand("evaluate", "score a model on labeled data");
    eval->add_option("--model", model_path, "model JSON path")->required();
    add_common(eval, false);

    CLI::App* exp = app.add_subcommand("experiment", "replicated simulation study");
    add_common(exp, true);
    exp->add_option("--generator", generator, "data-generating process");
    exp->add_option("--n-train", n_train, "training rows per replication");
    exp->add_option("--n-test", n_test, "test rows per replication");
    exp->add_option("--replications", replications, "number of replications");
    exp->add_option("--jobs", jobs, "worker threads (default: CFS_JOBS or 1)");
    exp->add_option("--strata-csv", strata_csv, "aggregated per-stratum CSV output");

    CLI::App* gen = app.add_subcommand("gen", "write a generator's data to CSV");
    add_common(gen, false);
    gen->add_option("--generator", generator, "data-generating process");
    gen->add_option("--n", n_gen, "number of rows");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << error_json("usage", e.what()).dump() << '\n';
        return 2;
    }

    try {
        if (fit->parsed()) return run_fit(opt);
        if (predict->parsed()) return run_predict(model_path, opt.data, opt.out);
        if (eval->parsed()) return run_evaluate(model_path, opt.data, opt.out);
        if (exp->parsed())
            return run_experiment_cmd(opt, generator, n_train, n_test, replications, jobs,
                                      strata_csv);
        if (gen->parsed()) return run_gen(generator, n_gen, opt.seed, opt.out);
    } catch (const SchemaError& e) {
        std::cerr << error_json("schema", e.what()).dump() << '\n';
        return 2;
    } catch (const DegenerateError& e) {
        std::cerr << error_json("degenerate", e.what()).dump() << '\n';
        return 3;
    } catch (const std::logic_error& e) {
        std::cerr << error_json("internal", e.what()).dump() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << error_json("degenerate", e.what()).dump() << '\n';
        return 3;
    }
    return 0;
}
