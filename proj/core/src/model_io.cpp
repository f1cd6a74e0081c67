#include "cfsurv/model_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "cfsurv/errors.hpp"
#include "cfsurv/version.hpp"

namespace cfsurv {

using nlohmann::json;

namespace {

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    if (m.data.size() != m.rows * m.cols) throw SchemaError("model: corrupt matrix block");
    return m;
}

json standardizer_to_json(const Standardizer& s) {
    return json{{"mean", s.mean}, {"scale", s.scale}};
}

Standardizer standardizer_from_json(const json& j) {
    Standardizer s;
    s.mean = j.at("mean").get<std::vector<double>>();
    s.scale = j.at("scale").get<std::vector<double>>();
    return s;
}

json knn_to_json(const KnnIndex& idx) {
    return json{{"points", matrix_to_json(idx.points())},
                {"stats", standardizer_to_json(idx.stats())}};
}

KnnIndex knn_from_json(const json& j) {
    return KnnIndex(matrix_from_json(j.at("points")), standardizer_from_json(j.at("stats")));
}

json cdf_to_json(const CdfModel& m) {
    return json{{"index", knn_to_json(m.index())}, {"responses", m.responses()}, {"k", m.k()}};
}

CdfModel cdf_from_json(const json& j) {
    return CdfModel::restore(knn_from_json(j.at("index")),
                             j.at("responses").get<std::vector<double>>(),
                             j.at("k").get<std::size_t>());
}

json quantile_to_json(const QuantileModel& m) {
    if (m.kind() == QuantileModel::Kind::knn_cdf) {
        return json{{"kind", "knn-cdf"}, {"cdf", cdf_to_json(m.cdf_model())}};
    }
    const auto& fit = m.linear_fit();
    return json{{"kind", "linear-pinball"},
                {"beta", fit.beta},
                {"objective", fit.objective},
                {"converged", fit.converged},
                {"iterations", fit.iterations},
                {"alpha", m.trained_alpha()}};
}

QuantileModel quantile_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "knn-cdf") return QuantileModel::restore_knn(cdf_from_json(j.at("cdf")));
    if (kind == "linear-pinball") {
        PinballFit fit;
        fit.beta = j.at("beta").get<std::vector<double>>();
        fit.objective = j.at("objective").get<double>();
        fit.converged = j.at("converged").get<bool>();
        fit.iterations = j.at("iterations").get<int>();
        return QuantileModel::restore_linear(std::move(fit), j.at("alpha").get<double>());
    }
    throw SchemaError("model: unknown quantile backend '" + kind + "'");
}

json mean_to_json(const MeanModel& m) {
    if (m.kind() == MeanModel::Kind::knn_mean) {
        return json{{"kind", "knn-mean"},
                    {"index", knn_to_json(m.index())},
                    {"responses", m.responses()},
                    {"k", m.k()}};
    }
    return json{{"kind", "linear-least-squares"}, {"beta", m.beta()}};
}

MeanModel mean_from_json(const json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "knn-mean") {
        return MeanModel::restore_knn(knn_from_json(j.at("index")),
                                      j.at("responses").get<std::vector<double>>(),
                                      j.at("k").get<std::size_t>());
    }
    if (kind == "linear-least-squares") {
        return MeanModel::restore_linear(j.at("beta").get<std::vector<double>>());
    }
    throw SchemaError("model: unknown mean backend '" + kind + "'");
}

std::string censoring_kind_name(CensoringModel::Kind kind) {
    switch (kind) {
        case CensoringModel::Kind::logistic: return "logistic";
        case CensoringModel::Kind::knn_frequency: return "knn-frequency";
        case CensoringModel::Kind::constant: return "constant";
    }
    throw std::logic_error("censoring_kind_name: unknown kind");
}

CensoringModel::Kind censoring_kind_from_name(const std::string& name) {
    if (name == "logistic") return CensoringModel::Kind::logistic;
    if (name == "knn-frequency") return CensoringModel::Kind::knn_frequency;
    if (name == "constant") return CensoringModel::Kind::constant;
    throw SchemaError("model: unknown censoring kind '" + name + "'");
}

json censoring_to_json(const CensoringModel& m) {
    json j{{"kind", censoring_kind_name(m.kind())},
           {"c0", m.c0()},
           {"floor", m.floor()},
           {"constant", m.constant_value()}};
    if (m.kind() == CensoringModel::Kind::logistic) {
        j["beta"] = m.beta();
        j["stats"] = standardizer_to_json(m.stats());
    } else if (m.kind() == CensoringModel::Kind::knn_frequency) {
        j["index"] = knn_to_json(m.index());
        j["labels"] = m.labels();
        j["k"] = m.k();
    }
    return j;
}

CensoringModel censoring_from_json(const json& j) {
    const auto kind = censoring_kind_from_name(j.at("kind").get<std::string>());
    std::vector<double> beta;
    Standardizer stats;
    KnnIndex index;
    std::vector<double> labels;
    std::size_t k = 0;
    if (kind == CensoringModel::Kind::logistic) {
        beta = j.at("beta").get<std::vector<double>>();
        stats = standardizer_from_json(j.at("stats"));
    } else if (kind == CensoringModel::Kind::knn_frequency) {
        index = knn_from_json(j.at("index"));
        labels = j.at("labels").get<std::vector<double>>();
        k = j.at("k").get<std::size_t>();
    }
    return CensoringModel::restore(kind, j.at("c0").get<double>(), j.at("floor").get<double>(),
                                   j.at("constant").get<double>(), std::move(beta),
                                   std::move(stats), std::move(index), std::move(labels), k);
}

} // namespace

std::string score_kind_name(ScoreKind kind) {
    switch (kind) {
        case ScoreKind::cmr: return "cmr";
        case ScoreKind::cqr: return "cqr";
        case ScoreKind::cdr: return "cdr";
    }
    throw std::logic_error("score_kind_name: unknown kind");
}

ScoreKind score_kind_from_name(const std::string& name) {
    if (name == "cmr") return ScoreKind::cmr;
    if (name == "cqr") return ScoreKind::cqr;
    if (name == "cdr") return ScoreKind::cdr;
    throw SchemaError("unknown score kind '" + name + "'");
}

namespace {

std::size_t model_dim(const ConformalModel& model) {
    const auto& out = model.outcome();
    if (out.cdf) return out.cdf->index().stats().mean.size();
    if (out.mean) {
        if (out.mean->kind() == MeanModel::Kind::knn_mean)
            return out.mean->index().stats().mean.size();
        return out.mean->beta().size() - 1;
    }
    if (out.quantile) {
        if (out.quantile->kind() == QuantileModel::Kind::knn_cdf)
            return out.quantile->cdf_model().index().stats().mean.size();
        return out.quantile->linear_fit().beta.size() - 1;
    }
    throw std::logic_error("model: no outcome model present");
}

} // namespace

nlohmann::json model_to_json(const ConformalModel& model) {
    json j;
    j["format"] = "cfsurv-model";
    j["version"] = kVersion;
    j["score"] = score_kind_name(model.outcome().kind);
    j["alpha"] = model.alpha();
    j["naive"] = model.naive();
    j["dim"] = model_dim(model);
    if (std::isfinite(model.c0())) {
        j["c0"] = model.c0();
    } else {
        j["c0"] = nullptr; // the naive baseline has no threshold
    }
    const auto& out = model.outcome();
    if (out.mean) j["mean_model"] = mean_to_json(*out.mean);
    if (out.quantile) j["quantile_model"] = quantile_to_json(*out.quantile);
    if (out.cdf) j["cdf_model"] = cdf_to_json(*out.cdf);
    j["censoring_model"] = censoring_to_json(model.censoring());
    if (model.propensity()) j["propensity_model"] = censoring_to_json(*model.propensity());
    j["calibration"] = json{{"scores", model.calibration().scores},
                            {"weights", model.calibration().weights}};
    return j;
}

ConformalModel model_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "cfsurv-model") throw SchemaError("model: not a model document");
    OutcomeModels out;
    out.kind = score_kind_from_name(j.at("score").get<std::string>());
    out.alpha = j.at("alpha").get<double>();
    if (j.contains("mean_model")) out.mean = mean_from_json(j.at("mean_model"));
    if (j.contains("quantile_model")) out.quantile = quantile_from_json(j.at("quantile_model"));
    if (j.contains("cdf_model")) out.cdf = cdf_from_json(j.at("cdf_model"));

    CalibrationSet cal;
    cal.scores = j.at("calibration").at("scores").get<std::vector<double>>();
    cal.weights = j.at("calibration").at("weights").get<std::vector<double>>();

    const bool naive = j.at("naive").get<bool>();
    const double alpha = out.alpha;
    const double c0 = j.at("c0").is_null() ? std::numeric_limits<double>::infinity()
                                           : j.at("c0").get<double>();
    cal.c0 = c0;
    std::optional<CensoringModel> prop;
    if (j.contains("propensity_model")) prop = censoring_from_json(j.at("propensity_model"));
    return ConformalModel::assemble(std::move(out), censoring_from_json(j.at("censoring_model")),
                                    std::move(cal), alpha, c0, naive, std::move(prop));
}

void save_model(const ConformalModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw SchemaError("model: cannot write '" + path + "'");
    f << model_to_json(model).dump(2) << '\n';
}

ConformalModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw SchemaError("model: cannot open '" + path + "'");
    json j;
    try {
        f >> j;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("model: invalid JSON: ") + e.what());
    }
    return model_from_json(j);
}

} // namespace cfsurv
