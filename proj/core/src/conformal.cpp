#include "cfsurv/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cfsurv/errors.hpp"

namespace cfsurv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

} // namespace

double weighted_quantile(std::span<const double> scores, std::span<const double> weights,
                         double w_test, double level) {
    if (scores.empty()) throw DegenerateError("weighted_quantile: empty calibration set");
    if (scores.size() != weights.size())
        throw std::invalid_argument("weighted_quantile: score/weight size mismatch");
    if (!(w_test >= 0.0)) throw std::invalid_argument("weighted_quantile: w_test must be >= 0");
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("weighted_quantile: level must lie in (0, 1)");

    std::vector<std::pair<double, double>> atoms(scores.size());
    double total = w_test;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) throw std::invalid_argument("weighted_quantile: non-finite score");
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i]))
            throw std::invalid_argument("weighted_quantile: weights must be positive and finite");
        atoms[i] = {scores[i], weights[i]};
        total += weights[i];
    }
    // Canonical (score, weight) order keeps tied-score accumulation
    // independent of the input permutation.
    std::sort(atoms.begin(), atoms.end());

    double cum = 0.0;
    std::size_t i = 0;
    while (i < atoms.size()) {
        const double v = atoms[i].first;
        while (i < atoms.size() && atoms[i].first == v) {
            cum += atoms[i].second;
            ++i;
        }
        if (cum / total >= level) return v;
    }
    return kInf; // the level is only reached at the +infinity atom
}

double weighted_quantile(const CalibrationSet& cal, double w_test, double level) {
    return weighted_quantile(cal.scores, cal.weights, w_test, level);
}

double conformity_score(const OutcomeModels& models, std::span<const double> x, double y) {
    switch (models.kind) {
        case ScoreKind::cmr:
            if (!models.mean) throw std::logic_error("conformity_score: missing mean model");
            return models.mean->predict(x) - y;
        case ScoreKind::cqr:
            if (!models.quantile) throw std::logic_error("conformity_score: missing quantile model");
            return models.quantile->quantile(x, models.alpha) - y;
        case ScoreKind::cdr:
            if (!models.cdf) throw std::logic_error("conformity_score: missing cdf model");
            return models.alpha - models.cdf->cdf(x, y);
    }
    throw std::logic_error("conformity_score: unknown score kind");
}

LpbOutput lpb_from_eta(const OutcomeModels& models, std::span<const double> x, double eta,
                       double c0, double p_inf) {
    LpbOutput out;
    out.eta = eta;
    out.p_inf = p_inf;
    if (std::isinf(eta) && eta > 0.0) {
        // Nothing can be certified; report the trivial bound (survival
        // times are nonnegative, so 0 stands in for the -infinity case).
        out.lpb = 0.0;
        out.uninformative = true;
        return out;
    }
    double raw = 0.0;
    switch (models.kind) {
        case ScoreKind::cmr:
            raw = models.mean->predict(x) - eta;
            break;
        case ScoreKind::cqr:
            raw = models.quantile->quantile(x, models.alpha) - eta;
            break;
        case ScoreKind::cdr: {
            const double a = models.alpha - eta;
            raw = a <= 0.0 ? 0.0 : models.cdf->quantile(x, a);
            break;
        }
    }
    out.clamped_at_c0 = raw >= c0 && std::isfinite(c0);
    out.lpb = std::max(std::min(raw, c0), 0.0);
    return out;
}

OutcomeModels fit_outcome_models(const Matrix& x, const std::vector<double>& y,
                                 const ConformalConfig& config) {
    OutcomeModels models;
    models.kind = config.score;
    models.alpha = config.alpha;
    const std::size_t k = config.knn_k.value_or(default_knn_k(x.rows));
    switch (config.score) {
        case ScoreKind::cmr:
            if (config.mean_backend == MeanBackend::knn) {
                models.mean = MeanModel::fit_knn(x, y, k);
            } else {
                models.mean = MeanModel::fit_linear(x, y);
            }
            break;
        case ScoreKind::cqr:
            if (config.quantile_backend == QuantileBackend::knn_cdf) {
                models.quantile = QuantileModel::fit_knn(x, y, k);
            } else {
                models.quantile = QuantileModel::fit_linear(x, y, config.alpha, config.pinball);
            }
            break;
        case ScoreKind::cdr:
            models.cdf = CdfModel::fit_knn(x, y, k);
            break;
    }
    return models;
}

ConformalModel ConformalModel::assemble(OutcomeModels outcome, CensoringModel censoring,
                                        CalibrationSet calibration, double alpha, double c0,
                                        bool naive, std::optional<CensoringModel> propensity) {
    ConformalModel m;
    m.outcome_ = std::move(outcome);
    m.censoring_ = std::move(censoring);
    m.calibration_ = std::move(calibration);
    m.propensity_ = std::move(propensity);
    m.alpha_ = alpha;
    m.c0_ = c0;
    m.naive_ = naive;
    return m;
}

double ConformalModel::test_weight(std::span<const double> x) const {
    if (naive_) return 1.0;
    double w = censoring_.weight(x);
    if (propensity_) w *= propensity_->weight(x);
    return w;
}

LpbOutput ConformalModel::predict(std::span<const double> x) const {
    const double w = test_weight(x);
    const double eta = weighted_quantile(calibration_, w, 1.0 - alpha_);
    double sum_w = 0.0;
    for (double wi : calibration_.weights) sum_w += wi;
    return lpb_from_eta(outcome_, x, eta, c0_, w / (sum_w + w));
}

std::vector<LpbOutput> ConformalModel::predict_all(const Matrix& x) const {
    std::vector<LpbOutput> out(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out[i] = predict(x.row(i));
    return out;
}

ConformalModel conformalize(const Dataset& ds, const SplitIndices& split, double c0,
                            const ConformalConfig& config) {
    if (!(config.alpha > 0.0 && config.alpha < 1.0))
        throw std::invalid_argument("conformalize: alpha must lie in (0, 1)");
    if (!(c0 >= 0.0) || !std::isfinite(c0))
        throw std::invalid_argument("conformalize: c0 must be finite and nonnegative");

    // Censoring mechanism on the whole training fold.
    CensoringModel cens = CensoringModel::constant_model(1.0, c0);
    if (config.censoring != CensoringKind::known_unit) {
        const auto kind = config.censoring == CensoringKind::logistic
                              ? CensoringModel::Kind::logistic
                              : CensoringModel::Kind::knn_frequency;
        cens = CensoringModel::fit(ds.covariates(split.train), ds.censoring_times(split.train),
                                   c0, kind, config.censoring_floor);
    }

    // Outcome model on the training subpopulation with C >= c0, response
    // capped at c0; this is the conditional law the calibration targets.
    const Subpopulation train_sel = select_subpopulation(ds, split.train, c0);
    const OutcomeModels models =
        fit_outcome_models(ds.covariates(train_sel.indices), train_sel.capped, config);

    // Scores and weights on the selected calibration units.
    const Subpopulation cal_sel = select_subpopulation(ds, split.calib, c0);
    CalibrationSet cal;
    cal.c0 = c0;
    cal.scores.resize(cal_sel.indices.size());
    cal.weights.resize(cal_sel.indices.size());
    for (std::size_t i = 0; i < cal_sel.indices.size(); ++i) {
        const auto& rec = ds[cal_sel.indices[i]];
        cal.scores[i] = conformity_score(models, rec.x, cal_sel.capped[i]);
        cal.weights[i] = cens.weight(rec.x);
    }
    return ConformalModel::assemble(std::move(models), std::move(cens), std::move(cal),
                                    config.alpha, c0, /*naive=*/false);
}

ConformalModel naive_lpb(const Dataset& ds, const SplitIndices& split, double alpha,
                         const ConformalConfig& config) {
    ConformalConfig cfg = config;
    cfg.alpha = alpha;
    cfg.score = ScoreKind::cqr;
    const OutcomeModels models = fit_outcome_models(
        ds.covariates(split.train), ds.observed_times(split.train), cfg);

    CalibrationSet cal;
    cal.c0 = kInf;
    cal.scores.resize(split.calib.size());
    cal.weights.assign(split.calib.size(), 1.0);
    for (std::size_t i = 0; i < split.calib.size(); ++i) {
        const auto& rec = ds[split.calib[i]];
        cal.scores[i] = conformity_score(models, rec.x, rec.observed);
    }
    return ConformalModel::assemble(models, CensoringModel::constant_model(1.0, 0.0),
                                    std::move(cal), alpha, kInf, /*naive=*/true);
}

} // namespace cfsurv
