#ifndef CFSURV_CONFORMAL_HPP
#define CFSURV_CONFORMAL_HPP

#include <optional>
#include <span>
#include <vector>

#include "cfsurv/dataset.hpp"
#include "cfsurv/estimators.hpp"

namespace cfsurv {

/// Conformity score family. The level alpha applies to CQR and CDR.
enum class ScoreKind { cmr, cqr, cdr };

/// Scores and inverse-probability weights on the selected calibration
/// subpopulation {i : C_i >= c0}.
struct CalibrationSet {
    std::vector<double> scores;  ///< V_i
    std::vector<double> weights; ///< W_i = 1 / c_hat(X_i), positive and finite
    double c0 = 0.0;
};

/// One lower predictive bound with its calibration diagnostics.
struct LpbOutput {
    double lpb = 0.0;          ///< in [0, c0]
    double eta = 0.0;          ///< calibration cutoff, may be +infinity
    double p_inf = 0.0;        ///< mass of the test-point atom at +infinity
    bool clamped_at_c0 = false;
    bool uninformative = false; ///< eta = +infinity
};

/// sup{z : sum of normalized weights at atoms <= z  <  level}, where the
/// atoms are the scores plus a mass w_test at +infinity. Returns
/// +infinity when no finite atom reaches the level. Invariant to
/// rescaling every weight (including w_test) by the same positive factor.
double weighted_quantile(std::span<const double> scores, std::span<const double> weights,
                         double w_test, double level);

double weighted_quantile(const CalibrationSet& cal, double w_test, double level);

/// Fitted predictors backing one conformity-score family.
struct OutcomeModels {
    ScoreKind kind = ScoreKind::cqr;
    double alpha = 0.1;
    std::optional<MeanModel> mean;       // CMR
    std::optional<QuantileModel> quantile; // CQR
    std::optional<CdfModel> cdf;         // CDR
};

/// CMR: m(x) - y. CQR: q_alpha(x) - y. CDR: alpha - F(y | x).
double conformity_score(const OutcomeModels& models, std::span<const double> x, double y);

/// Inverts a calibrated cutoff into a bound: CMR (m - eta) ^ c0,
/// CQR (q_alpha - eta) ^ c0, CDR F^{-1}(alpha - eta) ^ c0 with the
/// sup-rule inversion. Bounds are floored at zero; eta = +infinity yields
/// 0 with the uninformative flag set.
LpbOutput lpb_from_eta(const OutcomeModels& models, std::span<const double> x, double eta,
                       double c0, double p_inf = 0.0);

enum class CensoringKind { logistic, knn_frequency, known_unit };
enum class QuantileBackend { knn_cdf, linear_pinball };
enum class MeanBackend { knn, linear_least_squares };

struct ConformalConfig {
    ScoreKind score = ScoreKind::cqr;
    double alpha = 0.1;
    QuantileBackend quantile_backend = QuantileBackend::knn_cdf;
    MeanBackend mean_backend = MeanBackend::knn;
    CensoringKind censoring = CensoringKind::logistic;
    double censoring_floor = kDefaultCensoringFloor;
    std::optional<std::size_t> knn_k; ///< default: ceil(n^0.7) of the fitting sample
    PinballOptions pinball;
};

/// Fitted split-conformal model. Immutable once built; predict is pure.
class ConformalModel {
public:
    LpbOutput predict(std::span<const double> x) const;
    std::vector<LpbOutput> predict_all(const Matrix& x) const;

    /// Covariate-shift weight at a test point: the inverse censoring
    /// survival, times the inverse propensity in counterfactual mode.
    double test_weight(std::span<const double> x) const;

    const OutcomeModels& outcome() const { return outcome_; }
    const CensoringModel& censoring() const { return censoring_; }
    const CalibrationSet& calibration() const { return calibration_; }
    const std::optional<CensoringModel>& propensity() const { return propensity_; }
    double alpha() const { return alpha_; }
    double c0() const { return c0_; }
    bool naive() const { return naive_; }

    /// Assembles a model from fitted parts (deserialization and the
    /// extension pipelines use this).
    static ConformalModel assemble(OutcomeModels outcome, CensoringModel censoring,
                                   CalibrationSet calibration, double alpha, double c0,
                                   bool naive,
                                   std::optional<CensoringModel> propensity = std::nullopt);

private:
    OutcomeModels outcome_;
    CensoringModel censoring_;
    CalibrationSet calibration_;
    std::optional<CensoringModel> propensity_;
    double alpha_ = 0.1;
    double c0_ = 0.0;
    bool naive_ = false;
};

/// Fits the outcome model(s) on the training units with C >= c0 using the
/// capped response min(observed, c0), fits the censoring model on the
/// whole training fold, and scores the selected calibration units.
ConformalModel conformalize(const Dataset& ds, const SplitIndices& split, double c0,
                            const ConformalConfig& config);

/// Unweighted split baseline on the censored outcome itself: no
/// threshold, no subpopulation, unit weights. Conservative by design.
ConformalModel naive_lpb(const Dataset& ds, const SplitIndices& split, double alpha,
                         const ConformalConfig& config = {});

/// Fits the outcome models of `config` on (x, y); shared by the main and
/// extension pipelines.
OutcomeModels fit_outcome_models(const Matrix& x, const std::vector<double>& y,
                                 const ConformalConfig& config);

} // namespace cfsurv

#endif
