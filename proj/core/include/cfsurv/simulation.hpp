#ifndef CFSURV_SIMULATION_HPP
#define CFSURV_SIMULATION_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cfsurv/conformal.hpp"
#include "cfsurv/dataset.hpp"

namespace cfsurv {

/// Built-in data-generating processes. All of them draw log-normal
/// survival times given covariates; they differ in covariate law,
/// conditional location/scale, and censoring.
enum class GeneratorKind {
    uvt_homo,   ///< p=1, X~U(0,4), C~Exp(0.4), mu=2+0.37*sqrt(x), sigma=1.5
    uvt_hetero, ///< as above with sigma = 1 + x/5
    mvt_homo,   ///< p=100, X~U([-1,1]^p), C~Exp(0.4), mu=log2+1+0.55(x1^2-x3*x5), sigma=1
    mvt_hetero, ///< as above with sigma = |x10| + 1
    synthetic_c,       ///< (age, gender) table; censoring rate depends on covariates
    synthetic_t,       ///< (age, gender) table; exogenous censoring
    two_censoring,     ///< end-of-study censor plus loss-to-follow-up attrition
    custom_aft,        ///< linear AFT with configurable parameters
};

struct CustomAftParams {
    std::size_t dim = 1;
    double cov_lo = 0.0;
    double cov_hi = 4.0;
    double mu_intercept = 2.0;
    std::vector<double> mu_slope = {0.37};
    double sigma_intercept = 1.5;
    double sigma_slope_abs = 0.0; ///< sigma(x) = intercept + slope*|x1|
    double cens_rate = 0.4;
};

struct GeneratorSpec {
    GeneratorKind kind = GeneratorKind::uvt_homo;
    std::size_t n = 0;
    std::uint64_t seed = 0;
    CustomAftParams custom; ///< used by custom_aft only
};

GeneratorKind generator_kind_from_name(const std::string& name);
std::string generator_kind_name(GeneratorKind kind);

/// Deterministic draw of n records; every record carries the true time.
Dataset generate(const GeneratorSpec& spec);

/// Like generate, plus side information a Dataset cannot carry: for the
/// two-censoring process the records' true time is the partially censored
/// min(t, c_loss) and `t_raw` holds the fully uncensored survival time.
struct GeneratedData {
    Dataset ds;
    std::vector<double> t_raw; ///< empty except for two_censoring
};
GeneratedData generate_full(const GeneratorSpec& spec);

/// alpha-quantile of exp(N(mu, sigma^2)): exp(mu + sigma * Phi^{-1}(a)).
double oracle_quantile_aft(double mu, double sigma, double a);

/// Closed-form conditional laws of the true survival time for a
/// generator: the oracle quantile is the ideal bound, the conditional
/// variance drives the evaluation strata.
class AftOracle {
public:
    AftOracle() = default;
    explicit AftOracle(std::function<void(std::span<const double>, double&, double&)> mu_sigma)
        : mu_sigma_(std::move(mu_sigma)) {}

    double quantile(std::span<const double> x, double a) const;
    /// Var(T | X = x) = (exp(sigma^2) - 1) * exp(2*mu + sigma^2).
    double variance(std::span<const double> x) const;
    bool valid() const { return static_cast<bool>(mu_sigma_); }

private:
    std::function<void(std::span<const double>, double&, double&)> mu_sigma_;
};

AftOracle oracle_for(const GeneratorSpec& spec);

struct StratumRow {
    double var_lo = 0.0;
    double var_hi = 0.0;
    std::size_t count = 0;
    double coverage = 0.0;   ///< NaN when the test set has no true times
    double mean_ratio = 0.0; ///< mean bound / oracle quantile
};

struct EvaluationReport {
    std::size_t n_test = 0;
    double coverage = 0.0;        ///< P(T >= L), NaN without true times
    double coverage_capped = 0.0; ///< P(T ^ c0 >= L), NaN without true times
    double mean_lpb = 0.0;
    double beta_lo = 0.0; ///< fraction of observed >= L; never above the coverage
    double beta_hi = 0.0; ///< 1 - fraction{observed < L and event}; never below it
    double mean_ratio = 0.0;      ///< NaN without an oracle
    std::vector<StratumRow> strata; ///< 10 Var(T|X)-decile rows; empty without an oracle
};

/// Scores a model on a test set. The oracle enables the ratio column and
/// the variance-decile strata; true times enable the coverage columns.
/// The estimable bounds always sandwich the realized coverage; that
/// inequality is checked on every call.
EvaluationReport evaluate(const ConformalModel& model, const Dataset& test,
                          const AftOracle* oracle = nullptr);

/// Same, for bounds produced by any pipeline (Mondrian, counterfactual).
EvaluationReport evaluate_lpbs(std::span<const LpbOutput> lpbs, const Dataset& test, double c0,
                               double alpha, const AftOracle* oracle = nullptr);

enum class Method { weighted, naive };
enum class C0Policy { fixed, auto_train, auto_calib };

struct ExperimentConfig {
    GeneratorSpec generator; ///< its seed is the master seed
    std::size_t n_train = 3000;
    std::size_t n_test = 3000;
    double train_fraction = 0.5;
    ConformalConfig conformal;
    Method method = Method::weighted;
    C0Policy c0_policy = C0Policy::auto_train;
    double c0_fixed = 0.0;
    double holdout_fraction = 0.25;
    std::size_t replications = 1;
    unsigned jobs = 1;
};

struct ReplicationResult {
    EvaluationReport report;
    double c0 = 0.0;
    double coverage_t_raw = 0.0; ///< two-censoring only: coverage of the uncensored time
};

/// Runs generate -> split -> conformalize -> evaluate per replication.
/// Replication r draws from substreams derived from (master seed, r), so
/// results are independent of the job count and reported in index order.
std::vector<ReplicationResult> run_experiment(const ExperimentConfig& config);

} // namespace cfsurv

#endif
