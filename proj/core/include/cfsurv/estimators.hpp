#ifndef CFSURV_ESTIMATORS_HPP
#define CFSURV_ESTIMATORS_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "cfsurv/linalg.hpp"

namespace cfsurv {

/// Per-column z-score transform with statistics frozen at fit time.
/// Zero-variance columns keep scale 1 so they map to a constant.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const Matrix& x);
    std::vector<double> apply(std::span<const double> x) const;
    Matrix apply_all(const Matrix& x) const;
};

/// Default neighborhood size for the k-NN estimators: ceil(n^0.7), capped at n.
std::size_t default_knn_k(std::size_t n);

/// Standardized snapshot of a training design supporting exact k-NN
/// queries. Distance ties are broken toward the smaller training index.
class KnnIndex {
public:
    KnnIndex() = default;
    KnnIndex(Matrix x, Standardizer stats);

    /// Indices of the k nearest training rows to x (original covariate scale).
    std::vector<std::size_t> query(std::span<const double> x, std::size_t k) const;

    std::size_t size() const { return points_.rows; }
    const Matrix& points() const { return points_; }
    const Standardizer& stats() const { return stats_; }

private:
    Matrix points_; // standardized
    Standardizer stats_;
};

/// Conditional distribution estimator: the empirical CDF over the k
/// nearest training responses. Right-continuous nondecreasing step
/// function with range in [0, 1].
class CdfModel {
public:
    CdfModel() = default;

    /// Requires 1 <= k <= n.
    static CdfModel fit_knn(const Matrix& x, std::vector<double> y, std::size_t k);

    double cdf(std::span<const double> x, double y) const;

    /// Generalized inverse sup{z : F(z) < a}: the ceil(a*k)-th smallest
    /// neighbor response. Returns -infinity when a <= 0.
    double quantile(std::span<const double> x, double a) const;

    std::size_t k() const { return k_; }
    const KnnIndex& index() const { return index_; }
    const std::vector<double>& responses() const { return responses_; }

    /// Rebuilds a fitted model from its exact internal state (serialization).
    static CdfModel restore(KnnIndex index, std::vector<double> responses, std::size_t k);

private:
    KnnIndex index_;
    std::vector<double> responses_;
    std::size_t k_ = 0;

    std::vector<double> neighbor_responses(std::span<const double> x) const;
};

/// Linear quantile regression fit by subgradient descent on the pinball
/// loss, with step schedule step0/sqrt(t) after internal standardization.
struct PinballFit {
    std::vector<double> beta; ///< [intercept, slopes...] on the original scale
    double objective = 0.0;   ///< pinball objective of beta on the training data
    bool converged = false;
    int iterations = 0;
};

struct PinballOptions {
    int steps = 5000;
    double tol = 1e-6;
    double step0 = 1.0;
};

/// Requires n > p + 1. Deterministic given inputs; when the objective has
/// not stabilized within `steps` iterations the best iterate is returned
/// with converged = false.
PinballFit fit_linear_pinball(const Matrix& x, std::span<const double> y, double alpha,
                              const PinballOptions& opts = {});

/// Pinball loss of a coefficient vector (intercept first), original scale.
double pinball_objective(const Matrix& x, std::span<const double> y, double alpha,
                         std::span<const double> beta);

/// Conditional quantile estimator: either a k-NN CDF inverted at any
/// level, or a linear pinball fit pinned to its training level.
class QuantileModel {
public:
    enum class Kind { knn_cdf, linear_pinball };

    static QuantileModel fit_knn(const Matrix& x, std::vector<double> y, std::size_t k);
    static QuantileModel fit_linear(const Matrix& x, std::span<const double> y, double alpha,
                                    const PinballOptions& opts = {});

    /// Nondecreasing in a for the knn backend; the linear backend ignores
    /// a and evaluates its trained level.
    double quantile(std::span<const double> x, double a) const;

    Kind kind() const { return kind_; }
    const CdfModel& cdf_model() const { return cdf_; }
    const PinballFit& linear_fit() const { return fit_; }
    double trained_alpha() const { return alpha_; }

    static QuantileModel restore_knn(CdfModel cdf);
    static QuantileModel restore_linear(PinballFit fit, double alpha);

private:
    Kind kind_ = Kind::knn_cdf;
    CdfModel cdf_;
    PinballFit fit_;
    double alpha_ = 0.0;
};

/// Conditional mean estimator.
class MeanModel {
public:
    enum class Kind { knn_mean, linear_least_squares };

    static MeanModel fit_knn(const Matrix& x, std::vector<double> y, std::size_t k);
    static MeanModel fit_linear(const Matrix& x, std::span<const double> y);

    double predict(std::span<const double> x) const;

    Kind kind() const { return kind_; }
    const KnnIndex& index() const { return index_; }
    const std::vector<double>& responses() const { return responses_; }
    std::size_t k() const { return k_; }
    const std::vector<double>& beta() const { return beta_; }

    static MeanModel restore_knn(KnnIndex index, std::vector<double> responses, std::size_t k);
    static MeanModel restore_linear(std::vector<double> beta);

private:
    Kind kind_ = Kind::knn_mean;
    KnnIndex index_;
    std::vector<double> responses_;
    std::size_t k_ = 0;
    std::vector<double> beta_; // [intercept, slopes...]
};

/// Estimator of the censoring mechanism P(C >= c0 | X = x), truncated
/// below at `floor` so that inverse-probability weights stay bounded.
class CensoringModel {
public:
    enum class Kind { logistic, knn_frequency, constant };

    /// Logistic: Newton-Raphson on the log-likelihood with ridge 1e-6 on
    /// the Hessian diagonal, at most 100 iterations, gradient tolerance
    /// 1e-8. When every label agrees, falls back to a constant model at
    /// the empirical rate. knn_frequency: neighbor fraction with C >= c0.
    static CensoringModel fit(const Matrix& x, std::span<const double> censoring, double c0,
                              Kind kind, double floor);

    /// A known trivial mechanism (weights identically 1/value).
    static CensoringModel constant_model(double value, double c0);

    /// Estimated P(C >= c0 | x), always within [floor, 1].
    double survival(std::span<const double> x) const;

    /// Inverse-probability weight 1 / survival(x).
    double weight(std::span<const double> x) const { return 1.0 / survival(x); }

    Kind kind() const { return kind_; }
    double c0() const { return c0_; }
    double floor() const { return floor_; }
    double constant_value() const { return constant_; }
    const std::vector<double>& beta() const { return beta_; }
    const Standardizer& stats() const { return stats_; }
    const KnnIndex& index() const { return index_; }
    const std::vector<double>& labels() const { return labels_; }
    std::size_t k() const { return k_; }

    static CensoringModel restore(Kind kind, double c0, double floor, double constant,
                                  std::vector<double> beta, Standardizer stats, KnnIndex index,
                                  std::vector<double> labels, std::size_t k);

private:
    Kind kind_ = Kind::constant;
    double c0_ = 0.0;
    double floor_ = 0.05;
    double constant_ = 1.0;
    std::vector<double> beta_; // logistic: [intercept, slopes...] on standardized scale
    Standardizer stats_;       // logistic standardization
    KnnIndex index_;           // knn_frequency
    std::vector<double> labels_;
    std::size_t k_ = 0;
};

/// Default truncation level for censoring estimates (eta/2 in the
/// truncated-estimator sense); bounds weights by 20.
inline constexpr double kDefaultCensoringFloor = 0.05;

} // namespace cfsurv

#endif
