#include "cfsurv/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cfsurv/errors.hpp"

namespace cfsurv {

Standardizer Standardizer::fit(const Matrix& x) {
    Standardizer s;
    s.mean.assign(x.cols, 0.0);
    s.scale.assign(x.cols, 1.0);
    if (x.rows == 0) return s;
    for (std::size_t j = 0; j < x.cols; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) m += x(i, j);
        m /= static_cast<double>(x.rows);
        double v = 0.0;
        for (std::size_t i = 0; i < x.rows; ++i) {
            const double d = x(i, j) - m;
            v += d * d;
        }
        v /= static_cast<double>(x.rows);
        s.mean[j] = m;
        s.scale[j] = v > 0.0 ? std::sqrt(v) : 1.0;
    }
    return s;
}

std::vector<double> Standardizer::apply(std::span<const double> x) const {
    if (x.size() != mean.size()) throw std::invalid_argument("standardizer: dimension mismatch");
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = (x[j] - mean[j]) / scale[j];
    return out;
}

Matrix Standardizer::apply_all(const Matrix& x) const {
    Matrix out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) out(i, j) = (x(i, j) - mean[j]) / scale[j];
    }
    return out;
}

std::size_t default_knn_k(std::size_t n) {
    const auto k = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(n), 0.7)));
    return std::min(std::max<std::size_t>(k, 1), n);
}

KnnIndex::KnnIndex(Matrix x, Standardizer stats) : points_(std::move(x)), stats_(std::move(stats)) {}

std::vector<std::size_t> KnnIndex::query(std::span<const double> x, std::size_t k) const {
    const std::size_t n = points_.rows;
    if (k < 1 || k > n) throw DegenerateError("knn: k out of range");
    const std::vector<double> q = stats_.apply(x);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        double d = 0.0;
        const auto row = points_.row(i);
        for (std::size_t j = 0; j < q.size(); ++j) {
            const double diff = row[j] - q[j];
            d += diff * diff;
        }
        dist[i] = {d, i};
    }
    // (distance, index) ordering makes ties land on the smaller index.
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = dist[i].second;
    return out;
}

CdfModel CdfModel::fit_knn(const Matrix& x, std::vector<double> y, std::size_t k) {
    if (x.rows != y.size()) throw std::invalid_argument("cdf fit: design/response size mismatch");
    if (k < 1 || k > x.rows) throw DegenerateError("cdf fit: k out of range");
    CdfModel m;
    const Standardizer s = Standardizer::fit(x);
    m.index_ = KnnIndex(s.apply_all(x), s);
    m.responses_ = std::move(y);
    m.k_ = k;
    return m;
}

std::vector<double> CdfModel::neighbor_responses(std::span<const double> x) const {
    const auto nb = index_.query(x, k_);
    std::vector<double> ys(nb.size());
    for (std::size_t i = 0; i < nb.size(); ++i) ys[i] = responses_[nb[i]];
    return ys;
}

double CdfModel::cdf(std::span<const double> x, double y) const {
    const auto ys = neighbor_responses(x);
    std::size_t count = 0;
    for (double v : ys) {
        if (v <= y) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(k_);
}

CdfModel CdfModel::restore(KnnIndex index, std::vector<double> responses, std::size_t k) {
    if (k < 1 || k > index.size() || responses.size() != index.size())
        throw std::invalid_argument("cdf restore: inconsistent state");
    CdfModel m;
    m.index_ = std::move(index);
    m.responses_ = std::move(responses);
    m.k_ = k;
    return m;
}

double CdfModel::quantile(std::span<const double> x, double a) const {
    if (a <= 0.0) return -std::numeric_limits<double>::infinity();
    if (a > 1.0) return std::numeric_limits<double>::infinity();
    auto ys = neighbor_responses(x);
    const auto rank = static_cast<std::size_t>(
        std::ceil(a * static_cast<double>(k_)));
    const std::size_t idx = std::min(std::max<std::size_t>(rank, 1), k_) - 1;
    std::nth_element(ys.begin(), ys.begin() + static_cast<std::ptrdiff_t>(idx), ys.end());
    return ys[idx];
}

double pinball_objective(const Matrix& x, std::span<const double> y, double alpha,
                         std::span<const double> beta) {
    double obj = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        double pred = beta[0];
        const auto row = x.row(i);
        for (std::size_t j = 0; j < x.cols; ++j) pred += beta[j + 1] * row[j];
        const double u = y[i] - pred;
        obj += u * (alpha - (u < 0.0 ? 1.0 : 0.0));
    }
    return obj;
}

PinballFit fit_linear_pinball(const Matrix& x, std::span<const double> y, double alpha,
                              const PinballOptions& opts) {
    const std::size_t n = x.rows;
    const std::size_t p = x.cols;
    if (y.size() != n) throw std::invalid_argument("pinball fit: design/response size mismatch");
    if (n <= p + 1) throw DegenerateError("pinball fit: need n > p + 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("pinball fit: alpha in (0,1)");

    const Standardizer xs = Standardizer::fit(x);
    const Matrix xz = xs.apply_all(x);
    double ym = 0.0;
    for (double v : y) ym += v;
    ym /= static_cast<double>(n);
    double yv = 0.0;
    for (double v : y) yv += (v - ym) * (v - ym);
    const double ysd = yv > 0.0 ? std::sqrt(yv / static_cast<double>(n)) : 1.0;
    std::vector<double> yz(n);
    for (std::size_t i = 0; i < n; ++i) yz[i] = (y[i] - ym) / ysd;

    std::vector<double> beta(p + 1, 0.0); // standardized scale, intercept first
    std::vector<double> best = beta;
    std::vector<double> resid(n);

    auto objective = [&](const std::vector<double>& b) {
        double obj = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double pred = b[0];
            for (std::size_t j = 0; j < p; ++j) pred += b[j + 1] * xz(i, j);
            const double u = yz[i] - pred;
            resid[i] = u;
            obj += u * (alpha - (u < 0.0 ? 1.0 : 0.0));
        }
        return obj;
    };

    double best_obj = objective(beta);
    double checkpoint_obj = best_obj;
    const int checkpoint = std::max(1, (3 * opts.steps) / 4);
    std::vector<double> grad(p + 1);
    int t = 0;
    for (t = 1; t <= opts.steps; ++t) {
        objective(beta); // refresh residuals at the current iterate
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double g = alpha - (resid[i] < 0.0 ? 1.0 : 0.0);
            grad[0] -= g;
            for (std::size_t j = 0; j < p; ++j) grad[j + 1] -= g * xz(i, j);
        }
        const double step = opts.step0 / std::sqrt(static_cast<double>(t));
        for (std::size_t j = 0; j <= p; ++j) {
            beta[j] -= step * grad[j] / static_cast<double>(n);
        }
        const double obj = objective(beta);
        if (obj < best_obj) {
            best_obj = obj;
            best = beta;
        }
        if (t == checkpoint) checkpoint_obj = best_obj;
    }

    PinballFit fit;
    fit.iterations = opts.steps;
    fit.converged = (checkpoint_obj - best_obj) <= opts.tol * (1.0 + std::abs(best_obj));
    fit.beta.assign(p + 1, 0.0);
    // Map standardized coefficients back to the original scale.
    fit.beta[0] = ym + ysd * best[0];
    for (std::size_t j = 0; j < p; ++j) {
        fit.beta[j + 1] = ysd * best[j + 1] / xs.scale[j];
        fit.beta[0] -= fit.beta[j + 1] * xs.mean[j];
    }
    fit.objective = pinball_objective(x, y, alpha, fit.beta);
    return fit;
}

QuantileModel QuantileModel::fit_knn(const Matrix& x, std::vector<double> y, std::size_t k) {
    QuantileModel m;
    m.kind_ = Kind::knn_cdf;
    m.cdf_ = CdfModel::fit_knn(x, std::move(y), k);
    return m;
}

QuantileModel QuantileModel::fit_linear(const Matrix& x, std::span<const double> y, double alpha,
                                        const PinballOptions& opts) {
    QuantileModel m;
    m.kind_ = Kind::linear_pinball;
    m.fit_ = fit_linear_pinball(x, y, alpha, opts);
    m.alpha_ = alpha;
    return m;
}

QuantileModel QuantileModel::restore_knn(CdfModel cdf) {
    QuantileModel m;
    m.kind_ = Kind::knn_cdf;
    m.cdf_ = std::move(cdf);
    return m;
}

QuantileModel QuantileModel::restore_linear(PinballFit fit, double alpha) {
    QuantileModel m;
    m.kind_ = Kind::linear_pinball;
    m.fit_ = std::move(fit);
    m.alpha_ = alpha;
    return m;
}

double QuantileModel::quantile(std::span<const double> x, double a) const {
    if (kind_ == Kind::knn_cdf) return cdf_.quantile(x, a);
    if (x.size() + 1 != fit_.beta.size())
        throw std::invalid_argument("quantile model: covariate dimension mismatch");
    double pred = fit_.beta[0];
    for (std::size_t j = 0; j < x.size(); ++j) pred += fit_.beta[j + 1] * x[j];
    return pred;
}

MeanModel MeanModel::fit_knn(const Matrix& x, std::vector<double> y, std::size_t k) {
    if (x.rows != y.size()) throw std::invalid_argument("mean fit: design/response size mismatch");
    if (k < 1 || k > x.rows) throw DegenerateError("mean fit: k out of range");
    MeanModel m;
    m.kind_ = Kind::knn_mean;
    const Standardizer s = Standardizer::fit(x);
    m.index_ = KnnIndex(s.apply_all(x), s);
    m.responses_ = std::move(y);
    m.k_ = k;
    return m;
}

MeanModel MeanModel::fit_linear(const Matrix& x, std::span<const double> y) {
    const std::size_t n = x.rows;
    const std::size_t p = x.cols;
    if (y.size() != n) throw std::invalid_argument("mean fit: design/response size mismatch");
    if (n < p + 1) throw DegenerateError("mean fit: need n >= p + 1");
    // Normal equations on the intercept-augmented design, tiny ridge for
    // rank-deficient designs.
    Matrix a(p + 1, p + 1);
    std::vector<double> b(p + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = x.row(i);
        std::vector<double> z(p + 1);
        z[0] = 1.0;
        for (std::size_t j = 0; j < p; ++j) z[j + 1] = row[j];
        for (std::size_t r = 0; r <= p; ++r) {
            b[r] += z[r] * y[i];
            for (std::size_t c = 0; c <= p; ++c) a(r, c) += z[r] * z[c];
        }
    }
    for (std::size_t r = 0; r <= p; ++r) a(r, r) += 1e-8;
    MeanModel m;
    m.kind_ = Kind::linear_least_squares;
    m.beta_ = cholesky_solve(std::move(a), std::move(b));
    return m;
}

MeanModel MeanModel::restore_knn(KnnIndex index, std::vector<double> responses, std::size_t k) {
    if (k < 1 || k > index.size() || responses.size() != index.size())
        throw std::invalid_argument("mean restore: inconsistent state");
    MeanModel m;
    m.kind_ = Kind::knn_mean;
    m.index_ = std::move(index);
    m.responses_ = std::move(responses);
    m.k_ = k;
    return m;
}

MeanModel MeanModel::restore_linear(std::vector<double> beta) {
    MeanModel m;
    m.kind_ = Kind::linear_least_squares;
    m.beta_ = std::move(beta);
    return m;
}

double MeanModel::predict(std::span<const double> x) const {
    if (kind_ == Kind::knn_mean) {
        const auto nb = index_.query(x, k_);
        double s = 0.0;
        for (std::size_t i : nb) s += responses_[i];
        return s / static_cast<double>(nb.size());
    }
    if (x.size() + 1 != beta_.size())
        throw std::invalid_argument("mean model: covariate dimension mismatch");
    double pred = beta_[0];
    for (std::size_t j = 0; j < x.size(); ++j) pred += beta_[j + 1] * x[j];
    return pred;
}

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

} // namespace

CensoringModel CensoringModel::fit(const Matrix& x, std::span<const double> censoring, double c0,
                                   Kind kind, double floor) {
    if (x.rows != censoring.size())
        throw std::invalid_argument("censoring fit: design/censoring size mismatch");
    if (!(floor > 0.0 && floor <= 1.0))
        throw std::invalid_argument("censoring fit: floor must lie in (0, 1]");
    const std::size_t n = x.rows;
    std::vector<double> z(n);
    std::size_t positives = 0;
    for (std::size_t i = 0; i < n; ++i) {
        z[i] = censoring[i] >= c0 ? 1.0 : 0.0;
        positives += z[i] > 0.5 ? 1 : 0;
    }

    CensoringModel m;
    m.c0_ = c0;
    m.floor_ = floor;

    if (kind == Kind::constant || positives == 0 || positives == n) {
        m.kind_ = Kind::constant;
        const double rate = static_cast<double>(positives) / static_cast<double>(n);
        m.constant_ = std::min(std::max(rate, floor), 1.0);
        return m;
    }

    if (kind == Kind::knn_frequency) {
        m.kind_ = Kind::knn_frequency;
        const Standardizer s = Standardizer::fit(x);
        m.index_ = KnnIndex(s.apply_all(x), s);
        m.labels_ = std::move(z);
        m.k_ = default_knn_k(n);
        return m;
    }

    // Logistic regression by Newton-Raphson.
    m.kind_ = Kind::logistic;
    m.stats_ = Standardizer::fit(x);
    const Matrix xz = m.stats_.apply_all(x);
    const std::size_t d = x.cols + 1;
    std::vector<double> beta(d, 0.0);
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<double> grad(d, 0.0);
        Matrix hess(d, d);
        for (std::size_t i = 0; i < n; ++i) {
            double t = beta[0];
            for (std::size_t j = 0; j < x.cols; ++j) t += beta[j + 1] * xz(i, j);
            const double p = sigmoid(t);
            const double r = z[i] - p;
            const double w = p * (1.0 - p);
            grad[0] += r;
            hess(0, 0) += w;
            for (std::size_t j = 0; j < x.cols; ++j) {
                grad[j + 1] += r * xz(i, j);
                hess(0, j + 1) += w * xz(i, j);
                hess(j + 1, 0) += w * xz(i, j);
                for (std::size_t l = 0; l <= j; ++l) {
                    hess(j + 1, l + 1) += w * xz(i, j) * xz(i, l);
                }
            }
        }
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = r + 1; c < d; ++c) hess(r, c) = hess(c, r);
            hess(r, r) += 1e-6;
        }
        double gnorm = 0.0;
        for (double g : grad) gnorm += g * g;
        if (std::sqrt(gnorm) < 1e-8) break;
        const auto step = cholesky_solve(std::move(hess), grad);
        for (std::size_t j = 0; j < d; ++j) beta[j] += step[j];
    }
    m.beta_ = std::move(beta);
    return m;
}

CensoringModel CensoringModel::restore(Kind kind, double c0, double floor, double constant,
                                       std::vector<double> beta, Standardizer stats,
                                       KnnIndex index, std::vector<double> labels,
                                       std::size_t k) {
    CensoringModel m;
    m.kind_ = kind;
    m.c0_ = c0;
    m.floor_ = floor;
    m.constant_ = constant;
    m.beta_ = std::move(beta);
    m.stats_ = std::move(stats);
    m.index_ = std::move(index);
    m.labels_ = std::move(labels);
    m.k_ = k;
    return m;
}

CensoringModel CensoringModel::constant_model(double value, double c0) {
    CensoringModel m;
    m.kind_ = Kind::constant;
    m.c0_ = c0;
    m.floor_ = std::min(value, 1.0);
    m.constant_ = value;
    return m;
}

double CensoringModel::survival(std::span<const double> x) const {
    double p = constant_;
    switch (kind_) {
        case Kind::constant:
            break;
        case Kind::logistic: {
            const auto xz = stats_.apply(x);
            double t = beta_[0];
            for (std::size_t j = 0; j < xz.size(); ++j) t += beta_[j + 1] * xz[j];
            p = sigmoid(t);
            break;
        }
        case Kind::knn_frequency: {
            const auto nb = index_.query(x, k_);
            double s = 0.0;
            for (std::size_t i : nb) s += labels_[i];
            p = s / static_cast<double>(nb.size());
            break;
        }
    }
    return std::min(std::max(p, floor_), 1.0);
}

} // namespace cfsurv
