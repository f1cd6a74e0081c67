#include "cfsurv/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "cfsurv/errors.hpp"
#include "cfsurv/normal.hpp"
#include "cfsurv/rng.hpp"
#include "cfsurv/threshold.hpp"

namespace cfsurv {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void benchmark_mu_sigma(GeneratorKind kind, std::span<const double> x, double& mu, double& sigma) {
    switch (kind) {
        case GeneratorKind::uvt_homo:
            mu = 2.0 + 0.37 * std::sqrt(x[0]);
            sigma = 1.5;
            break;
        case GeneratorKind::uvt_hetero:
            mu = 2.0 + 0.37 * std::sqrt(x[0]);
            sigma = 1.0 + x[0] / 5.0;
            break;
        case GeneratorKind::mvt_homo:
            mu = std::log(2.0) + 1.0 + 0.55 * (x[0] * x[0] - x[2] * x[4]);
            sigma = 1.0;
            break;
        case GeneratorKind::mvt_hetero:
            mu = std::log(2.0) + 1.0 + 0.55 * (x[0] * x[0] - x[2] * x[4]);
            sigma = std::abs(x[9]) + 1.0;
            break;
        default:
            throw std::logic_error("benchmark_mu_sigma: wrong kind");
    }
}

void demographic_mu_sigma(std::span<const double> x, double& mu, double& sigma) {
    // x = (age, gender)
    mu = 2.0 + 0.05 * x[0] + 0.1 * x[1];
    sigma = 1.0;
}

double custom_mu(const CustomAftParams& p, std::span<const double> x) {
    double mu = p.mu_intercept;
    for (std::size_t j = 0; j < p.mu_slope.size() && j < x.size(); ++j) mu += p.mu_slope[j] * x[j];
    return mu;
}

double custom_sigma(const CustomAftParams& p, std::span<const double> x) {
    return p.sigma_intercept + p.sigma_slope_abs * std::abs(x[0]);
}

} // namespace

GeneratorKind generator_kind_from_name(const std::string& name) {
    if (name == "uvt-homo") return GeneratorKind::uvt_homo;
    if (name == "uvt-hetero") return GeneratorKind::uvt_hetero;
    if (name == "mvt-homo") return GeneratorKind::mvt_homo;
    if (name == "mvt-hetero") return GeneratorKind::mvt_hetero;
    if (name == "synthetic-c") return GeneratorKind::synthetic_c;
    if (name == "synthetic-t") return GeneratorKind::synthetic_t;
    if (name == "two-censoring") return GeneratorKind::two_censoring;
    if (name == "custom-aft") return GeneratorKind::custom_aft;
    throw SchemaError("unknown generator '" + name + "'");
}

std::string generator_kind_name(GeneratorKind kind) {
    switch (kind) {
        case GeneratorKind::uvt_homo: return "uvt-homo";
        case GeneratorKind::uvt_hetero: return "uvt-hetero";
        case GeneratorKind::mvt_homo: return "mvt-homo";
        case GeneratorKind::mvt_hetero: return "mvt-hetero";
        case GeneratorKind::synthetic_c: return "synthetic-c";
        case GeneratorKind::synthetic_t: return "synthetic-t";
        case GeneratorKind::two_censoring: return "two-censoring";
        case GeneratorKind::custom_aft: return "custom-aft";
    }
    throw std::logic_error("generator_kind_name: unknown kind");
}

GeneratedData generate_full(const GeneratorSpec& spec) {
    if (spec.n == 0) throw std::invalid_argument("generate: n must be positive");
    Rng rng(Rng::derive(spec.seed, 7));
    std::vector<SurvivalRecord> records(spec.n);
    std::vector<double> t_raw;

    for (std::size_t i = 0; i < spec.n; ++i) {
        SurvivalRecord r;
        double mu = 0.0;
        double sigma = 1.0;
        double c = 0.0;
        switch (spec.kind) {
            case GeneratorKind::uvt_homo:
            case GeneratorKind::uvt_hetero: {
                r.x = {4.0 * rng.next_uniform()};
                c = rng.next_exponential(0.4);
                benchmark_mu_sigma(spec.kind, r.x, mu, sigma);
                break;
            }
            case GeneratorKind::mvt_homo:
            case GeneratorKind::mvt_hetero: {
                r.x.resize(100);
                for (auto& v : r.x) v = 2.0 * rng.next_uniform() - 1.0;
                c = rng.next_exponential(0.4);
                benchmark_mu_sigma(spec.kind, r.x, mu, sigma);
                break;
            }
            case GeneratorKind::synthetic_c:
            case GeneratorKind::synthetic_t: {
                const double age = 40.0 + 40.0 * rng.next_uniform();
                const double gender = rng.next_uniform() < 0.5 ? 0.0 : 1.0;
                r.x = {age, gender};
                demographic_mu_sigma(r.x, mu, sigma);
                if (spec.kind == GeneratorKind::synthetic_c) {
                    // covariate-dependent censoring, floored rate
                    c = rng.next_exponential(std::max(0.001 * age + 0.01 * gender, 1e-6));
                } else {
                    // exogenous stand-in for an end-of-study censor
                    c = rng.next_exponential(0.05);
                }
                break;
            }
            case GeneratorKind::two_censoring: {
                r.x = {4.0 * rng.next_uniform()};
                c = rng.next_exponential(0.4); // end-of-study censor
                mu = 2.0 + 0.37 * std::sqrt(r.x[0]);
                sigma = 1.0 + r.x[0] / 5.0;
                break;
            }
            case GeneratorKind::custom_aft: {
                const auto& p = spec.custom;
                if (p.dim == 0) throw std::invalid_argument("generate: custom dim must be positive");
                r.x.resize(p.dim);
                for (auto& v : r.x) v = p.cov_lo + (p.cov_hi - p.cov_lo) * rng.next_uniform();
                c = rng.next_exponential(p.cens_rate);
                mu = custom_mu(p, r.x);
                sigma = custom_sigma(p, r.x);
                break;
            }
        }
        const double t = std::exp(mu + sigma * rng.next_normal());
        if (spec.kind == GeneratorKind::two_censoring) {
            const double x0 = r.x[0];
            const double loss_mu =
                2.0 + 0.05 * std::log(t) + 0.09 * (x0 - 2.0) * (x0 - 3.0) * (x0 - 4.0);
            const double c_loss = std::exp(loss_mu + rng.next_normal());
            const double t_prime = std::min(t, c_loss);
            r.censoring = c;
            r.observed = std::min(t_prime, c);
            r.true_time = t_prime;
            r.event = t_prime <= c;
            t_raw.push_back(t);
        } else {
            r.censoring = c;
            r.observed = std::min(t, c);
            r.true_time = t;
            r.event = t <= c;
        }
        records[i] = std::move(r);
    }
    return {Dataset(std::move(records)), std::move(t_raw)};
}

Dataset generate(const GeneratorSpec& spec) { return generate_full(spec).ds; }

double oracle_quantile_aft(double mu, double sigma, double a) {
    if (!(sigma > 0.0)) throw std::invalid_argument("oracle_quantile_aft: sigma must be positive");
    return std::exp(mu + sigma * normal_quantile(a));
}

double AftOracle::quantile(std::span<const double> x, double a) const {
    double mu = 0.0;
    double sigma = 1.0;
    mu_sigma_(x, mu, sigma);
    return oracle_quantile_aft(mu, sigma, a);
}

double AftOracle::variance(std::span<const double> x) const {
    double mu = 0.0;
    double sigma = 1.0;
    mu_sigma_(x, mu, sigma);
    const double s2 = sigma * sigma;
    return (std::exp(s2) - 1.0) * std::exp(2.0 * mu + s2);
}

AftOracle oracle_for(const GeneratorSpec& spec) {
    switch (spec.kind) {
        case GeneratorKind::uvt_homo:
        case GeneratorKind::uvt_hetero:
        case GeneratorKind::mvt_homo:
        case GeneratorKind::mvt_hetero: {
            const GeneratorKind kind = spec.kind;
            return AftOracle([kind](std::span<const double> x, double& mu, double& sigma) {
                benchmark_mu_sigma(kind, x, mu, sigma);
            });
        }
        case GeneratorKind::synthetic_c:
        case GeneratorKind::synthetic_t:
            return AftOracle([](std::span<const double> x, double& mu, double& sigma) {
                demographic_mu_sigma(x, mu, sigma);
            });
        case GeneratorKind::two_censoring:
            return AftOracle([](std::span<const double> x, double& mu, double& sigma) {
                mu = 2.0 + 0.37 * std::sqrt(x[0]);
                sigma = 1.0 + x[0] / 5.0;
            });
        case GeneratorKind::custom_aft: {
            const CustomAftParams p = spec.custom;
            return AftOracle([p](std::span<const double> x, double& mu, double& sigma) {
                mu = custom_mu(p, x);
                sigma = custom_sigma(p, x);
            });
        }
    }
    throw std::logic_error("oracle_for: unknown kind");
}

EvaluationReport evaluate_lpbs(std::span<const LpbOutput> lpbs, const Dataset& test, double c0,
                               double alpha, const AftOracle* oracle) {
    if (test.size() == 0) throw DegenerateError("evaluate: empty test set");
    if (lpbs.size() != test.size()) throw std::invalid_argument("evaluate: bound/test size mismatch");

    EvaluationReport rep;
    rep.n_test = test.size();
    const std::size_t n = test.size();

    bool has_true = true;
    for (const auto& r : test.records()) {
        if (!r.true_time) {
            has_true = false;
            break;
        }
    }

    double mean_lpb = 0.0;
    double cov = 0.0;
    double cov_cap = 0.0;
    double beta_lo = 0.0;
    double beta_hi_miss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = test[i];
        const double lpb = lpbs[i].lpb;
        mean_lpb += lpb;
        if (r.observed >= lpb) beta_lo += 1.0;
        if (r.observed < lpb && r.event) beta_hi_miss += 1.0;
        if (has_true) {
            if (*r.true_time >= lpb) cov += 1.0;
            if (std::min(*r.true_time, c0) >= lpb) cov_cap += 1.0;
        }
    }
    rep.mean_lpb = mean_lpb / static_cast<double>(n);
    rep.beta_lo = beta_lo / static_cast<double>(n);
    rep.beta_hi = 1.0 - beta_hi_miss / static_cast<double>(n);
    rep.coverage = has_true ? cov / static_cast<double>(n) : kNan;
    rep.coverage_capped = has_true ? cov_cap / static_cast<double>(n) : kNan;
    if (has_true) {
        if (rep.beta_lo > rep.coverage + 1e-12 || rep.coverage > rep.beta_hi + 1e-12) {
            throw std::logic_error("evaluate: coverage bounds failed to sandwich the coverage");
        }
    }

    if (oracle != nullptr && oracle->valid()) {
        std::vector<double> ratio(n);
        std::vector<std::pair<double, std::size_t>> var(n);
        double mean_ratio = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& r = test[i];
            ratio[i] = lpbs[i].lpb / oracle->quantile(r.x, alpha);
            mean_ratio += ratio[i];
            var[i] = {oracle->variance(r.x), i};
        }
        rep.mean_ratio = mean_ratio / static_cast<double>(n);
        std::sort(var.begin(), var.end());

        constexpr std::size_t kStrata = 10;
        rep.strata.resize(std::min<std::size_t>(kStrata, n));
        const std::size_t groups = rep.strata.size();
        std::size_t start = 0;
        for (std::size_t s = 0; s < groups; ++s) {
            const std::size_t count = n / groups + (s < n % groups ? 1 : 0);
            StratumRow& row = rep.strata[s];
            row.count = count;
            row.var_lo = var[start].first;
            row.var_hi = var[start + count - 1].first;
            double scov = 0.0;
            double srat = 0.0;
            for (std::size_t j = start; j < start + count; ++j) {
                const std::size_t i = var[j].second;
                srat += ratio[i];
                if (has_true && *test[i].true_time >= lpbs[i].lpb) scov += 1.0;
            }
            row.mean_ratio = srat / static_cast<double>(count);
            row.coverage = has_true ? scov / static_cast<double>(count) : kNan;
            start += count;
        }
    } else {
        rep.mean_ratio = kNan;
    }
    return rep;
}

EvaluationReport evaluate(const ConformalModel& model, const Dataset& test,
                          const AftOracle* oracle) {
    std::vector<LpbOutput> lpbs(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) lpbs[i] = model.predict(test[i].x);
    return evaluate_lpbs(lpbs, test, model.c0(), model.alpha(), oracle);
}

namespace {

ReplicationResult run_one(const ExperimentConfig& cfg, std::size_t rep) {
    GeneratorSpec gspec = cfg.generator;
    gspec.n = cfg.n_train + cfg.n_test;
    gspec.seed = Rng::derive(cfg.generator.seed, 2 * rep);
    const std::uint64_t split_seed = Rng::derive(cfg.generator.seed, 2 * rep + 1);

    const GeneratedData data = generate_full(gspec);
    std::vector<SurvivalRecord> train_rec(data.ds.records().begin(),
                                          data.ds.records().begin() + static_cast<std::ptrdiff_t>(cfg.n_train));
    std::vector<SurvivalRecord> test_rec(data.ds.records().begin() + static_cast<std::ptrdiff_t>(cfg.n_train),
                                         data.ds.records().end());
    const Dataset train(std::move(train_rec));
    const Dataset test(std::move(test_rec));

    const SplitIndices sp = split(train, cfg.train_fraction, split_seed);

    ReplicationResult res;
    ConformalModel model;
    if (cfg.method == Method::naive) {
        model = naive_lpb(train, sp, cfg.conformal.alpha, cfg.conformal);
        res.c0 = std::numeric_limits<double>::infinity();
    } else {
        double c0 = cfg.c0_fixed;
        if (cfg.c0_policy == C0Policy::auto_train) {
            const auto grid = ThresholdGrid::censoring_deciles(train, sp.train);
            c0 = select_c0_train(train, sp.train, grid, cfg.conformal, cfg.holdout_fraction,
                                 split_seed);
        } else if (cfg.c0_policy == C0Policy::auto_calib) {
            const auto grid = ThresholdGrid::censoring_deciles(train, sp.train);
            c0 = select_c0_calib(train, sp, grid, cfg.conformal);
        }
        model = conformalize(train, sp, c0, cfg.conformal);
        res.c0 = c0;
    }

    const AftOracle oracle = oracle_for(cfg.generator);
    std::vector<LpbOutput> lpbs(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) lpbs[i] = model.predict(test[i].x);
    res.report = evaluate_lpbs(lpbs, test, model.c0(), model.alpha(), &oracle);

    res.coverage_t_raw = kNan;
    if (!data.t_raw.empty()) {
        double cov = 0.0;
        for (std::size_t i = 0; i < test.size(); ++i) {
            if (data.t_raw[cfg.n_train + i] >= lpbs[i].lpb) cov += 1.0;
        }
        res.coverage_t_raw = cov / static_cast<double>(test.size());
    }
    return res;
}

} // namespace

namespace {

ReplicationResult run_one_checked(const ExperimentConfig& cfg, std::size_t rep) {
    try {
        return run_one(cfg, rep);
    } catch (const std::exception& e) {
        throw std::runtime_error("replication " + std::to_string(rep) + " (seed " +
                                 std::to_string(Rng::derive(cfg.generator.seed, 2 * rep)) +
                                 ") failed: " + e.what());
    }
}

} // namespace

std::vector<ReplicationResult> run_experiment(const ExperimentConfig& cfg) {
    if (cfg.replications == 0) throw std::invalid_argument("experiment: replications must be >= 1");
    std::vector<ReplicationResult> results(cfg.replications);
    const unsigned jobs = std::max(1u, cfg.jobs);
    if (jobs == 1) {
        for (std::size_t r = 0; r < cfg.replications; ++r) results[r] = run_one_checked(cfg, r);
        return results;
    }
    std::vector<std::thread> workers;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (unsigned w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w]() {
            for (std::size_t r = w; r < cfg.replications; r += jobs) {
                try {
                    results[r] = run_one_checked(cfg, r);
                } catch (...) {
                    const std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

} // namespace cfsurv
