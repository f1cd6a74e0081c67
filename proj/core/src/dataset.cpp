#include "cfsurv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cfsurv/errors.hpp"
#include "cfsurv/rng.hpp"

namespace cfsurv {

Dataset::Dataset(std::vector<SurvivalRecord> records) : records_(std::move(records)) {
    if (records_.empty()) throw SchemaError("dataset: no records");
    dim_ = records_[0].x.size();
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        const std::string row = "row " + std::to_string(i + 1);
        if (r.x.size() != dim_) throw SchemaError("dataset: inconsistent covariate dimension at " + row);
        for (double v : r.x) {
            if (!std::isfinite(v)) throw SchemaError("dataset: non-finite covariate at " + row);
        }
        if (!std::isfinite(r.censoring) || r.censoring < 0.0)
            throw SchemaError("dataset: censoring time must be finite and nonnegative at " + row);
        if (!std::isfinite(r.observed) || r.observed < 0.0)
            throw SchemaError("dataset: observed time must be finite and nonnegative at " + row);
        if (r.observed > r.censoring)
            throw SchemaError("dataset: observed time exceeds censoring time at " + row);
        if (r.true_time) {
            if (!std::isfinite(*r.true_time) || *r.true_time < 0.0)
                throw SchemaError("dataset: true time must be finite and nonnegative at " + row);
            if (r.observed != std::min(*r.true_time, r.censoring))
                throw SchemaError("dataset: observed time is not min(true, censoring) at " + row);
        }
    }
}

Matrix Dataset::covariates(std::span<const std::size_t> idx) const {
    Matrix m(idx.size(), dim_);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto& x = records_[idx[i]].x;
        std::copy(x.begin(), x.end(), m.data.begin() + static_cast<std::ptrdiff_t>(i * dim_));
    }
    return m;
}

std::vector<double> Dataset::censoring_times(std::span<const std::size_t> idx) const {
    std::vector<double> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = records_[idx[i]].censoring;
    return out;
}

std::vector<double> Dataset::observed_times(std::span<const std::size_t> idx) const {
    std::vector<double> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = records_[idx[i]].observed;
    return out;
}

std::vector<std::size_t> Dataset::all_indices() const {
    std::vector<std::size_t> idx(records_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
}

SplitIndices split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    const std::size_t n = ds.size();
    if (n < 4) throw DegenerateError("split: need at least 4 records");
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw DegenerateError("split: train fraction must lie in (0, 1)");
    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(n)));
    if (n_train == 0 || n_train == n)
        throw DegenerateError("split: fraction yields an empty fold");

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(Rng::derive(seed, 0));
    for (std::size_t i = n; i-- > 1;) {
        const auto j = static_cast<std::size_t>(rng.next_below(i + 1));
        std::swap(perm[i], perm[j]);
    }

    SplitIndices out;
    out.seed = seed;
    out.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.calib.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    return out;
}

Subpopulation select_subpopulation(const Dataset& ds,
                                   std::span<const std::size_t> idx,
                                   double c0) {
    if (!(c0 >= 0.0)) throw DegenerateError("select_subpopulation: c0 must be nonnegative");
    Subpopulation out;
    for (std::size_t i : idx) {
        const auto& r = ds[i];
        if (r.censoring >= c0) {
            out.indices.push_back(i);
            out.capped.push_back(std::min(r.observed, c0));
        }
    }
    if (out.indices.empty())
        throw DegenerateError("no calibration units with C >= c0");
    return out;
}

} // namespace cfsurv
