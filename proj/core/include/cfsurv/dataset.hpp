#ifndef CFSURV_DATASET_HPP
#define CFSURV_DATASET_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cfsurv/linalg.hpp"

namespace cfsurv {

/// One unit under Type-I right censoring: the censoring time is always
/// observed, the survival time only when it precedes censoring.
struct SurvivalRecord {
    std::vector<double> x;      ///< covariates, length p
    double censoring = 0.0;     ///< censoring time c
    double observed = 0.0;      ///< observed time min(t, c)
    std::optional<double> true_time; ///< uncensored survival time (simulation only)
    bool event = false;         ///< observed time came from the survival time
};

/// Immutable collection of records sharing one covariate dimension.
/// Construction validates: nonempty, consistent dimension, nonnegative
/// finite times, observed <= censoring, and observed == min(true, c)
/// whenever the true time is present. Safe to share read-only.
class Dataset {
public:
    explicit Dataset(std::vector<SurvivalRecord> records);

    std::size_t size() const { return records_.size(); }
    std::size_t dim() const { return dim_; }
    const SurvivalRecord& operator[](std::size_t i) const { return records_[i]; }
    const std::vector<SurvivalRecord>& records() const { return records_; }

    Matrix covariates(std::span<const std::size_t> idx) const;
    std::vector<double> censoring_times(std::span<const std::size_t> idx) const;
    std::vector<double> observed_times(std::span<const std::size_t> idx) const;

    /// Indices 0..n-1 in order.
    std::vector<std::size_t> all_indices() const;

private:
    std::vector<SurvivalRecord> records_;
    std::size_t dim_ = 0;
};

/// Deterministic train/calibration partition of a dataset's indices.
struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> calib;
    std::uint64_t seed = 0;
};

/// Random split by a uniform permutation; |train| = round(fraction * n).
/// Same (seed, n, fraction) gives the same split on every platform.
/// Requires n >= 4 and both folds nonempty.
SplitIndices split(const Dataset& ds, double train_fraction, std::uint64_t seed);

/// Calibration subpopulation for a censoring threshold: the units whose
/// censoring time reaches c0, paired with outcomes capped at c0. On that
/// subpopulation min(observed, c0) equals min(t, c0).
struct Subpopulation {
    std::vector<std::size_t> indices;
    std::vector<double> capped; ///< min(observed_i, c0) per selected unit
};

/// Throws DegenerateError when no unit has censoring >= c0.
Subpopulation select_subpopulation(const Dataset& ds,
                                   std::span<const std::size_t> idx,
                                   double c0);

} // namespace cfsurv

#endif
