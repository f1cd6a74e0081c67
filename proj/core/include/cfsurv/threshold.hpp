#ifndef CFSURV_THRESHOLD_HPP
#define CFSURV_THRESHOLD_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "cfsurv/conformal.hpp"
#include "cfsurv/dataset.hpp"

namespace cfsurv {

/// Candidate censoring thresholds, strictly increasing.
struct ThresholdGrid {
    std::vector<double> candidates;

    static ThresholdGrid explicit_grid(std::vector<double> values);

    /// Deciles 10%..90% of the censoring times on the given units,
    /// deduplicated. The default grid.
    static ThresholdGrid censoring_deciles(const Dataset& ds,
                                           std::span<const std::size_t> idx);
};

/// Threshold selection on the training fold only: a holdout subset of the
/// training indices is carved out, the conformal pipeline runs on the
/// remainder for every candidate, and the candidate maximizing the mean
/// holdout bound wins. Ties go to the smaller threshold (more calibration
/// data, tamer weights). Uninformative bounds count as zero. Candidates
/// whose sub-folds lose every unit to the selection are skipped; if all
/// are skipped, throws DegenerateError. Deterministic given the seed.
double select_c0_train(const Dataset& ds, std::span<const std::size_t> train_idx,
                       const ThresholdGrid& grid, const ConformalConfig& config,
                       double holdout_fraction, std::uint64_t seed);

/// Threshold selection on the calibration fold: for each candidate the
/// full pipeline is fit and the mean bound over every calibration
/// covariate is maximized. Approximate validity only; the training-fold
/// selector is the safe default.
double select_c0_calib(const Dataset& ds, const SplitIndices& split, const ThresholdGrid& grid,
                       const ConformalConfig& config);

/// Upper bound for the threshold when covariates are discrete: per level,
/// the largest c with empirical P(C >= c | level) >= 2*eta (the
/// ceil(2*eta*n_l)-th largest censoring time), minimized over levels.
/// Requires eta in (0, 0.5) and at least one observation per level.
double estimate_c_bar_discrete(std::span<const int> labels, std::span<const double> censoring,
                               double eta);

} // namespace cfsurv

#endif
