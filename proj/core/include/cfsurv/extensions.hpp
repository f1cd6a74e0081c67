#ifndef CFSURV_EXTENSIONS_HPP
#define CFSURV_EXTENSIONS_HPP

#include <functional>
#include <map>
#include <span>
#include <vector>

#include "cfsurv/conformal.hpp"
#include "cfsurv/dataset.hpp"

namespace cfsurv {

/// Total assignment of covariate vectors to groups 1..K (covariate-only;
/// outcome-dependent taxonomies are out of scope here).
struct GroupPartition {
    std::function<int(std::span<const double>)> assign;
    int num_groups = 1;
};

/// Group-conditional calibration cutoff: the weighted quantile restricted
/// to calibration units in the test point's group, with the masses
/// renormalized within the group. An empty group yields +infinity.
/// With a single group this is exactly weighted_quantile.
double mondrian_eta(const CalibrationSet& cal, std::span<const int> groups, int group_of_x,
                    double w_test, double level);

/// Composite covariate-shift weight for counterfactual bounds on treated
/// outcomes: 1 / (c_hat(x) * e_hat(x)), censoring mechanism times
/// propensity. Both models are floored, so the weight is finite.
double counterfactual_weight(const CensoringModel& censoring, const CensoringModel& propensity,
                             std::span<const double> x);

/// Relabels a two-censoring problem (end-of-study plus loss-to-follow-up)
/// into the standard form: the conditioning censor becomes c_end and the
/// observed outcome stays min(t, c_end, c_loss). When the partially
/// censored time min(t, c_loss) is known (simulation), pass it as t_prime
/// so it becomes the oracle outcome of the adapted records. Rows with
/// observed > c_end are rejected with their row number.
Dataset two_censoring_adapt(const Dataset& ds, std::span<const double> c_end,
                            std::span<const double> t_prime = {});

/// Split-conformal model with Mondrian (group-conditional) calibration.
class MondrianModel {
public:
    /// Prediction with an explicit group label for the test point. A
    /// group with no calibration mass yields the uninformative bound.
    LpbOutput predict(std::span<const double> x, int group) const;

    /// Prediction deriving the group from the stored partition.
    LpbOutput predict(std::span<const double> x) const;

    bool separate() const { return separate_; }
    const ConformalModel& base() const { return base_; }
    const std::vector<int>& calibration_groups() const { return groups_; }
    const std::map<int, ConformalModel>& group_models() const { return by_group_; }

    static MondrianModel assemble(ConformalModel base, std::vector<int> calibration_groups,
                                  GroupPartition partition);
    static MondrianModel assemble_separate(std::map<int, ConformalModel> by_group,
                                           GroupPartition partition);

private:
    bool separate_ = false;
    ConformalModel base_;
    std::vector<int> groups_; // group of each calibration unit (joint mode)
    std::map<int, ConformalModel> by_group_; // separate mode
    GroupPartition partition_;
};

/// Mondrian pipeline. Joint training (the default) fits one outcome and
/// one censoring model on the whole training fold and only calibrates
/// within groups; separate training refits everything per group, trading
/// sample size for group fidelity. Neither dominates in general.
MondrianModel conformalize_mondrian(const Dataset& ds, const SplitIndices& split, double c0,
                                    const ConformalConfig& config, GroupPartition partition,
                                    bool separate_training = false);

/// Same pipeline with one explicit group label per record (labels may
/// come from data columns rather than covariates). Predictions must then
/// pass the test point's group explicitly.
MondrianModel conformalize_mondrian_labeled(const Dataset& ds, std::span<const int> labels,
                                            const SplitIndices& split, double c0,
                                            const ConformalConfig& config,
                                            bool separate_training = false);

/// Counterfactual pipeline for bounds on the treated potential outcome:
/// outcome models fit on treated training units with C >= c0, propensity
/// and censoring models on the whole training fold, calibration on
/// treated units with composite weights.
ConformalModel conformalize_counterfactual(const Dataset& ds, std::span<const int> treatment,
                                           const SplitIndices& split, double c0,
                                           const ConformalConfig& config,
                                           double propensity_floor = kDefaultCensoringFloor);

} // namespace cfsurv

#endif
