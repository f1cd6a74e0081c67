#include "cfsurv/extensions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "cfsurv/errors.hpp"

namespace cfsurv {

double mondrian_eta(const CalibrationSet& cal, std::span<const int> groups, int group_of_x,
                    double w_test, double level) {
    if (groups.size() != cal.scores.size())
        throw std::invalid_argument("mondrian_eta: group labels do not match calibration set");
    std::vector<double> scores;
    std::vector<double> weights;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i] == group_of_x) {
            scores.push_back(cal.scores[i]);
            weights.push_back(cal.weights[i]);
        }
    }
    if (scores.empty()) return std::numeric_limits<double>::infinity();
    // Restricting and renormalizing the masses within the group cancels
    // the common denominator, so this is the plain weighted quantile on
    // the group's atoms.
    return weighted_quantile(scores, weights, w_test, level);
}

double counterfactual_weight(const CensoringModel& censoring, const CensoringModel& propensity,
                             std::span<const double> x) {
    return 1.0 / (censoring.survival(x) * propensity.survival(x));
}

Dataset two_censoring_adapt(const Dataset& ds, std::span<const double> c_end,
                            std::span<const double> t_prime) {
    if (c_end.size() != ds.size())
        throw std::invalid_argument("two_censoring_adapt: c_end length mismatch");
    if (!t_prime.empty() && t_prime.size() != ds.size())
        throw std::invalid_argument("two_censoring_adapt: t_prime length mismatch");
    std::vector<SurvivalRecord> out(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto& r = ds[i];
        if (r.observed > c_end[i]) {
            throw SchemaError("two_censoring_adapt: observed time exceeds c_end at row " +
                              std::to_string(i + 1));
        }
        SurvivalRecord rec;
        rec.x = r.x;
        rec.censoring = c_end[i];
        rec.observed = r.observed;
        if (!t_prime.empty()) {
            rec.true_time = t_prime[i];
            rec.event = t_prime[i] <= c_end[i];
        } else {
            rec.event = r.event;
        }
        out[i] = std::move(rec);
    }
    return Dataset(std::move(out));
}

MondrianModel MondrianModel::assemble(ConformalModel base, std::vector<int> calibration_groups,
                                      GroupPartition partition) {
    if (calibration_groups.size() != base.calibration().scores.size())
        throw std::invalid_argument("mondrian: group labels do not match calibration set");
    MondrianModel m;
    m.base_ = std::move(base);
    m.groups_ = std::move(calibration_groups);
    m.partition_ = std::move(partition);
    return m;
}

MondrianModel MondrianModel::assemble_separate(std::map<int, ConformalModel> by_group,
                                               GroupPartition partition) {
    if (by_group.empty()) throw std::invalid_argument("mondrian: no group models");
    MondrianModel m;
    m.separate_ = true;
    m.by_group_ = std::move(by_group);
    m.partition_ = std::move(partition);
    return m;
}

LpbOutput MondrianModel::predict(std::span<const double> x, int group) const {
    if (separate_) {
        const auto it = by_group_.find(group);
        if (it == by_group_.end()) {
            LpbOutput out;
            out.eta = std::numeric_limits<double>::infinity();
            out.p_inf = 1.0;
            out.uninformative = true;
            return out;
        }
        return it->second.predict(x);
    }
    const double w = base_.test_weight(x);
    const double eta =
        mondrian_eta(base_.calibration(), groups_, group, w, 1.0 - base_.alpha());
    double group_sum = 0.0;
    for (std::size_t i = 0; i < groups_.size(); ++i) {
        if (groups_[i] == group) group_sum += base_.calibration().weights[i];
    }
    return lpb_from_eta(base_.outcome(), x, eta, base_.c0(), w / (group_sum + w));
}

LpbOutput MondrianModel::predict(std::span<const double> x) const {
    if (!partition_.assign) throw std::logic_error("mondrian: no partition stored");
    return predict(x, partition_.assign(x));
}

namespace {

MondrianModel mondrian_from_labels(const Dataset& ds, std::span<const int> labels,
                                   const SplitIndices& split, double c0,
                                   const ConformalConfig& config, GroupPartition partition,
                                   bool separate_training) {
    if (labels.size() != ds.size())
        throw std::invalid_argument("mondrian: one group label per record required");
    if (!separate_training) {
        ConformalModel base = conformalize(ds, split, c0, config);
        const Subpopulation cal_sel = select_subpopulation(ds, split.calib, c0);
        std::vector<int> groups(cal_sel.indices.size());
        for (std::size_t i = 0; i < cal_sel.indices.size(); ++i) {
            groups[i] = labels[cal_sel.indices[i]];
        }
        return MondrianModel::assemble(std::move(base), std::move(groups), std::move(partition));
    }

    // Separate training: the full pipeline per group on the group's own
    // index sets. Groups whose folds empty out are dropped; predictions
    // for them come back uninformative.
    std::map<int, SplitIndices> group_split;
    for (std::size_t i : split.train) group_split[labels[i]].train.push_back(i);
    for (std::size_t i : split.calib) group_split[labels[i]].calib.push_back(i);
    std::map<int, ConformalModel> by_group;
    for (auto& [group, sub] : group_split) {
        if (sub.train.empty() || sub.calib.empty()) continue;
        try {
            by_group.emplace(group, conformalize(ds, sub, c0, config));
        } catch (const DegenerateError&) {
            // no usable units above the threshold in this group
        }
    }
    if (by_group.empty())
        throw DegenerateError("mondrian: every group lost its folds to the selection");
    MondrianModel m = MondrianModel::assemble_separate(std::move(by_group), std::move(partition));
    return m;
}

} // namespace

MondrianModel conformalize_mondrian(const Dataset& ds, const SplitIndices& split, double c0,
                                    const ConformalConfig& config, GroupPartition partition,
                                    bool separate_training) {
    if (!partition.assign) throw std::invalid_argument("mondrian: partition required");
    std::vector<int> labels(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) labels[i] = partition.assign(ds[i].x);
    return mondrian_from_labels(ds, labels, split, c0, config, std::move(partition),
                                separate_training);
}

MondrianModel conformalize_mondrian_labeled(const Dataset& ds, std::span<const int> labels,
                                            const SplitIndices& split, double c0,
                                            const ConformalConfig& config,
                                            bool separate_training) {
    return mondrian_from_labels(ds, labels, split, c0, config, GroupPartition{},
                                separate_training);
}

ConformalModel conformalize_counterfactual(const Dataset& ds, std::span<const int> treatment,
                                           const SplitIndices& split, double c0,
                                           const ConformalConfig& config,
                                           double propensity_floor) {
    if (treatment.size() != ds.size())
        throw std::invalid_argument("counterfactual: treatment length mismatch");

    // Censoring mechanism and propensity score on the whole training fold.
    CensoringModel cens = CensoringModel::constant_model(1.0, c0);
    if (config.censoring != CensoringKind::known_unit) {
        const auto kind = config.censoring == CensoringKind::logistic
                              ? CensoringModel::Kind::logistic
                              : CensoringModel::Kind::knn_frequency;
        cens = CensoringModel::fit(ds.covariates(split.train), ds.censoring_times(split.train),
                                   c0, kind, config.censoring_floor);
    }
    // The propensity has the same mathematical role: a conditional
    // Bernoulli probability, estimated with the same machinery by
    // thresholding a synthetic "censoring" at 0.5.
    std::vector<double> treat_label(split.train.size());
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        treat_label[i] = treatment[split.train[i]] != 0 ? 1.0 : 0.0;
    }
    const CensoringModel prop =
        CensoringModel::fit(ds.covariates(split.train), treat_label, 0.5,
                            CensoringModel::Kind::logistic, propensity_floor);

    auto treated_subset = [&](std::span<const std::size_t> idx) {
        std::vector<std::size_t> out;
        for (std::size_t i : idx) {
            if (treatment[i] != 0) out.push_back(i);
        }
        return out;
    };

    const auto train_treated = treated_subset(split.train);
    if (train_treated.empty()) throw DegenerateError("counterfactual: no treated training units");
    const Subpopulation train_sel = select_subpopulation(ds, train_treated, c0);
    const OutcomeModels models =
        fit_outcome_models(ds.covariates(train_sel.indices), train_sel.capped, config);

    const auto calib_treated = treated_subset(split.calib);
    if (calib_treated.empty()) throw DegenerateError("counterfactual: no treated calibration units");
    const Subpopulation cal_sel = select_subpopulation(ds, calib_treated, c0);
    CalibrationSet cal;
    cal.c0 = c0;
    cal.scores.resize(cal_sel.indices.size());
    cal.weights.resize(cal_sel.indices.size());
    for (std::size_t i = 0; i < cal_sel.indices.size(); ++i) {
        const auto& rec = ds[cal_sel.indices[i]];
        cal.scores[i] = conformity_score(models, rec.x, cal_sel.capped[i]);
        cal.weights[i] = counterfactual_weight(cens, prop, rec.x);
    }
    return ConformalModel::assemble(models, std::move(cens), std::move(cal), config.alpha, c0,
                                    /*naive=*/false, prop);
}

} // namespace cfsurv
