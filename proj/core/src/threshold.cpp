#include "cfsurv/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "cfsurv/errors.hpp"
#include "cfsurv/rng.hpp"

namespace cfsurv {

ThresholdGrid ThresholdGrid::explicit_grid(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("threshold grid: empty candidate set");
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("threshold grid: candidates must be finite and nonnegative");
    }
    return ThresholdGrid{std::move(values)};
}

ThresholdGrid ThresholdGrid::censoring_deciles(const Dataset& ds,
                                               std::span<const std::size_t> idx) {
    if (idx.empty()) throw std::invalid_argument("threshold grid: no units");
    std::vector<double> c = ds.censoring_times(idx);
    std::sort(c.begin(), c.end());
    std::vector<double> candidates;
    for (int d = 1; d <= 9; ++d) {
        const double pos = 0.1 * d * static_cast<double>(c.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(lo);
        const double v = lo + 1 < c.size() ? c[lo] * (1.0 - frac) + c[lo + 1] * frac : c[lo];
        candidates.push_back(v);
    }
    return explicit_grid(std::move(candidates));
}

namespace {

// Mean bound over held-out covariates; uninformative entries are zeros
// already because bounds are floored at zero.
double mean_lpb(const ConformalModel& model, const Dataset& ds,
                std::span<const std::size_t> idx) {
    double s = 0.0;
    for (std::size_t i : idx) s += model.predict(ds[i].x).lpb;
    return s / static_cast<double>(idx.size());
}

} // namespace

double select_c0_train(const Dataset& ds, std::span<const std::size_t> train_idx,
                       const ThresholdGrid& grid, const ConformalConfig& config,
                       double holdout_fraction, std::uint64_t seed) {
    if (grid.candidates.empty()) throw std::invalid_argument("select_c0_train: empty grid");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
        throw std::invalid_argument("select_c0_train: holdout fraction must lie in (0, 1)");
    const std::size_t m = train_idx.size();
    const auto n_hold = static_cast<std::size_t>(
        std::llround(holdout_fraction * static_cast<double>(m)));
    if (n_hold == 0 || n_hold >= m)
        throw DegenerateError("select_c0_train: holdout fraction yields an empty fold");

    std::vector<std::size_t> perm(train_idx.begin(), train_idx.end());
    Rng rng(Rng::derive(seed, 1));
    for (std::size_t i = perm.size(); i-- > 1;) {
        const auto j = static_cast<std::size_t>(rng.next_below(i + 1));
        std::swap(perm[i], perm[j]);
    }
    const std::vector<std::size_t> holdout(perm.begin(),
                                           perm.begin() + static_cast<std::ptrdiff_t>(n_hold));
    const std::vector<std::size_t> rest(perm.begin() + static_cast<std::ptrdiff_t>(n_hold),
                                        perm.end());

    // The remainder is itself split half/half into fitting and calibration
    // folds, mirroring the outer protocol.
    SplitIndices inner;
    inner.seed = seed;
    const std::size_t n_fit = rest.size() / 2;
    inner.train.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_fit));
    inner.calib.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_fit), rest.end());

    bool found = false;
    double best_c0 = 0.0;
    double best_mean = 0.0;
    for (double c0 : grid.candidates) {
        ConformalModel model;
        try {
            model = conformalize(ds, inner, c0, config);
        } catch (const DegenerateError&) {
            continue; // candidate leaves a sub-fold empty
        }
        const double mean = mean_lpb(model, ds, holdout);
        if (!found || mean > best_mean) {
            found = true;
            best_c0 = c0;
            best_mean = mean;
        }
    }
    if (!found) throw DegenerateError("select_c0_train: every candidate left the selection empty");
    return best_c0;
}

double select_c0_calib(const Dataset& ds, const SplitIndices& split, const ThresholdGrid& grid,
                       const ConformalConfig& config) {
    if (grid.candidates.empty()) throw std::invalid_argument("select_c0_calib: empty grid");
    bool found = false;
    double best_c0 = 0.0;
    double best_mean = 0.0;
    for (double c0 : grid.candidates) {
        ConformalModel model;
        try {
            model = conformalize(ds, split, c0, config);
        } catch (const DegenerateError&) {
            continue;
        }
        const double mean = mean_lpb(model, ds, split.calib);
        if (!found || mean > best_mean) {
            found = true;
            best_c0 = c0;
            best_mean = mean;
        }
    }
    if (!found) throw DegenerateError("select_c0_calib: every candidate left the selection empty");
    return best_c0;
}

double estimate_c_bar_discrete(std::span<const int> labels, std::span<const double> censoring,
                               double eta) {
    if (labels.size() != censoring.size())
        throw std::invalid_argument("estimate_c_bar_discrete: label/censoring size mismatch");
    if (labels.empty()) throw std::invalid_argument("estimate_c_bar_discrete: empty sample");
    if (!(eta > 0.0 && eta < 0.5))
        throw std::invalid_argument("estimate_c_bar_discrete: eta must lie in (0, 0.5)");

    std::map<int, std::vector<double>> by_level;
    for (std::size_t i = 0; i < labels.size(); ++i) by_level[labels[i]].push_back(censoring[i]);

    double c_bar = std::numeric_limits<double>::infinity();
    for (auto& [level, c] : by_level) {
        std::sort(c.begin(), c.end(), std::greater<>());
        const auto rank = static_cast<std::size_t>(
            std::ceil(2.0 * eta * static_cast<double>(c.size())));
        const std::size_t k = std::min(std::max<std::size_t>(rank, 1), c.size());
        c_bar = std::min(c_bar, c[k - 1]);
    }
    return c_bar;
}

} // namespace cfsurv
