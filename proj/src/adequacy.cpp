#include "adequate/adequacy.hpp"

#include <algorithm>
#include <cmath>

#include "adequate/errors.hpp"

namespace adequate {

std::size_t adequate_events(const PowerLawFit& fit, std::size_t max_events, double threshold) {
    if (!filter_fit(fit).accepted) throw Error("criterion requires accepted fit");
    if (max_events == 0) throw InputError("maximum number of events must be positive");
    if (!(threshold >= 0.0)) throw InputError("threshold must be >= 0");
    if (fit.b == 0.0 || fit.degenerate) return 1;
    if (!(fit.c > 0.0)) throw Error("criterion requires a positive decay rate");

    const double n = static_cast<double>(max_events);
    const double target = evaluate(fit, n) - threshold;
    const double x = std::pow(fit.b / (fit.b * std::pow(n, -fit.c) + threshold), 1.0 / fit.c);
    auto na = static_cast<std::size_t>(std::clamp(std::ceil(x), 1.0, n));
    // The closed form can land one off after rounding; settle on evaluate().
    while (na > 1 && evaluate(fit, static_cast<double>(na - 1)) >= target) --na;
    while (na < max_events && evaluate(fit, static_cast<double>(na)) < target) ++na;
    return na;
}

std::size_t adequate_sample_size(std::size_t adequate_events, double outcome_rate) {
    if (!(outcome_rate > 0.0 && outcome_rate <= 1.0)) throw InputError("outcome rate must lie in (0, 1]");
    const double q = static_cast<double>(adequate_events) / outcome_rate;
    const double nearest = std::nearbyint(q);
    if (std::abs(q - nearest) <= 1e-9 * q) return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::ceil(q));
}

double relative_reduction(std::size_t max_events, std::size_t adequate_events) {
    if (max_events == 0 || adequate_events == 0 || adequate_events > max_events) {
        throw InputError("relative reduction needs 0 < N_a <= N");
    }
    const double n = static_cast<double>(max_events);
    return 100.0 * (n - static_cast<double>(adequate_events)) / n;
}

double sample_size_reduction(std::size_t max_events, std::size_t adequate_events, double outcome_rate) {
    const double full = static_cast<double>(max_events) / outcome_rate;
    const double reduced = static_cast<double>(adequate_events) / outcome_rate;
    return 100.0 * (full - reduced) / full;
}

ComplexitySelection adequate_model_complexity(std::span<const CurvePoint> curve, std::size_t adequate_events) {
    ComplexitySelection sel;
    for (std::size_t k = 0; k < curve.size(); ++k) {
        if (curve[k].target_events <= adequate_events) sel.point_index = k;
    }
    if (!sel.point_index) {
        sel.excluded = true;
        sel.reason = adequate_events < kMinAdequateModelEvents ? "fewer than 100 events"
                                                               : "adequate events below the smallest subset";
        return sel;
    }
    const auto& point = curve[*sel.point_index];
    if (point.actual_events < kMinAdequateModelEvents) {
        sel.excluded = true;
        sel.reason = "fewer than 100 events";
        return sel;
    }
    sel.n_predictors = point.n_predictors;
    return sel;
}

std::size_t slope_adequate_events(const PowerLawFit& fit, std::size_t max_events, double epsilon,
                                  std::size_t grid_step) {
    if (!filter_fit(fit).accepted) throw Error("criterion requires accepted fit");
    if (grid_step == 0) throw InputError("grid step must be positive");
    for (std::size_t x = grid_step; x <= max_events; x += grid_step) {
        if (slope(fit, static_cast<double>(x)) < epsilon) return x;
    }
    return max_events;
}

AdequacyResult assess_threshold(const PowerLawFit& fit, std::span<const CurvePoint> curve, double threshold,
                                double outcome_rate, std::size_t step_events, std::optional<double> slope_epsilon) {
    if (curve.empty()) throw InputError("adequacy needs a nonempty curve");
    AdequacyResult res;
    res.threshold = threshold;
    res.max_events = curve.back().target_events;
    res.p_max = evaluate(fit, static_cast<double>(res.max_events));
    res.adequate_events = adequate_events(fit, res.max_events, threshold);
    const std::size_t step = std::max<std::size_t>(step_events, 1);
    res.adequate_events_grid = std::min(res.max_events, (res.adequate_events + step - 1) / step * step);
    res.adequate_sample_size = adequate_sample_size(res.adequate_events, outcome_rate);
    res.event_reduction_pct = relative_reduction(res.max_events, res.adequate_events);
    res.sample_reduction_pct = sample_size_reduction(res.max_events, res.adequate_events, outcome_rate);
    res.full_n_predictors = curve.back().n_predictors;

    const auto sel = adequate_model_complexity(curve, res.adequate_events);
    res.excluded = sel.excluded;
    res.reason = sel.reason;
    if (sel.point_index) res.adequate_model_events = curve[*sel.point_index].target_events;
    if (!sel.excluded) {
        res.adequate_n_predictors = sel.n_predictors;
        res.adequate_epv = epv(curve[*sel.point_index].actual_events, *sel.n_predictors);
        if (res.full_n_predictors > 0) {
            const double full = static_cast<double>(res.full_n_predictors);
            res.predictor_reduction_pct = 100.0 * (full - static_cast<double>(*sel.n_predictors)) / full;
        }
    }
    if (slope_epsilon) res.slope_adequate_events = slope_adequate_events(fit, res.max_events, *slope_epsilon, step);
    return res;
}

}  // namespace adequate
