#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "adequate/metrics.hpp"
#include "adequate/powerlaw.hpp"

namespace adequate {

inline constexpr std::array<double, 4> kDefaultThresholds{0.001, 0.005, 0.01, 0.02};
// Adequate models trained on fewer events are not reported.
inline constexpr std::size_t kMinAdequateModelEvents = 100;

// Smallest integer x in [1, N] with evaluate(x) >= evaluate(N) - t, from the
// closed form x = (b / (b N^-c + t))^(1/c) rounded up. A flat fit (b == 0)
// gives 1. Throws Error("criterion requires accepted fit") for rejected fits.
std::size_t adequate_events(const PowerLawFit& fit, std::size_t max_events, double threshold);

// ceil(N_a / outcome_rate); a quotient within 1e-9 relative of an integer is
// taken as that integer so representation error cannot add a sample.
std::size_t adequate_sample_size(std::size_t adequate_events, double outcome_rate);

// 100 (N - N_a) / N
double relative_reduction(std::size_t max_events, std::size_t adequate_events);
// Same reduction expressed on sample sizes N / r and N_a / r.
double sample_size_reduction(std::size_t max_events, std::size_t adequate_events, double outcome_rate);

struct ComplexitySelection {
    std::optional<std::size_t> point_index;  // into the curve
    std::optional<std::size_t> n_predictors;
    bool excluded = false;
    std::string reason;
};

// Picks the point with the largest target_events <= N_a (the next smallest
// trained subset). Excluded when no such point exists or it holds fewer than
// 100 events. Expects points ordered by target_events.
ComplexitySelection adequate_model_complexity(std::span<const CurvePoint> curve, std::size_t adequate_events);

// Smallest grid x = k * grid_step <= N with slope(x) < epsilon, or N when the
// slope never drops below epsilon.
std::size_t slope_adequate_events(const PowerLawFit& fit, std::size_t max_events, double epsilon,
                                  std::size_t grid_step);

struct AdequacyResult {
    double threshold = 0.0;
    std::size_t max_events = 0;
    double p_max = 0.0;
    std::size_t adequate_events = 0;
    std::size_t adequate_events_grid = 0;  // N_a rounded up to the step grid, capped at N
    std::size_t adequate_sample_size = 0;
    double event_reduction_pct = 0.0;
    double sample_reduction_pct = 0.0;
    std::optional<std::size_t> adequate_model_events;  // target_events of the complexity point
    std::optional<std::size_t> adequate_n_predictors;
    std::size_t full_n_predictors = 0;
    std::optional<double> predictor_reduction_pct;
    std::optional<double> adequate_epv;
    std::optional<std::size_t> slope_adequate_events;
    bool excluded = false;
    std::string reason;

    bool operator==(const AdequacyResult&) const = default;
};

// Full per-threshold evaluation of an accepted fit on a curve ordered by
// target_events. N is the last point's target_events; the full model is the
// last point.
AdequacyResult assess_threshold(const PowerLawFit& fit, std::span<const CurvePoint> curve, double threshold,
                                double outcome_rate, std::size_t step_events,
                                std::optional<double> slope_epsilon = std::nullopt);

}  // namespace adequate
