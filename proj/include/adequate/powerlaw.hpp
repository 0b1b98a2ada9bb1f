#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adequate/metrics.hpp"

namespace adequate {

enum class Axis { events, observations };

std::string_view to_string(Axis axis);
Axis parse_axis(std::string_view token);

// Inverse power law  P(x) = (1 - a) - b * x^(-c)
//   a: minimum achievable error, b: learning rate, c: decay rate.
struct PowerLawFit {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    bool converged = false;
    // Fitted curve varies by less than kFlatSpan over the data range.
    bool degenerate = false;
    double rmse = 0.0;
    std::size_t n_points = 0;
    Axis x_axis = Axis::events;
    std::size_t iterations = 0;

    bool operator==(const PowerLawFit&) const = default;
};

inline constexpr double kMaxDecayRate = 1.5;
inline constexpr double kFlatSpan = 1e-9;

struct CurveSample {
    double x = 0.0;
    double y = 0.0;
};

// Throws InputError for x <= 0.
double evaluate(const PowerLawFit& fit, double x);
// dP/dx = b c x^(-c-1)
double slope(const PowerLawFit& fit, double x);

struct LmOptions {
    std::size_t max_iterations = 500;
    double step_tolerance = 1e-10;
    double initial_damping = 1e-3;
    double damping_up = 10.0;
    double damping_down = 10.0;
};

// Levenberg-Marquardt on the squared residuals, damping scaled by diag(J'J).
// Starts at a = 1 - max(y), c = 0.5 with b solved from the first point; when
// that run fails or its result is rejected by filter_fit, restarts from
// c in {0.1, 0.3, 0.8, 1.2} and keeps the lowest-RMSE accepted candidate.
// Needs at least 3 points with strictly increasing positive x, else throws
// InputError. Never throws on non-convergence: the flag is cleared instead.
PowerLawFit fit_power_law(std::span<const CurveSample> points, Axis x_axis, const LmOptions& options = {});

// Single LM run from an explicit start; exposed for diagnostics and tests.
PowerLawFit fit_power_law_from(std::span<const CurveSample> points, Axis x_axis, double a0, double b0, double c0,
                               const LmOptions& options = {});

struct FitVerdict {
    bool accepted = false;
    std::string reason;  // empty when accepted

    bool operator==(const FitVerdict&) const = default;
};

// Rejects a < 0, c > 1.5, b < 0, or a non-converged run.
FitVerdict filter_fit(const PowerLawFit& fit);

inline constexpr std::array<std::size_t, 5> kResidualCheckpoints{1000, 2000, 5000, 10000, 20000};

struct CheckpointResidual {
    std::size_t events = 0;
    double residual = 0.0;  // observed - fitted

    bool operator==(const CheckpointResidual&) const = default;
};

struct ResidualReport {
    std::vector<CheckpointResidual> checkpoints;
    double rmse = 0.0;

    bool operator==(const ResidualReport&) const = default;
};

// Residuals at the checkpoints that appear among the points' x values, plus
// RMSE over all points.
ResidualReport residual_report(const PowerLawFit& fit, std::span<const CurveSample> points);

struct AxisComparison {
    PowerLawFit events;
    PowerLawFit observations;
    FitVerdict events_verdict;
    FitVerdict observations_verdict;
    double delta_a = 0.0;  // observations - events
    double delta_c = 0.0;
    double b_ratio = 0.0;  // b_observations / b_events; equals r^(-c) for a constant outcome rate r

    bool operator==(const AxisComparison&) const = default;
};

// Fits the same curve against actual events and against sample counts.
AxisComparison compare_axes(std::span<const CurvePoint> curve, const LmOptions& options = {});

std::vector<CurveSample> samples_on_axis(std::span<const CurvePoint> curve, Axis axis);

}  // namespace adequate
