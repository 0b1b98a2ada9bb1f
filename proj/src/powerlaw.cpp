#include "adequate/powerlaw.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "adequate/detail/text.hpp"
#include "adequate/errors.hpp"

namespace adequate {

namespace {

constexpr double kMaxDamping = 1e30;
constexpr std::array<double, 4> kRestartDecay{0.1, 0.3, 0.8, 1.2};
constexpr double kDefaultDecay = 0.5;

void check_points(std::span<const CurveSample> points) {
    if (points.size() < 3) {
        throw InputError("insufficient data: power-law fit needs at least 3 points, got " +
                         std::to_string(points.size()));
    }
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (!(points[i].x > 0.0) || !std::isfinite(points[i].x) || !std::isfinite(points[i].y)) {
            throw InputError("power-law point " + std::to_string(i) + " must have finite y and x > 0");
        }
        if (i > 0 && !(points[i].x > points[i - 1].x)) {
            throw InputError("power-law points must have strictly increasing x");
        }
    }
}

double model_value(const Eigen::Vector3d& t, double x) { return (1.0 - t[0]) - t[1] * std::pow(x, -t[2]); }

double sum_squares(std::span<const CurveSample> points, const Eigen::Vector3d& t) {
    double s = 0.0;
    for (const auto& p : points) {
        const double r = p.y - model_value(t, p.x);
        s += r * r;
    }
    return s;
}

double initial_b(std::span<const CurveSample> points, double a0, double c0) {
    return ((1.0 - a0) - points.front().y) * std::pow(points.front().x, c0);
}

}  // namespace

std::string_view to_string(Axis axis) { return axis == Axis::events ? "events" : "observations"; }

Axis parse_axis(std::string_view token) {
    if (token == "events") return Axis::events;
    if (token == "observations") return Axis::observations;
    throw InputError("unknown axis '" + std::string(token) + "'");
}

double evaluate(const PowerLawFit& fit, double x) {
    if (!(x > 0.0)) throw InputError("power law evaluated at x = " + detail::format_double(x) + " (needs x > 0)");
    return (1.0 - fit.a) - fit.b * std::pow(x, -fit.c);
}

double slope(const PowerLawFit& fit, double x) {
    if (!(x > 0.0)) throw InputError("power law slope evaluated at x <= 0");
    return fit.b * fit.c * std::pow(x, -fit.c - 1.0);
}

PowerLawFit fit_power_law_from(std::span<const CurveSample> points, Axis x_axis, double a0, double b0, double c0,
                               const LmOptions& options) {
    check_points(points);
    const auto n = static_cast<Eigen::Index>(points.size());
    Eigen::Vector3d theta(a0, b0, c0);
    double cost = sum_squares(points, theta);
    double damping = options.initial_damping;
    bool converged = false;
    bool failed = !std::isfinite(cost);
    std::size_t iter = 0;

    Eigen::MatrixX3d jac(n, 3);
    Eigen::VectorXd resid(n);
    while (!converged && !failed && iter < options.max_iterations) {
        ++iter;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double x = points[static_cast<std::size_t>(i)].x;
            const double xc = std::pow(x, -theta[2]);
            jac(i, 0) = -1.0;
            jac(i, 1) = -xc;
            jac(i, 2) = theta[1] * xc * std::log(x);
            resid[i] = points[static_cast<std::size_t>(i)].y - ((1.0 - theta[0]) - theta[1] * xc);
        }
        const Eigen::Matrix3d jtj = jac.transpose() * jac;
        const Eigen::Vector3d jtr = jac.transpose() * resid;
        if (jtr.cwiseAbs().maxCoeff() == 0.0) {
            converged = true;
            break;
        }
        Eigen::Vector3d scale = jtj.diagonal();
        const double floor = std::max(scale.maxCoeff(), 1.0) * 1e-12;
        scale = scale.cwiseMax(floor);

        // Inner loop: raise the damping until a step lowers the cost.
        while (true) {
            Eigen::Matrix3d lhs = jtj;
            lhs.diagonal() += damping * scale;
            const Eigen::Vector3d step = lhs.ldlt().solve(jtr);
            if (!step.allFinite()) {
                damping *= options.damping_up;
                if (damping > kMaxDamping) {
                    failed = true;
                    break;
                }
                continue;
            }
            if (step.norm() < options.step_tolerance) {
                converged = true;
                break;
            }
            const Eigen::Vector3d trial = theta + step;
            const double trial_cost = sum_squares(points, trial);
            if (std::isfinite(trial_cost) && trial_cost < cost) {
                theta = trial;
                cost = trial_cost;
                damping = std::max(damping / options.damping_down, 1e-15);
                break;
            }
            damping *= options.damping_up;
            if (damping > kMaxDamping) {
                failed = true;
                break;
            }
        }
    }

    PowerLawFit fit;
    fit.a = theta[0];
    fit.b = theta[1];
    fit.c = theta[2];
    fit.converged = converged && !failed;
    fit.rmse = std::sqrt(cost / static_cast<double>(points.size()));
    fit.n_points = points.size();
    fit.x_axis = x_axis;
    fit.iterations = iter;
    const double span =
        std::abs(fit.b * (std::pow(points.front().x, -fit.c) - std::pow(points.back().x, -fit.c)));
    fit.degenerate = !(span >= kFlatSpan);
    return fit;
}

PowerLawFit fit_power_law(std::span<const CurveSample> points, Axis x_axis, const LmOptions& options) {
    check_points(points);
    double y_max = -std::numeric_limits<double>::infinity();
    for (const auto& p : points) y_max = std::max(y_max, p.y);
    const double a0 = 1.0 - y_max;

    PowerLawFit best = fit_power_law_from(points, x_axis, a0, initial_b(points, a0, kDefaultDecay), kDefaultDecay, options);
    if (filter_fit(best).accepted) return best;

    std::optional<PowerLawFit> best_accepted;
    for (double c0 : kRestartDecay) {
        auto candidate = fit_power_law_from(points, x_axis, a0, initial_b(points, a0, c0), c0, options);
        if (filter_fit(candidate).accepted) {
            if (!best_accepted || candidate.rmse < best_accepted->rmse) best_accepted = candidate;
        } else if (!best_accepted && candidate.rmse < best.rmse) {
            best = candidate;
        }
    }
    return best_accepted ? *best_accepted : best;
}

FitVerdict filter_fit(const PowerLawFit& fit) {
    if (!fit.converged) return {false, "not converged"};
    if (!(fit.a >= 0.0)) return {false, "a<0"};
    if (!(fit.c <= kMaxDecayRate)) return {false, "c>1.5"};
    if (!(fit.b >= 0.0)) return {false, "b<0"};
    return {true, ""};
}

ResidualReport residual_report(const PowerLawFit& fit, std::span<const CurveSample> points) {
    ResidualReport report;
    double ss = 0.0;
    for (const auto& p : points) {
        const double r = p.y - evaluate(fit, p.x);
        ss += r * r;
    }
    report.rmse = points.empty() ? 0.0 : std::sqrt(ss / static_cast<double>(points.size()));
    for (std::size_t checkpoint : kResidualCheckpoints) {
        for (const auto& p : points) {
            if (p.x == static_cast<double>(checkpoint)) {
                report.checkpoints.push_back({checkpoint, p.y - evaluate(fit, p.x)});
                break;
            }
        }
    }
    return report;
}

std::vector<CurveSample> samples_on_axis(std::span<const CurvePoint> curve, Axis axis) {
    std::vector<CurveSample> out;
    out.reserve(curve.size());
    for (const auto& p : curve) {
        const auto x = axis == Axis::events ? p.actual_events : p.n_samples;
        out.push_back({static_cast<double>(x), p.auroc_test});
    }
    return out;
}

AxisComparison compare_axes(std::span<const CurvePoint> curve, const LmOptions& options) {
    AxisComparison cmp;
    const auto ev = samples_on_axis(curve, Axis::events);
    const auto obs = samples_on_axis(curve, Axis::observations);
    cmp.events = fit_power_law(ev, Axis::events, options);
    cmp.observations = fit_power_law(obs, Axis::observations, options);
    cmp.events_verdict = filter_fit(cmp.events);
    cmp.observations_verdict = filter_fit(cmp.observations);
    cmp.delta_a = cmp.observations.a - cmp.events.a;
    cmp.delta_c = cmp.observations.c - cmp.events.c;
    cmp.b_ratio = cmp.events.b != 0.0 ? cmp.observations.b / cmp.events.b : 0.0;
    return cmp;
}

}  // namespace adequate
