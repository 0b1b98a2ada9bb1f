#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "adequate/glm.hpp"

namespace adequate {

// One trained model on a learning curve.
struct CurvePoint {
    std::size_t target_events = 0;
    std::size_t actual_events = 0;
    std::size_t n_samples = 0;
    double auroc_test = 0.0;
    std::size_t n_predictors = 0;
    double selected_lambda = 0.0;
    double wall_time = 0.0;  // seconds

    bool operator==(const CurvePoint&) const = default;
};

// Mann-Whitney AUROC from midranks: tied pairs earn half credit. O(n log n).
// Throws InputError("AUROC undefined") unless both classes are present.
double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels);

std::size_t count_predictors(const FittedModel& model);

// Events per predictor; absent when the model has no predictors.
std::optional<double> epv(std::size_t actual_events, std::size_t n_predictors);

}  // namespace adequate
