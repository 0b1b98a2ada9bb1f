#include "adequate/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "adequate/errors.hpp"

namespace adequate {

double auroc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) throw InputError("scores and labels differ in length");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double n_pos = 0.0;
    double rank_sum = 0.0;  // doubled midranks keep every partial sum integral
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double twice_midrank = static_cast<double>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[order[k]]) {
                n_pos += 1.0;
                rank_sum += twice_midrank;
            }
        }
        i = j + 1;
    }
    const double n_neg = static_cast<double>(n) - n_pos;
    if (n_pos == 0.0 || n_neg == 0.0) throw InputError("AUROC undefined: labels contain a single class");
    const double u = rank_sum / 2.0 - n_pos * (n_pos + 1.0) / 2.0;
    return u / (n_pos * n_neg);
}

std::size_t count_predictors(const FittedModel& model) {
    return static_cast<std::size_t>(std::count_if(model.coefficients.begin(), model.coefficients.end(),
                                                  [](const Coefficient& c) { return c.value != 0.0; }));
}

std::optional<double> epv(std::size_t actual_events, std::size_t n_predictors) {
    if (n_predictors == 0) return std::nullopt;
    return static_cast<double>(actual_events) / static_cast<double>(n_predictors);
}

}  // namespace adequate
