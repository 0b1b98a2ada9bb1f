#include "adequate/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "adequate/errors.hpp"

namespace adequate {

namespace {

std::size_t round_count(double v) { return static_cast<std::size_t>(std::llround(v)); }

void check_side(std::span<const std::uint8_t> labels, std::span<const RowIndex> rows, const char* side) {
    std::size_t events = 0;
    for (RowIndex r : rows) events += labels[r];
    if (events == 0 || events == rows.size()) {
        throw Error(std::string("split produced degenerate side: ") + side + " set has " +
                    std::to_string(events) + " events among " + std::to_string(rows.size()) + " samples");
    }
}

}  // namespace

TrainTestSplit split_train_test(std::span<const std::uint8_t> labels, const SplitSpec& spec) {
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
        throw InputError("test fraction must lie in (0, 1)");
    }
    const std::size_t n = labels.size();
    const std::size_t n_test = round_count(spec.test_fraction * static_cast<double>(n));
    std::mt19937_64 rng(spec.seed);

    std::vector<std::uint8_t> in_test(n, 0);
    if (spec.stratified) {
        std::vector<RowIndex> pos;
        std::vector<RowIndex> neg;
        for (RowIndex i = 0; i < n; ++i) (labels[i] ? pos : neg).push_back(i);
        const std::size_t test_pos = std::min(pos.size(), round_count(spec.test_fraction * static_cast<double>(pos.size())));
        const std::size_t test_neg = std::min(neg.size(), n_test - std::min(n_test, test_pos));
        std::shuffle(pos.begin(), pos.end(), rng);
        std::shuffle(neg.begin(), neg.end(), rng);
        for (std::size_t k = 0; k < test_pos; ++k) in_test[pos[k]] = 1;
        for (std::size_t k = 0; k < test_neg; ++k) in_test[neg[k]] = 1;
    } else {
        std::vector<RowIndex> all(n);
        std::iota(all.begin(), all.end(), RowIndex{0});
        std::shuffle(all.begin(), all.end(), rng);
        for (std::size_t k = 0; k < n_test; ++k) in_test[all[k]] = 1;
    }

    TrainTestSplit split;
    split.test.reserve(n_test);
    split.train.reserve(n - n_test);
    for (RowIndex i = 0; i < n; ++i) (in_test[i] ? split.test : split.train).push_back(i);
    check_side(labels, split.train, "train");
    check_side(labels, split.test, "test");
    return split;
}

TrainTestSplit split_train_test(const CohortDataset& dataset, const SplitSpec& spec) {
    return split_train_test(dataset.labels(), spec);
}

SubsetPlan build_subset_plan(std::span<const std::uint8_t> train_labels, std::size_t step_size,
                             std::size_t max_events, std::uint64_t seed) {
    if (step_size == 0) throw InputError("step size must be positive");
    std::vector<RowIndex> pos;
    std::vector<RowIndex> neg;
    for (RowIndex i = 0; i < train_labels.size(); ++i) (train_labels[i] ? pos : neg).push_back(i);
    if (pos.size() < step_size) {
        throw InputError("empty plan: training set has " + std::to_string(pos.size()) +
                         " events, fewer than one step of " + std::to_string(step_size));
    }

    std::mt19937_64 rng(seed);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);

    SubsetPlan plan;
    plan.step_size_events = step_size;
    plan.max_events = max_events;
    plan.train_outcome_rate = static_cast<double>(pos.size()) / static_cast<double>(train_labels.size());
    const double neg_per_event = static_cast<double>(neg.size()) / static_cast<double>(pos.size());

    const std::size_t last = std::min(max_events, pos.size()) / step_size * step_size;
    for (std::size_t events = step_size; events <= last; events += step_size) {
        // (1 - r) / r == #neg / #pos exactly; the ratio form avoids rounding r.
        const std::size_t n_neg = std::min(neg.size(), round_count(static_cast<double>(events) * neg_per_event));
        SubsetStep step;
        step.target_events = events;
        step.actual_events = events;
        step.sample_indices.reserve(events + n_neg);
        step.sample_indices.insert(step.sample_indices.end(), pos.begin(), pos.begin() + static_cast<std::ptrdiff_t>(events));
        step.sample_indices.insert(step.sample_indices.end(), neg.begin(), neg.begin() + static_cast<std::ptrdiff_t>(n_neg));
        std::sort(step.sample_indices.begin(), step.sample_indices.end());
        plan.steps.push_back(std::move(step));
    }
    return plan;
}

bool eligible_for_study(const SubsetPlan& plan) { return plan.steps.size() >= kMinPlanSteps; }

void write_plan(const SubsetPlan& plan, std::ostream& out) {
    out << "# step_size_events " << plan.step_size_events << " max_events " << plan.max_events << '\n';
    out << "# target_events n_samples actual_events\n";
    for (const auto& s : plan.steps) {
        out << s.target_events << ' ' << s.n_samples() << ' ' << s.actual_events << '\n';
    }
}

}  // namespace adequate
