#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "adequate/dataset.hpp"

namespace adequate {

struct SplitSpec {
    double test_fraction = 0.20;
    std::uint64_t seed = 0;
    // Off by default: the test set is a simple random selection. When set,
    // the test side holds round(test_fraction * events) events.
    bool stratified = false;
};

struct TrainTestSplit {
    std::vector<RowIndex> train;  // ascending
    std::vector<RowIndex> test;   // ascending
};

// |test| = round(test_fraction * n). Throws Error("split produced degenerate
// side") if either side lacks events or non-events.
TrainTestSplit split_train_test(std::span<const std::uint8_t> labels, const SplitSpec& spec);
TrainTestSplit split_train_test(const CohortDataset& dataset, const SplitSpec& spec);

struct SubsetStep {
    std::size_t target_events = 0;
    std::size_t actual_events = 0;
    // Positions into the training rows, ascending.
    std::vector<RowIndex> sample_indices;

    std::size_t n_samples() const { return sample_indices.size(); }
};

// Nested, event-stratified training subsets at event counts step, 2*step, ...
// Every step holds exactly target_events positives and
// round(target_events * (1 - r) / r) negatives, r being the training outcome
// rate; subsets are prefixes of one permutation per class, so each step
// contains all smaller ones.
struct SubsetPlan {
    std::vector<SubsetStep> steps;
    std::size_t step_size_events = 100;
    std::size_t max_events = 20000;
    double train_outcome_rate = 0.0;
};

inline constexpr std::size_t kDefaultStepEvents = 100;
inline constexpr std::size_t kDefaultMaxEvents = 20000;
// A three-parameter curve fit needs at least three points.
inline constexpr std::size_t kMinPlanSteps = 3;

// Throws InputError when the labels hold fewer than step_size events.
SubsetPlan build_subset_plan(std::span<const std::uint8_t> train_labels, std::size_t step_size,
                             std::size_t max_events, std::uint64_t seed);

bool eligible_for_study(const SubsetPlan& plan);

// One "target_events n_samples actual_events" line per step after a header.
void write_plan(const SubsetPlan& plan, std::ostream& out);

}  // namespace adequate
