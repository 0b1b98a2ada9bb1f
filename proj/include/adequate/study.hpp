#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adequate/adequacy.hpp"
#include "adequate/dataset.hpp"
#include "adequate/glm.hpp"
#include "adequate/metrics.hpp"
#include "adequate/powerlaw.hpp"
#include "adequate/sampler.hpp"

namespace adequate {

struct StudyConfig {
    double test_fraction = 0.20;
    bool stratified_test = false;
    std::size_t step_size_events = kDefaultStepEvents;
    std::size_t max_events = kDefaultMaxEvents;
    std::vector<double> thresholds{kDefaultThresholds.begin(), kDefaultThresholds.end()};
    std::size_t cv_folds = 3;
    std::size_t n_lambdas = 50;
    double lambda_ratio = 1e-4;
    std::uint64_t seed = 1;
    // Worker threads; results do not depend on it.
    std::size_t jobs = 1;
    std::optional<double> slope_epsilon;
    // Wall times make reports run-dependent, so they are recorded only on request.
    bool record_timing = false;
    SolverOptions solver;

    void validate() const;  // throws InputError
    bool operator==(const StudyConfig&) const = default;
};

// Key-value config: one `key = value` per line, '#' starts a comment.
// Keys mirror StudyConfig fields (thresholds as a comma-separated list;
// solver_tolerance, solver_max_cycles, weight_floor for the solver). Unknown
// keys or malformed values throw InputError.
StudyConfig parse_config(std::string_view text, StudyConfig base = {});
StudyConfig load_config(const std::filesystem::path& path, StudyConfig base = {});

// Independent sparse binary features; labels drawn from a logistic model on
// n_true_signals randomly chosen features with the intercept calibrated by
// bisection so the expected outcome rate equals target_rate.
struct SyntheticSpec {
    std::size_t n_samples = 100000;
    std::size_t n_features = 100;
    double feature_density = 0.05;
    // Column prevalences are log-uniform over a range this many times wide, with
    // mean feature_density. 1 gives every column the same prevalence.
    double density_spread = 25.0;
    std::size_t n_true_signals = 20;
    double signal_magnitude = 0.7;
    double target_rate = 0.02;
    std::uint64_t seed = 1;

    bool operator==(const SyntheticSpec&) const = default;
};

// Throws InputError for invalid specs (including zero density) and Error when
// the realized rate misses the target by more than 10% relative.
CohortDataset generate_synthetic(const SyntheticSpec& spec);

struct LearningCurve {
    std::string problem_id;
    std::size_t n_samples = 0;
    std::size_t n_features = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::size_t train_events = 0;
    std::size_t test_events = 0;
    double train_outcome_rate = 0.0;
    std::vector<CurvePoint> points;
    PowerLawFit fit;
    FitVerdict verdict;
    ResidualReport residuals;
    std::vector<AdequacyResult> adequacy;
    std::optional<AxisComparison> axes;
    // Models per point; kept in memory for optional export, not serialized.
    std::vector<FittedModel> models;

    bool operator==(const LearningCurve&) const = default;
};

struct SkipRecord {
    std::string problem_id;
    std::size_t train_events = 0;
    std::string reason;

    bool operator==(const SkipRecord&) const = default;
};

using ProblemRecord = std::variant<LearningCurve, SkipRecord>;

struct ProblemInput {
    std::string id;
    std::variant<std::shared_ptr<const CohortDataset>, SyntheticSpec> source;
};

struct Quartiles {
    std::size_t count = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;

    bool operator==(const Quartiles&) const = default;
};

// Linear-interpolation quantiles; zero count for an empty sample.
Quartiles quartiles(std::vector<double> values);

struct ThresholdAggregate {
    double threshold = 0.0;
    Quartiles event_reduction_pct;
    Quartiles predictor_reduction_pct;

    bool operator==(const ThresholdAggregate&) const = default;
};

struct CheckpointAggregate {
    std::size_t events = 0;
    Quartiles residual;
    Quartiles abs_residual;

    bool operator==(const CheckpointAggregate&) const = default;
};

struct StudyAggregates {
    std::size_t n_curves = 0;
    std::size_t n_accepted = 0;
    std::size_t n_skipped = 0;
    std::vector<ThresholdAggregate> thresholds;
    std::vector<CheckpointAggregate> checkpoints;
    Quartiles rmse;

    bool operator==(const StudyAggregates&) const = default;
};

struct StudyReport {
    StudyConfig config;
    std::vector<ProblemRecord> records;
    StudyAggregates aggregates;

    bool operator==(const StudyReport&) const = default;
};

// Whole pipeline for one dataset: split, nested plan, CV-selected LASSO per
// step scored on one shared test set, power-law fit, diagnostics, adequacy.
// Ineligible datasets (< 3 steps) come back as a SkipRecord.
ProblemRecord run_problem(const CohortDataset& dataset, const StudyConfig& config,
                          const std::string& problem_id = "problem");

// Runs every problem, failures recorded as skips, and aggregates accepted fits.
// (problem, step) tasks share one worker pool of config.jobs threads.
StudyReport run_batch(const std::vector<ProblemInput>& problems, const StudyConfig& config);

StudyAggregates aggregate(const std::vector<ProblemRecord>& records, const StudyConfig& config);

// Five problems with 100k-200k samples, outcome rates 1-5%, 20 true signals.
std::vector<ProblemInput> default_synthetic_suite(std::size_t count, std::uint64_t seed);

}  // namespace adequate
