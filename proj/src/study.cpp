#include "adequate/study.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cctype>
#include <exception>
#include <fstream>
#include <iterator>
#include <functional>
#include <numeric>
#include <random>
#include <thread>

#include "adequate/detail/text.hpp"
#include "adequate/errors.hpp"

namespace adequate {

namespace {

// Runs fn(0..count-1) on up to `jobs` threads. Every task runs even if others
// throw; the first exception by task index is rethrown, which keeps error
// reporting independent of scheduling.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t n_threads = std::min(std::max<std::size_t>(jobs, 1), std::max<std::size_t>(count, 1));
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

std::string describe(const std::exception_ptr& e) {
    try {
        std::rethrow_exception(e);
    } catch (const std::exception& ex) {
        return ex.what();
    } catch (...) {
        return "unknown failure";
    }
}

struct PreparedProblem {
    std::string id;
    std::shared_ptr<const CohortDataset> data;
    TrainTestSplit split;
    SubsetPlan plan;
    BinaryMatrix test_design;
    std::vector<std::uint8_t> test_labels;
    std::uint64_t seed = 0;
};

struct StepOutcome {
    CurvePoint point;
    FittedModel model;
};

std::uint64_t problem_seed(const StudyConfig& config, const std::string& id) {
    return detail::mix_seed(config.seed, detail::hash_string(id));
}

std::variant<PreparedProblem, SkipRecord> prepare(std::shared_ptr<const CohortDataset> data, const std::string& id,
                                                  const StudyConfig& config) {
    PreparedProblem prob;
    prob.id = id;
    prob.data = std::move(data);
    prob.seed = problem_seed(config, id);
    prob.split = split_train_test(*prob.data, {config.test_fraction, detail::mix_seed(prob.seed, 1), config.stratified_test});

    std::vector<std::uint8_t> train_labels(prob.split.train.size());
    std::size_t train_events = 0;
    for (std::size_t k = 0; k < train_labels.size(); ++k) {
        train_labels[k] = prob.data->labels()[prob.split.train[k]];
        train_events += train_labels[k];
    }
    const std::size_t needed = kMinPlanSteps * config.step_size_events;
    const std::string too_few = "fewer than " + std::to_string(needed) + " events in the training set (" +
                                std::to_string(train_events) + ")";
    if (train_events < config.step_size_events) return SkipRecord{id, train_events, too_few};

    prob.plan = build_subset_plan(train_labels, config.step_size_events, config.max_events, detail::mix_seed(prob.seed, 2));
    if (!eligible_for_study(prob.plan)) return SkipRecord{id, train_events, too_few};

    prob.test_design = prob.data->design().select_rows(prob.split.test);
    prob.test_labels.resize(prob.split.test.size());
    for (std::size_t k = 0; k < prob.split.test.size(); ++k) prob.test_labels[k] = prob.data->labels()[prob.split.test[k]];
    return prob;
}

StepOutcome run_step(const PreparedProblem& prob, std::size_t k, const StudyConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    const auto& step = prob.plan.steps[k];
    std::vector<RowIndex> rows(step.sample_indices.size());
    std::vector<std::uint8_t> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i] = prob.split.train[step.sample_indices[i]];
        labels[i] = prob.data->labels()[rows[i]];
    }
    const auto design = prob.data->design().select_rows(rows);

    CvOptions cv_opt;
    cv_opt.n_folds = config.cv_folds;
    cv_opt.n_lambdas = config.n_lambdas;
    cv_opt.lambda_ratio = config.lambda_ratio;
    cv_opt.seed = detail::mix_seed(prob.seed, 1000 + k);
    cv_opt.solver = config.solver;
    const auto cv = select_lambda_cv(design, labels, cv_opt);
    auto model = refit_selected(design, labels, cv, config.solver);

    const auto risk = predict_risk(model, prob.test_design);
    StepOutcome out;
    out.point.target_events = step.target_events;
    out.point.actual_events = step.actual_events;
    out.point.n_samples = step.n_samples();
    out.point.auroc_test = auroc(risk, prob.test_labels);
    out.point.n_predictors = count_predictors(model);
    out.point.selected_lambda = cv.selected_lambda;
    if (config.record_timing) {
        out.point.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    out.model = std::move(model);
    return out;
}

LearningCurve finish(const PreparedProblem& prob, std::vector<StepOutcome> steps, const StudyConfig& config) {
    LearningCurve curve;
    curve.problem_id = prob.id;
    curve.n_samples = prob.data->n_samples();
    curve.n_features = prob.data->n_features();
    curve.n_train = prob.split.train.size();
    curve.n_test = prob.split.test.size();
    curve.train_outcome_rate = prob.plan.train_outcome_rate;
    curve.train_events = static_cast<std::size_t>(std::llround(curve.train_outcome_rate * static_cast<double>(curve.n_train)));
    curve.test_events = static_cast<std::size_t>(std::count(prob.test_labels.begin(), prob.test_labels.end(), 1));
    for (auto& s : steps) {
        curve.points.push_back(s.point);
        curve.models.push_back(std::move(s.model));
    }

    const auto samples = samples_on_axis(curve.points, Axis::events);
    curve.fit = fit_power_law(samples, Axis::events);
    curve.verdict = filter_fit(curve.fit);
    curve.axes = compare_axes(curve.points);
    if (curve.verdict.accepted) {
        curve.residuals = residual_report(curve.fit, samples);
        for (double t : config.thresholds) {
            curve.adequacy.push_back(assess_threshold(curve.fit, curve.points, t, curve.train_outcome_rate,
                                                      config.step_size_events, config.slope_epsilon));
        }
    }
    return curve;
}

}  // namespace

void StudyConfig::validate() const {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InputError("test_fraction must lie in (0, 1)");
    if (step_size_events == 0) throw InputError("step size must be positive");
    if (max_events < step_size_events) throw InputError("max_events must be at least one step");
    if (cv_folds < 2) throw InputError("cv_folds must be at least 2");
    if (n_lambdas == 0) throw InputError("n_lambdas must be positive");
    if (!(lambda_ratio > 0.0 && lambda_ratio <= 1.0)) throw InputError("lambda_ratio must lie in (0, 1]");
    for (double t : thresholds) {
        if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("thresholds must be finite and >= 0");
    }
    if (slope_epsilon && !(*slope_epsilon > 0.0)) throw InputError("slope epsilon must be > 0");
}

StudyConfig parse_config(std::string_view text, StudyConfig base) {
    StudyConfig c = std::move(base);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    const auto trim = [](std::string_view s) {
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
        while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
        return s;
    };
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const auto where = "config line " + std::to_string(line_no);
        if (eq == std::string_view::npos) throw InputError(where + ": expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto fail = [&] { return InputError(where + ": bad value '" + std::string(value) + "' for " + std::string(key)); };
        const auto number = [&](auto& out) {
            if (!detail::parse_number(value, out)) throw fail();
        };
        const auto boolean = [&](bool& out) {
            if (value == "true" || value == "1") out = true;
            else if (value == "false" || value == "0") out = false;
            else throw fail();
        };
        if (key == "test_fraction") number(c.test_fraction);
        else if (key == "stratified_test") boolean(c.stratified_test);
        else if (key == "step_size_events") number(c.step_size_events);
        else if (key == "max_events") number(c.max_events);
        else if (key == "cv_folds") number(c.cv_folds);
        else if (key == "n_lambdas") number(c.n_lambdas);
        else if (key == "lambda_ratio") number(c.lambda_ratio);
        else if (key == "seed") number(c.seed);
        else if (key == "jobs") number(c.jobs);
        else if (key == "record_timing") boolean(c.record_timing);
        else if (key == "solver_tolerance") number(c.solver.tolerance);
        else if (key == "solver_max_cycles") number(c.solver.max_cycles);
        else if (key == "weight_floor") number(c.solver.weight_floor);
        else if (key == "slope_epsilon") {
            double e = 0.0;
            number(e);
            c.slope_epsilon = e;
        } else if (key == "thresholds") {
            c.thresholds.clear();
            std::size_t start = 0;
            while (start <= value.size()) {
                const std::size_t comma = std::min(value.find(',', start), value.size());
                double t = 0.0;
                if (!detail::parse_number(trim(value.substr(start, comma - start)), t)) throw fail();
                c.thresholds.push_back(t);
                start = comma + 1;
            }
        } else {
            throw InputError(where + ": unknown key '" + std::string(key) + "'");
        }
    }
    c.validate();
    return c;
}

StudyConfig load_config(const std::filesystem::path& path, StudyConfig base) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text, std::move(base));
}

CohortDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_samples < 2) throw InputError("synthetic spec needs at least 2 samples");
    if (spec.n_features == 0) throw InputError("synthetic spec needs at least 1 feature");
    if (!(spec.feature_density > 0.0 && spec.feature_density < 1.0)) {
        throw InputError("feature density must lie in (0, 1); otherwise every column is constant");
    }
    if (!(spec.density_spread >= 1.0)) throw InputError("density spread must be at least 1");
    if (spec.n_true_signals > spec.n_features) throw InputError("more true signals than features");
    if (!(spec.target_rate > 0.0 && spec.target_rate < 1.0)) throw InputError("target rate must lie in (0, 1)");

    std::mt19937_64 rng(spec.seed);
    const std::size_t n = spec.n_samples;
    std::vector<std::vector<RowIndex>> columns(spec.n_features);
    const double spread = spec.density_spread;
    const double lowest =
        spread == 1.0 ? spec.feature_density : spec.feature_density * std::log(spread) / (spread - 1.0);
    std::uniform_real_distribution<double> log_scale(0.0, std::log(spread));
    for (auto& col : columns) {
        const double density = std::min(lowest * std::exp(log_scale(rng)), 0.5);
        std::geometric_distribution<std::size_t> gap(density);
        for (std::size_t r = gap(rng); r < n; r += 1 + gap(rng)) col.push_back(static_cast<RowIndex>(r));
    }

    std::vector<std::uint32_t> ids(spec.n_features);
    std::iota(ids.begin(), ids.end(), 0u);
    std::shuffle(ids.begin(), ids.end(), rng);
    std::bernoulli_distribution coin(0.5);
    std::vector<double> score(n, 0.0);
    for (std::size_t s = 0; s < spec.n_true_signals; ++s) {
        const double beta = coin(rng) ? spec.signal_magnitude : -spec.signal_magnitude;
        for (RowIndex r : columns[ids[s]]) score[r] += beta;
    }

    const auto mean_rate = [&](double b0) {
        double total = 0.0;
        for (double s : score) total += 1.0 / (1.0 + std::exp(-(b0 + s)));
        return total / static_cast<double>(n);
    };
    double lo = -40.0;
    double hi = 40.0;
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean_rate(mid) < spec.target_rate ? lo : hi) = mid;
    }
    const double b0 = 0.5 * (lo + hi);

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::uint8_t> labels(n);
    std::size_t events = 0;
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = unif(rng) < 1.0 / (1.0 + std::exp(-(b0 + score[i]))) ? 1 : 0;
        events += labels[i];
    }
    const double realized = static_cast<double>(events) / static_cast<double>(n);
    if (std::abs(realized - spec.target_rate) > 0.10 * spec.target_rate) {
        throw Error("synthetic outcome rate " + detail::format_double(realized) + " misses target " +
                    detail::format_double(spec.target_rate) + " by more than 10%");
    }

    std::vector<FeatureDescriptor> features(spec.n_features);
    for (std::uint32_t j = 0; j < spec.n_features; ++j) {
        features[j].id = j;
        features[j].name = "x" + std::to_string(j);
    }
    auto ds = CohortDataset::create(BinaryMatrix(n, std::move(columns)), std::move(labels), std::move(features));
    return prune_constant_features(ds).dataset;
}

Quartiles quartiles(std::vector<double> values) {
    Quartiles q;
    q.count = values.size();
    if (values.empty()) return q;
    std::sort(values.begin(), values.end());
    const auto at = [&](double p) {
        const double h = p * static_cast<double>(values.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
    };
    q.q1 = at(0.25);
    q.median = at(0.5);
    q.q3 = at(0.75);
    return q;
}

StudyAggregates aggregate(const std::vector<ProblemRecord>& records, const StudyConfig& config) {
    StudyAggregates agg;
    std::vector<const LearningCurve*> accepted;
    std::vector<double> rmse;
    for (const auto& rec : records) {
        if (const auto* c = std::get_if<LearningCurve>(&rec)) {
            ++agg.n_curves;
            if (c->verdict.accepted) {
                accepted.push_back(c);
                rmse.push_back(c->residuals.rmse);
            }
        } else {
            ++agg.n_skipped;
        }
    }
    agg.n_accepted = accepted.size();
    agg.rmse = quartiles(rmse);
    for (std::size_t k = 0; k < config.thresholds.size(); ++k) {
        std::vector<double> events;
        std::vector<double> predictors;
        for (const auto* c : accepted) {
            const auto& a = c->adequacy[k];
            events.push_back(a.event_reduction_pct);
            if (a.predictor_reduction_pct) predictors.push_back(*a.predictor_reduction_pct);
        }
        agg.thresholds.push_back({config.thresholds[k], quartiles(events), quartiles(predictors)});
    }
    for (std::size_t checkpoint : kResidualCheckpoints) {
        std::vector<double> res;
        std::vector<double> abs_res;
        for (const auto* c : accepted) {
            for (const auto& r : c->residuals.checkpoints) {
                if (r.events == checkpoint) {
                    res.push_back(r.residual);
                    abs_res.push_back(std::abs(r.residual));
                }
            }
        }
        agg.checkpoints.push_back({checkpoint, quartiles(res), quartiles(abs_res)});
    }
    return agg;
}

StudyReport run_batch(const std::vector<ProblemInput>& problems, const StudyConfig& config) {
    config.validate();
    const std::size_t n_problems = problems.size();
    std::vector<std::optional<std::variant<PreparedProblem, SkipRecord>>> prepared(n_problems);
    std::vector<std::string> prepare_errors(n_problems);

    parallel_for(n_problems, config.jobs, [&](std::size_t p) {
        const auto& in = problems[p];
        try {
            std::shared_ptr<const CohortDataset> data;
            if (const auto* spec = std::get_if<SyntheticSpec>(&in.source)) {
                data = std::make_shared<const CohortDataset>(generate_synthetic(*spec));
            } else {
                data = std::get<std::shared_ptr<const CohortDataset>>(in.source);
            }
            prepared[p] = prepare(std::move(data), in.id, config);
        } catch (const std::exception& e) {
            prepare_errors[p] = e.what();
        }
    });

    struct Task {
        std::size_t problem;
        std::size_t step;
    };
    std::vector<Task> tasks;
    std::vector<std::vector<std::optional<StepOutcome>>> outcomes(n_problems);
    std::vector<std::vector<std::exception_ptr>> step_errors(n_problems);
    for (std::size_t p = 0; p < n_problems; ++p) {
        if (!prepared[p]) continue;
        if (const auto* prob = std::get_if<PreparedProblem>(&*prepared[p])) {
            outcomes[p].resize(prob->plan.steps.size());
            step_errors[p].resize(prob->plan.steps.size());
            for (std::size_t k = 0; k < prob->plan.steps.size(); ++k) tasks.push_back({p, k});
        }
    }
    // Largest subsets first so long tasks do not trail at the end.
    std::stable_sort(tasks.begin(), tasks.end(), [&](const Task& a, const Task& b) {
        const auto& pa = std::get<PreparedProblem>(*prepared[a.problem]);
        const auto& pb = std::get<PreparedProblem>(*prepared[b.problem]);
        return pa.plan.steps[a.step].n_samples() > pb.plan.steps[b.step].n_samples();
    });

    parallel_for(tasks.size(), config.jobs, [&](std::size_t t) {
        const auto [p, k] = tasks[t];
        try {
            outcomes[p][k] = run_step(std::get<PreparedProblem>(*prepared[p]), k, config);
        } catch (...) {
            step_errors[p][k] = std::current_exception();
        }
    });

    StudyReport report;
    report.config = config;
    for (std::size_t p = 0; p < n_problems; ++p) {
        const auto& id = problems[p].id;
        if (!prepared[p]) {
            report.records.emplace_back(SkipRecord{id, 0, "failed: " + prepare_errors[p]});
            continue;
        }
        if (const auto* skip = std::get_if<SkipRecord>(&*prepared[p])) {
            report.records.emplace_back(*skip);
            continue;
        }
        const auto& prob = std::get<PreparedProblem>(*prepared[p]);
        const std::size_t train_events =
            static_cast<std::size_t>(std::llround(prob.plan.train_outcome_rate * static_cast<double>(prob.split.train.size())));
        std::string failure;
        for (std::size_t k = 0; k < step_errors[p].size() && failure.empty(); ++k) {
            if (step_errors[p][k]) {
                failure = "failed at " + std::to_string(prob.plan.steps[k].target_events) +
                          " events: " + describe(step_errors[p][k]);
            }
        }
        if (failure.empty()) {
            try {
                std::vector<StepOutcome> steps;
                steps.reserve(outcomes[p].size());
                for (auto& o : outcomes[p]) steps.push_back(std::move(*o));
                report.records.emplace_back(finish(prob, std::move(steps), config));
                continue;
            } catch (const std::exception& e) {
                failure = std::string("failed: ") + e.what();
            }
        }
        report.records.emplace_back(SkipRecord{id, train_events, failure});
    }
    report.aggregates = aggregate(report.records, config);
    return report;
}

ProblemRecord run_problem(const CohortDataset& dataset, const StudyConfig& config, const std::string& problem_id) {
    auto shared = std::make_shared<const CohortDataset>(dataset);
    auto report = run_batch({ProblemInput{problem_id, shared}}, config);
    return std::move(report.records.front());
}

std::vector<ProblemInput> default_synthetic_suite(std::size_t count, std::uint64_t seed) {
    struct Shape {
        std::size_t n_samples;
        double rate;
    };
    constexpr std::array<Shape, 5> shapes{{{100000, 0.05}, {120000, 0.03}, {150000, 0.015}, {100000, 0.02}, {200000, 0.01}}};
    std::vector<ProblemInput> out;
    for (std::size_t k = 0; k < count; ++k) {
        SyntheticSpec spec;
        spec.n_samples = shapes[k % shapes.size()].n_samples;
        spec.target_rate = shapes[k % shapes.size()].rate;
        spec.seed = detail::mix_seed(seed, k);
        out.push_back({"synthetic-" + std::to_string(k + 1), spec});
    }
    return out;
}

}  // namespace adequate
