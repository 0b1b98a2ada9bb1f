// adequate: learning-curve based adequate sample size estimation.
//
//   adequate run --matrix X.txt --labels y.txt --out results/
//   adequate run --synthetic 5 --out results/ --jobs 4
//   adequate plot results/report.json --out plots/
//   adequate validate --matrix X.txt --labels y.txt

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adequate/dataset.hpp"
#include "adequate/errors.hpp"
#include "adequate/glm.hpp"
#include "adequate/report.hpp"
#include "adequate/study.hpp"

namespace fs = std::filesystem;
using namespace adequate;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitRuntime = 2;

struct RunArgs {
    std::string config_path;
    std::vector<std::string> matrices;
    std::vector<std::string> labels;
    std::vector<std::string> names;
    std::size_t synthetic = 0;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::vector<double> thresholds;
    std::optional<std::size_t> step_events;
    std::optional<std::size_t> max_events;
    std::optional<std::size_t> jobs;
    std::optional<double> slope_epsilon;
    bool stratified_test = false;
    bool record_timing = false;
    bool save_models = false;
};

std::string unique_id(std::string base, std::map<std::string, int>& seen) {
    const int n = seen[base]++;
    return n == 0 ? base : base + "-" + std::to_string(n + 1);
}

int cmd_run(const RunArgs& args) {
    StudyConfig config;
    if (!args.config_path.empty()) config = load_config(args.config_path);
    if (args.seed) config.seed = *args.seed;
    if (!args.thresholds.empty()) config.thresholds = args.thresholds;
    if (args.step_events) config.step_size_events = *args.step_events;
    if (args.max_events) config.max_events = *args.max_events;
    if (args.jobs) config.jobs = *args.jobs;
    if (args.slope_epsilon) config.slope_epsilon = args.slope_epsilon;
    if (args.stratified_test) config.stratified_test = true;
    if (args.record_timing) config.record_timing = true;
    config.validate();

    if (args.matrices.size() != args.labels.size()) throw InputError("--matrix and --labels must be given in pairs");
    if (!args.names.empty() && args.names.size() != args.matrices.size()) {
        throw InputError("--names must be given once per --matrix or not at all");
    }
    std::vector<ProblemInput> problems;
    std::map<std::string, int> seen;
    for (std::size_t k = 0; k < args.matrices.size(); ++k) {
        std::optional<fs::path> names;
        if (!args.names.empty()) names = args.names[k];
        auto loaded = load_dataset(args.matrices[k], args.labels[k], names);
        std::cerr << args.matrices[k] << ": " << loaded.report.n_before << " features, " << loaded.report.n_after
                  << " after pruning constant columns\n";
        if (loaded.report.empty_result()) std::cerr << "warning: no features left after pruning\n";
        problems.push_back({unique_id(fs::path(args.matrices[k]).stem().string(), seen),
                            std::make_shared<const CohortDataset>(std::move(loaded.dataset))});
    }
    for (auto& p : default_synthetic_suite(args.synthetic, config.seed)) {
        p.id = unique_id(p.id, seen);
        problems.push_back(std::move(p));
    }
    if (problems.empty()) throw InputError("nothing to run: give --matrix/--labels or --synthetic N");

    const auto report = run_batch(problems, config);

    const fs::path out(args.out_dir);
    fs::create_directories(out / "curves");
    emit_report_json(report, out / "report.json");
    for (const auto& rec : report.records) {
        if (const auto* curve = std::get_if<LearningCurve>(&rec)) {
            emit_curve_csv(*curve, out / "curves" / (curve->problem_id + ".csv"));
            if (args.save_models) {
                const auto dir = out / "models" / curve->problem_id;
                fs::create_directories(dir);
                for (std::size_t k = 0; k < curve->models.size(); ++k) {
                    std::ofstream mf(dir / (std::to_string(curve->points[k].target_events) + ".txt"));
                    write_model(curve->models[k], mf);
                }
            }
            std::cout << curve->problem_id << ": " << curve->points.size() << " points, fit "
                      << (curve->verdict.accepted ? "accepted" : "rejected (" + curve->verdict.reason + ")") << '\n';
            for (const auto& a : curve->adequacy) {
                std::cout << "  t=" << a.threshold << "  N=" << a.max_events << "  N_a=" << a.adequate_events
                          << "  sample size=" << a.adequate_sample_size << "  reduction=" << a.event_reduction_pct
                          << "%\n";
            }
        } else {
            const auto& skip = std::get<SkipRecord>(rec);
            std::cout << skip.problem_id << ": skipped, " << skip.reason << '\n';
        }
    }
    std::cout << "report written to " << (out / "report.json").string() << '\n';
    return kExitOk;
}

int cmd_plot(const std::string& report_path, const std::string& out_dir, std::optional<double> threshold) {
    const auto report = read_report_json(report_path);
    double t = threshold.value_or(report.config.thresholds.empty() ? 0.02 : report.config.thresholds.back());
    fs::create_directories(out_dir);
    std::size_t count = 0;
    for (const auto& rec : report.records) {
        if (const auto* curve = std::get_if<LearningCurve>(&rec)) {
            emit_plot_svg(*curve, t, fs::path(out_dir) / (curve->problem_id + ".svg"));
            ++count;
        }
    }
    std::cout << count << " plot(s) written to " << out_dir << '\n';
    return kExitOk;
}

int cmd_validate(const std::string& matrix, const std::string& labels, const std::string& names) {
    std::optional<fs::path> names_path;
    if (!names.empty()) names_path = names;
    const auto loaded = load_dataset(matrix, labels, names_path);
    const auto& ds = loaded.dataset;
    std::cout << "samples: " << ds.n_samples() << '\n'
              << "events: " << ds.n_events() << '\n'
              << "outcome rate: " << ds.outcome_rate() << '\n'
              << "features: " << loaded.report.n_before << " (" << loaded.report.removed.size()
              << " constant removed, " << loaded.report.n_after << " kept)\n"
              << "nonzeros: " << ds.design().nnz() << '\n';
    if (loaded.report.empty_result()) std::cout << "warning: no features left after pruning\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adequate sample size estimation from learning curves"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Generate learning curves, fit them, and report adequate sample sizes");
    run_cmd->add_option("--config", run.config_path, "Key-value config file")->check(CLI::ExistingFile);
    run_cmd->add_option("--matrix", run.matrices, "Sparse triplet design matrix (repeatable)");
    run_cmd->add_option("--labels", run.labels, "Label file, one 0/1 per line (repeatable)");
    run_cmd->add_option("--names", run.names, "Feature-name sidecar (repeatable)");
    run_cmd->add_option("--synthetic", run.synthetic, "Number of synthetic problems to add");
    run_cmd->add_option("--out", run.out_dir, "Output directory")->required();
    run_cmd->add_option("--seed", run.seed, "Random seed");
    run_cmd->add_option("--thresholds", run.thresholds, "Comma-separated thresholds")->delimiter(',');
    run_cmd->add_option("--step-events", run.step_events, "Events per subset step");
    run_cmd->add_option("--max-events", run.max_events, "Largest subset in events");
    run_cmd->add_option("--jobs", run.jobs, "Worker threads");
    run_cmd->add_option("--slope-epsilon", run.slope_epsilon, "Also report the slope-based criterion");
    run_cmd->add_flag("--stratified-test", run.stratified_test, "Stratify the test split by outcome");
    run_cmd->add_flag("--record-timing", run.record_timing, "Record per-model wall time");
    run_cmd->add_flag("--save-models", run.save_models, "Write every fitted model under <out>/models");

    std::string report_path;
    std::string plot_out;
    std::optional<double> plot_threshold;
    auto* plot_cmd = app.add_subcommand("plot", "Render SVG learning-curve plots from a report");
    plot_cmd->add_option("report", report_path, "report.json from `run`")->required();
    plot_cmd->add_option("--out", plot_out, "Output directory")->required();
    plot_cmd->add_option("--threshold", plot_threshold, "Threshold to draw (default: largest configured)");

    std::string v_matrix;
    std::string v_labels;
    std::string v_names;
    auto* validate_cmd = app.add_subcommand("validate", "Check a dataset and summarize it");
    validate_cmd->add_option("--matrix", v_matrix, "Sparse triplet design matrix")->required();
    validate_cmd->add_option("--labels", v_labels, "Label file")->required();
    validate_cmd->add_option("--names", v_names, "Feature-name sidecar");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*run_cmd) return cmd_run(run);
        if (*plot_cmd) return cmd_plot(report_path, plot_out, plot_threshold);
        if (*validate_cmd) return cmd_validate(v_matrix, v_labels, v_names);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
