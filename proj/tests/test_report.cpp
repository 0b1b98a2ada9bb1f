#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "adequate/errors.hpp"
#include "adequate/report.hpp"
#include "doctest.h"

using namespace adequate;
namespace fs = std::filesystem;

namespace {

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

std::size_t lines(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

// Curve whose points sit on a known power law with a little noise.
LearningCurve sample_curve(std::size_t steps, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.002);
    LearningCurve c;
    c.problem_id = "demo";
    c.n_samples = 500000;
    c.n_features = 120;
    c.train_events = steps * 100 + 37;
    c.train_outcome_rate = 0.02;
    for (std::size_t k = 1; k <= steps; ++k) {
        CurvePoint p;
        p.target_events = p.actual_events = 100 * k;
        p.n_samples = 5000 * k;
        p.auroc_test = 0.72 - 1.1 * std::pow(100.0 * static_cast<double>(k), -0.5) + noise(rng);
        p.n_predictors = 5 + 3 * k;
        p.selected_lambda = 0.01 / static_cast<double>(k);
        c.points.push_back(p);
    }
    if (steps >= 3) {
        c.fit = fit_power_law(samples_on_axis(c.points, Axis::events), Axis::events);
        c.verdict = filter_fit(c.fit);
        c.axes = compare_axes(c.points);
        if (c.verdict.accepted) {
            c.residuals = residual_report(c.fit, samples_on_axis(c.points, Axis::events));
            for (double t : kDefaultThresholds) c.adequacy.push_back(assess_threshold(c.fit, c.points, t, 0.02, 100));
        }
    }
    return c;
}

StudyReport sample_report() {
    StudyReport r;
    r.config.seed = 9;
    r.config.slope_epsilon = 1e-6;
    r.records.push_back(sample_curve(40, 1));
    r.records.push_back(SkipRecord{"small", 240, "fewer than 300 events in the training set (240)"});
    r.records.push_back(sample_curve(25, 2));
    r.aggregates = aggregate(r.records, r.config);
    return r;
}

}  // namespace

TEST_CASE("curve csv") {
    auto ten = sample_curve(10, 3);
    const auto csv = curve_csv(ten);
    CHECK(lines(csv) == 11);
    CHECK(csv.rfind(std::string(kCurveCsvHeader) + "\n", 0) == 0);
    CHECK(csv.find("\n100,100,5000,") != std::string::npos);
    CHECK(csv.find(",0.010000,0.000000\n") != std::string::npos);
    CHECK(curve_csv(ten) == csv);

    LearningCurve empty;
    CHECK(curve_csv(empty) == std::string(kCurveCsvHeader) + "\n");
}

TEST_CASE("report json round trip") {
    auto report = sample_report();
    const auto text = report_to_json(report);
    CHECK(text.find(std::string(kReportFormat)) != std::string::npos);
    auto back = report_from_json(text);
    back.config.jobs = report.config.jobs;
    CHECK(back == report);
    CHECK(report_to_json(back) == text);
    CHECK(report_to_json(sample_report()) == text);
}

TEST_CASE("report with skip records only") {
    StudyReport r;
    r.records.push_back(SkipRecord{"a", 12, "fewer than 300 events in the training set (12)"});
    r.aggregates = aggregate(r.records, r.config);
    const auto text = report_to_json(r);
    auto back = report_from_json(text);
    CHECK(back == r);
    CHECK(back.aggregates.n_curves == 0);
    CHECK(back.aggregates.n_skipped == 1);
}

TEST_CASE("malformed report json") {
    CHECK_THROWS_AS(report_from_json("{"), InputError);
    CHECK_THROWS_AS(report_from_json("{\"format\": \"other\"}"), InputError);
    CHECK_THROWS_AS(report_from_json("[]"), InputError);
}

TEST_CASE("files are written byte for byte") {
    const auto dir = fs::temp_directory_path() / ("adequate_report_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
    auto report = sample_report();
    emit_report_json(report, dir / "r1.json");
    emit_report_json(report, dir / "r2.json");
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    };
    CHECK(slurp(dir / "r1.json") == slurp(dir / "r2.json"));
    CHECK(read_report_json(dir / "r1.json").records.size() == 3);
    const auto& curve = std::get<LearningCurve>(report.records[0]);
    emit_curve_csv(curve, dir / "c.csv");
    CHECK(slurp(dir / "c.csv") == curve_csv(curve));
    CHECK_THROWS_AS(emit_curve_csv(curve, dir / "missing" / "deeper" / "c.csv"), Error);
    fs::remove_all(dir);
}

TEST_CASE("plot of an accepted fit") {
    auto curve = sample_curve(40, 1);
    REQUIRE(curve.verdict.accepted);
    const auto svg = plot_svg(curve, 0.01);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(count(svg, "class=\"ref-line") == 4);
    CHECK(count(svg, "class=\"fit-curve\"") == 1);
    CHECK(count(svg, "class=\"point\"") == 40);
    CHECK(svg.find("fit rejected") == std::string::npos);
    CHECK(svg.find(">events<") != std::string::npos);
    CHECK(svg.find("AUROC") != std::string::npos);
    CHECK(plot_svg(curve, 0.01) == svg);
}

TEST_CASE("plot of a rejected fit") {
    auto curve = sample_curve(40, 1);
    curve.fit.a = -0.05;
    curve.verdict = filter_fit(curve.fit);
    curve.adequacy.clear();
    const auto svg = plot_svg(curve, 0.01);
    CHECK(count(svg, "class=\"ref-line") == 0);
    CHECK(count(svg, "class=\"fit-curve\"") == 0);
    CHECK(count(svg, "class=\"annotation\"") == 1);
    CHECK(svg.find("fit rejected (a&lt;0)") != std::string::npos);
}
