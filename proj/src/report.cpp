#include "adequate/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "adequate/detail/text.hpp"
#include "adequate/errors.hpp"
#include "json.hpp"

namespace adequate {

using nlohmann::json;

namespace {

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_null()) return std::nullopt;
    return v.get<T>();
}

json quartiles_json(const Quartiles& q) {
    return {{"count", q.count}, {"median", q.median}, {"q1", q.q1}, {"q3", q.q3}};
}

Quartiles quartiles_from(const json& j) {
    return {j.at("count").get<std::size_t>(), j.at("median").get<double>(), j.at("q1").get<double>(),
            j.at("q3").get<double>()};
}

json config_json(const StudyConfig& c) {
    const LmOptions lm;
    return {
        {"test_fraction", c.test_fraction},
        {"stratified_test", c.stratified_test},
        {"step_size_events", c.step_size_events},
        {"max_events", c.max_events},
        {"thresholds", c.thresholds},
        {"cv_folds", c.cv_folds},
        {"n_lambdas", c.n_lambdas},
        {"lambda_ratio", c.lambda_ratio},
        {"seed", c.seed},
        {"slope_epsilon", opt(c.slope_epsilon)},
        {"record_timing", c.record_timing},
        {"solver",
         {{"tolerance", c.solver.tolerance},
          {"max_cycles", c.solver.max_cycles},
          {"weight_floor", c.solver.weight_floor}}},
        // Fixed fitter constants, echoed for the record.
        {"power_law_fit",
         {{"max_iterations", lm.max_iterations},
          {"step_tolerance", lm.step_tolerance},
          {"initial_damping", lm.initial_damping},
          {"damping_factor", lm.damping_up}}},
    };
}

StudyConfig config_from(const json& j) {
    StudyConfig c;
    c.test_fraction = j.at("test_fraction").get<double>();
    c.stratified_test = j.at("stratified_test").get<bool>();
    c.step_size_events = j.at("step_size_events").get<std::size_t>();
    c.max_events = j.at("max_events").get<std::size_t>();
    c.thresholds = j.at("thresholds").get<std::vector<double>>();
    c.cv_folds = j.at("cv_folds").get<std::size_t>();
    c.n_lambdas = j.at("n_lambdas").get<std::size_t>();
    c.lambda_ratio = j.at("lambda_ratio").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.slope_epsilon = get_opt<double>(j, "slope_epsilon");
    c.record_timing = j.at("record_timing").get<bool>();
    const auto& s = j.at("solver");
    c.solver.tolerance = s.at("tolerance").get<double>();
    c.solver.max_cycles = s.at("max_cycles").get<std::size_t>();
    c.solver.weight_floor = s.at("weight_floor").get<double>();
    return c;
}

json fit_json(const PowerLawFit& f) {
    return {{"a", f.a},       {"b", f.b},
            {"c", f.c},       {"converged", f.converged},
            {"degenerate", f.degenerate}, {"rmse", f.rmse},
            {"n_points", f.n_points}, {"x_axis", std::string(to_string(f.x_axis))},
            {"iterations", f.iterations}};
}

PowerLawFit fit_from(const json& j) {
    PowerLawFit f;
    f.a = j.at("a").get<double>();
    f.b = j.at("b").get<double>();
    f.c = j.at("c").get<double>();
    f.converged = j.at("converged").get<bool>();
    f.degenerate = j.at("degenerate").get<bool>();
    f.rmse = j.at("rmse").get<double>();
    f.n_points = j.at("n_points").get<std::size_t>();
    f.x_axis = parse_axis(j.at("x_axis").get<std::string>());
    f.iterations = j.at("iterations").get<std::size_t>();
    return f;
}

json verdict_json(const FitVerdict& v) { return {{"accepted", v.accepted}, {"reason", v.reason}}; }
FitVerdict verdict_from(const json& j) { return {j.at("accepted").get<bool>(), j.at("reason").get<std::string>()}; }

json point_json(const CurvePoint& p) {
    return {{"target_events", p.target_events}, {"actual_events", p.actual_events},
            {"n_samples", p.n_samples},         {"auroc_test", p.auroc_test},
            {"n_predictors", p.n_predictors},   {"selected_lambda", p.selected_lambda},
            {"wall_time_s", p.wall_time},       {"epv", opt(epv(p.actual_events, p.n_predictors))}};
}

CurvePoint point_from(const json& j) {
    CurvePoint p;
    p.target_events = j.at("target_events").get<std::size_t>();
    p.actual_events = j.at("actual_events").get<std::size_t>();
    p.n_samples = j.at("n_samples").get<std::size_t>();
    p.auroc_test = j.at("auroc_test").get<double>();
    p.n_predictors = j.at("n_predictors").get<std::size_t>();
    p.selected_lambda = j.at("selected_lambda").get<double>();
    p.wall_time = j.at("wall_time_s").get<double>();
    return p;
}

json adequacy_json(const AdequacyResult& a) {
    return {{"threshold", a.threshold},
            {"max_events", a.max_events},
            {"p_max", a.p_max},
            {"adequate_events", a.adequate_events},
            {"adequate_events_grid", a.adequate_events_grid},
            {"adequate_sample_size", a.adequate_sample_size},
            {"event_reduction_pct", a.event_reduction_pct},
            {"sample_reduction_pct", a.sample_reduction_pct},
            {"adequate_model_events", opt(a.adequate_model_events)},
            {"adequate_n_predictors", opt(a.adequate_n_predictors)},
            {"full_n_predictors", a.full_n_predictors},
            {"predictor_reduction_pct", opt(a.predictor_reduction_pct)},
            {"adequate_epv", opt(a.adequate_epv)},
            {"slope_adequate_events", opt(a.slope_adequate_events)},
            {"excluded", a.excluded},
            {"reason", a.reason}};
}

AdequacyResult adequacy_from(const json& j) {
    AdequacyResult a;
    a.threshold = j.at("threshold").get<double>();
    a.max_events = j.at("max_events").get<std::size_t>();
    a.p_max = j.at("p_max").get<double>();
    a.adequate_events = j.at("adequate_events").get<std::size_t>();
    a.adequate_events_grid = j.at("adequate_events_grid").get<std::size_t>();
    a.adequate_sample_size = j.at("adequate_sample_size").get<std::size_t>();
    a.event_reduction_pct = j.at("event_reduction_pct").get<double>();
    a.sample_reduction_pct = j.at("sample_reduction_pct").get<double>();
    a.adequate_model_events = get_opt<std::size_t>(j, "adequate_model_events");
    a.adequate_n_predictors = get_opt<std::size_t>(j, "adequate_n_predictors");
    a.full_n_predictors = j.at("full_n_predictors").get<std::size_t>();
    a.predictor_reduction_pct = get_opt<double>(j, "predictor_reduction_pct");
    a.adequate_epv = get_opt<double>(j, "adequate_epv");
    a.slope_adequate_events = get_opt<std::size_t>(j, "slope_adequate_events");
    a.excluded = j.at("excluded").get<bool>();
    a.reason = j.at("reason").get<std::string>();
    return a;
}

json residuals_json(const ResidualReport& r) {
    json cps = json::array();
    for (const auto& c : r.checkpoints) cps.push_back({{"events", c.events}, {"residual", c.residual}});
    return {{"rmse", r.rmse}, {"checkpoints", cps}};
}

ResidualReport residuals_from(const json& j) {
    ResidualReport r;
    r.rmse = j.at("rmse").get<double>();
    for (const auto& c : j.at("checkpoints")) {
        r.checkpoints.push_back({c.at("events").get<std::size_t>(), c.at("residual").get<double>()});
    }
    return r;
}

json axes_json(const AxisComparison& a) {
    return {{"events", fit_json(a.events)},
            {"observations", fit_json(a.observations)},
            {"events_verdict", verdict_json(a.events_verdict)},
            {"observations_verdict", verdict_json(a.observations_verdict)},
            {"delta_a", a.delta_a},
            {"delta_c", a.delta_c},
            {"b_ratio", a.b_ratio}};
}

AxisComparison axes_from(const json& j) {
    AxisComparison a;
    a.events = fit_from(j.at("events"));
    a.observations = fit_from(j.at("observations"));
    a.events_verdict = verdict_from(j.at("events_verdict"));
    a.observations_verdict = verdict_from(j.at("observations_verdict"));
    a.delta_a = j.at("delta_a").get<double>();
    a.delta_c = j.at("delta_c").get<double>();
    a.b_ratio = j.at("b_ratio").get<double>();
    return a;
}

json curve_json(const LearningCurve& c) {
    json points = json::array();
    for (const auto& p : c.points) points.push_back(point_json(p));
    json adequacy = json::array();
    for (const auto& a : c.adequacy) adequacy.push_back(adequacy_json(a));
    return {{"status", "curve"},
            {"id", c.problem_id},
            {"n_samples", c.n_samples},
            {"n_features", c.n_features},
            {"n_train", c.n_train},
            {"n_test", c.n_test},
            {"train_events", c.train_events},
            {"test_events", c.test_events},
            {"train_outcome_rate", c.train_outcome_rate},
            {"points", points},
            {"fit", fit_json(c.fit)},
            {"verdict", verdict_json(c.verdict)},
            {"residuals", residuals_json(c.residuals)},
            {"adequacy", adequacy},
            {"axes", c.axes ? axes_json(*c.axes) : json(nullptr)}};
}

LearningCurve curve_from(const json& j) {
    LearningCurve c;
    c.problem_id = j.at("id").get<std::string>();
    c.n_samples = j.at("n_samples").get<std::size_t>();
    c.n_features = j.at("n_features").get<std::size_t>();
    c.n_train = j.at("n_train").get<std::size_t>();
    c.n_test = j.at("n_test").get<std::size_t>();
    c.train_events = j.at("train_events").get<std::size_t>();
    c.test_events = j.at("test_events").get<std::size_t>();
    c.train_outcome_rate = j.at("train_outcome_rate").get<double>();
    for (const auto& p : j.at("points")) c.points.push_back(point_from(p));
    c.fit = fit_from(j.at("fit"));
    c.verdict = verdict_from(j.at("verdict"));
    c.residuals = residuals_from(j.at("residuals"));
    for (const auto& a : j.at("adequacy")) c.adequacy.push_back(adequacy_from(a));
    if (!j.at("axes").is_null()) c.axes = axes_from(j.at("axes"));
    return c;
}

json aggregates_json(const StudyAggregates& a) {
    json thresholds = json::array();
    for (const auto& t : a.thresholds) {
        thresholds.push_back({{"threshold", t.threshold},
                              {"event_reduction_pct", quartiles_json(t.event_reduction_pct)},
                              {"predictor_reduction_pct", quartiles_json(t.predictor_reduction_pct)}});
    }
    json checkpoints = json::array();
    for (const auto& c : a.checkpoints) {
        checkpoints.push_back({{"events", c.events},
                               {"residual", quartiles_json(c.residual)},
                               {"abs_residual", quartiles_json(c.abs_residual)}});
    }
    return {{"n_curves", a.n_curves},     {"n_accepted", a.n_accepted}, {"n_skipped", a.n_skipped},
            {"thresholds", thresholds},   {"checkpoints", checkpoints}, {"rmse", quartiles_json(a.rmse)}};
}

StudyAggregates aggregates_from(const json& j) {
    StudyAggregates a;
    a.n_curves = j.at("n_curves").get<std::size_t>();
    a.n_accepted = j.at("n_accepted").get<std::size_t>();
    a.n_skipped = j.at("n_skipped").get<std::size_t>();
    for (const auto& t : j.at("thresholds")) {
        a.thresholds.push_back({t.at("threshold").get<double>(), quartiles_from(t.at("event_reduction_pct")),
                                quartiles_from(t.at("predictor_reduction_pct"))});
    }
    for (const auto& c : j.at("checkpoints")) {
        a.checkpoints.push_back({c.at("events").get<std::size_t>(), quartiles_from(c.at("residual")),
                                 quartiles_from(c.at("abs_residual"))});
    }
    a.rmse = quartiles_from(j.at("rmse"));
    return a;
}

}  // namespace

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error("failed writing " + path.string());
}

std::string report_to_json(const StudyReport& report) {
    json problems = json::array();
    for (const auto& rec : report.records) {
        if (const auto* c = std::get_if<LearningCurve>(&rec)) {
            problems.push_back(curve_json(*c));
        } else {
            const auto& s = std::get<SkipRecord>(rec);
            problems.push_back({{"status", "skipped"}, {"id", s.problem_id}, {"train_events", s.train_events},
                                {"reason", s.reason}});
        }
    }
    json root = {{"format", std::string(kReportFormat)},
                 {"config", config_json(report.config)},
                 {"problems", problems},
                 {"aggregates", aggregates_json(report.aggregates)}};
    return root.dump(2) + "\n";
}

StudyReport report_from_json(std::string_view text) {
    try {
        const auto root = json::parse(text);
        if (root.at("format").get<std::string>() != kReportFormat) throw InputError("unsupported report format");
        StudyReport report;
        report.config = config_from(root.at("config"));
        for (const auto& p : root.at("problems")) {
            if (p.at("status").get<std::string>() == "curve") {
                report.records.emplace_back(curve_from(p));
            } else {
                report.records.emplace_back(SkipRecord{p.at("id").get<std::string>(),
                                                       p.at("train_events").get<std::size_t>(),
                                                       p.at("reason").get<std::string>()});
            }
        }
        report.aggregates = aggregates_from(root.at("aggregates"));
        return report;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed report: ") + e.what());
    }
}

void emit_report_json(const StudyReport& report, const std::filesystem::path& path) {
    write_text_file(path, report_to_json(report));
}

StudyReport read_report_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return report_from_json(text);
}

std::string curve_csv(const LearningCurve& curve) {
    std::string out(kCurveCsvHeader);
    out += '\n';
    for (const auto& p : curve.points) {
        out += std::to_string(p.target_events) + ',' + std::to_string(p.actual_events) + ',' +
               std::to_string(p.n_samples) + ',' + detail::format_fixed(p.auroc_test, 6) + ',' +
               std::to_string(p.n_predictors) + ',' + detail::format_fixed(p.selected_lambda, 6) + ',' +
               detail::format_fixed(p.wall_time, 6) + '\n';
    }
    return out;
}

void emit_curve_csv(const LearningCurve& curve, const std::filesystem::path& path) {
    write_text_file(path, curve_csv(curve));
}

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

std::string num(double v) { return detail::format_fixed(v, 2); }

class SvgCanvas {
public:
    static constexpr double kWidth = 720.0;
    static constexpr double kHeight = 480.0;
    static constexpr double kLeft = 70.0;
    static constexpr double kRight = 30.0;
    static constexpr double kTop = 40.0;
    static constexpr double kBottom = 60.0;

    SvgCanvas(double x_max, double y_lo, double y_hi) : x_max_(x_max), y_lo_(y_lo), y_hi_(y_hi) {}

    double px(double x) const { return kLeft + x / x_max_ * (kWidth - kLeft - kRight); }
    double py(double y) const { return kHeight - kBottom - (y - y_lo_) / (y_hi_ - y_lo_) * (kHeight - kTop - kBottom); }

    void line(double x1, double y1, double x2, double y2, std::string_view cls, std::string_view stroke,
              std::string_view extra = "") {
        body_ << "<line class=\"" << cls << "\" x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
              << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\"" << extra << "/>\n";
    }
    void text(double x, double y, std::string_view content, std::string_view cls, std::string_view extra = "") {
        body_ << "<text class=\"" << cls << "\" x=\"" << num(x) << "\" y=\"" << num(y) << "\"" << extra << ">"
              << xml_escape(content) << "</text>\n";
    }
    std::ostringstream& raw() { return body_; }

    std::string finish() const {
        std::ostringstream out;
        out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
            << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight)
            << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(kHeight) << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
            << "<rect x=\"0\" y=\"0\" width=\"" << num(kWidth) << "\" height=\"" << num(kHeight) << "\" fill=\"white\"/>\n"
            << body_.str() << "</svg>\n";
        return out.str();
    }

    double x_max() const { return x_max_; }
    double y_lo() const { return y_lo_; }
    double y_hi() const { return y_hi_; }

private:
    double x_max_;
    double y_lo_;
    double y_hi_;
    std::ostringstream body_;
};

}  // namespace

std::string plot_svg(const LearningCurve& curve, double threshold) {
    double x_max = 1.0;
    double y_lo = 1.0;
    double y_hi = 0.0;
    for (const auto& p : curve.points) {
        x_max = std::max(x_max, static_cast<double>(p.actual_events));
        y_lo = std::min(y_lo, p.auroc_test);
        y_hi = std::max(y_hi, p.auroc_test);
    }
    const bool accepted = curve.verdict.accepted && !curve.points.empty();
    std::optional<AdequacyResult> adequacy;
    if (accepted) {
        adequacy = assess_threshold(curve.fit, curve.points, threshold, curve.train_outcome_rate,
                                    curve.points.front().target_events);
        y_lo = std::min(y_lo, adequacy->p_max - threshold);
        y_hi = std::max(y_hi, adequacy->p_max);
    }
    if (y_lo > y_hi) {
        y_lo = 0.0;
        y_hi = 1.0;
    }
    const double pad = std::max(0.01, 0.08 * (y_hi - y_lo));
    SvgCanvas svg(x_max * 1.05, y_lo - pad, y_hi + pad);

    const double x0 = svg.px(0.0);
    const double x1 = svg.px(svg.x_max());
    const double y0 = svg.py(svg.y_lo());
    const double y1 = svg.py(svg.y_hi());
    svg.line(x0, y0, x1, y0, "axis", "black");
    svg.line(x0, y0, x0, y1, "axis", "black");
    for (int k = 0; k <= 5; ++k) {
        const double xv = svg.x_max() * k / 5.0;
        const double yv = svg.y_lo() + (svg.y_hi() - svg.y_lo()) * k / 5.0;
        svg.line(svg.px(xv), y0, svg.px(xv), y0 + 5, "tick", "black");
        svg.text(svg.px(xv), y0 + 18, detail::format_fixed(xv, 0), "tick-label", " text-anchor=\"middle\"");
        svg.line(x0 - 5, svg.py(yv), x0, svg.py(yv), "tick", "black");
        svg.text(x0 - 8, svg.py(yv) + 4, detail::format_fixed(yv, 3), "tick-label", " text-anchor=\"end\"");
    }
    svg.text((x0 + x1) / 2, SvgCanvas::kHeight - 15, "events", "axis-label", " text-anchor=\"middle\"");
    svg.text(18, (y0 + y1) / 2, "AUROC", "axis-label",
             " text-anchor=\"middle\" transform=\"rotate(-90 18 " + num((y0 + y1) / 2) + ")\"");
    svg.text(x0, 24, curve.problem_id, "title");

    for (const auto& p : curve.points) {
        svg.raw() << "<circle class=\"point\" cx=\"" << num(svg.px(static_cast<double>(p.actual_events))) << "\" cy=\""
                  << num(svg.py(p.auroc_test)) << "\" r=\"2.5\" fill=\"gray\"/>\n";
    }

    if (!accepted) {
        std::string note = "fit rejected";
        if (!curve.verdict.reason.empty()) note += " (" + curve.verdict.reason + ")";
        svg.text(x0 + 10, y1 + 16, note, "annotation", " fill=\"firebrick\"");
        return svg.finish();
    }

    const double n_max = static_cast<double>(adequacy->max_events);
    svg.raw() << "<polyline class=\"fit-curve\" fill=\"none\" stroke=\"black\" points=\"";
    const double start = std::max(1.0, static_cast<double>(curve.points.front().actual_events) / 2.0);
    constexpr int kSegments = 200;
    for (int k = 0; k <= kSegments; ++k) {
        const double x = start + (n_max - start) * k / kSegments;
        const double y = std::clamp(evaluate(curve.fit, x), svg.y_lo(), svg.y_hi());
        svg.raw() << (k ? " " : "") << num(svg.px(x)) << ',' << num(svg.py(y));
    }
    svg.raw() << "\"/>\n";

    const double p_thr = adequacy->p_max - threshold;
    const double na = static_cast<double>(adequacy->adequate_events);
    svg.line(x0, svg.py(adequacy->p_max), x1, svg.py(adequacy->p_max), "ref-line p-max", "steelblue");
    svg.line(x0, svg.py(p_thr), x1, svg.py(p_thr), "ref-line p-threshold", "firebrick");
    svg.line(svg.px(n_max), y0, svg.px(n_max), y1, "ref-line n-max", "steelblue");
    svg.line(svg.px(na), y0, svg.px(na), y1, "ref-line n-adequate", "firebrick");

    std::string legend = "t = " + detail::format_double(threshold) + ", N = " + std::to_string(adequacy->max_events) +
                         ", N_a = " + std::to_string(adequacy->adequate_events) +
                         ", samples = " + std::to_string(adequacy->adequate_sample_size);
    if (adequacy->adequate_n_predictors) legend += ", predictors = " + std::to_string(*adequacy->adequate_n_predictors);
    svg.text(x0 + 10, SvgCanvas::kHeight - SvgCanvas::kBottom - 10, legend, "legend");
    return svg.finish();
}

void emit_plot_svg(const LearningCurve& curve, double threshold, const std::filesystem::path& path) {
    write_text_file(path, plot_svg(curve, threshold));
}

}  // namespace adequate
