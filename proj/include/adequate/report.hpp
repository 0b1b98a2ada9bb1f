#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "adequate/study.hpp"

namespace adequate {

inline constexpr std::string_view kReportFormat = "adequate-report/1";
inline constexpr std::string_view kCurveCsvHeader =
    "target_events,actual_events,n_samples,auroc_test,n_predictors,selected_lambda,wall_time_s";

// Canonical JSON: keys sorted, doubles in shortest round-trip form, absent
// optionals as null. Fitted models are not part of the report.
std::string report_to_json(const StudyReport& report);
StudyReport report_from_json(std::string_view text);  // throws InputError

void emit_report_json(const StudyReport& report, const std::filesystem::path& path);
StudyReport read_report_json(const std::filesystem::path& path);

// Header plus one row per point, reals with 6 decimals.
std::string curve_csv(const LearningCurve& curve);
void emit_curve_csv(const LearningCurve& curve, const std::filesystem::path& path);

// Observed points and, for an accepted fit, the fitted curve with four
// reference lines (p_max, p_max - t, N, N_a). A rejected fit draws the points
// with a "fit rejected" annotation instead.
std::string plot_svg(const LearningCurve& curve, double threshold);
void emit_plot_svg(const LearningCurve& curve, double threshold, const std::filesystem::path& path);

// Writes `text` to `path`, throwing Error when the file cannot be written.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace adequate
