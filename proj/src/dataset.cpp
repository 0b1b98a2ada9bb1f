#include "adequate/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "adequate/errors.hpp"

namespace adequate {

namespace {

std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

template <typename T>
bool parse_token(std::string_view tok, T& out) {
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
    return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    return in;
}

}  // namespace

std::string_view to_string(FeatureSource source) {
    switch (source) {
        case FeatureSource::demographic: return "demographic";
        case FeatureSource::long_term_365d: return "long_term_365d";
        case FeatureSource::short_term_30d: return "short_term_30d";
        case FeatureSource::other: return "other";
    }
    return "other";
}

FeatureSource parse_feature_source(std::string_view token) {
    if (token == "demographic") return FeatureSource::demographic;
    if (token == "long_term_365d") return FeatureSource::long_term_365d;
    if (token == "short_term_30d") return FeatureSource::short_term_30d;
    if (token == "other") return FeatureSource::other;
    throw InputError("unknown feature source '" + std::string(token) + "'");
}

CohortDataset CohortDataset::create(BinaryMatrix design, std::vector<std::uint8_t> labels,
                                    std::vector<FeatureDescriptor> features) {
    if (design.rows() != labels.size()) {
        throw InputError("dimension mismatch: design has " + std::to_string(design.rows()) +
                         " rows but " + std::to_string(labels.size()) + " labels were given");
    }
    if (design.cols() != features.size()) {
        throw InputError("dimension mismatch: design has " + std::to_string(design.cols()) +
                         " columns but " + std::to_string(features.size()) + " feature descriptors");
    }
    std::size_t events = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] > 1) throw InputError("non-binary label at sample " + std::to_string(i));
        events += labels[i];
    }
    if (events == 0 || events == labels.size()) {
        throw InputError("degenerate outcome: all " + std::to_string(labels.size()) + " labels are " +
                         (events == 0 ? "0" : "1"));
    }
    std::unordered_set<std::string> names;
    for (std::size_t j = 0; j < features.size(); ++j) {
        if (features[j].id != j) throw InputError("feature ids must be dense 0..P-1");
        if (!names.insert(features[j].name).second) {
            throw InputError("duplicate feature name '" + features[j].name + "'");
        }
    }

    CohortDataset ds;
    ds.design_ = std::move(design);
    ds.labels_ = std::move(labels);
    ds.features_ = std::move(features);
    ds.n_events_ = events;
    return ds;
}

PrunedDataset prune_constant_features(const CohortDataset& dataset) {
    const auto& x = dataset.design();
    PruneReport report;
    report.n_before = x.cols();
    report.old_to_new.resize(x.cols());

    std::vector<std::uint32_t> kept;
    std::vector<FeatureDescriptor> features;
    for (std::uint32_t j = 0; j < x.cols(); ++j) {
        const std::size_t ones = x.column_count(j);
        if (ones == 0 || ones == x.rows()) {
            report.removed.push_back(j);
            continue;
        }
        const auto new_id = static_cast<std::uint32_t>(kept.size());
        report.old_to_new[j] = new_id;
        kept.push_back(j);
        FeatureDescriptor fd = dataset.features()[j];
        fd.id = new_id;
        features.push_back(std::move(fd));
    }
    report.n_after = kept.size();

    std::vector<std::uint8_t> labels(dataset.labels().begin(), dataset.labels().end());
    return {CohortDataset::create(x.select_columns(kept), std::move(labels), std::move(features)),
            std::move(report)};
}

PrunedDataset load_dataset(const std::filesystem::path& matrix_path,
                           const std::filesystem::path& labels_path,
                           const std::optional<std::filesystem::path>& names_path) {
    auto in = open_input(matrix_path);
    std::string line;
    std::size_t line_no = 0;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    bool have_header = false;
    std::vector<std::pair<RowIndex, std::uint32_t>> entries;

    while (std::getline(in, line)) {
        ++line_no;
        auto toks = split_ws(line);
        if (toks.empty() || toks[0].front() == '#') continue;
        const std::string where = matrix_path.string() + ":" + std::to_string(line_no);
        if (!have_header) {
            if (toks.size() != 2 || !parse_token(toks[0], n_rows) || !parse_token(toks[1], n_cols)) {
                throw InputError(where + ": expected header 'n_samples n_features'");
            }
            have_header = true;
            continue;
        }
        std::uint64_t r = 0;
        std::uint64_t c = 0;
        if (toks.size() < 2 || toks.size() > 3 || !parse_token(toks[0], r) || !parse_token(toks[1], c)) {
            throw InputError(where + ": expected 'row col'");
        }
        if (toks.size() == 3 && toks[2] != "1") {
            throw InputError(where + ": non-binary entry '" + std::string(toks[2]) + "'");
        }
        if (r >= n_rows || c >= n_cols) {
            throw InputError(where + ": dimension mismatch, entry (" + std::to_string(r) + ", " +
                             std::to_string(c) + ") outside declared " + std::to_string(n_rows) + " x " +
                             std::to_string(n_cols));
        }
        entries.emplace_back(static_cast<RowIndex>(r), static_cast<std::uint32_t>(c));
    }
    if (!have_header) throw InputError(matrix_path.string() + ": missing header");

    auto lin = open_input(labels_path);
    std::vector<std::uint8_t> labels;
    line_no = 0;
    while (std::getline(lin, line)) {
        ++line_no;
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        if (toks.size() != 1 || (toks[0] != "0" && toks[0] != "1")) {
            throw InputError(labels_path.string() + ":" + std::to_string(line_no) + ": non-binary label '" +
                             std::string(line) + "'");
        }
        labels.push_back(toks[0] == "1" ? 1 : 0);
    }
    if (labels.size() != n_rows) {
        throw InputError("dimension mismatch: header declares " + std::to_string(n_rows) + " samples but " +
                         std::to_string(labels.size()) + " labels were read");
    }

    std::vector<FeatureDescriptor> features(n_cols);
    for (std::uint32_t j = 0; j < n_cols; ++j) {
        features[j].id = j;
        features[j].name = "x" + std::to_string(j);
    }
    if (names_path) {
        auto nin = open_input(*names_path);
        std::size_t j = 0;
        while (std::getline(nin, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (j >= n_cols) break;
            features[j++].name = line;
        }
        if (j != n_cols || std::getline(nin, line)) {
            throw InputError("dimension mismatch: " + names_path->string() + " must list exactly " +
                             std::to_string(n_cols) + " names");
        }
    }

    auto design = BinaryMatrix::from_triplets(n_rows, n_cols, entries);
    return prune_constant_features(CohortDataset::create(std::move(design), std::move(labels), std::move(features)));
}

void save_dataset(const CohortDataset& dataset, const std::filesystem::path& matrix_path,
                  const std::filesystem::path& labels_path,
                  const std::optional<std::filesystem::path>& names_path) {
    std::ofstream out(matrix_path);
    if (!out) throw Error("cannot write " + matrix_path.string());
    const auto& x = dataset.design();
    out << x.rows() << ' ' << x.cols() << '\n';
    for (std::size_t j = 0; j < x.cols(); ++j) {
        for (RowIndex r : x.column(j)) out << r << ' ' << j << '\n';
    }
    std::ofstream lout(labels_path);
    if (!lout) throw Error("cannot write " + labels_path.string());
    for (auto y : dataset.labels()) lout << static_cast<int>(y) << '\n';
    if (names_path) {
        std::ofstream nout(*names_path);
        if (!nout) throw Error("cannot write " + names_path->string());
        for (const auto& f : dataset.features()) nout << f.name << '\n';
    }
}

void BinningSpec::validate() const {
    if (cuts.size() < 2) throw InputError("binning for '" + feature + "' needs at least two cut points");
    for (std::size_t k = 0; k < cuts.size(); ++k) {
        if (!std::isfinite(cuts[k])) throw InputError("binning for '" + feature + "' has a non-finite cut point");
        if (k > 0 && !(cuts[k] > cuts[k - 1])) {
            throw InputError("binning for '" + feature + "': cut points must be strictly increasing");
        }
    }
}

std::string BinningSpec::bin_name(std::size_t k) const {
    return feature + "[" + format_number(cuts[k]) + "," + format_number(cuts[k + 1]) + ")";
}

std::vector<BinaryColumn> one_hot_bin(std::span<const double> values, const BinningSpec& spec) {
    spec.validate();
    std::vector<BinaryColumn> out(spec.n_bins());
    for (std::size_t k = 0; k < out.size(); ++k) out[k].name = spec.bin_name(k);

    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        if (!(v >= spec.cuts.front() && v < spec.cuts.back())) {
            throw InputError("value " + format_number(v) + " at sample " + std::to_string(i) + " outside [" +
                             format_number(spec.cuts.front()) + "," + format_number(spec.cuts.back()) +
                             ") for '" + spec.feature + "'");
        }
        // first cut strictly greater than v closes the bin
        auto it = std::upper_bound(spec.cuts.begin(), spec.cuts.end(), v);
        const auto bin = static_cast<std::size_t>(it - spec.cuts.begin()) - 1;
        out[bin].rows.push_back(static_cast<RowIndex>(i));
    }
    return out;
}

}  // namespace adequate
