#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adequate/sparse.hpp"

namespace adequate {

// Observation window a predictor was derived from.
enum class FeatureSource { demographic, long_term_365d, short_term_30d, other };

std::string_view to_string(FeatureSource source);
FeatureSource parse_feature_source(std::string_view token);

struct FeatureDescriptor {
    std::uint32_t id = 0;
    std::string name;
    FeatureSource source = FeatureSource::other;

    bool operator==(const FeatureDescriptor&) const = default;
};

// Binary-outcome dataset with a sparse binary design matrix.
//
// Instances are validated on construction and never change afterwards, so a
// single dataset can be shared by any number of concurrent readers.
class CohortDataset {
public:
    // Throws InputError on size mismatch, non-binary labels, non-dense or
    // duplicate feature ids/names, or when every label is identical
    // ("degenerate outcome"). Constant columns are allowed here; see
    // prune_constant_features.
    static CohortDataset create(BinaryMatrix design, std::vector<std::uint8_t> labels,
                                std::vector<FeatureDescriptor> features);

    std::size_t n_samples() const { return labels_.size(); }
    std::size_t n_features() const { return features_.size(); }
    std::size_t n_events() const { return n_events_; }
    double outcome_rate() const {
        return static_cast<double>(n_events_) / static_cast<double>(labels_.size());
    }

    const BinaryMatrix& design() const { return design_; }
    std::span<const std::uint8_t> labels() const { return labels_; }
    std::span<const FeatureDescriptor> features() const { return features_; }

private:
    CohortDataset() = default;

    BinaryMatrix design_;
    std::vector<std::uint8_t> labels_;
    std::vector<FeatureDescriptor> features_;
    std::size_t n_events_ = 0;
};

struct PruneReport {
    std::size_t n_before = 0;
    std::size_t n_after = 0;
    // Original ids of the removed (all-0 or all-1) columns, ascending.
    std::vector<std::uint32_t> removed;
    // old id -> new id; empty optional for removed features.
    std::vector<std::optional<std::uint32_t>> old_to_new;

    bool empty_result() const { return n_after == 0; }
};

struct PrunedDataset {
    CohortDataset dataset;
    PruneReport report;
};

// Removes every column that is 0 for all samples or 1 for all samples and
// re-densifies feature ids. Pruning to zero features is allowed; callers check
// report.empty_result().
PrunedDataset prune_constant_features(const CohortDataset& dataset);

// Reads the sparse triplet matrix, labels, and optional feature-name sidecar,
// then validates and prunes. Throws InputError on any malformed input.
PrunedDataset load_dataset(const std::filesystem::path& matrix_path,
                           const std::filesystem::path& labels_path,
                           const std::optional<std::filesystem::path>& names_path = std::nullopt);

// Writes the dataset in the same triplet / labels / names layout load_dataset reads.
void save_dataset(const CohortDataset& dataset, const std::filesystem::path& matrix_path,
                  const std::filesystem::path& labels_path,
                  const std::optional<std::filesystem::path>& names_path = std::nullopt);

// Left-closed, right-open bins [cuts[k], cuts[k+1]); the declared range is
// [cuts.front(), cuts.back()).
struct BinningSpec {
    std::string feature;
    std::vector<double> cuts;

    void validate() const;  // throws InputError
    std::size_t n_bins() const { return cuts.empty() ? 0 : cuts.size() - 1; }
    std::string bin_name(std::size_t k) const;
};

struct BinaryColumn {
    std::string name;
    std::vector<RowIndex> rows;  // samples holding a 1, ascending
};

// One column per bin; each sample lands in exactly one bin. A value outside
// the declared range throws InputError naming the sample index.
std::vector<BinaryColumn> one_hot_bin(std::span<const double> values, const BinningSpec& spec);

}  // namespace adequate
