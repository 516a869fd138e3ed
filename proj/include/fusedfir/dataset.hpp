#pragma once

#include "fusedfir/types.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fusedfir {

/// Pieces of a "<COND><speed>-<idx>" dataset name, e.g. "BR30-1".
struct DatasetName {
    std::string mode;      // "BR"
    int speed = 0;         // 30
    int index = 0;         // 1
    std::string condition; // "BR30"
};

std::optional<DatasetName> parse_dataset_name(std::string_view name);

/// One working condition: L samples of J input channels and one output.
struct ConditionDataset {
    std::string name;
    std::vector<std::string> channel_names;
    std::string output_name = "y";
    Matrix inputs; // L x J
    Vector output; // L
    /// Set when `name` does not follow the "<COND><speed>-<idx>" convention.
    bool name_warning = false;

    Index sample_count() const noexcept { return output.size(); }
    int channels() const noexcept { return static_cast<int>(inputs.cols()); }

    /// Name with the trailing "-<idx>" removed; the whole name when it does not parse.
    std::string condition() const;

    /// Throws DataError if shapes disagree or any entry is non-finite.
    void validate() const;
};

/// Builds a dataset and sets `name_warning` from the naming convention.
ConditionDataset make_dataset(std::string name, Matrix inputs, Vector output,
                              std::vector<std::string> channel_names = {},
                              std::string output_name = "y");

enum class DatasetRole { estimation, validation, evaluation };

std::string_view to_string(DatasetRole role);
DatasetRole parse_role(std::string_view text);

struct ManifestEntry {
    std::string name;
    std::filesystem::path file; // relative paths resolve against the manifest directory
    DatasetRole role = DatasetRole::estimation;
    std::vector<std::string> channels;
    std::string output;
};

using Manifest = std::vector<ManifestEntry>;

Manifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Reads the CSV named by `entry` (relative to `base_dir`). Columns are picked by
/// header name; the first column must be `t`.
ConditionDataset load_dataset(const std::filesystem::path& base_dir, const ManifestEntry& entry);

/// Reads a CSV laid out as `t,<inputs...>,<output>` taking every middle column as an input.
ConditionDataset read_dataset_csv(const std::filesystem::path& path, std::string name);

void write_dataset_csv(const std::filesystem::path& path, const ConditionDataset& ds);

/// Datasets of every manifest entry with the given role, in manifest order.
std::vector<ConditionDataset> load_role(const std::filesystem::path& manifest_path,
                                        const Manifest& manifest, DatasetRole role);

} // namespace fusedfir
