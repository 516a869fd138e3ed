#pragma once

#include "fusedfir/bounds.hpp"
#include "fusedfir/dataset.hpp"
#include "fusedfir/grid_search.hpp"
#include "fusedfir/kmeans.hpp"
#include "fusedfir/least_squares.hpp"
#include "fusedfir/solver.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fusedfir {

/// One least-squares model per category, fitted on the stacked member problems.
std::vector<LsFit> refit_clusters(std::span<const RegressionProblem> problems, const ClusterAssignment& assignment);

struct NamedModel {
    std::string method; // "ls", "joint", "category"
    std::string source; // estimation dataset(s) the model came from
    ParameterVector theta;
};

struct NamedProblem {
    std::string name; // evaluation dataset name
    RegressionProblem problem;
};

struct FitReport {
    std::string method;
    std::string model_source;
    std::string eval_dataset;
    /// Empty when FIT is undefined for the evaluation data (e.g. constant output).
    std::optional<double> fit_percent;
};

/// FIT of every model on every evaluation problem (model-major order).
std::vector<FitReport> cross_evaluate(std::span<const NamedModel> models, std::span<const NamedProblem> eval);

struct PipelineInputs {
    std::vector<ConditionDataset> estimation;
    std::vector<ConditionDataset> validation;
    /// Held-out data for the FIT matrix; validation data is used when empty.
    std::vector<ConditionDataset> evaluation;
};

PipelineInputs load_pipeline_inputs(const std::filesystem::path& manifest_path);

struct PipelineOptions {
    GridSpec grid;
    SolverConfig solver;
    int k_clusters = 2;
    /// Pick k in 2..K-1 by the largest mean silhouette instead of `k_clusters`.
    bool auto_k = false;
    int kmeans_restarts = 10;
    std::uint64_t seed = 0;
    FusionVariant fusion = FusionVariant::l2;
    bool literal_criterion = false;
    /// Record the iteration trace of the final joint solve.
    bool trace = false;
    unsigned threads = 1;
    /// Called once per finished stage with a one-line summary.
    std::function<void(std::string_view stage, std::string_view summary)> on_stage;
};

struct CategoryModel {
    std::string name; // estimation dataset names joined by '+'
    std::vector<std::string> members;
    LsFit fit;
};

struct PipelineReport {
    ModelStructure structure;
    std::uint64_t seed = 0;
    std::vector<std::string> conditions;
    std::vector<std::string> estimation_datasets;
    std::vector<std::string> validation_datasets;
    std::vector<std::string> evaluation_datasets;
    std::vector<std::string> notes;
    std::optional<BoundsReport> bounds; // empty for a single condition
    double lambda2_max = 0.0;
    GridSearchResult grid;
    Hyperparameters hp;
    SolveResult solve;
    std::vector<std::vector<int>> merged_groups;
    ClusterAssignment clusters;
    std::vector<LsFit> per_condition_ls;
    std::vector<CategoryModel> categories;
    std::vector<FitReport> fits;
    bool literal_criterion = false;
};

/// Bounds, grid search, joint solve, k-means, refit and cross-evaluation. A failing
/// stage rethrows its error with the stage name prefixed.
PipelineReport run_pipeline(const PipelineInputs& inputs, const ModelStructure& structure,
                            const PipelineOptions& options);

nlohmann::json to_json(const PipelineReport& report);

/// Writes report.json, thetas.csv and fit_matrix.csv (plus trace.csv if a trace was recorded).
void write_pipeline_outputs(const PipelineReport& report, const std::filesystem::path& out_dir);

/// Rows `method,source,<s1_lag0,...>` with one parameter vector per row.
std::string thetas_csv(std::span<const NamedModel> models);
std::vector<NamedModel> parse_thetas_csv(const std::filesystem::path& path, const ModelStructure& structure);

/// Rows `method,model,<eval datasets...>`; undefined FIT cells are left empty.
std::string fit_matrix_csv(std::span<const FitReport> fits);

} // namespace fusedfir
