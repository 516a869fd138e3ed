#pragma once

#include "fusedfir/criterion.hpp"
#include "fusedfir/regressor.hpp"
#include "fusedfir/solver.hpp"

#include <optional>
#include <span>
#include <vector>

namespace fusedfir {

struct GridSpec {
    /// Multiplied by lambda1_max; ignored (lambda1 = 0) for a single condition.
    std::vector<double> lambda1_factors{1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    std::vector<double> lambda2_values{0.0, 1e-6, 1e-4, 1e-2, 1.0, 1e2};

    void validate() const;
};

struct GridSearchOptions {
    FusionVariant fusion = FusionVariant::l2;
    /// Score by the full criterion on validation data instead of the validation fit term.
    bool literal_criterion = false;
    unsigned threads = 1;
    /// Reuse a known lambda1_max instead of recomputing it.
    std::optional<double> lambda1_max;
};

struct GridPoint {
    double lambda1_factor = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double score = 0.0; // +inf when the solve did not converge
    bool converged = false;
    int iterations = 0;
};

struct GridSearchResult {
    Hyperparameters hp;
    std::optional<double> lambda1_max;
    std::vector<GridPoint> table; // lambda1-major, in grid order
    std::size_t selected = 0;
};

/// Solves on `estimation` at every grid point and scores on `validation` (matched
/// condition by condition). Lowest score wins; ties go to the larger lambda1, then
/// the larger lambda2. Throws ConvergenceError if no point converged.
GridSearchResult grid_search(std::span<const RegressionProblem> estimation,
                             std::span<const RegressionProblem> validation, const GridSpec& grid,
                             const SolverConfig& cfg, const GridSearchOptions& options = {});

} // namespace fusedfir
