#include "fusedfir/grid_search.hpp"

#include "fusedfir/bounds.hpp"
#include "fusedfir/error.hpp"
#include "fusedfir/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fusedfir {
namespace {

void check_axis(const std::vector<double>& values, const char* name)
{
    if (values.empty())
        throw DataError(std::string("grid: ") + name + " is empty");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] < 0.0)
            throw DataError(std::string("grid: ") + name + " entries must be finite and >= 0");
        if (i > 0 && !(values[i] > values[i - 1]))
            throw DataError(std::string("grid: ") + name + " must be sorted ascending without duplicates");
    }
}

} // namespace

void GridSpec::validate() const
{
    check_axis(lambda1_factors, "lambda1_factors");
    check_axis(lambda2_values, "lambda2_values");
}

GridSearchResult grid_search(std::span<const RegressionProblem> estimation,
                             std::span<const RegressionProblem> validation, const GridSpec& grid,
                             const SolverConfig& cfg, const GridSearchOptions& options)
{
    grid.validate();
    cfg.validate();
    const auto& s = common_structure(estimation);
    if (validation.size() != estimation.size())
        throw DataError("grid search: " + std::to_string(estimation.size()) + " estimation but "
                        + std::to_string(validation.size()) + " validation problems");
    if (!(common_structure(validation) == s))
        throw DataError("grid search: validation structure differs from estimation");
    for (std::size_t k = 0; k < estimation.size(); ++k)
        if (estimation[k].condition_name != validation[k].condition_name)
            throw DataError("grid search: condition " + std::to_string(k) + " is '" + estimation[k].condition_name
                            + "' for estimation but '" + validation[k].condition_name + "' for validation");

    GridSearchResult result;
    std::vector<double> factors = grid.lambda1_factors;
    double l1max = 0.0;
    if (estimation.size() >= 2) {
        l1max = options.lambda1_max ? *options.lambda1_max : lambda1_max(estimation);
        result.lambda1_max = l1max;
    } else {
        factors = {0.0};
    }

    for (double f : factors)
        for (double l2 : grid.lambda2_values)
            result.table.push_back({f, f * l1max, l2, 0.0, false, 0});

    parallel_for(result.table.size(), options.threads, [&](std::size_t i) {
        auto& point = result.table[i];
        const Hyperparameters hp{point.lambda1, point.lambda2, options.fusion};
        const auto sol = solve(estimation, hp, cfg);
        point.converged = sol.converged;
        point.iterations = sol.iterations;
        if (!sol.converged) {
            point.score = std::numeric_limits<double>::infinity();
            return;
        }
        if (options.literal_criterion) {
            point.score = objective(validation, sol.thetas, hp).total;
        } else {
            double sse = 0.0;
            for (std::size_t k = 0; k < validation.size(); ++k)
                sse += (validation[k].y - validation[k].phi * sol.thetas[k].values()).squaredNorm();
            point.score = sse;
        }
    });

    bool any = false;
    for (std::size_t i = 0; i < result.table.size(); ++i) {
        const auto& cand = result.table[i];
        if (!cand.converged)
            continue;
        if (!any) {
            result.selected = i;
            any = true;
            continue;
        }
        const auto& best = result.table[result.selected];
        const bool better = cand.score < best.score
            || (cand.score == best.score
                && (cand.lambda1 > best.lambda1 || (cand.lambda1 == best.lambda1 && cand.lambda2 > best.lambda2)));
        if (better)
            result.selected = i;
    }
    if (!any)
        throw ConvergenceError("grid search: no grid point converged");

    const auto& chosen = result.table[result.selected];
    result.hp = Hyperparameters{chosen.lambda1, chosen.lambda2, options.fusion};
    return result;
}

} // namespace fusedfir
