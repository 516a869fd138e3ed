#pragma once

#include "fusedfir/dataset.hpp"
#include "fusedfir/types.hpp"

#include <span>
#include <string>

namespace fusedfir {

/// Linear regression Y = Phi * theta + E for one condition.
struct RegressionProblem {
    Vector y;   // M
    Matrix phi; // M x n_theta
    ModelStructure structure;
    std::string condition_name;

    Index rows() const noexcept { return y.size(); }
    void validate() const;
};

/// Lag-window regressor: row for sample t (t = n-1 .. L-1, 0-based) holds, channel by
/// channel, [x_j(t), x_j(t-1), ..., x_j(t-n+1)]; M = L - n + 1.
RegressionProblem build_regressor(const ConditionDataset& ds, const ModelStructure& structure);

/// Phi * theta.
Vector predict(const RegressionProblem& p, const ParameterVector& theta);

/// Throws DataError unless every problem shares `problems.front().structure`.
const ModelStructure& common_structure(std::span<const RegressionProblem> problems);

/// Vertically stacked (Y; Phi) of all problems.
RegressionProblem stack_problems(std::span<const RegressionProblem> problems);

} // namespace fusedfir
