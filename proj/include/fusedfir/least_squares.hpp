#pragma once

#include "fusedfir/regressor.hpp"
#include "fusedfir/types.hpp"

#include <span>

namespace fusedfir {

struct LsFit {
    ParameterVector theta;
    double residual_norm_sq = 0.0;
    /// Smallest eigenvalue of Phi^T Phi; NaN when n_theta exceeds `kGramEigenLimit`.
    double gram_min_eig = 0.0;
    /// Phi^T Phi is positive definite (numerically, relative to its largest eigenvalue).
    bool gram_positive_definite = false;
};

inline constexpr Index kGramEigenLimit = 512;

/// Least-squares fit through a complete orthogonal decomposition; rank-deficient
/// designs get the minimum-norm solution.
LsFit ls_fit(const RegressionProblem& p);

/// One theta minimizing the summed squared residual of every problem
/// (ls_fit on the stacked system).
LsFit pooled_ls_fit(std::span<const RegressionProblem> problems);

} // namespace fusedfir
