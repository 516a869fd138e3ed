#pragma once

#include "fusedfir/criterion.hpp"
#include "fusedfir/regressor.hpp"
#include "fusedfir/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace fusedfir {

struct SolverConfig {
    double rho = 1.0;
    double eps_abs = 1e-8;
    double eps_rel = 1e-6;
    int max_iter = 50'000;
    /// Residual balancing: rho is doubled/halved when one residual exceeds the other
    /// by `rho_balance`, at most `max_rho_updates` times per solve.
    bool adapt_rho = true;
    double rho_balance = 10.0;
    int max_rho_updates = 10;
    /// Record (iter, objective, primal, dual) every iteration.
    bool record_trace = false;

    void validate() const;
};

struct TraceRow {
    int iteration = 0;
    double objective = 0.0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double rho = 0.0;
};

struct SolveResult {
    std::vector<ParameterVector> thetas;
    ObjectiveBreakdown objective;
    int iterations = 0;
    bool converged = false;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double rho = 0.0;
    std::vector<TraceRow> trace;
};

/// Minimizes the joint criterion with ADMM on a consensus splitting: every theta_k
/// has one copy per pair it belongs to plus one sparsity copy. Pair copies take the
/// exact fusion prox, sparsity copies the soft threshold, and the theta step solves
/// (2 Phi_k^T Phi_k + rho K I) theta_k = rhs with cached Cholesky factors.
/// With the squared fusion variant the pair terms stay in the quadratic step.
///
/// `initial` (optional) warm-starts theta. Hitting `max_iter` returns converged = false.
/// Throws NumericalError if an iterate becomes non-finite.
SolveResult solve(std::span<const RegressionProblem> problems, const Hyperparameters& hp,
                  const SolverConfig& cfg = {}, std::span<const ParameterVector> initial = {});

struct OracleConfig {
    int iterations = 200'000;
    std::uint64_t seed = 0;
    /// Stop early once the certified duality gap drops below this (relative to 1 + f).
    double gap_tolerance = 1e-13;
};

struct OracleResult {
    SolveResult solve;
    /// Primal objective minus the best dual bound; an upper bound on suboptimality.
    double duality_gap = 0.0;
};

/// Independent reference minimizer for desk-scale problems (K <= 6, n_theta <= 20,
/// M <= 100, positive-definite Gram matrices). Runs accelerated projected gradient
/// ascent on the dual, whose variables are the pair subgradients z_ik (unit l2 balls)
/// and the l1 subgradients (unit box); the best primal iterate is tracked.
/// Shares nothing with `solve` besides `objective`.
OracleResult solve_oracle(std::span<const RegressionProblem> problems, const Hyperparameters& hp,
                          const OracleConfig& cfg = {});

double max_pairwise_distance(std::span<const ParameterVector> thetas);

/// Scale used by the merge test: 1 + max_k ||theta_k||_2.
double merge_scale(std::span<const ParameterVector> thetas);

inline constexpr double kMergeTolerance = 1e-5;

/// Every pair within kMergeTolerance * merge_scale.
bool all_coalesced(std::span<const ParameterVector> thetas, double rel_tol = kMergeTolerance);

/// Groups of conditions whose pairwise distance is within the merge threshold
/// (connected components), each listed in ascending order.
std::vector<std::vector<int>> merged_groups(std::span<const ParameterVector> thetas,
                                            double rel_tol = kMergeTolerance);

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceRow> trace);

} // namespace fusedfir
