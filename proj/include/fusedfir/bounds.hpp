#pragma once

#include "fusedfir/regressor.hpp"
#include "fusedfir/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <span>
#include <vector>

namespace fusedfir {

/// Closed-form hyperparameter bounds around the pooled least-squares point theta*.
///
/// With g_k = 2 Phi_k^T (Y_k - Phi_k theta*):
///   lambda1_max        = max_k ||g_k|| / (K - 1)   (coalescence at theta* needs lambda1 >= this)
///   lambda1_sufficient = 2 max_k ||g_k|| / K       (coalescence at theta* is certified above this)
///   lambda2_max        = max_k 2 ||Phi_k^T Y_k||_inf
struct BoundsReport {
    double lambda1_max = 0.0;
    double lambda2_max = 0.0;
    double lambda1_sufficient = 0.0;
    std::vector<Vector> per_condition_gradients;
    ParameterVector theta_star;
    std::vector<std::string> condition_names;
};

/// Needs K >= 2; throws PreconditionError("fusion bound undefined for a single condition") otherwise.
BoundsReport compute_bounds(std::span<const RegressionProblem> problems);

double lambda1_max(std::span<const RegressionProblem> problems);
double lambda1_sufficient(std::span<const RegressionProblem> problems);
double lambda2_max(std::span<const RegressionProblem> problems);

/// lambda1 - ||g_k|| / (K - 1) for each k; all non-negative iff lambda1 >= lambda1_max.
std::vector<double> kkt_necessary_margin(std::span<const RegressionProblem> problems, double lambda1);

struct CoalescenceCertificate {
    /// Largest ||z_ki|| over pairs of the explicit subgradients z_ki = (g_k - g_i) / (lambda1 K).
    double z_norm_max = 0.0;
    /// max_k || sum_{i != k} z_ki - g_k / lambda1 ||; zero up to rounding.
    double identity_residual = 0.0;
    /// z_norm_max <= 1: every theta_k = theta* satisfies the optimality conditions.
    bool certified = false;
};

CoalescenceCertificate coalescence_certificate(std::span<const RegressionProblem> problems, double lambda1);

nlohmann::json to_json(const BoundsReport& report);

} // namespace fusedfir
