#pragma once

#include "fusedfir/regressor.hpp"
#include "fusedfir/types.hpp"

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fusedfir {

enum class FusionVariant {
    l2,         // sum over pairs of ||theta_k - theta_i||_2
    l2_squared, // sum over pairs of ||theta_k - theta_i||_2^2
};

std::string_view to_string(FusionVariant v);
FusionVariant parse_fusion_variant(std::string_view text);

struct Hyperparameters {
    double lambda1 = 0.0; // fusion weight
    double lambda2 = 0.0; // sparsity weight
    FusionVariant fusion = FusionVariant::l2;

    void validate() const;
};

/// Terms of the joint criterion
///   sum_k ||Y_k - Phi_k theta_k||^2 + lambda1 * fusion + lambda2 * sum_k ||theta_k||_1
/// with the penalty terms stored unweighted.
struct ObjectiveBreakdown {
    double fit_term = 0.0;
    double fusion_term = 0.0;
    double sparsity_term = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double total = 0.0;
};

/// Sum over unordered pairs k < i of ||theta_k - theta_i||_2 (or its square), built by
/// adding, for each new condition K, its distances to conditions 1..K-1.
double fusion_value(std::span<const ParameterVector> thetas, FusionVariant variant = FusionVariant::l2);

ObjectiveBreakdown objective(std::span<const RegressionProblem> problems, std::span<const ParameterVector> thetas,
                             const Hyperparameters& hp);

/// argmin_x 0.5||x - v||^2 + tau ||x||_2, i.e. (1 - tau/||v||)_+ v.
Vector prox_block_l2(const Vector& v, double tau);

/// argmin_x 0.5||x - v||^2 + tau ||x||_1 (soft threshold).
Vector prox_l1(const Vector& v, double tau);

/// One signed term of p_K^k: `sign` * z_{first,second}, with first > second (0-based).
struct PairTerm {
    int first = 0;
    int second = 0;
    int sign = 1;

    friend bool operator==(const PairTerm&, const PairTerm&) = default;
};

/// For every condition k, the K-1 signed pair subgradients whose sum is the
/// subgradient of the fusion term with respect to theta_k:
///   p^k = sum_{i>k} (-z_{ik}) + sum_{i<k} (+z_{ki}).
std::vector<std::vector<PairTerm>> subgradient_structure(int K);

/// "-z_{21}-z_{31}" style rendering with 1-based indices.
std::string format_subgradient(const std::vector<PairTerm>& terms);

} // namespace fusedfir
