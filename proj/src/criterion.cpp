#include "fusedfir/criterion.hpp"

#include "fusedfir/error.hpp"

#include <cmath>

namespace fusedfir {

std::string_view to_string(FusionVariant v)
{
    return v == FusionVariant::l2 ? "l2" : "l2-squared";
}

FusionVariant parse_fusion_variant(std::string_view text)
{
    if (text == "l2")
        return FusionVariant::l2;
    if (text == "l2-squared" || text == "l2_squared")
        return FusionVariant::l2_squared;
    throw DataError("unknown fusion variant '" + std::string(text) + "' (expected l2 or l2-squared)");
}

void Hyperparameters::validate() const
{
    if (!std::isfinite(lambda1) || lambda1 < 0.0)
        throw DataError("lambda1 must be finite and >= 0");
    if (!std::isfinite(lambda2) || lambda2 < 0.0)
        throw DataError("lambda2 must be finite and >= 0");
}

namespace {

void check_common(std::span<const ParameterVector> thetas)
{
    if (thetas.empty())
        throw DataError("no parameter vectors given");
    for (const auto& t : thetas)
        if (!(t.structure() == thetas.front().structure()) || t.size() != thetas.front().size())
            throw DataError("parameter vectors have mismatched structures");
}

} // namespace

double fusion_value(std::span<const ParameterVector> thetas, FusionVariant variant)
{
    check_common(thetas);
    double f = 0.0;
    for (std::size_t k = 1; k < thetas.size(); ++k) {
        double added = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double d2 = (thetas[k].values() - thetas[i].values()).squaredNorm();
            added += variant == FusionVariant::l2 ? std::sqrt(d2) : d2;
        }
        f += added;
    }
    return f;
}

ObjectiveBreakdown objective(std::span<const RegressionProblem> problems, std::span<const ParameterVector> thetas,
                             const Hyperparameters& hp)
{
    hp.validate();
    if (problems.size() != thetas.size())
        throw DataError("objective: " + std::to_string(problems.size()) + " problems but "
                        + std::to_string(thetas.size()) + " parameter vectors");
    check_common(thetas);
    ObjectiveBreakdown out;
    for (std::size_t k = 0; k < problems.size(); ++k) {
        const auto& p = problems[k];
        if (p.phi.cols() != thetas[k].size() || p.phi.rows() != p.y.size())
            throw DataError("objective: dimension mismatch for condition '" + p.condition_name + "'");
        out.fit_term += (p.y - p.phi * thetas[k].values()).squaredNorm();
        out.sparsity_term += thetas[k].values().lpNorm<1>();
    }
    out.fusion_term = fusion_value(thetas, hp.fusion);
    out.lambda1 = hp.lambda1;
    out.lambda2 = hp.lambda2;
    out.total = out.fit_term + hp.lambda1 * out.fusion_term + hp.lambda2 * out.sparsity_term;
    return out;
}

Vector prox_block_l2(const Vector& v, double tau)
{
    if (!(tau >= 0.0))
        throw DataError("prox_block_l2: tau must be >= 0");
    const double norm = v.norm();
    if (norm <= tau)
        return Vector::Zero(v.size());
    return (1.0 - tau / norm) * v;
}

Vector prox_l1(const Vector& v, double tau)
{
    if (!(tau >= 0.0))
        throw DataError("prox_l1: tau must be >= 0");
    return v.unaryExpr([tau](double x) {
        const double mag = std::abs(x) - tau;
        return mag > 0.0 ? std::copysign(mag, x) : 0.0;
    });
}

std::vector<std::vector<PairTerm>> subgradient_structure(int K)
{
    if (K < 2)
        throw PreconditionError("subgradient structure needs K >= 2, got " + std::to_string(K));
    std::vector<std::vector<PairTerm>> out(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        auto& terms = out[static_cast<std::size_t>(k)];
        terms.reserve(static_cast<std::size_t>(K - 1));
        for (int i = 0; i < K; ++i) {
            if (i < k)
                terms.push_back({k, i, +1});
            else if (i > k)
                terms.push_back({i, k, -1});
        }
    }
    return out;
}

std::string format_subgradient(const std::vector<PairTerm>& terms)
{
    std::string s;
    for (const auto& t : terms) {
        if (t.sign < 0)
            s += "-";
        else if (!s.empty())
            s += "+";
        s += "z_{" + std::to_string(t.first + 1) + std::to_string(t.second + 1) + "}";
    }
    return s;
}

} // namespace fusedfir
